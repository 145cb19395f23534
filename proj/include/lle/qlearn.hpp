#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "lle/geometry.hpp"
#include "lle/mixer.hpp"
#include "lle/nn.hpp"
#include "lle/observation.hpp"
#include "lle/qnet.hpp"
#include "lle/replay.hpp"
#include "lle/rng.hpp"

namespace lle {

enum class Algo { IQL, VDN, QMIX };

const char* algo_name(Algo algo);
Algo algo_from_name(std::string_view name);

struct TrainConfig {
  double gamma = 0.95;
  double lr = 5e-4;
  double grad_clip = 10.0;
  double tau = 0.01;
  double eps_start = 1.0;
  double eps_min = 0.05;
  uint64_t eps_anneal = 500'000;
  int train_interval = 5;
  int batch = 64;
  size_t memory = 50'000;
  bool double_q = true;
  int mixer_embed = 32;
};

// Linear from eps_start at step 0 to eps_min at step eps_anneal, constant
// after.
double epsilon_at(const TrainConfig& cfg, uint64_t step);

// utilities: (n, 5) row-major. Per agent: with probability epsilon a uniform
// draw over available actions, otherwise the highest-utility available
// action (lowest index wins ties). Never returns an unavailable action.
std::vector<Action> select_actions(const double* utilities,
                                   std::span<const ActionMask> masks, double epsilon,
                                   Rng& rng);

struct TrainStepResult {
  double loss = 0.0;
  std::vector<double> td_abs;   // per transition; mean over agents for IQL
  double grad_norm = 0.0;       // global norm before clipping
};

// Owns the online/target networks and mixers, the optimizer, and the TD
// update. IQL has no mixer: each agent's utility regresses on the shared
// reward independently.
class Learner {
 public:
  Learner(Algo algo, const QNetSpec& spec, const TrainConfig& cfg, Rng& rng);

  Algo algo() const { return algo_; }
  const QNetSpec& spec() const { return spec_; }
  const TrainConfig& config() const { return cfg_; }

  // Online-network utilities for one state, written to q as (n, 5).
  void utilities(const StateEncoding& state, double* q);

  // One optimizer update from a sampled batch. is_weights is empty for the
  // unweighted path, else one multiplicative weight per transition.
  TrainStepResult train_step(std::span<const Transition* const> batch,
                             std::span<const double> is_weights);

  void soft_update_targets();

  uint64_t update_count() const { return updates_; }
  void set_update_count(uint64_t n) { updates_ = n; }

  QNet& online() { return online_; }
  QNet& target() { return target_; }
  Mixer* online_mixer() { return online_mixer_.get(); }
  Mixer* target_mixer() { return target_mixer_.get(); }
  Adam& optimizer() { return opt_; }

  // Online (respectively target) network plus mixer parameters, in the fixed
  // order the optimizer and checkpoints use.
  ParamList online_params();
  ParamList target_params();

 private:
  // y per (transition, agent) for IQL, per transition otherwise.
  std::vector<double> td_targets(std::span<const Transition* const> batch);

  Algo algo_;
  QNetSpec spec_;
  TrainConfig cfg_;
  QNet online_;
  QNet target_;
  std::unique_ptr<Mixer> online_mixer_;
  std::unique_ptr<Mixer> target_mixer_;
  Adam opt_;
  uint64_t updates_ = 0;
  QNet::Tape tape_;
};

}  // namespace lle
