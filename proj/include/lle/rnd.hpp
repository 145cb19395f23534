#pragma once

#include <cstdint>
#include <vector>

#include "lle/nn.hpp"
#include "lle/observation.hpp"
#include "lle/rng.hpp"

namespace lle {

struct RNDConfig {
  double mask_prob = 0.25;
  double ir_factor_start = 2.0;
  uint64_t ir_anneal_steps = 1'000'000;
  double ir_clip = 5.0;
  uint64_t warmup_updates = 64;
  int embed = 64;
  double lr = 5e-4;
  // Running observation normalization, off to match the plain setup; when
  // on, inputs are standardized with running statistics and clamped to
  // [-5, 5].
  bool normalize_obs = false;
};

// Training-only reward shaping; reported scores never include the intrinsic
// part.
inline double shaped_reward(double extrinsic, double intrinsic) {
  return extrinsic + intrinsic;
}

// Random-distillation novelty: a frozen random embedding network and a
// trained predictor of it. Prediction error on a state is the novelty
// signal. Both nets share the conv trunk shape of the utility network plus a
// linear embedding head.
class RND {
 public:
  RND(int in_channels, int height, int width, const RNDConfig& cfg, Rng& rng);

  const RNDConfig& config() const { return cfg_; }
  int in_channels() const { return in_channels_; }
  int height() const { return height_; }
  int width() const { return width_; }

  // min(raw, ir_clip) * factor(global_step); exactly 0 before
  // warmup_updates predictor updates and once the factor anneals to 0.
  double intrinsic_reward(const StateEncoding& state, uint64_t global_step);

  // Squared embedding error, before clipping and annealing.
  double raw_error(const StateEncoding& state);

  // Linear ir_factor_start -> 0 over ir_anneal_steps.
  double factor_at(uint64_t global_step) const;

  // One optimizer step on the predictor from the batch's prediction errors;
  // each batch element is dropped from the loss with probability mask_prob.
  // The target never changes. Returns the masked loss.
  double update_predictor(const int8_t* const* states, int batch, Rng& rng);

  uint64_t update_count() const { return updates_; }
  void set_update_count(uint64_t n) { updates_ = n; }

  ParamList predictor_params();
  ParamList target_params();
  Adam& optimizer() { return opt_; }

  // FNV-1a over the target parameter bytes; stable for the lifetime of a
  // run.
  uint64_t target_hash();

  // Running normalization state, in input-element order (used only when
  // normalize_obs is set).
  std::vector<double>& obs_mean() { return obs_mean_; }
  std::vector<double>& obs_m2() { return obs_m2_; }
  uint64_t obs_count() const { return obs_count_; }
  void set_obs_count(uint64_t n) { obs_count_ = n; }

 private:
  struct Net {
    Conv3x3 c1, c2, c3;
    Dense head;
    void init(int in_ch, int flat, int embed, Rng& rng);
    void params(ParamList& list);
  };

  // Embeddings (batch, embed). When tape is kept, backward() can follow.
  struct Tape {
    int batch = 0;
    std::vector<double> k1, a1, k2, a2, k3, a3, feat;
  };
  void forward(Net& net, const double* x0, int batch, double* emb, Tape& tape);
  void backward(Net& net, Tape& tape, const double* demb);

  // Validates the config, initializes both nets, returns the predictor
  // parameter list for the optimizer. Runs before opt_ is constructed.
  ParamList init_nets(Rng& rng);

  // int8 encodings as channel-major doubles (in_channels, batch*h*w).
  std::vector<double> raw_input(const int8_t* const* states, int batch) const;
  void apply_norm(std::vector<double>& x0, int batch) const;
  void update_obs_stats(const std::vector<double>& x0, int batch);

  int in_channels_, height_, width_;
  RNDConfig cfg_;
  Net target_;
  Net predictor_;
  Adam opt_;
  uint64_t updates_ = 0;

  std::vector<double> obs_mean_, obs_m2_;
  uint64_t obs_count_ = 0;
};

}  // namespace lle
