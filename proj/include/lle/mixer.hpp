#pragma once

#include <vector>

#include "lle/nn.hpp"
#include "lle/rng.hpp"

namespace lle {

enum class MixerKind { Independent, Additive, MonotonicHypernet };

// Combines per-agent chosen utilities into one joint value per batch item.
// forward() caches what backward() needs, so calls come in matched pairs on
// the same batch.
class Mixer {
 public:
  virtual ~Mixer() = default;

  // agent_q: (batch, n) row-major. state: (batch, state_dim) row-major; may
  // be null for mixers that ignore it. q_tot: (batch).
  virtual void forward(const double* agent_q, const double* state, int batch,
                       double* q_tot) = 0;

  // dq_tot: (batch). Accumulates parameter gradients and writes
  // d_agent_q (batch, n).
  virtual void backward(const double* dq_tot, double* d_agent_q) = 0;

  virtual ParamList params() = 0;
};

// q_tot = sum of the per-agent utilities, exactly.
class AdditiveMixer final : public Mixer {
 public:
  explicit AdditiveMixer(int n_agents);
  void forward(const double* agent_q, const double* state, int batch,
               double* q_tot) override;
  void backward(const double* dq_tot, double* d_agent_q) override;
  ParamList params() override { return {}; }

 private:
  int n_;
  int batch_ = 0;
};

// Two-layer mixing network whose weights come from state-conditioned
// hypernetworks: hidden = ELU(q · |W1(s)| + b1(s)), q_tot = hidden · |w2(s)|
// + V(s). W1, b1 and w2 are single dense layers on the state; V is a
// two-layer dense net with a ReLU hidden layer. The absolute value on the
// mixing weights keeps dq_tot/dq_i >= 0 for every agent and state.
class QmixMixer final : public Mixer {
 public:
  QmixMixer(int n_agents, int state_dim, int embed, Rng& rng);

  void forward(const double* agent_q, const double* state, int batch,
               double* q_tot) override;
  void backward(const double* dq_tot, double* d_agent_q) override;
  ParamList params() override;

  int n_agents() const { return n_; }
  int state_dim() const { return state_dim_; }
  int embed() const { return embed_; }

 private:
  int n_, state_dim_, embed_;
  Dense hyper_w1_;  // state -> n*embed, abs applied downstream
  Dense hyper_b1_;  // state -> embed
  Dense hyper_w2_;  // state -> embed, abs applied downstream
  Dense hyper_v1_;  // state -> embed, ReLU
  Dense hyper_v2_;  // embed -> 1

  // Forward cache for backward.
  int batch_ = 0;
  std::vector<double> agent_q_, state_, w1_raw_, b1_, w2_raw_, v_hidden_,
      hidden_;
};

}  // namespace lle
