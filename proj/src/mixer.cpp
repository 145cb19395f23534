#include "lle/mixer.hpp"

#include <cmath>
#include <cstring>

#include "lle/error.hpp"

namespace lle {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// ELU with alpha 1. Post-activation y recovers the derivative: 1 for y > 0,
// y + 1 otherwise.
double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad_from_output(double y) { return y > 0.0 ? 1.0 : y + 1.0; }

}  // namespace

AdditiveMixer::AdditiveMixer(int n_agents) : n_(n_agents) {
  if (n_agents <= 0) throw ContractViolation("additive mixer needs n_agents >= 1");
}

void AdditiveMixer::forward(const double* agent_q, const double* /*state*/, int batch,
                            double* q_tot) {
  batch_ = batch;
  for (int b = 0; b < batch; ++b) {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += agent_q[static_cast<size_t>(b) * n_ + i];
    q_tot[b] = s;
  }
}

void AdditiveMixer::backward(const double* dq_tot, double* d_agent_q) {
  for (int b = 0; b < batch_; ++b)
    for (int i = 0; i < n_; ++i)
      d_agent_q[static_cast<size_t>(b) * n_ + i] = dq_tot[b];
}

QmixMixer::QmixMixer(int n_agents, int state_dim, int embed, Rng& rng)
    : n_(n_agents), state_dim_(state_dim), embed_(embed) {
  if (n_agents <= 0 || state_dim <= 0 || embed <= 0)
    throw ContractViolation("monotonic mixer needs positive n_agents, state_dim, embed");
  hyper_w1_.init(state_dim, n_agents * embed, rng);
  hyper_b1_.init(state_dim, embed, rng);
  hyper_w2_.init(state_dim, embed, rng);
  hyper_v1_.init(state_dim, embed, rng);
  hyper_v2_.init(embed, 1, rng);
}

ParamList QmixMixer::params() {
  ParamList list;
  hyper_w1_.params(list);
  hyper_b1_.params(list);
  hyper_w2_.params(list);
  hyper_v1_.params(list);
  hyper_v2_.params(list);
  return list;
}

void QmixMixer::forward(const double* agent_q, const double* state, int batch,
                        double* q_tot) {
  if (state == nullptr) throw ContractViolation("monotonic mixer needs a state input");
  batch_ = batch;
  const size_t bs = static_cast<size_t>(batch);

  agent_q_.assign(agent_q, agent_q + bs * n_);
  state_.assign(state, state + bs * state_dim_);

  w1_raw_.resize(bs * n_ * embed_);
  b1_.resize(bs * embed_);
  w2_raw_.resize(bs * embed_);
  v_hidden_.resize(bs * embed_);
  hidden_.resize(bs * embed_);
  std::vector<double> v_out(bs);

  hyper_w1_.forward(state, batch, w1_raw_.data());
  hyper_b1_.forward(state, batch, b1_.data());
  hyper_w2_.forward(state, batch, w2_raw_.data());
  hyper_v1_.forward(state, batch, v_hidden_.data());
  relu(v_hidden_.data(), v_hidden_.size());
  hyper_v2_.forward(v_hidden_.data(), batch, v_out.data());

  for (int b = 0; b < batch; ++b) {
    const double* q = agent_q + static_cast<size_t>(b) * n_;
    const double* w1 = w1_raw_.data() + static_cast<size_t>(b) * n_ * embed_;
    const double* b1 = b1_.data() + static_cast<size_t>(b) * embed_;
    const double* w2 = w2_raw_.data() + static_cast<size_t>(b) * embed_;
    double* h = hidden_.data() + static_cast<size_t>(b) * embed_;
    double out = v_out[b];
    for (int j = 0; j < embed_; ++j) {
      double pre = b1[j];
      for (int i = 0; i < n_; ++i)
        pre += q[i] * std::abs(w1[static_cast<size_t>(i) * embed_ + j]);
      h[j] = elu(pre);
      out += h[j] * std::abs(w2[j]);
    }
    q_tot[b] = out;
  }
}

void QmixMixer::backward(const double* dq_tot, double* d_agent_q) {
  const size_t bs = static_cast<size_t>(batch_);
  std::vector<double> dw1_raw(bs * n_ * embed_);
  std::vector<double> db1(bs * embed_);
  std::vector<double> dw2_raw(bs * embed_);
  std::vector<double> dv_out(bs);
  std::vector<double> dv_hidden(bs * embed_);

  for (int b = 0; b < batch_; ++b) {
    const double g = dq_tot[b];
    const double* q = agent_q_.data() + static_cast<size_t>(b) * n_;
    const double* w1 = w1_raw_.data() + static_cast<size_t>(b) * n_ * embed_;
    const double* w2 = w2_raw_.data() + static_cast<size_t>(b) * embed_;
    const double* h = hidden_.data() + static_cast<size_t>(b) * embed_;
    double* dq = d_agent_q + static_cast<size_t>(b) * n_;
    for (int i = 0; i < n_; ++i) dq[i] = 0.0;
    dv_out[b] = g;
    for (int j = 0; j < embed_; ++j) {
      const size_t bj = static_cast<size_t>(b) * embed_ + j;
      dw2_raw[bj] = g * h[j] * sign(w2[j]);
      const double dpre = g * std::abs(w2[j]) * elu_grad_from_output(h[j]);
      db1[bj] = dpre;
      for (int i = 0; i < n_; ++i) {
        const size_t ij = static_cast<size_t>(i) * embed_ + j;
        dq[i] += std::abs(w1[ij]) * dpre;
        dw1_raw[static_cast<size_t>(b) * n_ * embed_ + ij] = q[i] * dpre * sign(w1[ij]);
      }
    }
  }

  hyper_w1_.backward(state_.data(), dw1_raw.data(), batch_, nullptr);
  hyper_b1_.backward(state_.data(), db1.data(), batch_, nullptr);
  hyper_w2_.backward(state_.data(), dw2_raw.data(), batch_, nullptr);
  hyper_v2_.backward(v_hidden_.data(), dv_out.data(), batch_, dv_hidden.data());
  relu_backward(v_hidden_.data(), dv_hidden.data(), dv_hidden.size());
  hyper_v1_.backward(state_.data(), dv_hidden.data(), batch_, nullptr);
}

}  // namespace lle
