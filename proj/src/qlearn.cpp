#include "lle/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lle/error.hpp"

namespace lle {

const char* algo_name(Algo algo) {
  switch (algo) {
    case Algo::IQL: return "iql";
    case Algo::VDN: return "vdn";
    case Algo::QMIX: return "qmix";
  }
  throw ContractViolation("unknown algorithm");
}

Algo algo_from_name(std::string_view name) {
  if (name == "iql") return Algo::IQL;
  if (name == "vdn") return Algo::VDN;
  if (name == "qmix") return Algo::QMIX;
  throw ValidationError("unknown algorithm name: " + std::string(name));
}

double epsilon_at(const TrainConfig& cfg, uint64_t step) {
  // Past the anneal horizon the floor holds exactly, not up to rounding.
  if (cfg.eps_anneal == 0 || step >= cfg.eps_anneal) return cfg.eps_min;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.eps_anneal);
  return cfg.eps_start + (cfg.eps_min - cfg.eps_start) * frac;
}

std::vector<Action> select_actions(const double* utilities,
                                   std::span<const ActionMask> masks, double epsilon,
                                   Rng& rng) {
  std::vector<Action> joint(masks.size());
  for (size_t i = 0; i < masks.size(); ++i) {
    const ActionMask& mask = masks[i];
    const double* q = utilities + i * kNumActions;
    int n_avail = 0;
    for (bool ok : mask) n_avail += ok;
    if (n_avail == 0) throw ContractViolation("action mask admits no action");
    if (rng.uniform01() < epsilon) {
      uint64_t pick = rng.uniform_int(static_cast<uint64_t>(n_avail));
      for (int a = 0; a < kNumActions; ++a) {
        if (!mask[a]) continue;
        if (pick == 0) {
          joint[i] = static_cast<Action>(a);
          break;
        }
        --pick;
      }
    } else {
      int best = -1;
      for (int a = 0; a < kNumActions; ++a) {
        if (!mask[a]) continue;
        if (best < 0 || q[a] > q[best]) best = a;
      }
      joint[i] = static_cast<Action>(best);
    }
  }
  return joint;
}

namespace {

std::unique_ptr<Mixer> make_mixer(Algo algo, const QNetSpec& spec, int embed, Rng& rng) {
  switch (algo) {
    case Algo::IQL: return nullptr;
    case Algo::VDN: return std::make_unique<AdditiveMixer>(spec.n_agents);
    case Algo::QMIX: {
      const int state_dim = spec.in_channels * spec.height * spec.width;
      return std::make_unique<QmixMixer>(spec.n_agents, state_dim, embed, rng);
    }
  }
  throw ContractViolation("unknown algorithm");
}

ParamList joined(ParamList net, Mixer* mixer) {
  if (mixer != nullptr)
    for (const ParamRef& p : mixer->params()) net.push_back(p);
  return net;
}

std::vector<const int8_t*> state_ptrs(std::span<const Transition* const> batch, bool next) {
  std::vector<const int8_t*> ptrs(batch.size());
  for (size_t b = 0; b < batch.size(); ++b)
    ptrs[b] = next ? batch[b]->next_state.data() : batch[b]->state.data();
  return ptrs;
}

std::vector<double> flat_states(std::span<const Transition* const> batch, bool next, int state_dim) {
  std::vector<double> out(batch.size() * static_cast<size_t>(state_dim));
  for (size_t b = 0; b < batch.size(); ++b) {
    const int8_t* src = next ? batch[b]->next_state.data() : batch[b]->state.data();
    double* dst = out.data() + b * static_cast<size_t>(state_dim);
    for (int j = 0; j < state_dim; ++j) dst[j] = static_cast<double>(src[j]);
  }
  return out;
}

int masked_argmax(const double* q, const ActionMask& mask) {
  int best = -1;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    if (best < 0 || q[a] > q[best]) best = a;
  }
  if (best < 0) throw ContractViolation("action mask admits no action");
  return best;
}

}  // namespace

Learner::Learner(Algo algo, const QNetSpec& spec, const TrainConfig& cfg, Rng& rng)
    : algo_(algo),
      spec_(spec),
      cfg_(cfg),
      online_(spec, rng),
      target_(spec, rng),
      online_mixer_(make_mixer(algo, spec, cfg.mixer_embed, rng)),
      target_mixer_(make_mixer(algo, spec, cfg.mixer_embed, rng)),
      opt_(joined(online_.params(), online_mixer_.get()), cfg.lr) {
  copy_params(target_.params(), online_.params());
  if (target_mixer_ != nullptr)
    copy_params(target_mixer_->params(), online_mixer_->params());
}

ParamList Learner::online_params() { return joined(online_.params(), online_mixer_.get()); }

ParamList Learner::target_params() { return joined(target_.params(), target_mixer_.get()); }

void Learner::utilities(const StateEncoding& state, double* q) {
  const int8_t* ptr = state.data();
  online_.forward(&ptr, 1, q, tape_);
}

std::vector<double> Learner::td_targets(std::span<const Transition* const> batch) {
  const int B = static_cast<int>(batch.size());
  const int n = spec_.n_agents;
  const size_t qsize = static_cast<size_t>(B) * n * kNumActions;

  const std::vector<const int8_t*> next_ptrs = state_ptrs(batch, true);
  std::vector<double> q_online(qsize), q_target(qsize);
  QNet::Tape scratch;
  online_.forward(next_ptrs.data(), B, q_online.data(), scratch);
  target_.forward(next_ptrs.data(), B, q_target.data(), scratch);

  // Greedy next action from the online utilities (or target when the
  // double-Q correction is off), evaluated with the target utilities.
  std::vector<double> chosen(static_cast<size_t>(B) * n);
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < n; ++i) {
      const size_t row = (static_cast<size_t>(b) * n + i) * kNumActions;
      const double* selector = (cfg_.double_q ? q_online : q_target).data() + row;
      const int a = masked_argmax(selector, batch[b]->next_avail[i]);
      chosen[static_cast<size_t>(b) * n + i] = q_target[row + a];
    }
  }

  if (algo_ == Algo::IQL) {
    std::vector<double> y(static_cast<size_t>(B) * n);
    for (int b = 0; b < B; ++b) {
      const double bootstrap = batch[b]->done ? 0.0 : batch[b]->discount;
      for (int i = 0; i < n; ++i)
        y[static_cast<size_t>(b) * n + i] =
            batch[b]->reward + bootstrap * chosen[static_cast<size_t>(b) * n + i];
    }
    return y;
  }

  const int state_dim = spec_.in_channels * spec_.height * spec_.width;
  const std::vector<double> next_flat = flat_states(batch, true, state_dim);
  std::vector<double> q_tot(B);
  target_mixer_->forward(chosen.data(), next_flat.data(), B, q_tot.data());

  std::vector<double> y(B);
  for (int b = 0; b < B; ++b) {
    const double bootstrap = batch[b]->done ? 0.0 : batch[b]->discount;
    y[b] = batch[b]->reward + bootstrap * q_tot[b];
  }
  return y;
}

TrainStepResult Learner::train_step(std::span<const Transition* const> batch,
                                    std::span<const double> is_weights) {
  const int B = static_cast<int>(batch.size());
  if (B == 0) throw ContractViolation("empty training batch");
  if (!is_weights.empty() && is_weights.size() != batch.size())
    throw ContractViolation("one importance weight per transition required");
  const int n = spec_.n_agents;
  const size_t qsize = static_cast<size_t>(B) * n * kNumActions;

  const std::vector<double> y = td_targets(batch);

  const std::vector<const int8_t*> ptrs = state_ptrs(batch, false);
  std::vector<double> q(qsize);
  online_.forward(ptrs.data(), B, q.data(), tape_);

  const ParamList params = online_params();
  zero_grads(params);

  const auto weight = [&](int b) { return is_weights.empty() ? 1.0 : is_weights[b]; };

  TrainStepResult result;
  result.td_abs.resize(B);
  std::vector<double> dq(qsize, 0.0);
  double loss = 0.0;

  if (algo_ == Algo::IQL) {
    const double scale = 1.0 / (static_cast<double>(B) * n);
    for (int b = 0; b < B; ++b) {
      double abs_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const size_t row = (static_cast<size_t>(b) * n + i) * kNumActions;
        const int a = static_cast<int>(batch[b]->joint_action[i]);
        const double delta = q[row + a] - y[static_cast<size_t>(b) * n + i];
        loss += weight(b) * delta * delta * scale;
        dq[row + a] = 2.0 * weight(b) * delta * scale;
        abs_sum += std::abs(delta);
      }
      result.td_abs[b] = abs_sum / n;
    }
  } else {
    std::vector<double> q_chosen(static_cast<size_t>(B) * n);
    for (int b = 0; b < B; ++b) {
      for (int i = 0; i < n; ++i) {
        const size_t row = (static_cast<size_t>(b) * n + i) * kNumActions;
        const int a = static_cast<int>(batch[b]->joint_action[i]);
        q_chosen[static_cast<size_t>(b) * n + i] = q[row + a];
      }
    }
    const int state_dim = spec_.in_channels * spec_.height * spec_.width;
    const std::vector<double> state_flat = flat_states(batch, false, state_dim);
    std::vector<double> q_tot(B);
    online_mixer_->forward(q_chosen.data(), state_flat.data(), B, q_tot.data());

    std::vector<double> dq_tot(B);
    for (int b = 0; b < B; ++b) {
      const double delta = q_tot[b] - y[b];
      loss += weight(b) * delta * delta / B;
      dq_tot[b] = 2.0 * weight(b) * delta / B;
      result.td_abs[b] = std::abs(delta);
    }

    std::vector<double> d_chosen(static_cast<size_t>(B) * n);
    online_mixer_->backward(dq_tot.data(), d_chosen.data());
    for (int b = 0; b < B; ++b) {
      for (int i = 0; i < n; ++i) {
        const size_t row = (static_cast<size_t>(b) * n + i) * kNumActions;
        const int a = static_cast<int>(batch[b]->joint_action[i]);
        dq[row + a] = d_chosen[static_cast<size_t>(b) * n + i];
      }
    }
  }

  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss " << loss << " at update " << updates_ << " (algo "
        << algo_name(algo_) << ", batch " << B << ")";
    throw ContractViolation(msg.str());
  }

  online_.backward(tape_, dq.data());
  result.loss = loss;
  result.grad_norm = clip_global_norm(params, cfg_.grad_clip);
  opt_.step();
  ++updates_;
  return result;
}

void Learner::soft_update_targets() {
  soft_update(target_.params(), online_.params(), cfg_.tau);
  if (target_mixer_ != nullptr)
    soft_update(target_mixer_->params(), online_mixer_->params(), cfg_.tau);
}

}  // namespace lle
