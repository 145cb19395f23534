#include "lle/replay.hpp"

#include <algorithm>
#include <cmath>

#include "lle/error.hpp"

namespace lle {

std::vector<Transition> nstep_fold(std::span<const Transition> episode, int n, double gamma) {
  if (n < 1) throw ContractViolation("nstep_fold: n must be >= 1");
  const int T = static_cast<int>(episode.size());
  std::vector<Transition> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    const int m = std::min(n, T - t);
    Transition f;
    f.state = episode[t].state;
    f.avail = episode[t].avail;
    f.joint_action = episode[t].joint_action;
    double r = 0.0, g = 1.0;
    for (int j = 0; j < m; ++j) {
      r += g * episode[t + j].reward;
      g *= gamma;
    }
    f.reward = r;
    f.next_state = episode[t + m - 1].next_state;
    f.next_avail = episode[t + m - 1].next_avail;
    f.done = episode[t + m - 1].done;
    f.discount = g;  // gamma^m
    out.push_back(std::move(f));
  }
  return out;
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractViolation("replay capacity must be >= 1");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[write_] = std::move(t);
  }
  write_ = (write_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(size_t k, Rng& rng) const {
  if (items_.size() < k)
    throw InsufficientData("replay holds " + std::to_string(items_.size()) +
                           " transitions, need " + std::to_string(k));
  std::vector<const Transition*> out(k);
  for (size_t i = 0; i < k; ++i)
    out[i] = &items_[rng.uniform_int(static_cast<int>(items_.size()))];
  return out;
}

PrioritizedReplay::PrioritizedReplay(size_t capacity, PERConfig config)
    : capacity_(capacity), config_(config) {
  if (capacity == 0) throw ContractViolation("replay capacity must be >= 1");
  if (config.alpha <= 0.0 || config.alpha > 1.0 || config.beta0 <= 0.0 || config.beta0 > 1.0)
    throw ContractViolation("PER alpha and beta0 must lie in (0, 1]");
  if (config.epsilon_priority <= 0.0)
    throw ContractViolation("PER epsilon_priority must be > 0");
  items_.resize(capacity);
  slot_id_.assign(capacity, UINT64_MAX);
  while (tree_base_ < capacity) tree_base_ <<= 1;
  tree_sum_.assign(2 * tree_base_, 0.0);
  tree_max_.assign(2 * tree_base_, 0.0);
}

void PrioritizedReplay::set_priority(size_t slot, double p) {
  size_t node = tree_base_ + slot;
  tree_sum_[node] = p;
  tree_max_[node] = p;
  while (node > 1) {
    node >>= 1;
    tree_sum_[node] = tree_sum_[2 * node] + tree_sum_[2 * node + 1];
    tree_max_[node] = std::max(tree_max_[2 * node], tree_max_[2 * node + 1]);
  }
}

void PrioritizedReplay::push(Transition t) {
  const double p = size_ == 0 ? 1.0 : tree_max_[1];
  items_[write_] = std::move(t);
  slot_id_[write_] = next_id_++;
  set_priority(write_, p);
  write_ = (write_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

double PrioritizedReplay::beta(uint64_t step) const {
  if (config_.beta_anneal_steps == 0 || step >= config_.beta_anneal_steps) return 1.0;
  const double frac = static_cast<double>(step) / static_cast<double>(config_.beta_anneal_steps);
  return config_.beta0 + (1.0 - config_.beta0) * frac;
}

PrioritizedSample PrioritizedReplay::sample(size_t k, uint64_t step, Rng& rng) const {
  if (size_ < k)
    throw InsufficientData("replay holds " + std::to_string(size_) + " transitions, need " +
                           std::to_string(k));
  PrioritizedSample out;
  out.items.resize(k);
  out.is_weights.resize(k);
  out.ids.resize(k);
  const double total = tree_sum_[1];
  const double b = beta(step);
  double max_w = 0.0;
  for (size_t i = 0; i < k; ++i) {
    double u = rng.uniform01() * total;
    size_t node = 1;
    while (node < tree_base_) {
      node *= 2;
      if (u >= tree_sum_[node] && tree_sum_[node + 1] > 0.0) {
        u -= tree_sum_[node];
        ++node;
      }
    }
    size_t slot = node - tree_base_;
    out.items[i] = &items_[slot];
    out.ids[i] = slot_id_[slot];
    const double prob = tree_sum_[node] / total;
    const double w = std::pow(static_cast<double>(size_) * prob, -b);
    out.is_weights[i] = w;
    max_w = std::max(max_w, w);
  }
  for (double& w : out.is_weights) w /= max_w;
  return out;
}

void PrioritizedReplay::update_priorities(std::span<const uint64_t> ids,
                                          std::span<const double> td_errors) {
  if (ids.size() != td_errors.size())
    throw ContractViolation("update_priorities: ids and td_errors must align");
  for (size_t i = 0; i < ids.size(); ++i) {
    const uint64_t id = ids[i];
    // Slot ids increase monotonically, so the slot that held this id is
    // id % capacity; a different resident id there means it was evicted.
    const size_t slot = static_cast<size_t>(id % capacity_);
    if (slot_id_[slot] != id) {
      ++stale_updates_;
      continue;
    }
    const double p = std::pow(std::abs(td_errors[i]) + config_.epsilon_priority, config_.alpha);
    set_priority(slot, p);
  }
}

double PrioritizedReplay::total_priority() const { return tree_sum_[1]; }

std::vector<double> PrioritizedReplay::live_priorities() const {
  std::vector<double> out(size_);
  for (size_t i = 0; i < size_; ++i) out[i] = tree_sum_[tree_base_ + i];
  return out;
}

}  // namespace lle
