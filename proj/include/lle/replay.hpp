#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lle/geometry.hpp"
#include "lle/observation.hpp"
#include "lle/rng.hpp"

namespace lle {

// One stored team step. done is true only for real termination (death or
// finish), never truncation, so truncated tails still bootstrap. discount is
// the factor applied to the bootstrap term: gamma^m after an m-step fold.
struct Transition {
  StateEncoding state;
  std::vector<ActionMask> avail;
  std::vector<Action> joint_action;
  double reward = 0.0;
  StateEncoding next_state;
  std::vector<ActionMask> next_avail;
  bool done = false;
  double discount = 1.0;
};

// Folds a contiguous episode into n-step transitions: item t carries
// sum_{j<m} gamma^j r_{t+j} with m = min(n, steps left), the state/masks
// from step t+m-1's successor, that step's done flag, and discount gamma^m.
// n = 1 reproduces the input (with discount = gamma).
std::vector<Transition> nstep_fold(std::span<const Transition> episode, int n, double gamma);

// Uniform ring buffer; sampling is i.i.d. with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void push(Transition t);
  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return items_[i]; }

  std::vector<const Transition*> sample(size_t k, Rng& rng) const;

 private:
  size_t capacity_;
  size_t write_ = 0;
  std::vector<Transition> items_;
};

struct PERConfig {
  double alpha = 0.6;
  double beta0 = 0.5;
  uint64_t beta_anneal_steps = 1'000'000;
  double epsilon_priority = 1e-6;
};

struct PrioritizedSample {
  std::vector<const Transition*> items;
  std::vector<double> is_weights;  // normalized so the batch max is exactly 1
  std::vector<uint64_t> ids;       // pass back to update_priorities
};

// Proportional prioritized replay over a sum tree. Slots are addressed by
// monotonically increasing item ids so that priority updates arriving after
// the slot was overwritten are detected and skipped.
class PrioritizedReplay {
 public:
  PrioritizedReplay(size_t capacity, PERConfig config);

  // New items enter at the current maximum stored priority (1 if empty).
  void push(Transition t);
  size_t size() const { return size_; }
  size_t capacity() const { return capacity_; }

  // beta0 -> 1 linearly over beta_anneal_steps, then constant 1.
  double beta(uint64_t step) const;

  PrioritizedSample sample(size_t k, uint64_t step, Rng& rng) const;

  // priority := (|td_error| + epsilon_priority)^alpha per id; stale ids
  // (already evicted) are skipped and counted.
  void update_priorities(std::span<const uint64_t> ids, std::span<const double> td_errors);

  uint64_t stale_update_count() const { return stale_updates_; }
  double total_priority() const;
  std::vector<double> live_priorities() const;  // in slot order, for audits

 private:
  void set_priority(size_t slot, double p);

  size_t capacity_;
  size_t size_ = 0;
  size_t write_ = 0;
  uint64_t next_id_ = 0;
  uint64_t stale_updates_ = 0;
  PERConfig config_;
  std::vector<Transition> items_;
  std::vector<uint64_t> slot_id_;
  size_t tree_base_ = 1;
  std::vector<double> tree_sum_;
  std::vector<double> tree_max_;
};

}  // namespace lle
