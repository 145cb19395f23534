#include <cmath>
#include <vector>

#include "doctest.h"
#include "lle/error.hpp"
#include "lle/replay.hpp"

using namespace lle;

namespace {

// Minimal transition with a recognizable payload.
Transition tagged(double reward, bool done = false, int8_t state_tag = 0) {
  Transition t;
  t.state = StateEncoding(EncodingShape{1, 1, 1});
  t.state.data()[0] = state_tag;
  t.next_state = StateEncoding(EncodingShape{1, 1, 1});
  t.next_state.data()[0] = static_cast<int8_t>(state_tag + 1);
  t.avail = {ActionMask{true, true, true, true, true}};
  t.next_avail = t.avail;
  t.joint_action = {Action::Stay};
  t.reward = reward;
  t.done = done;
  return t;
}

std::vector<Transition> random_episode(Rng& rng, int max_len = 12) {
  const int T = 1 + rng.uniform_int(max_len);
  std::vector<Transition> ep;
  for (int t = 0; t < T; ++t) {
    bool last = t == T - 1;
    ep.push_back(tagged(rng.normal(), last && rng.uniform01() < 0.5,
                        static_cast<int8_t>(t % 100)));
  }
  return ep;
}

// Independent fold: plain loops, no shared code with the implementation.
std::vector<Transition> fold_oracle(const std::vector<Transition>& ep, int n, double gamma) {
  const int T = static_cast<int>(ep.size());
  std::vector<Transition> out;
  for (int t = 0; t < T; ++t) {
    int m = n < T - t ? n : T - t;
    Transition f = ep[t];
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += std::pow(gamma, j) * ep[t + j].reward;
    f.reward = sum;
    f.next_state = ep[t + m - 1].next_state;
    f.next_avail = ep[t + m - 1].next_avail;
    f.done = ep[t + m - 1].done;
    f.discount = std::pow(gamma, m);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

TEST_CASE("one-step fold reproduces the episode with a single-step discount") {
  Rng rng(5);
  std::vector<Transition> ep = random_episode(rng);
  std::vector<Transition> folded = nstep_fold(ep, 1, 0.95);
  REQUIRE(folded.size() == ep.size());
  for (size_t t = 0; t < ep.size(); ++t) {
    CHECK(folded[t].reward == ep[t].reward);
    CHECK(folded[t].state == ep[t].state);
    CHECK(folded[t].next_state == ep[t].next_state);
    CHECK(folded[t].done == ep[t].done);
    CHECK(folded[t].discount == 0.95);
  }
}

TEST_CASE("three-step fold discounts the third reward twice") {
  std::vector<Transition> ep{tagged(0.0), tagged(0.0), tagged(1.0, true)};
  std::vector<Transition> folded = nstep_fold(ep, 3, 0.95);
  REQUIRE(folded.size() == 3);
  CHECK(folded[0].reward == 0.95 * 0.95);  // 0.9025
  CHECK(folded[0].done);
  CHECK(std::abs(folded[0].discount - std::pow(0.95, 3)) <= 1e-15);
  CHECK(folded[1].reward == 0.95);
  CHECK(folded[2].reward == 1.0);
  CHECK(folded[2].discount == 0.95);
}

TEST_CASE("folds shrink at the episode tail") {
  std::vector<Transition> ep{tagged(1.0), tagged(2.0)};
  std::vector<Transition> folded = nstep_fold(ep, 5, 0.9);
  REQUIRE(folded.size() == 2);
  CHECK(folded[0].reward == 1.0 + 0.9 * 2.0);
  CHECK(std::abs(folded[0].discount - 0.81) <= 1e-15);
  CHECK(folded[1].reward == 2.0);
  CHECK(folded[1].discount == 0.9);
  CHECK(folded[1].next_state == ep[1].next_state);
}

TEST_CASE("fold equals the brute-force oracle on random episodes") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Transition> ep = random_episode(rng);
    for (int n : {1, 3, 5, 7, 9}) {
      std::vector<Transition> got = nstep_fold(ep, n, 0.95);
      std::vector<Transition> want = fold_oracle(ep, n, 0.95);
      REQUIRE(got.size() == want.size());
      for (size_t t = 0; t < got.size(); ++t) {
        CHECK(std::abs(got[t].reward - want[t].reward) <= 1e-12);
        CHECK(std::abs(got[t].discount - want[t].discount) <= 1e-12);
        CHECK(got[t].next_state == want[t].next_state);
        CHECK(got[t].next_avail == want[t].next_avail);
        CHECK(got[t].done == want[t].done);
        CHECK(got[t].state == want[t].state);
        CHECK(got[t].joint_action == want[t].joint_action);
      }
    }
  }
}

TEST_CASE("ring buffer evicts the oldest item at capacity") {
  ReplayBuffer buf(1000);
  for (int i = 0; i <= 1000; ++i) buf.push(tagged(static_cast<double>(i)));
  CHECK(buf.size() == 1000);
  CHECK(buf.at(0).reward == 1000.0);  // slot 0 was recycled
  CHECK(buf.at(1).reward == 1.0);
}

TEST_CASE("uniform sampling is unbiased and sized correctly") {
  ReplayBuffer buf(100);
  for (int i = 0; i < 10; ++i) buf.push(tagged(static_cast<double>(i)));
  Rng rng(17);

  ReplayBuffer one(4);
  one.push(tagged(7.0));
  CHECK(one.sample(1, rng)[0]->reward == 7.0);
  CHECK_THROWS_AS(one.sample(2, rng), InsufficientData);

  std::vector<int> counts(10, 0);
  const int draws = 100'000;
  for (int d = 0; d < draws; ++d) ++counts[static_cast<int>(buf.sample(1, rng)[0]->reward)];
  for (int i = 0; i < 10; ++i) {
    const double freq = static_cast<double>(counts[i]) / draws;
    CHECK(freq >= 0.09);  // 10% +- 1% absolute
    CHECK(freq <= 0.11);
  }

  ReplayBuffer big(50'000);
  for (int i = 0; i < 200; ++i) big.push(tagged(static_cast<double>(i)));
  CHECK(big.sample(64, rng).size() == 64);
}

TEST_CASE("new prioritized items adopt the maximum stored priority") {
  PrioritizedReplay per(8, PERConfig{});
  per.push(tagged(0.0));
  CHECK(per.live_priorities() == std::vector<double>{1.0});

  const uint64_t id0[] = {0};
  const double big_err[] = {3.0};
  per.update_priorities(id0, big_err);
  per.push(tagged(1.0));
  auto ps = per.live_priorities();
  REQUIRE(ps.size() == 2);
  CHECK(ps[1] == ps[0]);  // entered at the current max
}

TEST_CASE("equal priorities sample uniformly with unit weights") {
  PrioritizedReplay per(16, PERConfig{});
  for (int i = 0; i < 4; ++i) per.push(tagged(static_cast<double>(i)));
  Rng rng(23);
  std::vector<int> counts(4, 0);
  const int draws = 100'000;
  for (int d = 0; d < draws; ++d) {
    PrioritizedSample s = per.sample(1, 0, rng);
    CHECK(s.is_weights[0] == 1.0);
    ++counts[static_cast<int>(s.items[0]->reward)];
  }
  for (int c : counts) {
    const double freq = static_cast<double>(c) / draws;
    CHECK(freq >= 0.23);
    CHECK(freq <= 0.27);
  }
}

TEST_CASE("proportional sampling matches closed-form probabilities") {
  PERConfig cfg;
  cfg.alpha = 1.0;
  PrioritizedReplay per(4, cfg);
  per.push(tagged(10.0));
  per.push(tagged(20.0));
  const uint64_t ids[] = {0, 1};
  const double errs[] = {1.0 - cfg.epsilon_priority, 3.0 - cfg.epsilon_priority};
  per.update_priorities(ids, errs);
  CHECK(per.live_priorities() == std::vector<double>{1.0, 3.0});

  Rng rng(31);
  int first = 0;
  const int draws = 100'000;
  for (int d = 0; d < draws; ++d) first += per.sample(1, 0, rng).ids[0] == 0;
  const double freq = static_cast<double>(first) / draws;
  CHECK(freq > 0.25 - 0.02);
  CHECK(freq < 0.25 + 0.02);
}

TEST_CASE("importance weights are max-normalized to exactly one") {
  PERConfig cfg;
  cfg.alpha = 1.0;
  PrioritizedReplay per(4, cfg);
  per.push(tagged(0.0));
  per.push(tagged(1.0));
  const uint64_t ids[] = {0, 1};
  const double errs[] = {1.0 - cfg.epsilon_priority, 3.0 - cfg.epsilon_priority};
  per.update_priorities(ids, errs);

  Rng rng(41);
  bool saw_both = false;
  for (int d = 0; d < 200 && !saw_both; ++d) {
    PrioritizedSample s = per.sample(2, cfg.beta_anneal_steps, rng);
    double max_w = 0.0;
    for (double w : s.is_weights) max_w = std::max(max_w, w);
    CHECK(max_w == 1.0);
    for (size_t i = 0; i < s.ids.size(); ++i)
      for (size_t j = 0; j < s.ids.size(); ++j)
        if (s.ids[i] == 0 && s.ids[j] == 1) {
          // beta = 1: weights scale as 1/p, normalized by the rarer item.
          CHECK(s.is_weights[i] == 1.0);
          CHECK(std::abs(s.is_weights[j] - 1.0 / 3.0) <= 1e-12);
          saw_both = true;
        }
  }
  CHECK(saw_both);
}

TEST_CASE("beta anneals linearly from its floor to one") {
  PERConfig cfg;  // beta0 0.5 over 1M
  PrioritizedReplay per(2, cfg);
  CHECK(per.beta(0) == 0.5);
  CHECK(per.beta(500'000) == 0.75);
  CHECK(per.beta(1'000'000) == 1.0);
  CHECK(per.beta(5'000'000) == 1.0);
}

TEST_CASE("priority updates to evicted slots are skipped and counted") {
  PrioritizedReplay per(4, PERConfig{});
  for (int i = 0; i < 5; ++i) per.push(tagged(static_cast<double>(i)));  // id 0 evicted
  auto before = per.live_priorities();
  const uint64_t ids[] = {0};
  const double errs[] = {100.0};
  per.update_priorities(ids, errs);
  CHECK(per.stale_update_count() == 1);
  CHECK(per.live_priorities() == before);

  const uint64_t live_id[] = {4};
  per.update_priorities(live_id, errs);
  CHECK(per.stale_update_count() == 1);
  CHECK(per.live_priorities() != before);
}

TEST_CASE("zero TD error keeps an item sampleable") {
  PERConfig cfg;
  PrioritizedReplay per(2, cfg);
  per.push(tagged(0.0));
  const uint64_t ids[] = {0};
  const double errs[] = {0.0};
  per.update_priorities(ids, errs);
  const double p = per.live_priorities()[0];
  CHECK(p == std::pow(cfg.epsilon_priority, cfg.alpha));
  CHECK(p > 0.0);
}

TEST_CASE("raising one TD error strictly raises its sampling probability") {
  PrioritizedReplay per(8, PERConfig{});
  for (int i = 0; i < 4; ++i) per.push(tagged(static_cast<double>(i)));
  const uint64_t all[] = {0, 1, 2, 3};
  const double base[] = {1.0, 1.0, 1.0, 1.0};
  per.update_priorities(all, base);
  const double before = per.live_priorities()[1] / per.total_priority();
  const uint64_t one[] = {1};
  const double doubled[] = {2.0};
  per.update_priorities(one, doubled);
  const double after = per.live_priorities()[1] / per.total_priority();
  CHECK(after > before);
}

TEST_CASE("tree root always equals the sum of live priorities") {
  PrioritizedReplay per(64, PERConfig{});
  Rng rng(53);
  for (int op = 0; op < 500; ++op) {
    if (per.size() == 0 || rng.uniform01() < 0.5) {
      per.push(tagged(rng.normal()));
    } else {
      const uint64_t id = rng.next_u64() % (per.size() + 16);
      const double err = std::abs(rng.normal()) * 10.0;
      per.update_priorities(std::vector<uint64_t>{id}, std::vector<double>{err});
    }
    double sum = 0.0;
    for (double p : per.live_priorities()) sum += p;
    CHECK(std::abs(per.total_priority() - sum) <= 1e-9 * std::max(1.0, sum));
  }
}

TEST_CASE("prioritized sampling needs enough data") {
  PrioritizedReplay per(8, PERConfig{});
  per.push(tagged(0.0));
  Rng rng(1);
  CHECK_THROWS_AS(per.sample(2, 0, rng), InsufficientData);
}
