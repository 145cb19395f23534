#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "lle/error.hpp"
#include "lle/map.hpp"
#include "lle/observation.hpp"
#include "lle/qlearn.hpp"
#include "lle/trainer.hpp"
#include "lle/world.hpp"
#include "test_support.hpp"

using namespace lle;

namespace {

QNetSpec spec_for(const MapSpec& map) {
  const EncodingShape s = encoding_shape(map);
  QNetSpec spec;
  spec.in_channels = s.channels;
  spec.height = s.height;
  spec.width = s.width;
  spec.n_agents = map.n_agents();
  return spec;
}

// Random-play transitions for batch construction.
std::vector<Transition> rollout(const MapSpec& map, uint64_t seed, size_t min_count) {
  Rng rng(seed);
  std::vector<Transition> all;
  while (all.size() < min_count) {
    World world(map);
    const Policy random_policy = [&](const StateEncoding&, const std::vector<ActionMask>& m) {
      return lletest::random_joint_action(m, rng);
    };
    EpisodeResult ep = run_episode(world, random_policy, time_limit(map));
    for (Transition& t : ep.transitions) all.push_back(std::move(t));
  }
  all.resize(min_count);
  return all;
}

std::vector<const Transition*> ptrs_of(const std::vector<Transition>& v) {
  std::vector<const Transition*> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = &v[i];
  return out;
}

std::vector<double> snapshot(ParamList params) {
  std::vector<double> out;
  for (const ParamRef& p : params)
    out.insert(out.end(), p.value->begin(), p.value->end());
  return out;
}

// Per-agent utilities of one encoding under an arbitrary network.
std::vector<double> net_q(QNet& net, const StateEncoding& s) {
  std::vector<double> q(static_cast<size_t>(net.spec().n_agents) * kNumActions);
  const int8_t* ptr = s.data();
  QNet::Tape scratch;
  net.forward(&ptr, 1, q.data(), scratch);
  return q;
}

int argmax_masked(const std::vector<double>& q, int agent, const ActionMask& mask) {
  int best = -1;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    if (best < 0 || q[agent * kNumActions + a] > q[agent * kNumActions + best]) best = a;
  }
  return best;
}

}  // namespace

TEST_CASE("training defaults are pinned") {
  TrainConfig cfg;
  CHECK(cfg.gamma == 0.95);
  CHECK(cfg.lr == 5e-4);
  CHECK(cfg.grad_clip == 10.0);
  CHECK(cfg.tau == 0.01);
  CHECK(cfg.eps_start == 1.0);
  CHECK(cfg.eps_min == 0.05);
  CHECK(cfg.eps_anneal == 500'000);
  CHECK(cfg.train_interval == 5);
  CHECK(cfg.batch == 64);
  CHECK(cfg.memory == 50'000);
  CHECK(cfg.double_q);
  CHECK(cfg.mixer_embed == 32);
}

TEST_CASE("exploration rate anneals linearly and then holds") {
  TrainConfig cfg;
  CHECK(epsilon_at(cfg, 0) == 1.0);
  CHECK(epsilon_at(cfg, 250'000) == 0.525);
  CHECK(epsilon_at(cfg, 500'000) == 0.05);
  CHECK(epsilon_at(cfg, 10'000'000) == 0.05);
}

TEST_CASE("algorithm names round-trip") {
  for (Algo a : {Algo::IQL, Algo::VDN, Algo::QMIX}) CHECK(algo_from_name(algo_name(a)) == a);
  CHECK_THROWS_AS(algo_from_name("sarsa"), ValidationError);
}

TEST_CASE("greedy selection takes the best available action") {
  Rng rng(3);
  const double q[kNumActions] = {0.1, 5.0, -1.0, 4.9, 0.0};
  ActionMask all{true, true, true, true, true};
  CHECK(select_actions(q, std::vector<ActionMask>{all}, 0.0, rng)[0] == Action::East);

  ActionMask no_east{true, false, true, true, true};
  CHECK(select_actions(q, std::vector<ActionMask>{no_east}, 0.0, rng)[0] == Action::West);

  const double tied[kNumActions] = {1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(select_actions(tied, std::vector<ActionMask>{all}, 0.0, rng)[0] == Action::North);

  ActionMask none{false, false, false, false, false};
  CHECK_THROWS_AS(select_actions(q, std::vector<ActionMask>{none}, 0.0, rng),
                  ContractViolation);
}

TEST_CASE("full exploration is uniform over the available actions") {
  Rng rng(4);
  const double q[kNumActions] = {9.0, 0.0, 0.0, 0.0, 0.0};
  ActionMask three{true, false, true, false, true};
  int counts[kNumActions] = {0, 0, 0, 0, 0};
  const int draws = 100'000;
  for (int d = 0; d < draws; ++d)
    ++counts[static_cast<int>(select_actions(q, std::vector<ActionMask>{three}, 1.0, rng)[0])];
  CHECK(counts[1] == 0);
  CHECK(counts[3] == 0);
  for (int a : {0, 2, 4}) {
    const double freq = static_cast<double>(counts[a]) / draws;
    CHECK(freq >= 1.0 / 3.0 - 0.01);
    CHECK(freq <= 1.0 / 3.0 + 0.01);
  }
}

TEST_CASE("selection never emits an unavailable action") {
  Rng rng(5);
  double q[2 * kNumActions];
  for (int trial = 0; trial < 200'000; ++trial) {
    std::vector<ActionMask> masks(2);
    for (int i = 0; i < 2; ++i) {
      int avail = 0;
      for (int a = 0; a < kNumActions; ++a) avail += masks[i][a] = rng.uniform01() < 0.5;
      if (avail == 0) masks[i][rng.uniform_int(kNumActions)] = true;
    }
    for (double& v : q) v = rng.normal();
    const double eps = rng.uniform01();
    std::vector<Action> joint = select_actions(q, masks, eps, rng);
    for (int i = 0; i < 2; ++i) CHECK(masks[i][static_cast<int>(joint[i])]);
  }
}

TEST_CASE("single-agent targets match a scalar double-DQN oracle") {
  MapSpec map = load_level(1);
  Rng rng(100);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);

  std::vector<Transition> batch = rollout(map, 101, 16);
  // Give the tail transition a terminal flavor for coverage.
  batch.back().done = true;
  batch.back().reward = -1.0;

  double expected_loss = 0.0;
  std::vector<double> expected_abs;
  for (const Transition& t : batch) {
    std::vector<double> q_next_online = net_q(learner.online(), t.next_state);
    std::vector<double> q_next_target = net_q(learner.target(), t.next_state);
    const int a_star = argmax_masked(q_next_online, 0, t.next_avail[0]);
    const double bootstrap = t.done ? 0.0 : t.discount;
    const double y = t.reward + bootstrap * q_next_target[a_star];
    std::vector<double> q_cur = net_q(learner.online(), t.state);
    const double delta = q_cur[static_cast<int>(t.joint_action[0])] - y;
    expected_loss += delta * delta / static_cast<double>(batch.size());
    expected_abs.push_back(std::abs(delta));
  }

  TrainStepResult res = learner.train_step(ptrs_of(batch), {});
  CHECK(std::abs(res.loss - expected_loss) <= 1e-9 * std::max(1.0, expected_loss));
  REQUIRE(res.td_abs.size() == batch.size());
  for (size_t b = 0; b < batch.size(); ++b)
    CHECK(std::abs(res.td_abs[b] - expected_abs[b]) <= 1e-9);
  CHECK(learner.update_count() == 1);
}

TEST_CASE("terminal transitions regress on the raw reward") {
  MapSpec map = load_level(1);
  Rng rng(102);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);

  std::vector<Transition> batch = rollout(map, 103, 4);
  for (Transition& t : batch) {
    t.done = true;
    t.reward = -1.0;
  }

  double expected_loss = 0.0;
  for (const Transition& t : batch) {
    std::vector<double> q_cur = net_q(learner.online(), t.state);
    const double delta = q_cur[static_cast<int>(t.joint_action[0])] - (-1.0);
    expected_loss += delta * delta / static_cast<double>(batch.size());
  }
  TrainStepResult res = learner.train_step(ptrs_of(batch), {});
  CHECK(std::abs(res.loss - expected_loss) <= 1e-9 * std::max(1.0, expected_loss));
}

TEST_CASE("additive team targets sum the per-agent utilities") {
  MapSpec map = toy_map();
  Rng rng(104);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);

  std::vector<Transition> batch = rollout(map, 105, 12);
  double expected_loss = 0.0;
  std::vector<double> expected_abs;
  for (const Transition& t : batch) {
    std::vector<double> q_next_online = net_q(learner.online(), t.next_state);
    std::vector<double> q_next_target = net_q(learner.target(), t.next_state);
    double next_sum = 0.0;
    for (int i = 0; i < 2; ++i)
      next_sum +=
          q_next_target[i * kNumActions + argmax_masked(q_next_online, i, t.next_avail[i])];
    const double y = t.reward + (t.done ? 0.0 : t.discount) * next_sum;
    std::vector<double> q_cur = net_q(learner.online(), t.state);
    double cur_sum = 0.0;
    for (int i = 0; i < 2; ++i)
      cur_sum += q_cur[i * kNumActions + static_cast<int>(t.joint_action[i])];
    const double delta = cur_sum - y;
    expected_loss += delta * delta / static_cast<double>(batch.size());
    expected_abs.push_back(std::abs(delta));
  }

  TrainStepResult res = learner.train_step(ptrs_of(batch), {});
  CHECK(std::abs(res.loss - expected_loss) <= 1e-9 * std::max(1.0, expected_loss));
  for (size_t b = 0; b < batch.size(); ++b)
    CHECK(std::abs(res.td_abs[b] - expected_abs[b]) <= 1e-9);
}

TEST_CASE("independent learners regress each agent on the shared reward") {
  MapSpec map = toy_map();
  Rng rng(106);
  Learner learner(Algo::IQL, spec_for(map), TrainConfig{}, rng);
  CHECK(learner.online_mixer() == nullptr);

  std::vector<Transition> batch = rollout(map, 107, 8);
  const int n = 2;
  double expected_loss = 0.0;
  std::vector<double> expected_abs;
  for (const Transition& t : batch) {
    std::vector<double> q_next_online = net_q(learner.online(), t.next_state);
    std::vector<double> q_next_target = net_q(learner.target(), t.next_state);
    std::vector<double> q_cur = net_q(learner.online(), t.state);
    double abs_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const int a_star = argmax_masked(q_next_online, i, t.next_avail[i]);
      const double y =
          t.reward + (t.done ? 0.0 : t.discount) * q_next_target[i * kNumActions + a_star];
      const double delta = q_cur[i * kNumActions + static_cast<int>(t.joint_action[i])] - y;
      expected_loss += delta * delta / (static_cast<double>(batch.size()) * n);
      abs_sum += std::abs(delta);
    }
    expected_abs.push_back(abs_sum / n);
  }

  TrainStepResult res = learner.train_step(ptrs_of(batch), {});
  CHECK(std::abs(res.loss - expected_loss) <= 1e-9 * std::max(1.0, expected_loss));
  for (size_t b = 0; b < batch.size(); ++b)
    CHECK(std::abs(res.td_abs[b] - expected_abs[b]) <= 1e-9);
}

TEST_CASE("with equal online and target nets the correction reduces to a vanilla max") {
  MapSpec map = load_level(1);
  std::vector<Transition> batch = rollout(map, 109, 8);

  Rng rng_a(108);
  Learner with_correction(Algo::VDN, spec_for(map), TrainConfig{}, rng_a);
  Rng rng_b(108);
  TrainConfig plain;
  plain.double_q = false;
  Learner without(Algo::VDN, spec_for(map), plain, rng_b);

  TrainStepResult ra = with_correction.train_step(ptrs_of(batch), {});
  TrainStepResult rb = without.train_step(ptrs_of(batch), {});
  CHECK(ra.loss == rb.loss);  // target == online at construction
}

TEST_CASE("monotone mixing: raising any utility never lowers the team value") {
  Rng rng(110);
  MapSpec map = toy_map();
  Learner learner(Algo::QMIX, spec_for(map), TrainConfig{}, rng);
  Mixer* mix = learner.online_mixer();
  REQUIRE(mix != nullptr);

  const int state_dim = spec_for(map).in_channels * spec_for(map).height * spec_for(map).width;
  const int n = 2;
  for (int probe = 0; probe < 1000; ++probe) {
    std::vector<double> state(state_dim);
    for (double& v : state) v = static_cast<double>(rng.uniform_int(3) - 1);
    std::vector<double> q(n);
    for (double& v : q) v = 4.0 * rng.normal();

    double base;
    mix->forward(q.data(), state.data(), 1, &base);
    const int i = rng.uniform_int(n);
    std::vector<double> bumped = q;
    bumped[i] += 0.25;
    double up;
    mix->forward(bumped.data(), state.data(), 1, &up);
    CHECK(up - base >= -1e-6);
  }
}

TEST_CASE("mixing-network training drives the joint value toward its target") {
  Rng rng(111);
  MapSpec map = toy_map();
  TrainConfig cfg;
  cfg.lr = 1e-3;
  Learner learner(Algo::QMIX, spec_for(map), cfg, rng);
  std::vector<Transition> batch = rollout(map, 112, 16);
  auto ptrs = ptrs_of(batch);
  double first = learner.train_step(ptrs, {}).loss;
  double last = first;
  for (int k = 0; k < 60; ++k) last = learner.train_step(ptrs, {}).loss;
  CHECK(last < first);
  CHECK(learner.update_count() == 61);
}

TEST_CASE("unit importance weights reproduce the unweighted update") {
  MapSpec map = toy_map();
  std::vector<Transition> batch = rollout(map, 113, 8);
  const std::vector<double> ones(batch.size(), 1.0);

  Rng rng_a(114);
  Learner a(Algo::VDN, spec_for(map), TrainConfig{}, rng_a);
  Rng rng_b(114);
  Learner b(Algo::VDN, spec_for(map), TrainConfig{}, rng_b);

  TrainStepResult ra = a.train_step(ptrs_of(batch), {});
  TrainStepResult rb = b.train_step(ptrs_of(batch), ones);
  CHECK(ra.loss == rb.loss);
  // The two weight paths may fuse multiplies differently; equality holds to
  // within contraction noise.
  const std::vector<double> va = snapshot(a.online_params());
  const std::vector<double> vb = snapshot(b.online_params());
  REQUIRE(va.size() == vb.size());
  for (size_t j = 0; j < va.size(); ++j) CHECK(std::abs(va[j] - vb[j]) <= 1e-15);

  // A non-unit weight must change the step.
  std::vector<double> skew(batch.size(), 1.0);
  skew[0] = 2.0;
  Rng rng_c(114);
  Learner c(Algo::VDN, spec_for(map), TrainConfig{}, rng_c);
  c.train_step(ptrs_of(batch), skew);
  const std::vector<double> vc = snapshot(c.online_params());
  double skew_diff = 0.0;
  for (size_t j = 0; j < va.size(); ++j) skew_diff = std::max(skew_diff, std::abs(va[j] - vc[j]));
  CHECK(skew_diff > 1e-12);
}

TEST_CASE("zero TD error means zero loss and untouched parameters") {
  MapSpec map = load_level(1);
  Rng rng(115);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);

  std::vector<Transition> batch = rollout(map, 116, 4);
  // Rewards pinned from the same batched forward pass train_step runs, so
  // the TD error is exactly zero bit for bit.
  std::vector<const int8_t*> sp(batch.size());
  for (size_t b = 0; b < batch.size(); ++b) sp[b] = batch[b].state.data();
  std::vector<double> q(batch.size() * kNumActions);
  QNet::Tape scratch;
  learner.online().forward(sp.data(), static_cast<int>(batch.size()), q.data(), scratch);
  for (size_t b = 0; b < batch.size(); ++b) {
    batch[b].done = true;
    batch[b].reward = q[b * kNumActions + static_cast<int>(batch[b].joint_action[0])];
  }
  const std::vector<double> before = snapshot(learner.online_params());
  TrainStepResult res = learner.train_step(ptrs_of(batch), {});
  CHECK(res.loss == 0.0);
  CHECK(res.grad_norm == 0.0);
  CHECK(snapshot(learner.online_params()) == before);
}

TEST_CASE("oversized gradients are clipped to the configured norm") {
  MapSpec map = load_level(1);
  Rng rng(117);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);

  std::vector<Transition> batch = rollout(map, 118, 4);
  for (Transition& t : batch) {
    t.done = true;
    t.reward = 1e6;
  }
  TrainStepResult res = learner.train_step(ptrs_of(batch), {});
  CHECK(res.grad_norm > 10.0);

  double post = 0.0;
  for (const ParamRef& p : learner.online_params())
    for (double g : *p.grad) post += g * g;
  post = std::sqrt(post);
  CHECK(std::abs(post - 10.0) <= 1e-6);
}

TEST_CASE("non-finite losses abort with diagnostics") {
  MapSpec map = load_level(1);
  Rng rng(119);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);
  std::vector<Transition> batch = rollout(map, 120, 2);
  batch[0].reward = std::numeric_limits<double>::infinity();
  try {
    learner.train_step(ptrs_of(batch), {});
    FAIL("expected a contract violation");
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite") != std::string::npos);
    CHECK(msg.find("vdn") != std::string::npos);
  }
}

TEST_CASE("soft target updates blend at the configured rate") {
  MapSpec map = load_level(1);
  Rng rng(121);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);
  std::vector<Transition> batch = rollout(map, 122, 4);
  for (Transition& t : batch) {
    t.done = true;
    t.reward = 3.0;
  }
  learner.train_step(ptrs_of(batch), {});  // push online away from target

  const std::vector<double> online = snapshot(learner.online_params());
  const std::vector<double> target = snapshot(learner.target_params());
  learner.soft_update_targets();
  const std::vector<double> blended = snapshot(learner.target_params());
  REQUIRE(blended.size() == target.size());
  for (size_t j = 0; j < blended.size(); j += 37)
    CHECK(std::abs(blended[j] - (0.01 * online[j] + 0.99 * target[j])) <= 1e-15);
}

TEST_CASE("batch contract violations throw") {
  MapSpec map = load_level(1);
  Rng rng(123);
  Learner learner(Algo::VDN, spec_for(map), TrainConfig{}, rng);
  CHECK_THROWS_AS(learner.train_step({}, {}), ContractViolation);

  std::vector<Transition> batch = rollout(map, 124, 2);
  const std::vector<double> bad_weights(1, 1.0);
  CHECK_THROWS_AS(learner.train_step(ptrs_of(batch), bad_weights), ContractViolation);
}

TEST_CASE("utilities agree with a direct online forward pass") {
  MapSpec map = toy_map();
  Rng rng(125);
  Learner learner(Algo::QMIX, spec_for(map), TrainConfig{}, rng);
  World w(map);
  StateEncoding e = encode_state(w);
  std::vector<double> q(2 * kNumActions);
  learner.utilities(e, q.data());
  CHECK(q == net_q(learner.online(), e));
}
