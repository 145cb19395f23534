#include "lle/trainer.hpp"

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

#include "lle/error.hpp"
#include "lle/observation.hpp"

namespace lle {

namespace {
constexpr const char* kMetricsHeader = "step,score,exit_rate,episode_length,epsilon";
}

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << "\n"; }

void write_metric_row(std::ostream& out, const MetricRow& row) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%" PRIu64 ",%.10g,%.10g,%" PRIu64 ",%.10g\n", row.step,
                row.score, row.exit_rate, row.episode_length, row.epsilon);
  out << buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  write_metrics_header(out);
  for (const MetricRow& row : rows) write_metric_row(out, row);
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("metrics CSV is empty", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader)
    throw ParseError("metrics CSV header mismatch, expected: " + std::string(kMetricsHeader), 1, 1);
  std::vector<MetricRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    MetricRow row;
    char* end = nullptr;
    const char* p = line.c_str();
    auto fail = [&]() {
      throw ParseError("malformed metrics row", static_cast<int>(line_no), 1);
    };
    row.step = std::strtoull(p, &end, 10);
    if (end == p || *end != ',') fail();
    p = end + 1;
    row.score = std::strtod(p, &end);
    if (end == p || *end != ',') fail();
    p = end + 1;
    row.exit_rate = std::strtod(p, &end);
    if (end == p || *end != ',') fail();
    p = end + 1;
    row.episode_length = std::strtoull(p, &end, 10);
    if (end == p || *end != ',') fail();
    p = end + 1;
    row.epsilon = std::strtod(p, &end);
    if (end == p || *end != '\0') fail();
    rows.push_back(row);
  }
  return rows;
}

std::vector<MetricRow> read_metrics_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metrics file: " + path);
  return read_metrics_csv(in);
}

EpisodeResult run_episode(World& world, const Policy& policy, int limit,
                          const EpisodeHooks* hooks) {
  if (limit <= 0) throw ContractViolation("episode step limit must be positive");
  EpisodeResult res;
  StateEncoding cur = encode_state(world);
  std::vector<ActionMask> cur_masks = world.available_actions();
  while (!world.done() && world.step_count() < limit) {
    std::vector<Action> joint = policy(cur, cur_masks);
    const StepOutcome outcome = world.step(joint);
    res.score += outcome.reward;

    Transition t;
    t.state = std::move(cur);
    t.avail = std::move(cur_masks);
    t.joint_action = std::move(joint);
    t.reward = outcome.reward;
    t.next_state = encode_state(world);
    t.next_avail = world.available_actions();
    t.done = outcome.episode_done;
    cur = t.next_state;
    cur_masks = t.next_avail;
    if (hooks != nullptr && hooks->shape) t.reward += hooks->shape(t.next_state);
    res.transitions.push_back(std::move(t));
    if (hooks != nullptr && hooks->after_step) hooks->after_step();
  }
  res.length = static_cast<uint64_t>(world.step_count());
  res.exit_rate = world.exit_rate();
  res.truncated = !world.done();
  return res;
}

TrainArtifacts train(const ExperimentConfig& cfg) {
  static constexpr std::array<int, 5> kAllowedN{1, 3, 5, 7, 9};
  if (std::find(kAllowedN.begin(), kAllowedN.end(), cfg.nstep) == kAllowedN.end())
    throw ValidationError("n-step horizon must be one of 1, 3, 5, 7, 9");
  if (cfg.total_steps == 0) throw ValidationError("total_steps must be positive");
  if (cfg.train.train_interval <= 0)
    throw ValidationError("train_interval must be positive");

  auto map = std::make_shared<const MapSpec>(parse_map(cfg.map_text));
  const EncodingShape shape = encoding_shape(*map);
  QNetSpec nspec;
  nspec.in_channels = shape.channels;
  nspec.height = shape.height;
  nspec.width = shape.width;
  nspec.n_agents = map->n_agents();

  const Rng root(cfg.seed);
  Rng init_rng = root.stream("init");
  auto learner = std::make_unique<Learner>(cfg.algo, nspec, cfg.train, init_rng);
  std::unique_ptr<RND> rnd;
  if (cfg.use_rnd) {
    Rng rnd_init = root.stream("rnd-init");
    rnd = std::make_unique<RND>(shape.channels, shape.height, shape.width, cfg.rnd, rnd_init);
  }
  Rng action_rng = root.stream("actions");
  Rng replay_rng = root.stream("replay");
  Rng mask_rng = root.stream("rnd-mask");
  Rng eval_rng = root.stream("greedy-eval");

  std::ofstream metrics_out, eval_out;
  std::string metrics_path, ckpt_path;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    metrics_path = (std::filesystem::path(cfg.out_dir) / "metrics.csv").string();
    metrics_out.open(metrics_path, std::ios::binary);
    if (!metrics_out) throw IoError("cannot open for writing: " + metrics_path);
    write_metrics_header(metrics_out);
  }

  std::optional<ReplayBuffer> uniform;
  std::optional<PrioritizedReplay> prioritized;
  if (cfg.use_per)
    prioritized.emplace(cfg.train.memory, cfg.per);
  else
    uniform.emplace(cfg.train.memory);

  uint64_t global_step = 0;
  uint64_t episodes = 0;
  std::vector<MetricRow> rows;

  const auto rnd_update = [&](std::span<const Transition* const> items) {
    if (!rnd) return;
    std::vector<const int8_t*> ptrs(items.size());
    for (size_t i = 0; i < items.size(); ++i) ptrs[i] = items[i]->next_state.data();
    rnd->update_predictor(ptrs.data(), static_cast<int>(items.size()), mask_rng);
  };

  const auto maybe_train = [&]() {
    const size_t have = cfg.use_per ? prioritized->size() : uniform->size();
    if (have < static_cast<size_t>(cfg.train.batch)) return;
    if (cfg.use_per) {
      PrioritizedSample s =
          prioritized->sample(static_cast<size_t>(cfg.train.batch), global_step, replay_rng);
      const TrainStepResult r = learner->train_step(s.items, s.is_weights);
      prioritized->update_priorities(s.ids, r.td_abs);
      rnd_update(s.items);
    } else {
      const std::vector<const Transition*> items =
          uniform->sample(static_cast<size_t>(cfg.train.batch), replay_rng);
      learner->train_step(items, {});
      rnd_update(items);
    }
    learner->soft_update_targets();
  };

  std::vector<double> qbuf(static_cast<size_t>(nspec.n_agents) * kNumActions);
  const Policy policy = [&](const StateEncoding& s, const std::vector<ActionMask>& m) {
    learner->utilities(s, qbuf.data());
    return select_actions(qbuf.data(), m, epsilon_at(cfg.train, global_step), action_rng);
  };
  const Policy greedy = [&](const StateEncoding& s, const std::vector<ActionMask>& m) {
    learner->utilities(s, qbuf.data());
    return select_actions(qbuf.data(), m, 0.0, eval_rng);
  };

  EpisodeHooks hooks;
  if (cfg.use_rnd)
    hooks.shape = [&](const StateEncoding& next) {
      return rnd->intrinsic_reward(next, global_step);
    };
  hooks.after_step = [&]() {
    ++global_step;
    if (global_step % static_cast<uint64_t>(cfg.train.train_interval) == 0) maybe_train();
  };

  const auto push = [&](Transition t) {
    if (cfg.use_per)
      prioritized->push(std::move(t));
    else
      uniform->push(std::move(t));
  };

  const int limit = time_limit(*map);
  const int perfect = max_score(*map);
  uint64_t perfect_streak = 0;
  uint64_t next_eval = cfg.eval_interval;

  while (global_step < cfg.total_steps) {
    const uint64_t remaining = cfg.total_steps - global_step;
    const int ep_limit =
        static_cast<int>(std::min<uint64_t>(static_cast<uint64_t>(limit), remaining));
    World world(map);
    EpisodeResult ep = run_episode(world, policy, ep_limit, &hooks);

    std::vector<Transition> folded = nstep_fold(ep.transitions, cfg.nstep, cfg.train.gamma);
    for (Transition& t : folded) push(std::move(t));

    // An episode cut short by the step budget rather than the time limit is
    // not a comparable sample; it feeds the buffer but not the metrics.
    const bool budget_cut = ep.truncated && ep_limit < limit;
    if (budget_cut) continue;

    ++episodes;
    const MetricRow row{global_step, ep.score, ep.exit_rate, ep.length,
                        epsilon_at(cfg.train, global_step)};
    rows.push_back(row);
    if (metrics_out.is_open()) {
      write_metric_row(metrics_out, row);
      metrics_out.flush();
    }

    if (cfg.early_stop_window > 0) {
      if (ep.score == static_cast<double>(perfect) && ep.exit_rate == 1.0) {
        if (++perfect_streak >= cfg.early_stop_window) break;
      } else {
        perfect_streak = 0;
      }
    }

    if (cfg.eval_interval > 0 && global_step >= next_eval) {
      while (next_eval <= global_step) next_eval += cfg.eval_interval;
      World eval_world(map);
      const EpisodeResult ev = run_episode(eval_world, greedy, limit, nullptr);
      if (!cfg.out_dir.empty()) {
        if (!eval_out.is_open()) {
          const std::string eval_path =
              (std::filesystem::path(cfg.out_dir) / "eval.csv").string();
          eval_out.open(eval_path, std::ios::binary);
          if (!eval_out) throw IoError("cannot open for writing: " + eval_path);
          write_metrics_header(eval_out);
        }
        write_metric_row(eval_out, {global_step, ev.score, ev.exit_rate, ev.length,
                                    epsilon_at(cfg.train, global_step)});
        eval_out.flush();
      }
    }
  }

  if (!cfg.out_dir.empty()) {
    ckpt_path = (std::filesystem::path(cfg.out_dir) / "final.lleckpt").string();
    CheckpointMeta meta;
    meta.map_text = serialize_map(*map);
    meta.algo = cfg.algo;
    meta.net = nspec;
    meta.train = cfg.train;
    if (cfg.use_per) meta.per = cfg.per;
    meta.nstep = cfg.nstep;
    if (cfg.use_rnd) meta.rnd = cfg.rnd;
    meta.global_step = global_step;
    meta.episodes = episodes;
    meta.seed = cfg.seed;
    save_checkpoint(ckpt_path, meta, *learner, rnd.get());
  }

  TrainArtifacts art;
  art.rows = std::move(rows);
  art.global_step = global_step;
  art.episodes = episodes;
  art.learner = std::move(learner);
  art.rnd = std::move(rnd);
  art.metrics_path = std::move(metrics_path);
  art.ckpt_path = std::move(ckpt_path);
  return art;
}

EvalSummary evaluate(Learner& learner, std::shared_ptr<const MapSpec> map, int episodes,
                     std::ostream* dump) {
  if (episodes <= 0) throw ValidationError("evaluation needs at least one episode");
  const EncodingShape shape = encoding_shape(*map);
  const QNetSpec& spec = learner.spec();
  if (shape.channels != spec.in_channels || shape.height != spec.height ||
      shape.width != spec.width || map->n_agents() != spec.n_agents)
    throw ValidationError("checkpoint network shape does not match the map");

  const int limit = time_limit(*map);
  Rng greedy_rng(0);
  std::vector<double> q(static_cast<size_t>(spec.n_agents) * kNumActions);
  if (dump != nullptr)
    *dump << "episode,step,agent,q_north,q_east,q_south,q_west,q_stay,available,chosen\n";

  EvalSummary sum;
  sum.episodes = static_cast<uint64_t>(episodes);
  for (int e = 0; e < episodes; ++e) {
    World world(map);
    int step_idx = 0;
    const Policy policy = [&](const StateEncoding& s, const std::vector<ActionMask>& m) {
      learner.utilities(s, q.data());
      std::vector<Action> joint = select_actions(q.data(), m, 0.0, greedy_rng);
      if (dump != nullptr) {
        for (int i = 0; i < spec.n_agents; ++i) {
          char avail[kNumActions + 1] = {};
          for (int a = 0; a < kNumActions; ++a) avail[a] = m[i][a] ? '1' : '0';
          char buf[256];
          std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%s,%s\n",
                        e, step_idx, i, q[i * kNumActions + 0], q[i * kNumActions + 1],
                        q[i * kNumActions + 2], q[i * kNumActions + 3],
                        q[i * kNumActions + 4], avail, action_name(joint[i]));
          *dump << buf;
        }
      }
      ++step_idx;
      return joint;
    };
    const EpisodeResult ep = run_episode(world, policy, limit, nullptr);
    if (e == 0) {
      sum.min_score = sum.max_score = ep.score;
      sum.min_exit_rate = sum.max_exit_rate = ep.exit_rate;
    } else {
      sum.min_score = std::min(sum.min_score, ep.score);
      sum.max_score = std::max(sum.max_score, ep.score);
      sum.min_exit_rate = std::min(sum.min_exit_rate, ep.exit_rate);
      sum.max_exit_rate = std::max(sum.max_exit_rate, ep.exit_rate);
    }
    sum.mean_score += ep.score;
    sum.mean_exit_rate += ep.exit_rate;
    sum.mean_length += static_cast<double>(ep.length);
  }
  sum.mean_score /= episodes;
  sum.mean_exit_rate /= episodes;
  sum.mean_length /= episodes;
  return sum;
}

}  // namespace lle
