#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lle/checkpoint.hpp"
#include "lle/map.hpp"
#include "lle/qlearn.hpp"
#include "lle/replay.hpp"
#include "lle/rnd.hpp"
#include "lle/world.hpp"

namespace lle {

struct ExperimentConfig {
  std::string map_text;
  Algo algo = Algo::VDN;
  bool use_per = false;
  int nstep = 1;  // 1 = plain one-step targets
  bool use_rnd = false;
  TrainConfig train;
  PERConfig per;
  RNDConfig rnd;
  uint64_t total_steps = 1'000'000;
  uint64_t seed = 0;
  uint64_t eval_interval = 0;  // 0 = no periodic greedy evaluations
  // > 0: stop once this many consecutive episodes all reach max_score with
  // every agent out.
  uint64_t early_stop_window = 0;
  std::string out_dir;  // empty = no files written
};

// One row per training episode; the stable CSV schema.
struct MetricRow {
  uint64_t step = 0;        // cumulative env steps at episode end
  double score = 0.0;       // undiscounted extrinsic sum
  double exit_rate = 0.0;   // arrived / n at episode end
  uint64_t episode_length = 0;
  double epsilon = 0.0;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_metric_row(std::ostream& out, const MetricRow& row);
void write_metrics_header(std::ostream& out);
std::vector<MetricRow> read_metrics_csv(std::istream& in);
std::vector<MetricRow> read_metrics_file(const std::string& path);

// Chooses the joint action for the current state.
using Policy =
    std::function<std::vector<Action>(const StateEncoding&, const std::vector<ActionMask>&)>;

struct EpisodeHooks {
  // Extra reward folded into the stored transition (never into the score),
  // from the successor state.
  std::function<double(const StateEncoding& next_state)> shape;
  // Runs after each recorded step.
  std::function<void()> after_step;
};

struct EpisodeResult {
  double score = 0.0;
  double exit_rate = 0.0;
  uint64_t length = 0;
  bool truncated = false;             // hit the step limit without terminating
  std::vector<Transition> transitions;  // raw one-step, in order
};

// Plays one episode from the world's current state for at most limit steps.
// Truncated episodes leave done=false on their last transition so targets
// still bootstrap.
EpisodeResult run_episode(World& world, const Policy& policy, int limit,
                          const EpisodeHooks* hooks = nullptr);

struct TrainArtifacts {
  std::vector<MetricRow> rows;
  uint64_t global_step = 0;
  uint64_t episodes = 0;
  std::unique_ptr<Learner> learner;
  std::unique_ptr<RND> rnd;
  std::string metrics_path;  // empty when out_dir was empty
  std::string ckpt_path;
};

// Full training run: act epsilon-greedily, store episodes folded to n-step,
// one gradient update plus soft target update every train_interval env
// steps (plus a predictor update when novelty shaping is on). All
// randomness flows from cfg.seed through named substreams.
TrainArtifacts train(const ExperimentConfig& cfg);

struct EvalSummary {
  uint64_t episodes = 0;
  double mean_score = 0.0, min_score = 0.0, max_score = 0.0;
  double mean_exit_rate = 0.0, min_exit_rate = 0.0, max_exit_rate = 0.0;
  double mean_length = 0.0;
};

// Greedy rollouts. When dump is given, per-step utilities of every agent are
// written to it as CSV (episode,step,agent,q per action,available mask,
// chosen action).
EvalSummary evaluate(Learner& learner, std::shared_ptr<const MapSpec> map,
                     int episodes, std::ostream* dump = nullptr);

}  // namespace lle
