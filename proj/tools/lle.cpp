#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lle/aggregate.hpp"
#include "lle/checkpoint.hpp"
#include "lle/error.hpp"
#include "lle/map.hpp"
#include "lle/mapgen.hpp"
#include "lle/trainer.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lle::IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// LLE_STATE_CAP overrides the joint-search state bound.
size_t state_cap_from_env() {
  const char* raw = std::getenv("LLE_STATE_CAP");
  if (raw == nullptr || *raw == '\0') return lle::kDefaultStateCap;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0' || v == 0)
    throw lle::ValidationError("LLE_STATE_CAP must be a positive integer");
  return static_cast<size_t>(v);
}

std::string resolve_map(int level, const std::string& map_path) {
  if (level > 0 && !map_path.empty())
    throw lle::ValidationError("give either --level or --map, not both");
  if (level > 0) return lle::level_text(level);
  if (!map_path.empty()) return read_file(map_path);
  throw lle::ValidationError("one of --level or --map is required");
}

void print_g(const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  std::cout << key << ": " << buf << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Laser grid-world training and map tooling"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a policy on a level or map file");
  int tr_level = 0;
  std::string tr_map;
  std::string tr_algo = "vdn";
  bool tr_per = false, tr_rnd = false;
  int tr_nstep = 1;
  uint64_t tr_steps = 1'000'000;
  uint64_t tr_seed = 0;
  std::string tr_out;
  uint64_t tr_eval_interval = 0;
  uint64_t tr_early_stop = 0;
  uint64_t tr_eps_anneal = 0;
  train_cmd->add_option("--level", tr_level, "Embedded level number (1-6)")
      ->check(CLI::Range(1, 6));
  train_cmd->add_option("--map", tr_map, "Path to a .lle map file");
  train_cmd->add_option("--algo", tr_algo, "Algorithm: iql, vdn or qmix")
      ->check(CLI::IsMember({"iql", "vdn", "qmix"}));
  train_cmd->add_flag("--per", tr_per, "Prioritized replay");
  train_cmd->add_option("--nstep", tr_nstep, "n-step return horizon (1, 3, 5, 7 or 9)");
  train_cmd->add_flag("--rnd", tr_rnd, "Random-distillation intrinsic reward");
  train_cmd->add_option("--steps", tr_steps, "Total environment steps");
  train_cmd->add_option("--seed", tr_seed, "Root seed");
  train_cmd->add_option("--out", tr_out, "Output directory")->required();
  train_cmd->add_option("--eval-interval", tr_eval_interval,
                        "Greedy evaluation every this many steps (0 = off)");
  train_cmd->add_option("--early-stop-window", tr_early_stop,
                        "Stop after this many consecutive max-score episodes (0 = off)");
  train_cmd->add_option("--eps-anneal", tr_eps_anneal,
                        "Override the epsilon anneal horizon in steps");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Greedy rollouts from a checkpoint");
  std::string ev_ckpt, ev_map;
  int ev_level = 0;
  int ev_episodes = 1;
  bool ev_dump_q = false;
  eval_cmd->add_option("--ckpt", ev_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--map", ev_map,
                       "Map file (defaults to the map stored in the checkpoint)");
  eval_cmd->add_option("--level", ev_level, "Embedded level number (1-6)")
      ->check(CLI::Range(1, 6));
  eval_cmd->add_option("--episodes", ev_episodes, "Number of rollouts")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--dump-q", ev_dump_q, "Print per-step utilities as CSV");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random solvable map");
  lle::GenParams gp;
  gen_cmd->add_option("--width", gp.width, "Grid width")->required();
  gen_cmd->add_option("--height", gp.height, "Grid height")->required();
  gen_cmd->add_option("--agents", gp.n_agents, "Number of agents");
  gen_cmd->add_option("--gems", gp.n_gems, "Number of gems");
  gen_cmd->add_option("--lasers", gp.n_lasers, "Number of laser sources");
  gen_cmd->add_option("--density", gp.wall_density, "Wall density in [0, 1]");
  gen_cmd->add_option("--min-coord", gp.min_coordination_steps,
                      "Minimum coordination steps certified by the oracle");
  gen_cmd->add_option("--seed", gp.seed, "Generation seed");
  gen_cmd->add_option("--attempts", gp.max_attempts, "Retry cap before giving up");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Joint-search solvability oracle");
  std::string so_map;
  int so_level = 0;
  solve_cmd->add_option("--map", so_map, "Map file");
  solve_cmd->add_option("--level", so_level, "Embedded level number (1-6)")
      ->check(CLI::Range(1, 6));

  // aggregate
  auto* agg_cmd = app.add_subcommand("aggregate", "Summarize runs across seeds");
  std::vector<std::string> agg_dirs;
  std::string agg_out;
  int agg_points = 200;
  agg_cmd->add_option("dirs", agg_dirs, "Run directories containing metrics.csv")
      ->required();
  agg_cmd->add_option("--out", agg_out, "Write the CSV here instead of stdout");
  agg_cmd->add_option("--points", agg_points, "Common grid size")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (train_cmd->parsed()) {
    lle::ExperimentConfig cfg;
    cfg.map_text = resolve_map(tr_level, tr_map);
    cfg.algo = lle::algo_from_name(tr_algo);
    cfg.use_per = tr_per;
    cfg.nstep = tr_nstep;
    cfg.use_rnd = tr_rnd;
    cfg.total_steps = tr_steps;
    cfg.seed = tr_seed;
    cfg.eval_interval = tr_eval_interval;
    cfg.early_stop_window = tr_early_stop;
    cfg.out_dir = tr_out;
    if (tr_eps_anneal > 0) cfg.train.eps_anneal = tr_eps_anneal;
    const lle::TrainArtifacts art = lle::train(cfg);
    std::cout << "wrote " << art.metrics_path << " (" << art.episodes << " episodes, "
              << art.global_step << " steps)\n";
    std::cout << "wrote " << art.ckpt_path << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    lle::LoadedCheckpoint ckpt = lle::load_checkpoint(ev_ckpt);
    std::string map_text = ckpt.meta.map_text;
    if (ev_level > 0 || !ev_map.empty()) map_text = resolve_map(ev_level, ev_map);
    auto map = std::make_shared<const lle::MapSpec>(lle::parse_map(map_text));
    const lle::EvalSummary sum = lle::evaluate(*ckpt.learner, map, ev_episodes,
                                               ev_dump_q ? &std::cout : nullptr);
    std::cout << "episodes: " << sum.episodes << "\n";
    print_g("mean_score", sum.mean_score);
    print_g("min_score", sum.min_score);
    print_g("max_score", sum.max_score);
    print_g("mean_exit_rate", sum.mean_exit_rate);
    print_g("min_exit_rate", sum.min_exit_rate);
    print_g("max_exit_rate", sum.max_exit_rate);
    print_g("mean_length", sum.mean_length);
    return 0;
  }

  if (gen_cmd->parsed()) {
    gp.state_cap = state_cap_from_env();
    const lle::MapSpec map = lle::generate(gp);
    std::cout << lle::serialize_map(map);
    return 0;
  }

  if (solve_cmd->parsed()) {
    const std::string text = resolve_map(so_level, so_map);
    const lle::MapSpec map = lle::parse_map(text);
    const size_t cap = state_cap_from_env();
    const bool ok = lle::solvable(map, cap);
    std::cout << "solvable: " << (ok ? "true" : "false") << "\n";
    if (ok) std::cout << "coordination_depth: " << lle::coordination_depth(map, cap) << "\n";
    return 0;
  }

  if (agg_cmd->parsed()) {
    std::vector<std::vector<lle::MetricRow>> runs;
    runs.reserve(agg_dirs.size());
    for (const std::string& dir : agg_dirs)
      runs.push_back(lle::read_metrics_file(dir + "/metrics.csv"));
    const std::vector<lle::AggregateRow> rows = lle::aggregate_runs(runs, agg_points);
    if (agg_out.empty()) {
      lle::write_aggregate_csv(std::cout, rows);
    } else {
      std::ofstream out(agg_out, std::ios::binary);
      if (!out) throw lle::IoError("cannot open for writing: " + agg_out);
      lle::write_aggregate_csv(out, rows);
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lle::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
