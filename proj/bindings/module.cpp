#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>
#include <sstream>
#include <vector>

#include "lle/error.hpp"

#include "lle/aggregate.hpp"
#include "lle/checkpoint.hpp"
#include "lle/map.hpp"
#include "lle/mapgen.hpp"
#include "lle/observation.hpp"
#include "lle/qlearn.hpp"
#include "lle/rnd.hpp"
#include "lle/trainer.hpp"
#include "lle/world.hpp"

namespace py = pybind11;
using namespace lle;

namespace {

py::array_t<int8_t> encoding_to_array(const StateEncoding& e) {
  const EncodingShape s = e.shape();
  py::array_t<int8_t> out({s.channels, s.height, s.width});
  std::memcpy(out.mutable_data(), e.data(), static_cast<size_t>(s.size()));
  return out;
}

std::vector<Action> to_actions(const std::vector<int>& raw, int n_agents) {
  if (static_cast<int>(raw.size()) != n_agents)
    throw ContractViolation("expected one action per agent");
  std::vector<Action> actions(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0 || raw[i] >= kNumActions)
      throw ContractViolation("action index out of range");
    actions[i] = static_cast<Action>(raw[i]);
  }
  return actions;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grid world with blocking lasers plus its value-based training stack";

  py::register_exception<ParseError>(m, "MapParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "MapValidationError", PyExc_ValueError);
  py::register_exception<StateSpaceTooLarge>(m, "StateSpaceTooLarge", PyExc_RuntimeError);
  py::register_exception<GenerationExhausted>(m, "GenerationExhausted", PyExc_RuntimeError);
  py::register_exception<InsufficientData>(m, "InsufficientData", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

  py::enum_<Action>(m, "Action")
      .value("NORTH", Action::North)
      .value("EAST", Action::East)
      .value("SOUTH", Action::South)
      .value("WEST", Action::West)
      .value("STAY", Action::Stay);

  py::class_<Position>(m, "Position")
      .def(py::init<int, int>(), py::arg("row"), py::arg("col"))
      .def_readonly("row", &Position::row)
      .def_readonly("col", &Position::col)
      .def("__eq__", [](const Position& a, const Position& b) { return a == b; })
      .def("__repr__", [](const Position& p) {
        return "Position(" + std::to_string(p.row) + ", " + std::to_string(p.col) + ")";
      });

  py::class_<MapSpec, std::shared_ptr<MapSpec>>(m, "Map")
      .def_property_readonly("width", &MapSpec::width)
      .def_property_readonly("height", &MapSpec::height)
      .def_property_readonly("n_agents", &MapSpec::n_agents)
      .def_property_readonly("start_positions", &MapSpec::start_positions)
      .def_property_readonly("exit_positions", &MapSpec::exit_positions)
      .def_property_readonly("gem_positions", &MapSpec::gem_positions)
      .def_property_readonly("has_unmatched_laser_color",
                             &MapSpec::has_unmatched_laser_color)
      .def_property_readonly("max_score", [](const MapSpec& map) { return max_score(map); })
      .def_property_readonly("time_limit",
                             [](const MapSpec& map) { return time_limit(map); })
      .def("serialize", [](const MapSpec& map) { return serialize_map(map); })
      .def("__repr__", [](const MapSpec& map) {
        std::ostringstream s;
        s << "Map(" << map.width() << "x" << map.height() << ", agents=" << map.n_agents()
          << ")";
        return s.str();
      });

  m.def("parse_map", [](const std::string& text) { return parse_map(text); }, py::arg("text"));
  m.def("load_level", &load_level, py::arg("k"),
        "One of the six standard levels, 1 through 6.");
  m.def("toy_map", &toy_map, "Two-agent laser-blocking teaching map.");

  py::class_<StepOutcome>(m, "StepOutcome")
      .def_readonly("reward", &StepOutcome::reward)
      .def_readonly("deaths", &StepOutcome::deaths)
      .def_readonly("gems_collected", &StepOutcome::gems_collected)
      .def_readonly("done", &StepOutcome::episode_done);

  py::class_<World>(m, "World")
      .def(py::init([](const MapSpec& map) { return World(map); }), py::arg("map"))
      .def_property_readonly("n_agents", &World::n_agents)
      .def_property_readonly("done", &World::done)
      .def_property_readonly("step_count", &World::step_count)
      .def_property_readonly("exit_rate", &World::exit_rate)
      .def_property_readonly("gems_remaining", &World::gems_remaining)
      .def_property_readonly("positions",
                             [](const World& w) {
                               std::vector<Position> out;
                               for (const AgentState& a : w.agents()) out.push_back(a.position);
                               return out;
                             })
      .def_property_readonly("alive",
                             [](const World& w) {
                               std::vector<bool> out;
                               for (const AgentState& a : w.agents()) out.push_back(a.alive);
                               return out;
                             })
      .def_property_readonly("arrived",
                             [](const World& w) {
                               std::vector<bool> out;
                               for (const AgentState& a : w.agents()) out.push_back(a.arrived);
                               return out;
                             })
      .def("available_actions",
           [](const World& w) {
             std::vector<std::vector<bool>> masks;
             for (const ActionMask& mask : w.available_actions())
               masks.emplace_back(mask.begin(), mask.end());
             return masks;
           })
      .def("step",
           [](World& w, const std::vector<int>& joint) {
             return w.step(to_actions(joint, w.n_agents()));
           },
           py::arg("joint_action"),
           "Applies one simultaneous joint action (indices into Action).")
      .def("encode", [](const World& w) { return encoding_to_array(encode_state(w)); },
           "Dense (channels, height, width) int8 observation.")
      .def("clone", [](const World& w) { return World(w); });

  m.def("encoding_shape", [](const MapSpec& map) {
    const EncodingShape s = encoding_shape(map);
    return py::make_tuple(s.channels, s.height, s.width);
  });

  m.def(
      "generate",
      [](int width, int height, int n_agents, int n_gems, int n_lasers, double density,
         int min_coordination, uint64_t seed, int max_attempts, uint64_t state_cap) {
        GenParams p;
        p.width = width;
        p.height = height;
        p.n_agents = n_agents;
        p.n_gems = n_gems;
        p.n_lasers = n_lasers;
        p.wall_density = density;
        p.min_coordination_steps = min_coordination;
        p.seed = seed;
        p.max_attempts = max_attempts;
        p.state_cap = state_cap;
        return generate(p);
      },
      py::arg("width"), py::arg("height"), py::arg("n_agents") = 1, py::arg("n_gems") = 1,
      py::arg("n_lasers") = 0, py::arg("density") = 0.0, py::arg("min_coordination") = 0,
      py::arg("seed") = 0, py::arg("max_attempts") = 1000,
      py::arg("state_cap") = kDefaultStateCap);
  m.def("solvable", &solvable, py::arg("map"), py::arg("state_cap") = kDefaultStateCap);
  m.def("coordination_depth", &coordination_depth, py::arg("map"),
        py::arg("state_cap") = kDefaultStateCap);

  py::class_<MetricRow>(m, "MetricRow")
      .def_readonly("step", &MetricRow::step)
      .def_readonly("score", &MetricRow::score)
      .def_readonly("exit_rate", &MetricRow::exit_rate)
      .def_readonly("episode_length", &MetricRow::episode_length)
      .def_readonly("epsilon", &MetricRow::epsilon);

  py::class_<EvalSummary>(m, "EvalSummary")
      .def_readonly("episodes", &EvalSummary::episodes)
      .def_readonly("mean_score", &EvalSummary::mean_score)
      .def_readonly("min_score", &EvalSummary::min_score)
      .def_readonly("max_score", &EvalSummary::max_score)
      .def_readonly("mean_exit_rate", &EvalSummary::mean_exit_rate)
      .def_readonly("min_exit_rate", &EvalSummary::min_exit_rate)
      .def_readonly("max_exit_rate", &EvalSummary::max_exit_rate)
      .def_readonly("mean_length", &EvalSummary::mean_length);

  py::class_<TrainArtifacts>(m, "TrainResult")
      .def_readonly("rows", &TrainArtifacts::rows)
      .def_readonly("global_step", &TrainArtifacts::global_step)
      .def_readonly("episodes", &TrainArtifacts::episodes)
      .def_readonly("metrics_path", &TrainArtifacts::metrics_path)
      .def_readonly("ckpt_path", &TrainArtifacts::ckpt_path);

  m.def(
      "train",
      [](const std::string& map_text, const std::string& algo, uint64_t total_steps,
         uint64_t seed, bool use_per, int nstep, bool use_rnd, const std::string& out_dir,
         uint64_t early_stop_window, uint64_t eps_anneal, int batch, size_t memory) {
        ExperimentConfig cfg;
        cfg.map_text = map_text;
        cfg.algo = algo_from_name(algo);
        cfg.total_steps = total_steps;
        cfg.seed = seed;
        cfg.use_per = use_per;
        cfg.nstep = nstep;
        cfg.use_rnd = use_rnd;
        cfg.out_dir = out_dir;
        cfg.early_stop_window = early_stop_window;
        if (eps_anneal > 0) cfg.train.eps_anneal = eps_anneal;
        if (batch > 0) cfg.train.batch = batch;
        if (memory > 0) cfg.train.memory = memory;
        return train(cfg);
      },
      py::arg("map_text"), py::arg("algo") = "vdn", py::arg("total_steps") = 1'000'000,
      py::arg("seed") = 0, py::arg("use_per") = false, py::arg("nstep") = 1,
      py::arg("use_rnd") = false, py::arg("out_dir") = "",
      py::arg("early_stop_window") = 0, py::arg("eps_anneal") = 0, py::arg("batch") = 0,
      py::arg("memory") = 0,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "evaluate_checkpoint",
      [](const std::string& ckpt_path, const std::string& map_text, int episodes) {
        LoadedCheckpoint loaded = load_checkpoint(ckpt_path);
        auto map = std::make_shared<const MapSpec>(
            map_text.empty() ? parse_map(loaded.meta.map_text) : parse_map(map_text));
        return evaluate(*loaded.learner, map, episodes);
      },
      py::arg("ckpt_path"), py::arg("map_text") = "", py::arg("episodes") = 10,
      py::call_guard<py::gil_scoped_release>());

  m.def("checkpoint_meta", [](const std::string& path) {
    LoadedCheckpoint loaded = load_checkpoint(path);
    py::dict d;
    d["map_text"] = loaded.meta.map_text;
    d["algo"] = std::string(algo_name(loaded.meta.algo));
    d["nstep"] = loaded.meta.nstep;
    d["per"] = loaded.meta.per.has_value();
    d["rnd"] = loaded.meta.rnd.has_value();
    d["global_step"] = loaded.meta.global_step;
    d["episodes"] = loaded.meta.episodes;
    d["seed"] = loaded.meta.seed;
    return d;
  });

  m.def("read_metrics", &read_metrics_file, py::arg("path"));
  m.def(
      "aggregate",
      [](const std::vector<std::vector<MetricRow>>& runs, int grid_points) {
        std::vector<AggregateRow> rows = aggregate_runs(runs, grid_points);
        py::list out;
        for (const AggregateRow& r : rows) {
          py::dict d;
          d["step"] = r.step;
          d["score_mean"] = r.score_mean;
          d["score_ci_low"] = r.score_ci_low;
          d["score_ci_high"] = r.score_ci_high;
          d["score_min"] = r.score_min;
          d["score_max"] = r.score_max;
          d["exit_rate_mean"] = r.exit_mean;
          d["exit_rate_ci_low"] = r.exit_ci_low;
          d["exit_rate_ci_high"] = r.exit_ci_high;
          d["exit_rate_min"] = r.exit_min;
          d["exit_rate_max"] = r.exit_max;
          out.append(d);
        }
        return out;
      },
      py::arg("runs"), py::arg("grid_points") = 200);
}
