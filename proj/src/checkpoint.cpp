#include "lle/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lle/error.hpp"

namespace lle {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'L', 'L', 'E', 'C', 'K', 'P', 'T', '1'};
constexpr int kVersion = 1;

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64_block(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) {
    uint64_t bits;
    std::memcpy(&bits, &x, 8);
    write_u64(out, bits);
  }
}

void read_f64_block(std::istream& in, std::vector<double>& v) {
  for (double& x : v) {
    const uint64_t bits = read_u64(in);
    std::memcpy(&x, &bits, 8);
  }
}

// The tensor manifest, in the exact order blobs appear in the file. The
// optimizer moment vectors are listed as copies because restoring them goes
// through Adam::restore.
std::vector<std::pair<std::string, std::vector<double>*>> tensor_refs(Learner& learner,
                                                                      RND* rnd) {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  ParamList online = learner.online_params();
  for (size_t i = 0; i < online.size(); ++i)
    out.emplace_back("online." + std::to_string(i), online[i].value);
  ParamList target = learner.target_params();
  for (size_t i = 0; i < target.size(); ++i)
    out.emplace_back("target." + std::to_string(i), target[i].value);
  out.emplace_back("opt.m", &learner.optimizer().first_moment());
  out.emplace_back("opt.v", &learner.optimizer().second_moment());
  if (rnd != nullptr) {
    ParamList rt = rnd->target_params();
    for (size_t i = 0; i < rt.size(); ++i)
      out.emplace_back("rnd.target." + std::to_string(i), rt[i].value);
    ParamList rp = rnd->predictor_params();
    for (size_t i = 0; i < rp.size(); ++i)
      out.emplace_back("rnd.predictor." + std::to_string(i), rp[i].value);
    out.emplace_back("rnd.opt.m", &rnd->optimizer().first_moment());
    out.emplace_back("rnd.opt.v", &rnd->optimizer().second_moment());
    out.emplace_back("rnd.obs_mean", &rnd->obs_mean());
    out.emplace_back("rnd.obs_m2", &rnd->obs_m2());
  }
  return out;
}

json net_to_json(const QNetSpec& s) {
  return json{{"in_channels", s.in_channels}, {"height", s.height},
              {"width", s.width},             {"n_agents", s.n_agents},
              {"conv_channels", s.conv_channels}, {"hidden", s.hidden},
              {"n_actions", s.n_actions}};
}

QNetSpec net_from_json(const json& j) {
  QNetSpec s;
  s.in_channels = j.at("in_channels").get<int>();
  s.height = j.at("height").get<int>();
  s.width = j.at("width").get<int>();
  s.n_agents = j.at("n_agents").get<int>();
  const auto cc = j.at("conv_channels").get<std::vector<int>>();
  if (cc.size() != 3) throw ValidationError("checkpoint: conv_channels must have 3 entries");
  std::copy(cc.begin(), cc.end(), s.conv_channels.begin());
  s.hidden = j.at("hidden").get<int>();
  s.n_actions = j.at("n_actions").get<int>();
  return s;
}

json train_to_json(const TrainConfig& c) {
  return json{{"gamma", c.gamma},
              {"lr", c.lr},
              {"grad_clip", c.grad_clip},
              {"tau", c.tau},
              {"eps_start", c.eps_start},
              {"eps_min", c.eps_min},
              {"eps_anneal", c.eps_anneal},
              {"train_interval", c.train_interval},
              {"batch", c.batch},
              {"memory", c.memory},
              {"double_q", c.double_q},
              {"mixer_embed", c.mixer_embed}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.gamma = j.at("gamma").get<double>();
  c.lr = j.at("lr").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.tau = j.at("tau").get<double>();
  c.eps_start = j.at("eps_start").get<double>();
  c.eps_min = j.at("eps_min").get<double>();
  c.eps_anneal = j.at("eps_anneal").get<uint64_t>();
  c.train_interval = j.at("train_interval").get<int>();
  c.batch = j.at("batch").get<int>();
  c.memory = j.at("memory").get<size_t>();
  c.double_q = j.at("double_q").get<bool>();
  c.mixer_embed = j.at("mixer_embed").get<int>();
  return c;
}

json per_to_json(const PERConfig& c) {
  return json{{"alpha", c.alpha},
              {"beta0", c.beta0},
              {"beta_anneal_steps", c.beta_anneal_steps},
              {"epsilon_priority", c.epsilon_priority}};
}

PERConfig per_from_json(const json& j) {
  PERConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.beta0 = j.at("beta0").get<double>();
  c.beta_anneal_steps = j.at("beta_anneal_steps").get<uint64_t>();
  c.epsilon_priority = j.at("epsilon_priority").get<double>();
  return c;
}

json rnd_to_json(const RNDConfig& c) {
  return json{{"mask_prob", c.mask_prob},
              {"ir_factor_start", c.ir_factor_start},
              {"ir_anneal_steps", c.ir_anneal_steps},
              {"ir_clip", c.ir_clip},
              {"warmup_updates", c.warmup_updates},
              {"embed", c.embed},
              {"lr", c.lr},
              {"normalize_obs", c.normalize_obs}};
}

RNDConfig rnd_from_json(const json& j) {
  RNDConfig c;
  c.mask_prob = j.at("mask_prob").get<double>();
  c.ir_factor_start = j.at("ir_factor_start").get<double>();
  c.ir_anneal_steps = j.at("ir_anneal_steps").get<uint64_t>();
  c.ir_clip = j.at("ir_clip").get<double>();
  c.warmup_updates = j.at("warmup_updates").get<uint64_t>();
  c.embed = j.at("embed").get<int>();
  c.lr = j.at("lr").get<double>();
  c.normalize_obs = j.at("normalize_obs").get<bool>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     Learner& learner, RND* rnd) {
  json j;
  j["version"] = kVersion;
  j["algo"] = algo_name(meta.algo);
  j["map"] = meta.map_text;
  j["net"] = net_to_json(meta.net);
  j["train"] = train_to_json(meta.train);
  j["per"] = meta.per ? per_to_json(*meta.per) : json(nullptr);
  j["nstep"] = meta.nstep;
  j["rnd"] = meta.rnd ? rnd_to_json(*meta.rnd) : json(nullptr);
  j["global_step"] = meta.global_step;
  j["episodes"] = meta.episodes;
  j["seed"] = meta.seed;
  j["learner_updates"] = learner.update_count();
  j["opt_t"] = learner.optimizer().steps_taken();
  if (rnd != nullptr) {
    j["rnd_updates"] = rnd->update_count();
    j["rnd_opt_t"] = rnd->optimizer().steps_taken();
    j["rnd_obs_count"] = rnd->obs_count();
  }
  if (static_cast<bool>(meta.rnd) != (rnd != nullptr))
    throw ContractViolation("checkpoint meta and novelty module presence disagree");

  auto tensors = tensor_refs(learner, rnd);
  json manifest = json::array();
  for (const auto& [name, vec] : tensors)
    manifest.push_back(json{{"name", name}, {"len", vec->size()}});
  j["tensors"] = manifest;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::string meta_str = j.dump();
  write_u64(out, meta_str.size());
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  for (const auto& [name, vec] : tensors) write_f64_block(out, *vec);
  if (!out) throw IoError("write failed for checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("not a checkpoint file: " + path);

  const uint64_t meta_len = read_u64(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw ValidationError("truncated checkpoint metadata: " + path);

  json j;
  try {
    j = json::parse(meta_str);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("corrupt checkpoint metadata: ") + e.what());
  }

  LoadedCheckpoint loaded;
  try {
    if (j.at("version").get<int>() != kVersion)
      throw ValidationError("unsupported checkpoint version");
    CheckpointMeta& meta = loaded.meta;
    meta.algo = algo_from_name(j.at("algo").get<std::string>());
    meta.map_text = j.at("map").get<std::string>();
    meta.net = net_from_json(j.at("net"));
    meta.train = train_from_json(j.at("train"));
    if (!j.at("per").is_null()) meta.per = per_from_json(j.at("per"));
    meta.nstep = j.at("nstep").get<int>();
    if (!j.at("rnd").is_null()) meta.rnd = rnd_from_json(j.at("rnd"));
    meta.global_step = j.at("global_step").get<uint64_t>();
    meta.episodes = j.at("episodes").get<uint64_t>();
    meta.seed = j.at("seed").get<uint64_t>();

    Rng init_rng(meta.seed);
    loaded.learner = std::make_unique<Learner>(meta.algo, meta.net, meta.train, init_rng);
    loaded.learner->set_update_count(j.at("learner_updates").get<uint64_t>());
    if (meta.rnd) {
      loaded.rnd = std::make_unique<RND>(meta.net.in_channels, meta.net.height,
                                         meta.net.width, *meta.rnd, init_rng);
      loaded.rnd->set_update_count(j.at("rnd_updates").get<uint64_t>());
      loaded.rnd->set_obs_count(j.at("rnd_obs_count").get<uint64_t>());
    }

    auto tensors = tensor_refs(*loaded.learner, loaded.rnd.get());
    const json& manifest = j.at("tensors");
    if (manifest.size() != tensors.size())
      throw ValidationError("checkpoint tensor manifest size mismatch");
    for (size_t i = 0; i < tensors.size(); ++i) {
      const auto& [name, vec] = tensors[i];
      if (manifest[i].at("name").get<std::string>() != name)
        throw ValidationError("checkpoint tensor name mismatch at " + name);
      if (manifest[i].at("len").get<size_t>() != vec->size())
        throw ValidationError("checkpoint tensor length mismatch at " + name);
      read_f64_block(in, *vec);
    }
    if (!in) throw ValidationError("truncated checkpoint tensors: " + path);

    // Adam state was read into the live moment vectors; rebind it with the
    // saved step counter.
    Adam& opt = loaded.learner->optimizer();
    opt.restore(j.at("opt_t").get<uint64_t>(), opt.first_moment(), opt.second_moment());
    if (loaded.rnd) {
      Adam& ropt = loaded.rnd->optimizer();
      ropt.restore(j.at("rnd_opt_t").get<uint64_t>(), ropt.first_moment(),
                   ropt.second_moment());
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint metadata missing fields: ") + e.what());
  }
  return loaded;
}

}  // namespace lle
