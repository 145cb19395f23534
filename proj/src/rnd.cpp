#include "lle/rnd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lle/error.hpp"

namespace lle {

namespace {
constexpr int kC1 = 32, kC2 = 64, kC3 = 32;
}

void RND::Net::init(int in_ch, int flat, int embed, Rng& rng) {
  c1.init(in_ch, kC1, rng);
  c2.init(kC1, kC2, rng);
  c3.init(kC2, kC3, rng);
  head.init(flat, embed, rng);
}

void RND::Net::params(ParamList& list) {
  c1.params(list);
  c2.params(list);
  c3.params(list);
  head.params(list);
}

ParamList RND::init_nets(Rng& rng) {
  if (height_ < 7 || width_ < 7)
    throw ContractViolation("novelty nets need height and width >= 7");
  if (cfg_.mask_prob < 0.0 || cfg_.mask_prob > 1.0)
    throw ContractViolation("mask_prob must lie in [0, 1]");
  if (cfg_.ir_clip <= 0.0) throw ContractViolation("ir_clip must be positive");
  if (cfg_.embed <= 0) throw ContractViolation("embedding width must be positive");
  const int flat = kC3 * (height_ - 6) * (width_ - 6);
  target_.init(in_channels_, flat, cfg_.embed, rng);
  predictor_.init(in_channels_, flat, cfg_.embed, rng);
  return predictor_params();
}

RND::RND(int in_channels, int height, int width, const RNDConfig& cfg, Rng& rng)
    : in_channels_(in_channels), height_(height), width_(width), cfg_(cfg),
      opt_(init_nets(rng), cfg.lr) {
  const size_t elems = static_cast<size_t>(in_channels) * height * width;
  obs_mean_.assign(elems, 0.0);
  obs_m2_.assign(elems, 0.0);
}

ParamList RND::predictor_params() {
  ParamList list;
  predictor_.params(list);
  return list;
}

ParamList RND::target_params() {
  ParamList list;
  target_.params(list);
  return list;
}

uint64_t RND::target_hash() {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const ParamRef& p : target_params()) {
    for (double v : *p.value) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
      }
    }
  }
  return h;
}

std::vector<double> RND::raw_input(const int8_t* const* states, int batch) const {
  const size_t s = static_cast<size_t>(height_) * width_;
  std::vector<double> x0(static_cast<size_t>(in_channels_) * batch * s);
  for (int c = 0; c < in_channels_; ++c) {
    double* row = x0.data() + static_cast<size_t>(c) * batch * s;
    for (int b = 0; b < batch; ++b) {
      const int8_t* src = states[b] + static_cast<size_t>(c) * s;
      for (size_t j = 0; j < s; ++j) row[static_cast<size_t>(b) * s + j] = src[j];
    }
  }
  return x0;
}

void RND::apply_norm(std::vector<double>& x0, int batch) const {
  if (obs_count_ < 2) return;
  const size_t s = static_cast<size_t>(height_) * width_;
  for (int c = 0; c < in_channels_; ++c) {
    for (size_t j = 0; j < s; ++j) {
      const size_t e = static_cast<size_t>(c) * s + j;
      const double var = obs_m2_[e] / static_cast<double>(obs_count_ - 1);
      const double sd = std::max(std::sqrt(std::max(var, 0.0)), 1e-8);
      for (int b = 0; b < batch; ++b) {
        double& v = x0[static_cast<size_t>(c) * batch * s + static_cast<size_t>(b) * s + j];
        v = std::clamp((v - obs_mean_[e]) / sd, -5.0, 5.0);
      }
    }
  }
}

void RND::update_obs_stats(const std::vector<double>& x0, int batch) {
  const size_t s = static_cast<size_t>(height_) * width_;
  for (int b = 0; b < batch; ++b) {
    ++obs_count_;
    for (int c = 0; c < in_channels_; ++c) {
      for (size_t j = 0; j < s; ++j) {
        const size_t e = static_cast<size_t>(c) * s + j;
        const double x = x0[static_cast<size_t>(c) * batch * s + static_cast<size_t>(b) * s + j];
        const double d1 = x - obs_mean_[e];
        obs_mean_[e] += d1 / static_cast<double>(obs_count_);
        obs_m2_[e] += d1 * (x - obs_mean_[e]);
      }
    }
  }
}

void RND::forward(Net& net, const double* x0, int batch, double* emb, Tape& tape) {
  const int h = height_, w = width_;
  const int h1 = h - 2, w1 = w - 2, h2 = h - 4, w2 = w - 4, h3 = h - 6, w3 = w - 6;
  const size_t s3 = static_cast<size_t>(h3) * w3;
  const int flat = kC3 * static_cast<int>(s3);
  tape.batch = batch;

  tape.a1.resize(static_cast<size_t>(kC1) * batch * h1 * w1);
  net.c1.forward(x0, batch, h, w, tape.a1.data(), tape.k1);
  relu(tape.a1.data(), tape.a1.size());

  tape.a2.resize(static_cast<size_t>(kC2) * batch * h2 * w2);
  net.c2.forward(tape.a1.data(), batch, h1, w1, tape.a2.data(), tape.k2);
  relu(tape.a2.data(), tape.a2.size());

  tape.a3.resize(static_cast<size_t>(kC3) * batch * s3);
  net.c3.forward(tape.a2.data(), batch, h2, w2, tape.a3.data(), tape.k3);
  relu(tape.a3.data(), tape.a3.size());

  tape.feat.resize(static_cast<size_t>(batch) * flat);
  for (int b = 0; b < batch; ++b) {
    double* row = tape.feat.data() + static_cast<size_t>(b) * flat;
    for (int ch = 0; ch < kC3; ++ch)
      std::memcpy(row + static_cast<size_t>(ch) * s3,
                  tape.a3.data() + ch * (static_cast<size_t>(batch) * s3) + b * s3,
                  sizeof(double) * s3);
  }
  net.head.forward(tape.feat.data(), batch, emb);
}

void RND::backward(Net& net, Tape& tape, const double* demb) {
  const int batch = tape.batch;
  const int h = height_, w = width_;
  const int h1 = h - 2, w1 = w - 2, h2 = h - 4, w2 = w - 4, h3 = h - 6, w3 = w - 6;
  const size_t s3 = static_cast<size_t>(h3) * w3;
  const int flat = kC3 * static_cast<int>(s3);

  std::vector<double> dfeat(tape.feat.size());
  net.head.backward(tape.feat.data(), demb, batch, dfeat.data());

  std::vector<double> da3(tape.a3.size());
  for (int b = 0; b < batch; ++b) {
    const double* row = dfeat.data() + static_cast<size_t>(b) * flat;
    for (int ch = 0; ch < kC3; ++ch)
      std::memcpy(da3.data() + ch * (static_cast<size_t>(batch) * s3) + b * s3,
                  row + static_cast<size_t>(ch) * s3, sizeof(double) * s3);
  }
  relu_backward(tape.a3.data(), da3.data(), da3.size());

  std::vector<double> da2(tape.a2.size(), 0.0);
  net.c3.backward(da3.data(), tape.k3, batch, h2, w2, da2.data());
  relu_backward(tape.a2.data(), da2.data(), da2.size());

  std::vector<double> da1(tape.a1.size(), 0.0);
  net.c2.backward(da2.data(), tape.k2, batch, h1, w1, da1.data());
  relu_backward(tape.a1.data(), da1.data(), da1.size());

  net.c1.backward(da1.data(), tape.k1, batch, h, w, nullptr);
}

double RND::factor_at(uint64_t global_step) const {
  if (cfg_.ir_anneal_steps == 0) return 0.0;
  const double frac = std::min(
      1.0, static_cast<double>(global_step) / static_cast<double>(cfg_.ir_anneal_steps));
  return cfg_.ir_factor_start * (1.0 - frac);
}

double RND::raw_error(const StateEncoding& state) {
  const int8_t* ptr = state.data();
  std::vector<double> x0 = raw_input(&ptr, 1);
  if (cfg_.normalize_obs) apply_norm(x0, 1);
  std::vector<double> t(cfg_.embed), p(cfg_.embed);
  Tape scratch;
  forward(target_, x0.data(), 1, t.data(), scratch);
  forward(predictor_, x0.data(), 1, p.data(), scratch);
  double raw = 0.0;
  for (int j = 0; j < cfg_.embed; ++j) {
    const double d = p[j] - t[j];
    raw += d * d;
  }
  return raw;
}

double RND::intrinsic_reward(const StateEncoding& state, uint64_t global_step) {
  if (updates_ < cfg_.warmup_updates) return 0.0;
  const double factor = factor_at(global_step);
  if (factor == 0.0) return 0.0;
  return std::min(raw_error(state), cfg_.ir_clip) * factor;
}

double RND::update_predictor(const int8_t* const* states, int batch, Rng& rng) {
  if (batch <= 0) throw ContractViolation("predictor update needs a nonempty batch");
  std::vector<double> x0 = raw_input(states, batch);
  if (cfg_.normalize_obs) {
    update_obs_stats(x0, batch);
    apply_norm(x0, batch);
  }

  const int e = cfg_.embed;
  std::vector<double> t(static_cast<size_t>(batch) * e), p(static_cast<size_t>(batch) * e);
  Tape scratch, tape;
  forward(target_, x0.data(), batch, t.data(), scratch);
  forward(predictor_, x0.data(), batch, p.data(), tape);

  // Per-element loss, with elements dropped with probability mask_prob; the
  // mean keeps the full batch in its denominator.
  double loss = 0.0;
  std::vector<double> demb(static_cast<size_t>(batch) * e, 0.0);
  for (int b = 0; b < batch; ++b) {
    const bool keep = rng.uniform01() >= cfg_.mask_prob;
    if (!keep) continue;
    for (int j = 0; j < e; ++j) {
      const size_t k = static_cast<size_t>(b) * e + j;
      const double d = p[k] - t[k];
      loss += d * d / batch;
      demb[k] = 2.0 * d / batch;
    }
  }

  const ParamList params = predictor_params();
  zero_grads(params);
  backward(predictor_, tape, demb.data());
  opt_.step();
  ++updates_;
  return loss;
}

}  // namespace lle
