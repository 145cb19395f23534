#include "lle/qnet.hpp"

#include <cstring>

#include "lle/error.hpp"

namespace lle {

QNet::QNet(const QNetSpec& spec, Rng& rng) : spec_(spec) {
  if (spec.height < 7 || spec.width < 7)
    throw ContractViolation("convolution stack needs at least 7x7 input, got " +
                            std::to_string(spec.height) + "x" + std::to_string(spec.width));
  if (spec.in_channels < 1 || spec.n_agents < 1)
    throw ContractViolation("network spec needs channels and agents");
  c1_.init(spec.in_channels, spec.conv_channels[0], rng);
  c2_.init(spec.conv_channels[0], spec.conv_channels[1], rng);
  c3_.init(spec.conv_channels[1], spec.conv_channels[2], rng);
  d1_.init(spec.concat(), spec.hidden, rng);
  d2_.init(spec.hidden, spec.hidden, rng);
  d3_.init(spec.hidden, spec.n_actions, rng);
}

ParamList QNet::params() {
  ParamList list;
  c1_.params(list);
  c2_.params(list);
  c3_.params(list);
  d1_.params(list);
  d2_.params(list);
  d3_.params(list);
  return list;
}

void QNet::forward(const int8_t* const* states, int batch, double* q, Tape& tape) const {
  const int h = spec_.height, w = spec_.width, c = spec_.in_channels, n = spec_.n_agents;
  const int h1 = h - 2, w1 = w - 2, h2 = h - 4, w2 = w - 4, h3 = h - 6, w3 = w - 6;
  const size_t plane = static_cast<size_t>(h) * w;
  const size_t s1 = static_cast<size_t>(h1) * w1, s2 = static_cast<size_t>(h2) * w2,
               s3 = static_cast<size_t>(h3) * w3;
  const int flat = spec_.flat();

  tape.batch = batch;
  // Input layout (channels, batch*plane): channel-major so conv patches can
  // be gathered with contiguous copies.
  tape.x0.resize(static_cast<size_t>(c) * batch * plane);
  for (int bi = 0; bi < batch; ++bi) {
    const int8_t* enc = states[bi];
    for (int ch = 0; ch < c; ++ch) {
      double* dst = tape.x0.data() + ch * (static_cast<size_t>(batch) * plane) + bi * plane;
      const int8_t* src = enc + ch * plane;
      for (size_t j = 0; j < plane; ++j) dst[j] = static_cast<double>(src[j]);
    }
  }

  tape.a1.resize(static_cast<size_t>(spec_.conv_channels[0]) * batch * s1);
  c1_.forward(tape.x0.data(), batch, h, w, tape.a1.data(), tape.k1);
  relu(tape.a1.data(), tape.a1.size());

  tape.a2.resize(static_cast<size_t>(spec_.conv_channels[1]) * batch * s2);
  c2_.forward(tape.a1.data(), batch, h1, w1, tape.a2.data(), tape.k2);
  relu(tape.a2.data(), tape.a2.size());

  tape.a3.resize(static_cast<size_t>(spec_.conv_channels[2]) * batch * s3);
  c3_.forward(tape.a2.data(), batch, h2, w2, tape.a3.data(), tape.k3);
  relu(tape.a3.data(), tape.a3.size());

  // Head input row (b*n + i) = [flattened features of b ; one-hot of i].
  const int concat = spec_.concat();
  tape.head_x.assign(static_cast<size_t>(batch) * n * concat, 0.0);
  for (int bi = 0; bi < batch; ++bi) {
    double* row0 = tape.head_x.data() + static_cast<size_t>(bi) * n * concat;
    for (int ch = 0; ch < spec_.conv_channels[2]; ++ch) {
      const double* src = tape.a3.data() + ch * (static_cast<size_t>(batch) * s3) + bi * s3;
      std::memcpy(row0 + ch * s3, src, sizeof(double) * s3);
    }
    for (int i = 1; i < n; ++i) {
      double* row = row0 + static_cast<size_t>(i) * concat;
      std::memcpy(row, row0, sizeof(double) * flat);
    }
    for (int i = 0; i < n; ++i) row0[static_cast<size_t>(i) * concat + flat + i] = 1.0;
  }

  const int bn = batch * n;
  tape.h1.resize(static_cast<size_t>(bn) * spec_.hidden);
  d1_.forward(tape.head_x.data(), bn, tape.h1.data());
  relu(tape.h1.data(), tape.h1.size());

  tape.h2.resize(static_cast<size_t>(bn) * spec_.hidden);
  d2_.forward(tape.h1.data(), bn, tape.h2.data());
  relu(tape.h2.data(), tape.h2.size());

  d3_.forward(tape.h2.data(), bn, q);
}

void QNet::backward(Tape& tape, const double* dq) {
  const int batch = tape.batch;
  const int h = spec_.height, w = spec_.width, n = spec_.n_agents;
  const int h1 = h - 2, w1 = w - 2, h2 = h - 4, w2 = w - 4, h3 = h - 6, w3 = w - 6;
  const size_t s3 = static_cast<size_t>(h3) * w3;
  const int concat = spec_.concat();
  const int bn = batch * n;

  std::vector<double> dh2(tape.h2.size());
  d3_.backward(tape.h2.data(), dq, bn, dh2.data());
  relu_backward(tape.h2.data(), dh2.data(), dh2.size());

  std::vector<double> dh1(tape.h1.size());
  d2_.backward(tape.h1.data(), dh2.data(), bn, dh1.data());
  relu_backward(tape.h1.data(), dh1.data(), dh1.size());

  std::vector<double> dhead(tape.head_x.size());
  d1_.backward(tape.head_x.data(), dh1.data(), bn, dhead.data());

  // Features feed every agent head, so their gradient sums across agents;
  // the one-hot block has no upstream parameters.
  std::vector<double> da3(tape.a3.size(), 0.0);
  for (int bi = 0; bi < batch; ++bi) {
    for (int i = 0; i < n; ++i) {
      const double* row =
          dhead.data() + (static_cast<size_t>(bi) * n + i) * concat;
      for (int ch = 0; ch < spec_.conv_channels[2]; ++ch) {
        double* dst = da3.data() + ch * (static_cast<size_t>(batch) * s3) + bi * s3;
        const double* src = row + ch * s3;
        for (size_t j = 0; j < s3; ++j) dst[j] += src[j];
      }
    }
  }
  relu_backward(tape.a3.data(), da3.data(), da3.size());

  std::vector<double> da2(tape.a2.size(), 0.0);
  c3_.backward(da3.data(), tape.k3, batch, h2, w2, da2.data());
  relu_backward(tape.a2.data(), da2.data(), da2.size());

  std::vector<double> da1(tape.a1.size(), 0.0);
  c2_.backward(da2.data(), tape.k2, batch, h1, w1, da1.data());
  relu_backward(tape.a1.data(), da1.data(), da1.size());

  c1_.backward(da1.data(), tape.k1, batch, h, w, nullptr);
}

}  // namespace lle
