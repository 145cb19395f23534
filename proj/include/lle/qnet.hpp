#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lle/geometry.hpp"
#include "lle/nn.hpp"

namespace lle {

// Shared utility network: three 3x3 valid convolutions with ReLU, flatten,
// then a dense head on [features ; one-hot agent id]. One forward pass
// yields the utilities of every agent for a batch of states (the trunk runs
// once per state, the head once per state-agent pair).
struct QNetSpec {
  int in_channels = 0;
  int height = 0;
  int width = 0;
  int n_agents = 0;
  std::array<int, 3> conv_channels{32, 64, 32};
  int hidden = 64;
  int n_actions = kNumActions;

  int out_h() const { return height - 6; }
  int out_w() const { return width - 6; }
  int flat() const { return conv_channels[2] * out_h() * out_w(); }
  int concat() const { return flat() + n_agents; }

  friend bool operator==(const QNetSpec&, const QNetSpec&) = default;
};

class QNet {
 public:
  QNet(const QNetSpec& spec, Rng& rng);

  const QNetSpec& spec() const { return spec_; }

  // Fixed order: conv1, conv2, conv3, dense1, dense2, dense3 (weight then
  // bias each). Checkpoints and the optimizer rely on this order.
  ParamList params();

  // Everything backward() needs from the matching forward() call.
  struct Tape {
    int batch = 0;
    std::vector<double> x0, k1, a1, k2, a2, k3, a3, head_x, h1, h2;
  };

  // states: batch pointers to encodings of spec-shaped worlds (int8 values).
  // q: (batch, n_agents, n_actions) row-major.
  void forward(const int8_t* const* states, int batch, double* q, Tape& tape) const;

  // dq: same shape as q. Accumulates parameter gradients.
  void backward(Tape& tape, const double* dq);

 private:
  QNetSpec spec_;
  Conv3x3 c1_, c2_, c3_;
  Dense d1_, d2_, d3_;
};

}  // namespace lle
