#pragma once

#include <cstdint>
#include <vector>

#include "lle/rng.hpp"

namespace lle {

// A named view of one trainable array and its gradient. Lists of these are
// the unit the optimizer, clipping, soft updates and checkpoints operate on;
// list order is fixed by construction order and is part of the checkpoint
// contract.
struct ParamRef {
  std::vector<double>* value;
  std::vector<double>* grad;
};
using ParamList = std::vector<ParamRef>;

size_t param_count(const ParamList& params);
void zero_grads(const ParamList& params);
void copy_params(const ParamList& dst, const ParamList& src);

// L2 norm over every gradient entry in the list; gradients are scaled down
// in place when the norm exceeds max_norm. Returns the pre-clip norm.
double clip_global_norm(const ParamList& params, double max_norm);

// target := tau * online + (1 - tau) * target, elementwise.
void soft_update(const ParamList& target, const ParamList& online, double tau);

class Adam {
 public:
  explicit Adam(ParamList params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  // One update from the gradients currently stored in the params. Does not
  // zero them.
  void step();

  uint64_t steps_taken() const { return t_; }
  double lr() const { return lr_; }

  // Flat optimizer state in parameter-list order, for checkpoints.
  std::vector<double>& first_moment() { return m_; }
  std::vector<double>& second_moment() { return v_; }
  void restore(uint64_t t, std::vector<double> m, std::vector<double> v);

 private:
  ParamList params_;
  double lr_, beta1_, beta2_, eps_;
  uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

void relu(double* x, size_t n);
// dy *= 1[y > 0], where y is the post-activation buffer.
void relu_backward(const double* y, double* dy, size_t n);

// Fully connected layer. Batches are row-major (B, in) -> (B, out).
struct Dense {
  int in = 0, out = 0;
  std::vector<double> w;   // (out, in) row-major
  std::vector<double> b;   // (out)
  std::vector<double> dw, db;

  void init(int in_dim, int out_dim, Rng& rng);
  void params(ParamList& list);
  void forward(const double* x, int batch, double* y) const;
  // Accumulates dw/db; writes dx (B, in) unless null.
  void backward(const double* x, const double* dy, int batch, double* dx);
};

// 3x3 valid convolution, stride 1. Feature maps are stored as row-major
// (channels, B*H*W) matrices: row c holds channel c of every item in batch
// order. The im2col patch matrix built during forward is kept by the caller
// because backward reuses it.
struct Conv3x3 {
  int in_ch = 0, out_ch = 0;
  std::vector<double> w;   // (out_ch, in_ch*9) row-major
  std::vector<double> b;   // (out_ch)
  std::vector<double> dw, db;

  void init(int in_channels, int out_channels, Rng& rng);
  void params(ParamList& list);
  // x: (in_ch, B*H*W); y: (out_ch, B*(H-2)*(W-2)); patches resized inside.
  void forward(const double* x, int batch, int height, int width, double* y,
               std::vector<double>& patches) const;
  // dy: (out_ch, B*(H-2)*(W-2)); dx accumulated as (in_ch, B*H*W) unless null
  // (dx must be zeroed by the caller first).
  void backward(const double* dy, const std::vector<double>& patches, int batch, int height,
                int width, double* dx);
};

}  // namespace lle
