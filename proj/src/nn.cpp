#include "lle/nn.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "lle/error.hpp"

namespace lle {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

void he_uniform(std::vector<double>& w, int fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / fan_in);
  for (double& x : w) x = (2.0 * rng.uniform01() - 1.0) * limit;
}

}  // namespace

size_t param_count(const ParamList& params) {
  size_t n = 0;
  for (const auto& p : params) n += p.value->size();
  return n;
}

void zero_grads(const ParamList& params) {
  for (const auto& p : params) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

void copy_params(const ParamList& dst, const ParamList& src) {
  if (dst.size() != src.size()) throw ContractViolation("copy_params: list size mismatch");
  for (size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].value->size() != src[i].value->size())
      throw ContractViolation("copy_params: parameter shape mismatch");
    *dst[i].value = *src[i].value;
  }
}

double clip_global_norm(const ParamList& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : *p.grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& p : params)
      for (double& g : *p.grad) g *= scale;
  }
  return norm;
}

void soft_update(const ParamList& target, const ParamList& online, double tau) {
  if (target.size() != online.size()) throw ContractViolation("soft_update: list size mismatch");
  for (size_t i = 0; i < target.size(); ++i) {
    auto& t = *target[i].value;
    const auto& o = *online[i].value;
    if (t.size() != o.size()) throw ContractViolation("soft_update: parameter shape mismatch");
    for (size_t j = 0; j < t.size(); ++j) t[j] = tau * o[j] + (1.0 - tau) * t[j];
  }
}

Adam::Adam(ParamList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  const size_t n = param_count(params_);
  m_.assign(n, 0.0);
  v_.assign(n, 0.0);
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  size_t k = 0;
  for (const auto& p : params_) {
    auto& x = *p.value;
    const auto& g = *p.grad;
    for (size_t j = 0; j < x.size(); ++j, ++k) {
      m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g[j];
      v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m_[k] / bc1;
      const double vhat = v_[k] / bc2;
      x[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::restore(uint64_t t, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw ContractViolation("optimizer state size mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

void relu(double* x, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (x[i] < 0.0) x[i] = 0.0;
}

void relu_backward(const double* y, double* dy, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (y[i] <= 0.0) dy[i] = 0.0;
}

void Dense::init(int in_dim, int out_dim, Rng& rng) {
  in = in_dim;
  out = out_dim;
  w.resize(static_cast<size_t>(in) * out);
  b.assign(out, 0.0);
  dw.assign(w.size(), 0.0);
  db.assign(b.size(), 0.0);
  he_uniform(w, in, rng);
}

void Dense::params(ParamList& list) {
  list.push_back({&w, &dw});
  list.push_back({&b, &db});
}

void Dense::forward(const double* x, int batch, double* y) const {
  CMapRM X(x, batch, in);
  CMapRM W(w.data(), out, in);
  MapRM Y(y, batch, out);
  Y.noalias() = X * W.transpose();
  Y.rowwise() += CVecMap(b.data(), out).transpose();
}

void Dense::backward(const double* x, const double* dy, int batch, double* dx) {
  CMapRM X(x, batch, in);
  CMapRM dY(dy, batch, out);
  MapRM dW(dw.data(), out, in);
  dW.noalias() += dY.transpose() * X;
  VecMap(db.data(), out) += dY.colwise().sum().transpose();
  if (dx) {
    CMapRM W(w.data(), out, in);
    MapRM dX(dx, batch, in);
    dX.noalias() = dY * W;
  }
}

void Conv3x3::init(int in_channels, int out_channels, Rng& rng) {
  in_ch = in_channels;
  out_ch = out_channels;
  w.resize(static_cast<size_t>(out_ch) * in_ch * 9);
  b.assign(out_ch, 0.0);
  dw.assign(w.size(), 0.0);
  db.assign(b.size(), 0.0);
  he_uniform(w, in_ch * 9, rng);
}

void Conv3x3::params(ParamList& list) {
  list.push_back({&w, &dw});
  list.push_back({&b, &db});
}

void Conv3x3::forward(const double* x, int batch, int height, int width, double* y,
                      std::vector<double>& patches) const {
  const int oh = height - 2, ow = width - 2;
  if (oh < 1 || ow < 1) throw ContractViolation("conv input smaller than 3x3 kernel");
  const size_t in_plane = static_cast<size_t>(batch) * height * width;
  const size_t out_plane = static_cast<size_t>(batch) * oh * ow;
  patches.resize(static_cast<size_t>(in_ch) * 9 * out_plane);
  // Row (c*9 + ky*3 + kx) of the patch matrix is channel c shifted by
  // (ky, kx); each (item, output row) segment is a contiguous run of ow.
  for (int c = 0; c < in_ch; ++c) {
    const double* src_plane = x + c * in_plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = patches.data() + (static_cast<size_t>(c) * 9 + ky * 3 + kx) * out_plane;
        for (int bi = 0; bi < batch; ++bi) {
          for (int oy = 0; oy < oh; ++oy) {
            const double* src =
                src_plane + (static_cast<size_t>(bi) * height + oy + ky) * width + kx;
            std::memcpy(dst, src, sizeof(double) * ow);
            dst += ow;
          }
        }
      }
    }
  }
  CMapRM K(patches.data(), in_ch * 9, static_cast<Eigen::Index>(out_plane));
  CMapRM W(w.data(), out_ch, in_ch * 9);
  MapRM Y(y, out_ch, static_cast<Eigen::Index>(out_plane));
  Y.noalias() = W * K;
  Y.colwise() += CVecMap(b.data(), out_ch);
}

void Conv3x3::backward(const double* dy, const std::vector<double>& patches, int batch, int height,
                       int width, double* dx) {
  const int oh = height - 2, ow = width - 2;
  const size_t in_plane = static_cast<size_t>(batch) * height * width;
  const size_t out_plane = static_cast<size_t>(batch) * oh * ow;
  CMapRM dY(dy, out_ch, static_cast<Eigen::Index>(out_plane));
  CMapRM K(patches.data(), in_ch * 9, static_cast<Eigen::Index>(out_plane));
  MapRM dW(dw.data(), out_ch, in_ch * 9);
  dW.noalias() += dY * K.transpose();
  VecMap(db.data(), out_ch) += dY.rowwise().sum();
  if (!dx) return;
  std::vector<double> dk(static_cast<size_t>(in_ch) * 9 * out_plane);
  MapRM dK(dk.data(), in_ch * 9, static_cast<Eigen::Index>(out_plane));
  CMapRM W(w.data(), out_ch, in_ch * 9);
  dK.noalias() = W.transpose() * dY;
  for (int c = 0; c < in_ch; ++c) {
    double* dst_plane = dx + c * in_plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = dk.data() + (static_cast<size_t>(c) * 9 + ky * 3 + kx) * out_plane;
        for (int bi = 0; bi < batch; ++bi) {
          for (int oy = 0; oy < oh; ++oy) {
            double* dst = dst_plane + (static_cast<size_t>(bi) * height + oy + ky) * width + kx;
            for (int ox = 0; ox < ow; ++ox) dst[ox] += src[ox];
            src += ow;
          }
        }
      }
    }
  }
}

}  // namespace lle
