#pragma once

// Minimal tanh MLP over a flat parameter vector, with batch backprop, and an
// Adam optimizer over the same flat layout.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace piperoute::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Fully connected network: tanh on hidden layers, linear output.
/// Per layer, parameters are W (out x in, column-major) followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need input and output sizes");
  }

  struct Cache {
    std::vector<MatrixXd> act;  // act[0] input, act[L] linear output
  };

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  const std::vector<int>& sizes() const { return sizes_; }

  std::size_t num_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < num_layers(); ++l) n += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    return n;
  }

  /// x: in_dim x batch. Returns out_dim x batch.
  MatrixXd forward(const double* p, const MatrixXd& x, Cache* cache = nullptr) const {
    if (cache) {
      cache->act.resize(num_layers() + 1);
      cache->act[0] = x;
    }
    MatrixXd h = x;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      Eigen::Map<const MatrixXd> W(p, out, in);
      Eigen::Map<const VectorXd> b(p + static_cast<std::ptrdiff_t>(out) * in, out);
      p += static_cast<std::ptrdiff_t>(out) * (in + 1);
      MatrixXd z = W * h;
      z.colwise() += b;
      if (l + 1 < num_layers()) z = z.array().tanh().matrix();
      h = std::move(z);
      if (cache) cache->act[l + 1] = h;
    }
    return h;
  }

  /// Accumulates dLoss/dparams into grad given dLoss/doutput (out_dim x batch).
  void backward(const double* p, const Cache& cache, const MatrixXd& grad_out, double* grad) const {
    std::vector<std::ptrdiff_t> offsets(num_layers());
    std::ptrdiff_t off = 0;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      offsets[l] = off;
      off += static_cast<std::ptrdiff_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    MatrixXd delta = grad_out;
    for (std::size_t l = num_layers(); l-- > 0;) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      Eigen::Map<const MatrixXd> W(p + offsets[l], out, in);
      Eigen::Map<MatrixXd> gW(grad + offsets[l], out, in);
      Eigen::Map<VectorXd> gb(grad + offsets[l] + static_cast<std::ptrdiff_t>(out) * in, out);
      gW.noalias() += delta * cache.act[l].transpose();
      gb += delta.rowwise().sum();
      if (l > 0) {
        MatrixXd back = W.transpose() * delta;
        delta = back.array() * (1.0 - cache.act[l].array().square());
      }
    }
  }

  /// Orthogonal weights scaled by `hidden_gain` (last layer: `out_gain`), zero biases.
  template <class Rng>
  void init(double* p, Rng& rng, double hidden_gain, double out_gain) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      MatrixXd a(std::max(in, out), std::min(in, out));
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
      }
      Eigen::HouseholderQR<MatrixXd> qr(a);
      MatrixXd q = qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
      const MatrixXd r = qr.matrixQR().topRows(a.cols()).template triangularView<Eigen::Upper>();
      for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
      }
      const double gain = (l + 1 == num_layers()) ? out_gain : hidden_gain;
      Eigen::Map<MatrixXd> W(p, out, in);
      W = gain * (out >= in ? q : MatrixXd(q.transpose()));
      Eigen::Map<VectorXd>(p + static_cast<std::ptrdiff_t>(out) * in, out).setZero();
      p += static_cast<std::ptrdiff_t>(out) * (in + 1);
    }
  }

 private:
  std::vector<int> sizes_;
};

struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-5;
  VectorXd m;
  VectorXd v;
  long long t = 0;

  void step(VectorXd& params, const VectorXd& grad) {
    if (m.size() != params.size()) {
      m = VectorXd::Zero(params.size());
      v = VectorXd::Zero(params.size());
      t = 0;
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    const double step_size = lr / bc1;
    params.array() -= step_size * m.array() / ((v.array() / bc2).sqrt() + eps);
  }
};

}  // namespace piperoute::nn
