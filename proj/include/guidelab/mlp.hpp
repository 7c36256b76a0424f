#pragma once

// Small multilayer perceptron with hand-written reverse mode. Batches are stored
// column-wise: an input batch is (input_dim x batch).

#include "guidelab/core.hpp"
#include "guidelab/random.hpp"

#include <cmath>
#include <vector>

namespace guidelab {

using Matrix = Eigen::MatrixXd;

struct MlpArchitecture {
  int data_dim = 2;
  int output_dim = 2;
  int hidden_width = 256;
  int hidden_layers = 3;
  int time_embedding = 64;

  int input_dim() const { return data_dim + time_embedding; }

  void validate() const {
    require(data_dim >= 1 && output_dim >= 1, "mlp: dimensions must be positive");
    require(hidden_width >= 1 && hidden_layers >= 1, "mlp: need at least one hidden layer");
    require(time_embedding >= 0 && time_embedding % 2 == 0, "mlp: time embedding must be even");
  }

  friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

/// Sinusoidal timestep features: sin(t w_i) then cos(t w_i), w_i = 10000^(-i/half).
inline Vector time_embedding(double t, int dim) {
  Vector e(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(t * freq);
    e[half + i] = std::cos(t * freq);
  }
  return e;
}

/// Weights and biases; also used for gradients and optimizer moments.
struct MlpParameters {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpParameters zeros_like(const MlpParameters& p) {
    MlpParameters z;
    for (const auto& w : p.weights) z.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& b : p.biases) z.biases.push_back(Vector::Zero(b.size()));
    return z;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : biases) s += b.squaredNorm();
    return s;
  }

  Eigen::Index count() const {
    Eigen::Index n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& w : weights) if (!w.allFinite()) return false;
    for (const auto& b : biases) if (!b.allFinite()) return false;
    return true;
  }

  /// Visits weights then bias of each layer, in order.
  template <typename F>
  void for_each(F&& f) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      f(weights[i].data(), weights[i].size());
      f(biases[i].data(), biases[i].size());
    }
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      f(weights[i].data(), weights[i].size());
      f(biases[i].data(), biases[i].size());
    }
  }

  friend bool operator==(const MlpParameters& a, const MlpParameters& b) {
    if (a.weights.size() != b.weights.size()) return false;
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
      if (a.weights[i].rows() != b.weights[i].rows() || a.weights[i].cols() != b.weights[i].cols()) return false;
      if (!(a.weights[i].array() == b.weights[i].array()).all()) return false;
      if (!(a.biases[i].array() == b.biases[i].array()).all()) return false;
    }
    return true;
  }
};

class Mlp {
 public:
  struct Tape {
    std::vector<Matrix> activations;  // activations[0] is the input
    std::vector<Matrix> pre;          // pre-activation of each hidden layer
  };

  Mlp() = default;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for weights and biases.
  Mlp(const MlpArchitecture& arch, std::uint64_t seed) : arch_(arch) {
    arch.validate();
    RandomStream rng(seed, StreamPurpose::init_params, 0);
    int fan_in = arch.input_dim();
    const int layers = arch.hidden_layers + 1;
    for (int l = 0; l < layers; ++l) {
      const int fan_out = l + 1 == layers ? arch.output_dim : arch.hidden_width;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      Matrix w(fan_out, fan_in);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
      Vector b(fan_out);
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = bound * (2.0 * rng.uniform() - 1.0);
      params_.weights.push_back(std::move(w));
      params_.biases.push_back(std::move(b));
      fan_in = fan_out;
    }
  }

  Mlp(const MlpArchitecture& arch, MlpParameters params) : arch_(arch), params_(std::move(params)) {
    arch.validate();
    require(params_.weights.size() == static_cast<std::size_t>(arch.hidden_layers + 1), "mlp: layer count mismatch");
  }

  const MlpArchitecture& architecture() const { return arch_; }
  const MlpParameters& parameters() const { return params_; }
  MlpParameters& parameters() { return params_; }

  /// Stacks data columns with the embedding of each column's timestep.
  Matrix make_input(const Matrix& x, const std::vector<double>& t) const {
    require(x.rows() == arch_.data_dim, "mlp: input dimension mismatch");
    Matrix in(arch_.input_dim(), x.cols());
    in.topRows(arch_.data_dim) = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      in.col(j).tail(arch_.time_embedding) = time_embedding(t[static_cast<std::size_t>(j)], arch_.time_embedding);
    }
    return in;
  }

  Matrix forward(const Matrix& input, Tape* tape = nullptr) const {
    Matrix h = input;
    if (tape) {
      tape->activations.clear();
      tape->pre.clear();
      tape->activations.push_back(h);
    }
    const std::size_t last = params_.weights.size() - 1;
    for (std::size_t l = 0; l < last; ++l) {
      Matrix z = params_.weights[l] * h;
      z.colwise() += params_.biases[l];
      h = z.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
      if (tape) {
        tape->pre.push_back(std::move(z));
        tape->activations.push_back(h);
      }
    }
    Matrix out = params_.weights[last] * h;
    out.colwise() += params_.biases[last];
    return out;
  }

  /// Back-propagates grad_out; accumulates parameter gradients when grads is given.
  /// Returns the gradient with respect to the network input.
  Matrix backward(const Tape& tape, const Matrix& grad_out, MlpParameters* grads = nullptr) const {
    Matrix g = grad_out;
    for (std::size_t l = params_.weights.size(); l-- > 0;) {
      const Matrix& below = tape.activations[l];
      if (grads) {
        grads->weights[l].noalias() += g * below.transpose();
        grads->biases[l] += g.rowwise().sum();
      }
      Matrix g_below = params_.weights[l].transpose() * g;
      if (l > 0) {
        const Matrix& z = tape.pre[l - 1];
        g_below.array() *= z.unaryExpr([](double v) {
          const double s = 1.0 / (1.0 + std::exp(-v));
          return s * (1.0 + v * (1.0 - s));
        }).array();
      }
      g = std::move(g_below);
    }
    return g;
  }

 private:
  MlpArchitecture arch_;
  MlpParameters params_;
};

/// Adaptive-moment optimizer with global gradient-norm clipping.
class Adam {
 public:
  Adam(const MlpParameters& like, double learning_rate, double clip_norm)
      : lr_(learning_rate), clip_(clip_norm), m_(MlpParameters::zeros_like(like)), v_(MlpParameters::zeros_like(like)) {}

  void step(MlpParameters& params, MlpParameters& grads) {
    const double norm = std::sqrt(grads.squared_norm());
    if (clip_ > 0.0 && norm > clip_) {
      const double factor = clip_ / norm;
      grads.for_each([&](double* g, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) g[i] *= factor;
      });
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      update(params.weights[l].array(), grads.weights[l].array(), m_.weights[l].array(), v_.weights[l].array(), c1, c2);
      update(params.biases[l].array(), grads.biases[l].array(), m_.biases[l].array(), v_.biases[l].array(), c1, c2);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  template <typename P, typename G, typename M, typename V>
  void update(P&& p, G&& g, M&& m, V&& v, double c1, double c2) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.square();
    p -= lr_ * (m / c1) / ((v / c2).sqrt() + kEps);
  }

  double lr_;
  double clip_;
  MlpParameters m_;
  MlpParameters v_;
  int t_ = 0;
};

}  // namespace guidelab
