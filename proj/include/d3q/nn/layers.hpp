#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "d3q/errors.hpp"

namespace d3q::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A trainable tensor and its gradient accumulator.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

using ParamRefs = std::vector<Param*>;

inline void zero_grads(const ParamRefs& params) {
  for (Param* p : params) p->zero_grad();
}

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <class Rng>
void init_uniform(Param& p, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = u(rng);
}

enum class Activation { identity, relu, tanh, sigmoid, softmax };

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Column-wise softmax.
inline Matrix softmax(const Matrix& z) {
  Matrix y(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double m = z.col(c).maxCoeff();
    y.col(c) = (z.col(c).array() - m).exp();
    y.col(c) /= y.col(c).sum();
  }
  return y;
}

inline Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::softmax: return softmax(z);
  }
  return z;
}

// dL/dz given y = f(z) and dL/dy.
inline Matrix activation_backward(Activation a, const Matrix& z, const Matrix& y,
                                  const Matrix& dy) {
  switch (a) {
    case Activation::identity: return dy;
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix().cwiseProduct(dy);
    case Activation::tanh: return (1.0 - y.array().square()).matrix().cwiseProduct(dy);
    case Activation::sigmoid: return (y.array() * (1.0 - y.array())).matrix().cwiseProduct(dy);
    case Activation::softmax: {
      Matrix dz(dy.rows(), dy.cols());
      for (Eigen::Index c = 0; c < dy.cols(); ++c) {
        const double inner = y.col(c).dot(dy.col(c));
        dz.col(c) = y.col(c).cwiseProduct((dy.col(c).array() - inner).matrix());
      }
      return dz;
    }
  }
  return dy;
}

// Fully connected layer over column batches: y = f(W x + b).
class Dense {
 public:
  struct Cache {
    Matrix x, z, y;
  };

  Dense() = default;
  Dense(std::string name, Eigen::Index in, Eigen::Index out, Activation act)
      : w_(name + ".W", out, in), b_(name + ".b", out, 1), act_(act) {}

  template <class Rng>
  void init(Rng& rng) {
    init_uniform(w_, w_.value.cols(), rng);
    init_uniform(b_, w_.value.cols(), rng);
  }

  Eigen::Index in() const { return w_.value.cols(); }
  Eigen::Index out() const { return w_.value.rows(); }
  Activation activation() const { return act_; }

  Matrix forward(const Matrix& x) const {
    check(x);
    return activate(act_, preactivation(x));
  }

  Matrix forward(const Matrix& x, Cache& cache) const {
    check(x);
    cache.x = x;
    cache.z = preactivation(x);
    cache.y = activate(act_, cache.z);
    return cache.y;
  }

  Matrix preactivation(const Matrix& x) const {
    return (w_.value * x).colwise() + b_.value.col(0);
  }

  // Accumulates parameter gradients; returns dL/dx.
  Matrix backward(const Cache& cache, const Matrix& dy) {
    return backward_preactivation(cache, activation_backward(act_, cache.z, cache.y, dy));
  }

  // For fused losses (softmax + cross-entropy, sigmoid + BCE) that hand back
  // dL/dz directly.
  Matrix backward_preactivation(const Cache& cache, const Matrix& dz) {
    w_.grad.noalias() += dz * cache.x.transpose();
    b_.grad += dz.rowwise().sum();
    return w_.value.transpose() * dz;
  }

  Param& weight() { return w_; }
  Param& bias() { return b_; }
  const Param& weight() const { return w_; }
  const Param& bias() const { return b_; }
  ParamRefs params() { return {&w_, &b_}; }

 private:
  void check(const Matrix& x) const {
    if (x.rows() != in())
      throw ShapeError(w_.name + ": expected input rows " + std::to_string(in()) + ", got " +
                       std::to_string(x.rows()));
  }

  Param w_, b_;
  Activation act_ = Activation::identity;
};

struct LayerSpec {
  Eigen::Index out;
  Activation act;
};

// Stack of dense layers.
class DenseNet {
 public:
  using Cache = std::vector<Dense::Cache>;

  DenseNet() = default;
  DenseNet(const std::string& name, Eigen::Index in, const std::vector<LayerSpec>& specs) {
    Eigen::Index prev = in;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      layers_.emplace_back(name + "." + std::to_string(i), prev, specs[i].out, specs[i].act);
      prev = specs[i].out;
    }
  }

  template <class Rng>
  void init(Rng& rng) {
    for (auto& l : layers_) l.init(rng);
  }

  Eigen::Index in() const { return layers_.front().in(); }
  Eigen::Index out() const { return layers_.back().out(); }

  Matrix forward(const Matrix& x) const {
    Matrix h = x;
    for (const auto& l : layers_) h = l.forward(h);
    return h;
  }

  Matrix forward(const Matrix& x, Cache& cache) const {
    cache.resize(layers_.size());
    Matrix h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i].forward(h, cache[i]);
    return h;
  }

  Matrix backward(const Cache& cache, const Matrix& dy) {
    Matrix d = dy;
    for (std::size_t i = layers_.size(); i-- > 0;) d = layers_[i].backward(cache[i], d);
    return d;
  }

  // dL/dz of the last layer supplied directly.
  Matrix backward_preactivation(const Cache& cache, const Matrix& dz) {
    Matrix d = layers_.back().backward_preactivation(cache.back(), dz);
    for (std::size_t i = layers_.size() - 1; i-- > 0;) d = layers_[i].backward(cache[i], d);
    return d;
  }

  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

  ParamRefs params() {
    ParamRefs out;
    for (auto& l : layers_)
      for (Param* p : l.params()) out.push_back(p);
    return out;
  }

 private:
  std::vector<Dense> layers_;
};

// Single LSTM layer, gates stacked as [input; forget; output; candidate].
class Lstm {
 public:
  struct Step {
    Vector x, h_prev, c_prev, i, f, o, g, c, h;
  };
  using Cache = std::vector<Step>;

  Lstm() = default;
  Lstm(std::string name, Eigen::Index in, Eigen::Index hidden)
      : w_(name + ".W", 4 * hidden, in + hidden), b_(name + ".b", 4 * hidden, 1),
        in_(in), hidden_(hidden) {}

  template <class Rng>
  void init(Rng& rng) {
    init_uniform(w_, hidden_, rng);
    init_uniform(b_, hidden_, rng);
  }

  Eigen::Index in() const { return in_; }
  Eigen::Index hidden() const { return hidden_; }

  // Runs the sequence from zero state; returns the final hidden state.
  Vector forward(const std::vector<Vector>& xs, Cache* cache = nullptr) const {
    Vector h = Vector::Zero(hidden_), c = Vector::Zero(hidden_);
    if (cache) cache->clear();
    Vector joint(in_ + hidden_);
    const Eigen::Index H = hidden_;
    for (const Vector& x : xs) {
      if (x.size() != in_) throw ShapeError(w_.name + ": bad input width");
      joint << x, h;
      Vector z = w_.value * joint + b_.value.col(0);
      Step s;
      s.i = z.segment(0, H).unaryExpr([](double v) { return sigmoid(v); });
      s.f = z.segment(H, H).unaryExpr([](double v) { return sigmoid(v); });
      s.o = z.segment(2 * H, H).unaryExpr([](double v) { return sigmoid(v); });
      s.g = z.segment(3 * H, H).array().tanh().matrix();
      Vector c_new = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
      Vector h_new = s.o.cwiseProduct(c_new.array().tanh().matrix());
      if (cache) {
        s.x = x;
        s.h_prev = h;
        s.c_prev = c;
        s.c = c_new;
        s.h = h_new;
        cache->push_back(std::move(s));
      }
      c = std::move(c_new);
      h = std::move(h_new);
    }
    return h;
  }

  // Backpropagation through time from a gradient on the final hidden state.
  // Accumulates parameter gradients; returns per-step input gradients.
  std::vector<Vector> backward(const Cache& cache, const Vector& dh_final) {
    const Eigen::Index H = hidden_;
    std::vector<Vector> dxs(cache.size());
    Vector dh = dh_final, dc = Vector::Zero(H);
    Vector joint(in_ + H), dz(4 * H);
    for (std::size_t t = cache.size(); t-- > 0;) {
      const Step& s = cache[t];
      const Vector tc = s.c.array().tanh().matrix();
      const Vector d_o = dh.cwiseProduct(tc);
      dc += dh.cwiseProduct(s.o).cwiseProduct((1.0 - tc.array().square()).matrix());
      const Vector d_i = dc.cwiseProduct(s.g);
      const Vector d_g = dc.cwiseProduct(s.i);
      const Vector d_f = dc.cwiseProduct(s.c_prev);
      dz.segment(0, H) = d_i.cwiseProduct((s.i.array() * (1.0 - s.i.array())).matrix());
      dz.segment(H, H) = d_f.cwiseProduct((s.f.array() * (1.0 - s.f.array())).matrix());
      dz.segment(2 * H, H) = d_o.cwiseProduct((s.o.array() * (1.0 - s.o.array())).matrix());
      dz.segment(3 * H, H) = d_g.cwiseProduct((1.0 - s.g.array().square()).matrix());
      joint << s.x, s.h_prev;
      w_.grad.noalias() += dz * joint.transpose();
      b_.grad += dz;
      const Vector djoint = w_.value.transpose() * dz;
      dxs[t] = djoint.head(in_);
      dh = djoint.tail(H);
      dc = dc.cwiseProduct(s.f).eval();
    }
    return dxs;
  }

  Param& weight() { return w_; }
  Param& bias() { return b_; }
  ParamRefs params() { return {&w_, &b_}; }

 private:
  Param w_, b_;
  Eigen::Index in_ = 0, hidden_ = 0;
};

// Copies parameter values between two identically shaped networks.
inline void copy_values(const ParamRefs& from, const ParamRefs& to) {
  if (from.size() != to.size()) throw ShapeError("parameter lists differ in length");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i]->value.rows() != to[i]->value.rows() ||
        from[i]->value.cols() != to[i]->value.cols())
      throw ShapeError("parameter shapes differ: " + from[i]->name);
    to[i]->value = from[i]->value;
  }
}

inline std::size_t count_params(const ParamRefs& params) {
  std::size_t n = 0;
  for (const Param* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

}  // namespace d3q::nn
