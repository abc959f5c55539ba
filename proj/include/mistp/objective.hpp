#pragma once

#include <algorithm>
#include <atomic>
#include <concepts>
#include <cstdint>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mistp/errors.hpp"

namespace mistp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A finite sum f(x) = (1/n) sum_i f_i(x) over R^d.
///
/// Implementations hold immutable data; every member is const and safe to
/// call from concurrent runs.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual std::size_t num_components() const = 0;
  virtual std::size_t dimension() const = 0;

  /// f_i(x). Callers guarantee i < n and x.size() == d.
  virtual double component_value(std::size_t i, const Vector& x) const = 0;

  virtual bool has_gradient() const { return false; }

  /// Writes grad f_i(x) into `grad` (resized by the callee).
  virtual void component_gradient(std::size_t /*i*/, const Vector& /*x*/, Vector& /*grad*/) const {
    throw UnsupportedMethod("problem provides no exact gradient");
  }

  /// Per-component gradient Lipschitz constants L_i, when known.
  virtual std::optional<std::vector<double>> lipschitz() const { return std::nullopt; }

  virtual std::string name() const { return "problem"; }
};

/// An ordered set of distinct component indices B with 1 <= |B| <= n.
///
/// Indices are kept ascending so summation order is fixed. Batches drawn with
/// replacement may repeat indices; those are built through `with_replacement`.
class MinibatchIndex {
 public:
  MinibatchIndex() = default;

  /// Validates distinctness and range against `n`.
  MinibatchIndex(std::vector<std::size_t> indices, std::size_t n) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (indices_.empty()) throw InvalidMinibatch("minibatch is empty");
    if (indices_.back() >= n)
      throw InvalidMinibatch("index " + std::to_string(indices_.back()) + " out of range for n=" +
                             std::to_string(n));
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
      throw InvalidMinibatch("minibatch indices are not distinct");
  }

  static MinibatchIndex full(std::size_t n) {
    MinibatchIndex b;
    b.indices_.resize(n);
    std::iota(b.indices_.begin(), b.indices_.end(), std::size_t{0});
    return b;
  }

  static MinibatchIndex with_replacement(std::vector<std::size_t> indices, std::size_t n) {
    MinibatchIndex b;
    b.indices_ = std::move(indices);
    std::sort(b.indices_.begin(), b.indices_.end());
    if (b.indices_.empty()) throw InvalidMinibatch("minibatch is empty");
    if (b.indices_.back() >= n) throw InvalidMinibatch("index out of range");
    return b;
  }

  std::size_t size() const noexcept { return indices_.size(); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  friend bool operator==(const MinibatchIndex&, const MinibatchIndex&) = default;

 private:
  std::vector<std::size_t> indices_;
};

inline void check_point(const FiniteSumProblem& p, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != p.dimension())
    throw ShapeError("point has dimension " + std::to_string(x.size()) + ", problem expects " +
                     std::to_string(p.dimension()));
}

/// f_B(x), summed in ascending index order.
inline double eval_minibatch(const FiniteSumProblem& p, const MinibatchIndex& batch, const Vector& x) {
  check_point(p, x);
  const std::size_t n = p.num_components();
  if (batch.size() == 0) throw InvalidMinibatch("minibatch is empty");
  double sum = 0.0;
  for (std::size_t i : batch) {
    if (i >= n) throw InvalidMinibatch("index " + std::to_string(i) + " out of range");
    sum += p.component_value(i, x);
  }
  return sum / static_cast<double>(batch.size());
}

/// f(x) = (1/n) sum_i f_i(x), summed left to right.
inline double full_value(const FiniteSumProblem& p, const Vector& x) {
  check_point(p, x);
  const std::size_t n = p.num_components();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += p.component_value(i, x);
  return sum / static_cast<double>(n);
}

inline Vector minibatch_gradient(const FiniteSumProblem& p, const MinibatchIndex& batch, const Vector& x) {
  check_point(p, x);
  Vector g = Vector::Zero(x.size());
  Vector gi;
  for (std::size_t i : batch) {
    p.component_gradient(i, x, gi);
    g += gi;
  }
  return g / static_cast<double>(batch.size());
}

inline Vector full_gradient(const FiniteSumProblem& p, const Vector& x) {
  return minibatch_gradient(p, MinibatchIndex::full(p.num_components()), x);
}

/// Mean of the L_i, the constant that enters the descent inequality.
inline double mean_lipschitz(const std::vector<double>& li) {
  double s = 0.0;
  for (double v : li) s += v;
  return s / static_cast<double>(li.size());
}

// ---------------------------------------------------------------------------

/// Finite sum assembled from callables. Mostly for tests and small oracles.
class FunctionalProblem final : public FiniteSumProblem {
 public:
  using ValueFn = std::function<double(std::size_t, const Vector&)>;
  using GradFn = std::function<void(std::size_t, const Vector&, Vector&)>;

  FunctionalProblem(std::size_t n, std::size_t d, ValueFn value, GradFn grad = {},
                    std::optional<std::vector<double>> lipschitz = std::nullopt)
      : n_(n), d_(d), value_(std::move(value)), grad_(std::move(grad)), lipschitz_(std::move(lipschitz)) {
    if (n_ == 0 || d_ == 0) throw InvalidDimension("finite sum needs n >= 1 and d >= 1");
  }

  std::size_t num_components() const override { return n_; }
  std::size_t dimension() const override { return d_; }
  double component_value(std::size_t i, const Vector& x) const override { return value_(i, x); }
  bool has_gradient() const override { return static_cast<bool>(grad_); }
  void component_gradient(std::size_t i, const Vector& x, Vector& g) const override {
    if (!grad_) FiniteSumProblem::component_gradient(i, x, g);
    grad_(i, x, g);
  }
  std::optional<std::vector<double>> lipschitz() const override { return lipschitz_; }
  std::string name() const override { return "functional"; }

 private:
  std::size_t n_, d_;
  ValueFn value_;
  GradFn grad_;
  std::optional<std::vector<double>> lipschitz_;
};

/// f_i(x) = 1/2 (a_i.x - y_i)^2 + (lambda/2)||x||^2.
class RidgeProblem final : public FiniteSumProblem {
 public:
  RidgeProblem(Matrix a, Vector y, double lambda) : a_(std::move(a)), y_(std::move(y)), lambda_(lambda) {
    if (a_.rows() == 0 || a_.cols() == 0) throw InvalidDimension("ridge needs n >= 1 and d >= 1");
    if (a_.rows() != y_.size()) throw ShapeError("ridge: A has " + std::to_string(a_.rows()) +
                                                 " rows but y has " + std::to_string(y_.size()));
    if (!(lambda_ > 0.0)) throw InvalidArgument("ridge: lambda must be positive");
  }

  std::size_t num_components() const override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t dimension() const override { return static_cast<std::size_t>(a_.cols()); }

  double component_value(std::size_t i, const Vector& x) const override {
    const double r = a_.row(static_cast<Eigen::Index>(i)).dot(x) - y_[static_cast<Eigen::Index>(i)];
    return 0.5 * r * r + 0.5 * lambda_ * x.squaredNorm();
  }

  bool has_gradient() const override { return true; }

  void component_gradient(std::size_t i, const Vector& x, Vector& g) const override {
    const auto row = a_.row(static_cast<Eigen::Index>(i));
    const double r = row.dot(x) - y_[static_cast<Eigen::Index>(i)];
    g = r * row.transpose() + lambda_ * x;
  }

  /// L_i = ||a_i||^2 + lambda (largest eigenvalue of a_i a_i^T + lambda I).
  std::optional<std::vector<double>> lipschitz() const override {
    std::vector<double> li(num_components());
    for (Eigen::Index i = 0; i < a_.rows(); ++i) li[static_cast<std::size_t>(i)] = a_.row(i).squaredNorm() + lambda_;
    return li;
  }

  std::string name() const override { return "ridge"; }

  /// Minimizer of the mean objective: (A^T A / n + lambda I) x = A^T y / n.
  Vector closed_form_minimizer() const {
    const double n = static_cast<double>(a_.rows());
    Eigen::MatrixXd h = (a_.transpose() * a_) / n;
    h.diagonal().array() += lambda_;
    const Vector rhs = (a_.transpose() * y_) / n;
    return h.ldlt().solve(rhs);
  }

  const Matrix& features() const noexcept { return a_; }
  const Vector& targets() const noexcept { return y_; }
  double lambda() const noexcept { return lambda_; }

 private:
  Matrix a_;
  Vector y_;
  double lambda_;
};

/// ln(1 + exp(-t)) without overflow.
inline double log1p_exp_neg(double t) {
  return t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

/// Logistic sigmoid 1/(1+exp(-t)) without overflow.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// f_i(x) = 1/2 ln(1 + exp(-y_i a_i.x)) + (lambda/2)||x||^2 with y_i in {-1,+1}.
///
/// The 1/2 factor mirrors the published objective's 1/(2n) normalization.
/// The first feature column is expected to be the intercept (all ones).
class LogisticProblem final : public FiniteSumProblem {
 public:
  LogisticProblem(Matrix a, Vector y, double lambda, bool require_intercept = true)
      : a_(std::move(a)), y_(std::move(y)), lambda_(lambda) {
    if (a_.rows() == 0 || a_.cols() == 0) throw InvalidDimension("logistic needs n >= 1 and d >= 1");
    if (a_.rows() != y_.size()) throw ShapeError("logistic: A and y disagree on n");
    if (!(lambda_ >= 0.0)) throw InvalidArgument("logistic: lambda must be non-negative");
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (y_[i] != 1.0 && y_[i] != -1.0)
        throw InvalidLabel("logistic label at row " + std::to_string(i) + " is not -1 or +1");
      if (require_intercept && a_(i, 0) != 1.0)
        throw ShapeError("logistic: first column must be all ones (row " + std::to_string(i) + ")");
    }
  }

  std::size_t num_components() const override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t dimension() const override { return static_cast<std::size_t>(a_.cols()); }

  double component_value(std::size_t i, const Vector& x) const override {
    const auto k = static_cast<Eigen::Index>(i);
    const double t = y_[k] * a_.row(k).dot(x);
    return 0.5 * log1p_exp_neg(t) + 0.5 * lambda_ * x.squaredNorm();
  }

  bool has_gradient() const override { return true; }

  void component_gradient(std::size_t i, const Vector& x, Vector& g) const override {
    const auto k = static_cast<Eigen::Index>(i);
    const double t = y_[k] * a_.row(k).dot(x);
    g = (-0.5 * sigmoid(-t) * y_[k]) * a_.row(k).transpose() + lambda_ * x;
  }

  /// L_i = ||a_i||^2 / 8 + lambda; the sigmoid derivative peaks at 1/4.
  std::optional<std::vector<double>> lipschitz() const override {
    std::vector<double> li(num_components());
    for (Eigen::Index i = 0; i < a_.rows(); ++i)
      li[static_cast<std::size_t>(i)] = a_.row(i).squaredNorm() / 8.0 + lambda_;
    return li;
  }

  std::string name() const override { return "logistic"; }

  const Matrix& features() const noexcept { return a_; }
  const Vector& labels() const noexcept { return y_; }
  double lambda() const noexcept { return lambda_; }

 private:
  Matrix a_;
  Vector y_;
  double lambda_;
};

/// Fully connected classifier with ReLU hidden layers, softmax output and
/// categorical cross-entropy per sample.
///
/// Parameter layout is layer-major: for each layer l mapping in_l -> out_l,
/// the out_l x in_l weight matrix (row-major) followed by the out_l biases.
class MlpProblem final : public FiniteSumProblem {
 public:
  /// `layer_sizes` = (input, hidden..., classes); labels are class indices.
  MlpProblem(std::vector<std::size_t> layer_sizes, Matrix samples, std::vector<std::size_t> labels)
      : sizes_(std::move(layer_sizes)), x_(std::move(samples)), labels_(std::move(labels)) {
    if (sizes_.size() < 2) throw InvalidDimension("mlp needs at least input and output layers");
    for (std::size_t s : sizes_)
      if (s == 0) throw InvalidDimension("mlp layer of width 0");
    if (x_.rows() == 0) throw InvalidDimension("mlp needs at least one sample");
    if (static_cast<std::size_t>(x_.cols()) != sizes_.front())
      throw ShapeError("mlp: samples have " + std::to_string(x_.cols()) + " features, input layer is " +
                       std::to_string(sizes_.front()));
    if (labels_.size() != static_cast<std::size_t>(x_.rows())) throw ShapeError("mlp: one label per sample");
    for (std::size_t c : labels_)
      if (c >= sizes_.back()) throw InvalidLabel("mlp: class index " + std::to_string(c) + " out of range");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) params_ += sizes_[l + 1] * (sizes_[l] + 1);
  }

  std::size_t num_components() const override { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dimension() const override { return params_; }
  std::size_t num_classes() const noexcept { return sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }

  /// Softmax class probabilities for sample i.
  Vector predict(std::size_t i, const Vector& w) const {
    Vector z = logits(i, w);
    const double m = z.maxCoeff();
    Vector e = (z.array() - m).exp();
    return e / e.sum();
  }

  double component_value(std::size_t i, const Vector& w) const override {
    if (static_cast<std::size_t>(w.size()) != params_)
      throw ShapeError("mlp: parameter vector has length " + std::to_string(w.size()) + ", expected " +
                       std::to_string(params_));
    const Vector z = logits(i, w);
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    return lse - z[static_cast<Eigen::Index>(labels_[i])];
  }

  std::string name() const override { return "mlp"; }

 private:
  Vector logits(std::size_t i, const Vector& w) const {
    Vector h = x_.row(static_cast<Eigen::Index>(i)).transpose();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const auto in = static_cast<Eigen::Index>(sizes_[l]);
      const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
      Eigen::Map<const Matrix> weights(w.data() + offset, out, in);
      offset += static_cast<std::size_t>(out * in);
      Eigen::Map<const Vector> bias(w.data() + offset, out);
      offset += static_cast<std::size_t>(out);
      Vector next = weights * h + bias;
      if (l + 2 < sizes_.size()) next = next.cwiseMax(0.0);
      h = std::move(next);
    }
    return h;
  }

  std::vector<std::size_t> sizes_;
  Matrix x_;
  std::vector<std::size_t> labels_;
  std::size_t params_ = 0;
};

/// Lipschitz constants of the convex problems plus their mean L.
struct LipschitzInfo {
  std::vector<double> per_component;
  double mean = 0.0;
};

template <typename Problem>
  requires std::same_as<Problem, RidgeProblem> || std::same_as<Problem, LogisticProblem>
LipschitzInfo lipschitz_constants(const Problem& p) {
  LipschitzInfo info;
  info.per_component = *p.lipschitz();
  info.mean = mean_lipschitz(info.per_component);
  return info;
}

/// Decorator that counts component evaluations (values and gradients)
/// independently of the optimizers' own bookkeeping.
class CountingProblem final : public FiniteSumProblem {
 public:
  explicit CountingProblem(const FiniteSumProblem& inner) : inner_(inner) {}

  std::size_t num_components() const override { return inner_.num_components(); }
  std::size_t dimension() const override { return inner_.dimension(); }
  double component_value(std::size_t i, const Vector& x) const override {
    values_.fetch_add(1, std::memory_order_relaxed);
    return inner_.component_value(i, x);
  }
  bool has_gradient() const override { return inner_.has_gradient(); }
  void component_gradient(std::size_t i, const Vector& x, Vector& g) const override {
    gradients_.fetch_add(1, std::memory_order_relaxed);
    inner_.component_gradient(i, x, g);
  }
  std::optional<std::vector<double>> lipschitz() const override { return inner_.lipschitz(); }
  std::string name() const override { return inner_.name(); }

  std::uint64_t value_calls() const noexcept { return values_.load(); }
  std::uint64_t gradient_calls() const noexcept { return gradients_.load(); }
  std::uint64_t total_calls() const noexcept { return value_calls() + gradient_calls(); }
  void reset() noexcept {
    values_ = 0;
    gradients_ = 0;
  }

 private:
  const FiniteSumProblem& inner_;
  mutable std::atomic<std::uint64_t> values_{0};
  mutable std::atomic<std::uint64_t> gradients_{0};
};

}  // namespace mistp
