#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "mistp/errors.hpp"
#include "mistp/objective.hpp"
#include "mistp/rng.hpp"

namespace mistp {

enum class DirectionKind { UnitSphere, ScaledGaussian, CoordinateBasis, OrthonormalSet };

enum class NormId { L1, L2, Custom };

inline std::string_view to_string(DirectionKind k) {
  switch (k) {
    case DirectionKind::UnitSphere: return "sphere";
    case DirectionKind::ScaledGaussian: return "gaussian";
    case DirectionKind::CoordinateBasis: return "coord";
    case DirectionKind::OrthonormalSet: return "ortho";
  }
  return "?";
}

inline DirectionKind parse_direction_kind(std::string_view s) {
  if (s == "sphere") return DirectionKind::UnitSphere;
  if (s == "gaussian") return DirectionKind::ScaledGaussian;
  if (s == "coord") return DirectionKind::CoordinateBasis;
  if (s == "ortho") return DirectionKind::OrthonormalSet;
  throw InvalidArgument("unknown direction distribution '" + std::string(s) + "'");
}

/// The constant and norm of the lower bound E|<g,s>| >= mu_D ||g||_D.
struct MuDInfo {
  std::optional<double> mu_d;
  NormId norm = NormId::L2;
};

/// Distribution of search directions over R^d with E||s||^2 = 1.
///
///  - UnitSphere: uniform on the unit sphere (normalized Gaussian).
///  - ScaledGaussian: N(0, I/d), i.e. a standard Gaussian scaled by 1/sqrt(d).
///  - CoordinateBasis: e_i with i uniform on [0, d).
///  - OrthonormalSet: a uniformly chosen column of an orthonormal d x d matrix.
class DirectionDistribution {
 public:
  DirectionDistribution(DirectionKind kind, std::size_t d) : kind_(kind), d_(d) {
    if (d_ == 0) throw InvalidDimension("direction distribution needs d >= 1");
    if (kind_ == DirectionKind::OrthonormalSet) basis_ = Eigen::MatrixXd::Identity(dim(), dim());
  }

  static DirectionDistribution unit_sphere(std::size_t d) { return {DirectionKind::UnitSphere, d}; }
  static DirectionDistribution scaled_gaussian(std::size_t d) { return {DirectionKind::ScaledGaussian, d}; }
  static DirectionDistribution coordinate_basis(std::size_t d) { return {DirectionKind::CoordinateBasis, d}; }

  /// Columns of `basis` must be orthonormal to 1e-10.
  static DirectionDistribution orthonormal_set(Eigen::MatrixXd basis) {
    if (basis.rows() == 0) throw InvalidDimension("direction distribution needs d >= 1");
    if (basis.rows() != basis.cols()) throw ShapeError("orthonormal set must be square");
    const Eigen::MatrixXd gram = basis.transpose() * basis;
    const double err = (gram - Eigen::MatrixXd::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
    if (err > 1e-10) throw InvalidArgument("orthonormal set columns deviate from orthonormality by " + std::to_string(err));
    DirectionDistribution out(DirectionKind::OrthonormalSet, static_cast<std::size_t>(basis.rows()));
    out.basis_ = std::move(basis);
    return out;
  }

  /// A random orthonormal basis from the QR factorization of a Gaussian matrix.
  static DirectionDistribution random_orthonormal_set(std::size_t d, RngStream& rng) {
    if (d == 0) throw InvalidDimension("direction distribution needs d >= 1");
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    return orthonormal_set(std::move(q));
  }

  static DirectionDistribution make(DirectionKind kind, std::size_t d, RngStream* rng = nullptr) {
    if (kind == DirectionKind::OrthonormalSet && rng != nullptr) return random_orthonormal_set(d, *rng);
    return {kind, d};
  }

  DirectionKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return d_; }
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }

  Vector sample(RngStream& rng) const {
    switch (kind_) {
      case DirectionKind::UnitSphere: {
        Vector s = rng.normal_vector(dim());
        double norm = s.norm();
        while (norm == 0.0) {
          s = rng.normal_vector(dim());
          norm = s.norm();
        }
        return s / norm;
      }
      case DirectionKind::ScaledGaussian:
        return rng.normal_vector(dim()) / std::sqrt(static_cast<double>(d_));
      case DirectionKind::CoordinateBasis: {
        Vector s = Vector::Zero(dim());
        s[static_cast<Eigen::Index>(rng.index(d_))] = 1.0;
        return s;
      }
      case DirectionKind::OrthonormalSet:
        return basis_.col(static_cast<Eigen::Index>(rng.index(d_)));
    }
    return {};
  }

  /// Closed-form mu_D and the norm it pairs with.
  ///
  /// Sphere: E|s_1| = Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2)) against L2.
  /// Scaled Gaussian: sqrt(2/pi) / sqrt(d) against L2.
  /// Coordinate basis: 1/d against L1. Orthonormal set: 1/d against the L1
  /// norm of the coordinates in that basis.
  MuDInfo mu_d_info() const {
    const double d = static_cast<double>(d_);
    switch (kind_) {
      case DirectionKind::UnitSphere:
        return {std::exp(std::lgamma(d / 2.0) - std::lgamma((d + 1.0) / 2.0)) / std::sqrt(std::numbers::pi),
                NormId::L2};
      case DirectionKind::ScaledGaussian:
        return {std::sqrt(2.0 / std::numbers::pi) / std::sqrt(d), NormId::L2};
      case DirectionKind::CoordinateBasis:
        return {1.0 / d, NormId::L1};
      case DirectionKind::OrthonormalSet:
        return {1.0 / d, NormId::Custom};
    }
    return {};
  }

  /// ||g||_D for the norm declared by `mu_d_info`.
  double norm_d(const Vector& g) const {
    switch (kind_) {
      case DirectionKind::UnitSphere:
      case DirectionKind::ScaledGaussian: return g.norm();
      case DirectionKind::CoordinateBasis: return g.lpNorm<1>();
      case DirectionKind::OrthonormalSet: return (basis_.transpose() * g).lpNorm<1>();
    }
    return 0.0;
  }

  /// Exact E|<g,s>| where the distribution is discrete, otherwise absent.
  std::optional<double> exact_mean_abs_projection(const Vector& g) const {
    const double d = static_cast<double>(d_);
    switch (kind_) {
      case DirectionKind::CoordinateBasis: return g.lpNorm<1>() / d;
      case DirectionKind::OrthonormalSet: return (basis_.transpose() * g).lpNorm<1>() / d;
      default: return std::nullopt;
    }
  }

 private:
  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(d_); }

  DirectionKind kind_;
  std::size_t d_;
  Eigen::MatrixXd basis_;
};

inline Vector sample(const DirectionDistribution& dist, RngStream& rng) { return dist.sample(rng); }

inline MuDInfo mu_d_info(const DirectionDistribution& dist) { return dist.mu_d_info(); }

/// Monte-Carlo estimate of E|<g,s>| over `samples` draws.
inline double empirical_mu_d(const DirectionDistribution& dist, const Vector& g, std::size_t samples, RngStream& rng) {
  if (samples == 0) throw InvalidArgument("empirical_mu_d needs at least one sample");
  if (static_cast<std::size_t>(g.size()) != dist.dimension()) throw ShapeError("g has the wrong dimension");
  double sum = 0.0;
  for (std::size_t k = 0; k < samples; ++k) sum += std::abs(g.dot(dist.sample(rng)));
  return sum / static_cast<double>(samples);
}

}  // namespace mistp
