#pragma once

#include "polyreg/geometry.hpp"

namespace polyreg {
namespace kendall {

/// m x d landmark matrix, one landmark per row.
using LandmarkMatrix = Eigen::MatrixXd;

/// A standardized configuration: centered, unit Frobenius norm.
struct Preshape {
  Vec coords;  // row-major flattening of the m x d matrix
  Eigen::Index landmarks = 0;
  Eigen::Index dim = 0;
  Eigen::RowVectorXd centroid;  // removed translation
  double scale = 1.0;           // removed Frobenius norm after centering
};

/// Translate to zero centroid and scale to unit norm.
/// Throws GeometryError when m * d < 3 or all points coincide.
Preshape to_preshape(const LandmarkMatrix& raw);

Vec flatten(const LandmarkMatrix& x);
LandmarkMatrix unflatten(const Vec& flat, Eigen::Index landmarks, Eigen::Index dim);

/// Orthonormal spanning set of the vertical subspace at a preshape, together
/// with the skew-symmetric generators producing each vector (e = p W^T).
struct VerticalBasis {
  std::vector<Vec> vectors;
  std::vector<Eigen::MatrixXd> generators;
};

struct Alignment {
  Eigen::MatrixXd rotation;  // d x d, det = +1
  Vec aligned;               // target with every landmark rotated
};

struct LogOptions {
  double tolerance = 1e-9;
  int max_iterations = 200;
  double step = 0.5;
  /// Start from the horizontal sphere log of the Procrustes-aligned target.
  /// When false the iteration starts from the zero vector.
  bool warm_start = true;
};

struct LogResult {
  Vec vector;
  int iterations = 0;
  double residual = 0.0;
};

}  // namespace kendall

/// Kendall shape space of m landmarks in R^d, represented on the preshape
/// sphere S^{md-1}. Tangent vectors are horizontal preshape tangents.
class KendallShapeSpace final : public Manifold {
 public:
  struct Options {
    /// Largest arc length covered by one RK4 step of the transport equation.
    double max_substep = 0.05;
    kendall::LogOptions log;
  };

  KendallShapeSpace(Eigen::Index landmarks, Eigen::Index dim);
  KendallShapeSpace(Eigen::Index landmarks, Eigen::Index dim, Options options);

  Eigen::Index landmarks() const { return m_; }
  Eigen::Index dim() const { return d_; }

  ManifoldKind kind() const override { return ManifoldKind::Kendall; }
  std::string name() const override;
  Eigen::Index point_size() const override { return m_ * d_; }
  Eigen::Index tangent_size() const override { return m_ * d_; }

  /// Horizontal geodesics of the preshape sphere project to shape-space
  /// geodesics, so exp is the spherical exponential of the horizontal part.
  Vec exp(const Vec& p, const Vec& v) const override;
  Vec log(const Vec& p, const Vec& q) const override;
  /// Integrates the horizontal transport equation along the geodesic with
  /// RK4 sub-steps, then projects onto the horizontal space at the endpoint.
  Vec transport(const Vec& p, const Vec& v, const Vec& x) const override;
  /// Shape-space curvature: the preshape-sphere curvature of the horizontal
  /// inputs plus the O'Neill integrability-tensor terms.
  Vec curvature(const Vec& p, const Vec& x, const Vec& y,
                const Vec& z) const override;
  double inner(const Vec& p, const Vec& x, const Vec& y) const override;

  Vec project_point(const Vec& p) const override;
  Vec project_tangent(const Vec& p, const Vec& x) const override;
  PointDiagnostics validate_point(const Vec& p) const override;
  Vec random_point(std::mt19937_64& rng) const override;

  kendall::Preshape to_preshape(const kendall::LandmarkMatrix& raw) const;
  kendall::VerticalBasis vertical_basis(const Vec& p) const;
  /// Centers, removes the normal component and every vertical component.
  Vec horizontal_project(const Vec& p, const Vec& x) const;
  Vec horizontal_project(const Vec& p, const Vec& x,
                         const kendall::VerticalBasis& basis) const;
  /// Horizontality residual: largest |<x, e>| over the vertical basis.
  double vertical_residual(const Vec& p, const Vec& x) const;

  /// Rotates every landmark of target by the rotation minimizing the
  /// Frobenius distance to base.
  kendall::Alignment procrustes_align(const Vec& target, const Vec& base) const;

  /// Time-stepped exponential: each step is a spherical exponential and
  /// spherical transport of the velocity, followed by horizontal projection.
  Vec exp_stepped(const Vec& p, const Vec& v, double horizon, double dt) const;
  /// Iterative log map by geodesic shooting (see LogOptions).
  kendall::LogResult log_shooting(const Vec& p, const Vec& q,
                                  const kendall::LogOptions& options) const;
  double shape_distance(const Vec& p, const Vec& q) const;

  /// O'Neill A-tensor A_x y = V(nabla_x y) for horizontal x, y.
  Vec integrability_tensor(const Vec& p, const kendall::VerticalBasis& basis,
                           const Vec& x, const Vec& y) const;

 private:
  Vec times_transpose(const Vec& x, const Eigen::MatrixXd& w) const;
  Vec transport_rhs(const Vec& gamma, const Vec& velocity, const Vec& x) const;

  Eigen::Index m_;
  Eigen::Index d_;
  Options options_;
};

}  // namespace polyreg
