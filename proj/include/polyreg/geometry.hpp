#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyreg {

/// Ambient-coordinate representation shared by points and tangent vectors.
///
/// Points live in the embedding space of each manifold (R^{n+1} for the
/// sphere, a row-major flattened 3x3 matrix for SO(3), a row-major flattened
/// m x d landmark matrix for Kendall preshapes). Tangent vectors use the same
/// ambient coordinates, except on SO(3) where they are left-trivialized Lie
/// algebra vectors in R^3.
using Vec = Eigen::VectorXd;

enum class ManifoldKind { Euclidean, Sphere, SO3, Kendall };

std::string to_string(ManifoldKind kind);
ManifoldKind manifold_kind_from_string(const std::string& name);

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a log map is requested at or beyond the cut locus.
class CutLocusError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Per-manifold tolerances for point invariants.
namespace tolerance {
inline constexpr double kSphere = 1e-10;
inline constexpr double kSO3 = 1e-8;
inline constexpr double kKendall = 1e-8;
inline constexpr double kKendallCentering = 1e-10;
}  // namespace tolerance

struct InvariantCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed() const { return residual <= tolerance; }
};

struct PointDiagnostics {
  std::vector<InvariantCheck> checks;
  bool passed() const;
  double max_residual() const;
};

/// The contract every geometry implements. Implementations are immutable
/// after construction, so a single instance can be shared across threads.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual ManifoldKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual Eigen::Index point_size() const = 0;
  virtual Eigen::Index tangent_size() const = 0;

  virtual Vec exp(const Vec& p, const Vec& v) const = 0;
  virtual Vec log(const Vec& p, const Vec& q) const = 0;
  /// Parallel transport of x along the geodesic s -> exp(p, s * v), s in [0, 1].
  virtual Vec transport(const Vec& p, const Vec& v, const Vec& x) const = 0;
  /// R(x, y)z = nabla_x nabla_y z - nabla_y nabla_x z - nabla_[x,y] z.
  virtual Vec curvature(const Vec& p, const Vec& x, const Vec& y,
                        const Vec& z) const = 0;
  virtual double inner(const Vec& p, const Vec& x, const Vec& y) const = 0;

  virtual double dist(const Vec& p, const Vec& q) const;
  double norm(const Vec& p, const Vec& x) const;

  /// Pulls a drifted point back onto the constraint set.
  virtual Vec project_point(const Vec& p) const { return p; }
  /// Removes components of x that are not admissible tangent directions at p.
  virtual Vec project_tangent(const Vec& p, const Vec& x) const;
  virtual PointDiagnostics validate_point(const Vec& p) const = 0;

  Vec zero_tangent() const { return Vec::Zero(tangent_size()); }
  /// A basis of the admissible tangent space at p, orthonormal in inner(p, ., .).
  virtual std::vector<Vec> tangent_basis(const Vec& p) const;

  virtual Vec random_point(std::mt19937_64& rng) const = 0;
  /// A random admissible tangent vector at p with unit norm.
  Vec random_tangent(const Vec& p, std::mt19937_64& rng) const;

 protected:
  void check_point_size(const Vec& p, const char* what) const;
  void check_tangent_size(const Vec& x, const char* what) const;
};

/// Flat R^n. Exp is addition, transport is the identity, curvature vanishes.
class Euclidean final : public Manifold {
 public:
  explicit Euclidean(Eigen::Index dim);

  ManifoldKind kind() const override { return ManifoldKind::Euclidean; }
  std::string name() const override;
  Eigen::Index point_size() const override { return dim_; }
  Eigen::Index tangent_size() const override { return dim_; }

  Vec exp(const Vec& p, const Vec& v) const override;
  Vec log(const Vec& p, const Vec& q) const override;
  Vec transport(const Vec& p, const Vec& v, const Vec& x) const override;
  Vec curvature(const Vec& p, const Vec& x, const Vec& y,
                const Vec& z) const override;
  double inner(const Vec& p, const Vec& x, const Vec& y) const override;
  double dist(const Vec& p, const Vec& q) const override;

  PointDiagnostics validate_point(const Vec& p) const override;
  Vec random_point(std::mt19937_64& rng) const override;

 private:
  Eigen::Index dim_;
};

Vec gaussian_vector(Eigen::Index n, std::mt19937_64& rng);

}  // namespace polyreg
