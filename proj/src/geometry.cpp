#include "polyreg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace polyreg {

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return "euclidean";
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::SO3: return "so3";
    case ManifoldKind::Kendall: return "kendall";
  }
  return "unknown";
}

ManifoldKind manifold_kind_from_string(const std::string& name) {
  if (name == "euclidean") return ManifoldKind::Euclidean;
  if (name == "sphere") return ManifoldKind::Sphere;
  if (name == "so3") return ManifoldKind::SO3;
  if (name == "kendall") return ManifoldKind::Kendall;
  throw std::invalid_argument("unknown manifold '" + name + "'");
}

bool PointDiagnostics::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const InvariantCheck& c) { return c.passed(); });
}

double PointDiagnostics::max_residual() const {
  double r = 0.0;
  for (const auto& c : checks) r = std::max(r, c.residual);
  return r;
}

double Manifold::dist(const Vec& p, const Vec& q) const {
  return norm(p, log(p, q));
}

double Manifold::norm(const Vec& p, const Vec& x) const {
  return std::sqrt(std::max(0.0, inner(p, x, x)));
}

Vec Manifold::project_tangent(const Vec& /*p*/, const Vec& x) const {
  return x;
}

std::vector<Vec> Manifold::tangent_basis(const Vec& p) const {
  std::vector<Vec> basis;
  const Eigen::Index n = tangent_size();
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec e = Vec::Unit(n, j);
    e = project_tangent(p, e);
    for (const auto& b : basis) e -= inner(p, e, b) * b;
    // second pass for stability
    for (const auto& b : basis) e -= inner(p, e, b) * b;
    const double len = norm(p, e);
    if (len > 1e-8) basis.push_back(e / len);
  }
  return basis;
}

Vec Manifold::random_tangent(const Vec& p, std::mt19937_64& rng) const {
  for (int attempt = 0; attempt < 16; ++attempt) {
    Vec x = project_tangent(p, gaussian_vector(tangent_size(), rng));
    const double len = norm(p, x);
    if (len > 1e-8) return x / len;
  }
  throw GeometryError("random_tangent: tangent space appears to be trivial");
}

void Manifold::check_point_size(const Vec& p, const char* what) const {
  if (p.size() != point_size()) {
    throw GeometryError(std::string(what) + ": point has dimension " +
                        std::to_string(p.size()) + ", expected " +
                        std::to_string(point_size()));
  }
}

void Manifold::check_tangent_size(const Vec& x, const char* what) const {
  if (x.size() != tangent_size()) {
    throw GeometryError(std::string(what) + ": vector has dimension " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(tangent_size()));
  }
}

Vec gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

// ---------------------------------------------------------------------------

Euclidean::Euclidean(Eigen::Index dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("Euclidean: dimension must be >= 1");
}

std::string Euclidean::name() const { return "R^" + std::to_string(dim_); }

Vec Euclidean::exp(const Vec& p, const Vec& v) const {
  check_point_size(p, "euclid_exp");
  check_tangent_size(v, "euclid_exp");
  return p + v;
}

Vec Euclidean::log(const Vec& p, const Vec& q) const {
  check_point_size(p, "euclid_log");
  check_point_size(q, "euclid_log");
  return q - p;
}

Vec Euclidean::transport(const Vec& p, const Vec& v, const Vec& x) const {
  check_point_size(p, "euclid_transport");
  check_tangent_size(v, "euclid_transport");
  check_tangent_size(x, "euclid_transport");
  return x;
}

Vec Euclidean::curvature(const Vec& /*p*/, const Vec& x, const Vec& /*y*/,
                         const Vec& /*z*/) const {
  return Vec::Zero(x.size());
}

double Euclidean::inner(const Vec& /*p*/, const Vec& x, const Vec& y) const {
  return x.dot(y);
}

double Euclidean::dist(const Vec& p, const Vec& q) const {
  return (p - q).norm();
}

PointDiagnostics Euclidean::validate_point(const Vec& p) const {
  PointDiagnostics d;
  d.checks.push_back({"dimension", p.size() == dim_ ? 0.0 : 1.0, 0.0});
  d.checks.push_back({"finite", p.allFinite() ? 0.0 : 1.0, 0.0});
  return d;
}

Vec Euclidean::random_point(std::mt19937_64& rng) const {
  return gaussian_vector(dim_, rng);
}

}  // namespace polyreg
