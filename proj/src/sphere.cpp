#include "polyreg/sphere.hpp"

#include <algorithm>
#include <cmath>

namespace polyreg {
namespace sphere {

namespace {

void check_tangent(const Vec& p, const Vec& v, const char* what) {
  const double residual = std::abs(p.dot(v));
  if (residual > kTangencyTolerance * std::max(1.0, v.norm())) {
    throw GeometryError(std::string(what) + ": vector is not tangent (|p.v| = " +
                        std::to_string(residual) + ")");
  }
}

}  // namespace

Vec exp(const Vec& p, const Vec& v) {
  check_tangent(p, v, "sphere_exp");
  const Vec vt = v - p.dot(v) * p;
  const double theta = vt.norm();
  if (theta == 0.0) return p;
  Vec q;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    q = (1.0 - 0.5 * t2) * p + (1.0 - t2 / 6.0) * vt;
  } else {
    q = std::cos(theta) * p + (std::sin(theta) / theta) * vt;
  }
  return q / q.norm();
}

Vec log(const Vec& p, const Vec& q) {
  if (p == q) return Vec::Zero(p.size());
  const double c = std::clamp(p.dot(q), -1.0, 1.0);
  if (c <= -1.0 + kAntipodalMargin) {
    throw CutLocusError("sphere_log: points are antipodal (p.q = " +
                        std::to_string(c) + ")");
  }
  const Vec u = q - c * p;
  const double s = u.norm();
  if (s == 0.0) return Vec::Zero(p.size());
  const double theta = std::atan2(s, c);
  const double factor = s < kSmallAngle ? 1.0 + s * s / 6.0 : theta / s;
  return factor * u;
}

Vec transport(const Vec& p, const Vec& v, const Vec& x) {
  const Vec vt = v - p.dot(v) * p;
  const Vec xt = x - p.dot(x) * p;
  const double theta = vt.norm();
  if (theta == 0.0) return xt;
  const Vec u = vt / theta;
  const double along = u.dot(xt);
  return xt - along * u + along * (-std::sin(theta) * p + std::cos(theta) * u);
}

Vec curvature(const Vec& x, const Vec& y, const Vec& z) {
  return y.dot(z) * x - x.dot(z) * y;
}

}  // namespace sphere

Sphere::Sphere(Eigen::Index n) : n_(n) {
  if (n < 1) throw std::invalid_argument("Sphere: dimension must be >= 1");
}

std::string Sphere::name() const { return "S^" + std::to_string(n_); }

Vec Sphere::exp(const Vec& p, const Vec& v) const {
  check_point_size(p, "sphere_exp");
  check_tangent_size(v, "sphere_exp");
  return sphere::exp(p, v);
}

Vec Sphere::log(const Vec& p, const Vec& q) const {
  check_point_size(p, "sphere_log");
  check_point_size(q, "sphere_log");
  return sphere::log(p, q);
}

Vec Sphere::transport(const Vec& p, const Vec& v, const Vec& x) const {
  check_point_size(p, "sphere_transport");
  check_tangent_size(v, "sphere_transport");
  check_tangent_size(x, "sphere_transport");
  return sphere::transport(p, v, x);
}

Vec Sphere::curvature(const Vec& p, const Vec& x, const Vec& y,
                      const Vec& z) const {
  const auto tangent = [&](const Vec& a) {
    if (std::abs(p.dot(a)) > sphere::kTangencyTolerance * std::max(1.0, a.norm()))
      throw GeometryError("sphere_curvature: input is not tangent");
  };
  tangent(x);
  tangent(y);
  tangent(z);
  return sphere::curvature(x, y, z);
}

double Sphere::inner(const Vec& /*p*/, const Vec& x, const Vec& y) const {
  return x.dot(y);
}

Vec Sphere::project_point(const Vec& p) const { return p / p.norm(); }

Vec Sphere::project_tangent(const Vec& p, const Vec& x) const {
  return x - p.dot(x) * p;
}

PointDiagnostics Sphere::validate_point(const Vec& p) const {
  PointDiagnostics d;
  if (p.size() != point_size()) {
    d.checks.push_back({"dimension", 1.0, 0.0});
    return d;
  }
  d.checks.push_back({"unit norm", std::abs(p.norm() - 1.0), tolerance::kSphere});
  return d;
}

Vec Sphere::random_point(std::mt19937_64& rng) const {
  Vec p = gaussian_vector(n_ + 1, rng);
  return p / p.norm();
}

}  // namespace polyreg
