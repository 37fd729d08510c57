#include "polyreg/so3.hpp"
#include "polyreg/sphere.hpp"
#include "support/holonomy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace polyreg {
namespace {

using so3::Matrix3;
using so3::Vector3;

const Vector3 e1 = Vector3::UnitX();
const Vector3 e2 = Vector3::UnitY();
const Vector3 e3 = Vector3::UnitZ();

so3::MetricSpec diag123() { return so3::MetricSpec(Vector3(1.0, 2.0, 3.0).asDiagonal()); }

Vector3 random_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return {n(rng), n(rng), n(rng)};
}

so3::MetricSpec random_metric(std::mt19937_64& rng) {
  Matrix3 b;
  for (int i = 0; i < 3; ++i) b.col(i) = random_vector(rng);
  Matrix3 a = b * b.transpose() + 0.5 * Matrix3::Identity();
  return so3::MetricSpec(0.5 * (a + a.transpose()));
}

void expect_near(const Vector3& a, const Vector3& b, double tol) {
  EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), tol) << a.transpose() << " vs " << b.transpose();
}

TEST(SO3Hat, MatchesCrossProduct) {
  Matrix3 expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_EQ(so3::hat(e1), expected);
  const Vector3 x(0.3, -1.2, 2.0);
  EXPECT_EQ(so3::hat(x) * x, Vector3::Zero());
  EXPECT_EQ(so3::vee(so3::hat(Vector3(1.5, -2.5, 3.5))), Vector3(1.5, -2.5, 3.5));
}

TEST(SO3Hat, VeeRejectsNonSkew) {
  Matrix3 w = so3::hat(e2);
  w(0, 1) += 1e-3;
  EXPECT_THROW(so3::vee(w), GeometryError);
}

TEST(SO3Metric, RejectsInvalidMatrices) {
  Matrix3 asym = Matrix3::Identity();
  asym(0, 1) = 0.1;
  EXPECT_THROW(so3::MetricSpec{asym}, std::invalid_argument);
  EXPECT_THROW(so3::MetricSpec{Matrix3(Vector3(1.0, -1.0, 2.0).asDiagonal())},
               std::invalid_argument);
  EXPECT_TRUE(so3::MetricSpec().bi_invariant());
  EXPECT_FALSE(diag123().bi_invariant());
}

TEST(SO3AdDagger, Examples) {
  const so3::MetricSpec identity;
  expect_near(so3::ad_dagger(e1, e2, identity), -e3, 0.0);
  EXPECT_EQ(so3::ad_dagger(Vector3(1, 2, 3), Vector3(1, 2, 3), identity), Vector3::Zero());
  expect_near(so3::ad_dagger(e1, e2, diag123()), Vector3(0, 0, -2.0 / 3.0), 1e-15);
}

TEST(SO3AdDagger, IsMetricAdjointOfBracket) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto metric = random_metric(rng);
    const Vector3 x = random_vector(rng), y = random_vector(rng), z = random_vector(rng);
    EXPECT_NEAR(metric.inner(x.cross(y), z), metric.inner(y, so3::ad_dagger(x, z, metric)),
                1e-12);
  }
}

TEST(SO3GeodesicRhs, Examples) {
  std::mt19937_64 rng(32);
  expect_near(so3::geodesic_rhs(random_vector(rng), so3::MetricSpec()), Vector3::Zero(), 1e-15);
  expect_near(so3::geodesic_rhs(e1, diag123()), Vector3::Zero(), 0.0);
  expect_near(so3::geodesic_rhs(Vector3(1, 1, 0), diag123()), Vector3(0, 0, -1.0 / 3.0), 1e-15);
}

TEST(SO3Exp, ZeroVelocityKeepsRotation) {
  const Matrix3 r = so3::expm(Vector3(0.1, 0.2, 0.3));
  EXPECT_EQ(so3::integrate_geodesic(r, Vector3::Zero(), 1.0, 0.01, diag123()), r);
  SO3 g(diag123());
  EXPECT_EQ(g.exp(so3::to_flat(r), Vec::Zero(3)), so3::to_flat(r));
}

TEST(SO3Exp, QuarterTurnAboutZ) {
  Matrix3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Matrix3 stepped =
      so3::integrate_geodesic(Matrix3::Identity(), Vector3(0, 0, M_PI / 2), 1.0, 1e-3,
                              so3::MetricSpec());
  EXPECT_LT((stepped - expected).norm(), 1e-12);
  SO3 g;
  EXPECT_LT((so3::to_matrix(g.exp(so3::to_flat(Matrix3::Identity()), Vector3(0, 0, M_PI / 2))) -
             expected)
                .norm(),
            1e-15);
}

TEST(SO3Exp, AnisotropicMatchesFineReference) {
  const Vector3 w(1, 1, 1);
  const Matrix3 reference =
      so3::integrate_geodesic(Matrix3::Identity(), w, 1.0, 1e-6, diag123());
  SO3 g(diag123());
  const Matrix3 rk4 = so3::to_matrix(g.exp(so3::to_flat(Matrix3::Identity()), w));
  EXPECT_LT((rk4 - reference).norm(), 1e-5);
  // The Lie-Euler integrator converges to the same curve at first order.
  const Matrix3 coarse = so3::integrate_geodesic(Matrix3::Identity(), w, 1.0, 1e-3, diag123());
  const Matrix3 medium = so3::integrate_geodesic(Matrix3::Identity(), w, 1.0, 1e-4, diag123());
  const double e_coarse = (coarse - reference).norm();
  const double e_medium = (medium - reference).norm();
  EXPECT_NEAR(std::log10(e_coarse / e_medium), 1.0, 0.1);
}

TEST(SO3Exp, KineticEnergyIsConserved) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const auto metric = random_metric(rng);
    const Vector3 w0 = random_vector(rng);
    const double energy = metric.inner(w0, w0);
    for (const Vector3& w : so3::integrate_euler_poincare(w0, 1.0, 1e-4, metric)) {
      EXPECT_NEAR(metric.inner(w, w), energy, 1e-6 * std::max(1.0, energy));
    }
  }
}

TEST(SO3Exp, StaysInTheGroup) {
  std::mt19937_64 rng(34);
  SO3 g(diag123());
  for (int trial = 0; trial < 10; ++trial) {
    const Vec p = g.random_point(rng);
    const Vec q = g.exp(p, 3.0 * random_vector(rng));
    EXPECT_TRUE(g.validate_point(q).passed());
  }
}

TEST(SO3TransportRhs, Examples) {
  const so3::MetricSpec identity;
  const Vector3 w(0.4, -1.1, 0.7);
  expect_near(so3::transport_rhs(w, w, identity), Vector3::Zero(), 1e-15);
  expect_near(so3::transport_rhs(e1, e3, identity), -0.5 * e2, 1e-15);
}

TEST(SO3TransportRhs, PreservesInnerProductsPointwise) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const auto metric = random_metric(rng);
    const Vector3 w = random_vector(rng), x = random_vector(rng), y = random_vector(rng);
    const double rate = metric.inner(so3::transport_rhs(x, w, metric), y) +
                        metric.inner(x, so3::transport_rhs(y, w, metric));
    EXPECT_NEAR(rate, 0.0, 1e-12);
  }
}

TEST(SO3Transport, ReversingTheGeodesicReturnsTheVector) {
  std::mt19937_64 rng(36);
  SO3 g(diag123());
  for (int trial = 0; trial < 10; ++trial) {
    const Vec p = g.random_point(rng);
    const Vec v = random_vector(rng);
    const Vec x = random_vector(rng);
    const Vec q = g.exp(p, v);
    const Vec there = g.transport(p, v, x);
    const Vec back = g.transport(q, -g.transport(p, v, v), there);
    EXPECT_LT((back - x).norm(), 1e-5);
  }
}

TEST(SO3Transport, BiInvariantClosedForm) {
  std::mt19937_64 rng(37);
  SO3 g;
  const Vec p = g.random_point(rng);
  const Vector3 v = random_vector(rng);
  const Vector3 x = random_vector(rng);
  expect_near(g.transport(p, v, x), so3::expm(-0.5 * v) * x, 1e-14);
}

TEST(SO3Curvature, BiInvariantExamples) {
  const so3::MetricSpec identity;
  expect_near(so3::curvature(e1, e2, e3, identity), Vector3::Zero(), 1e-15);
  expect_near(so3::curvature(e1, e2, e1, identity), Vector3(0, -0.25, 0), 1e-15);
}

TEST(SO3Curvature, BiInvariantMatchesDoubleBracket) {
  std::mt19937_64 rng(38);
  const so3::MetricSpec identity;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector3 x = random_vector(rng), y = random_vector(rng), z = random_vector(rng);
    expect_near(so3::curvature(x, y, z, identity), 0.25 * z.cross(x.cross(y)), 1e-12);
  }
}

// Covariant derivative of left-invariant fields expanded in cross products.
Vector3 expanded_second_derivative(const Vector3& x, const Vector3& y, const Vector3& z,
                                   const so3::MetricSpec& metric, bool nested_first_term) {
  const Matrix3& a = metric.a();
  const Matrix3& ai = metric.a_inverse();
  const Vector3 first = nested_first_term ? Vector3(x.cross(y.cross(z)))
                                          : Vector3(x.cross(y).cross(z));
  const Vector3 zy = ai * z.cross(a * y);
  const Vector3 yz = ai * y.cross(a * z);
  return 0.25 * (first + x.cross(zy) + x.cross(yz) + ai * (y.cross(z)).cross(a * x) +
                 ai * zy.cross(a * x) + ai * yz.cross(a * x) + ai * x.cross(a * y.cross(z)) +
                 ai * x.cross(z.cross(a * y)) + ai * x.cross(y.cross(a * z)));
}

Vector3 expanded_bracket_derivative(const Vector3& x, const Vector3& y, const Vector3& z,
                                    const so3::MetricSpec& metric) {
  const Matrix3& a = metric.a();
  const Matrix3& ai = metric.a_inverse();
  const Vector3 b = x.cross(y);
  return 0.5 * (b.cross(z) + ai * z.cross(a * b) + ai * b.cross(a * z));
}

Vector3 expanded_curvature(const Vector3& x, const Vector3& y, const Vector3& z,
                           const so3::MetricSpec& metric, bool nested_first_term) {
  return expanded_second_derivative(x, y, z, metric, nested_first_term) -
         expanded_second_derivative(y, x, z, metric, nested_first_term) -
         expanded_bracket_derivative(x, y, z, metric);
}

TEST(SO3Curvature, AgreesWithCrossProductExpansion) {
  std::mt19937_64 rng(39);
  for (int trial = 0; trial < 20; ++trial) {
    const auto metric = random_metric(rng);
    const Vector3 x = random_vector(rng), y = random_vector(rng), z = random_vector(rng);
    expect_near(so3::curvature(x, y, z, metric), expanded_curvature(x, y, z, metric, true),
                1e-12);
  }
}

TEST(SO3Curvature, UnnestedLeadingTermIsNotTheCurvature) {
  // Writing the leading term as [[x, y], z] instead of [x, [y, z]] changes
  // the tensor whenever the metric is not bi-invariant.
  std::mt19937_64 rng(40);
  const auto metric = random_metric(rng);
  const Vector3 x = random_vector(rng), y = random_vector(rng), z = random_vector(rng);
  const Vector3 wrong = expanded_curvature(x, y, z, metric, false);
  EXPECT_GT((wrong - so3::curvature(x, y, z, metric)).norm(), 1e-2);
}

TEST(SO3Curvature, SymmetriesForGeneralMetric) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto metric = random_metric(rng);
    const Vector3 x = random_vector(rng), y = random_vector(rng), z = random_vector(rng),
                  w = random_vector(rng);
    const auto r4 = [&](const Vector3& a, const Vector3& b, const Vector3& c, const Vector3& d) {
      return metric.inner(so3::curvature(a, b, c, metric), d);
    };
    EXPECT_NEAR(r4(x, y, z, w), -r4(y, x, z, w), 1e-8);
    EXPECT_NEAR(r4(x, y, z, w), r4(z, w, x, y), 1e-8);
  }
}

TEST(SO3Curvature, MatchesHolonomyOnTheSphere) {
  // Calibrates the holonomy oracle on a space with known curvature.
  Sphere s(2);
  const Vec p = Eigen::Vector3d(0, 0, 1);
  const Vec x = Eigen::Vector3d(1, 0, 0), y = Eigen::Vector3d(0.3, 1, 0),
            z = Eigen::Vector3d(-0.5, 0.8, 0);
  const Vec defect = testing::holonomy_defect(s, p, x, y, z, 1e-4);
  EXPECT_LT((defect + s.curvature(p, x, y, z)).norm(), 1e-3);
}

TEST(SO3Curvature, MatchesHolonomyForAnisotropicMetric) {
  std::mt19937_64 rng(42);
  SO3 g(diag123());
  for (int trial = 0; trial < 3; ++trial) {
    const Vec p = g.random_point(rng);
    const Vec x = random_vector(rng), y = random_vector(rng), z = random_vector(rng);
    const Vec defect = testing::holonomy_defect(g, p, x, y, z, 1e-4);
    const Vec r = g.curvature(p, x, y, z);
    EXPECT_LT((defect + r).norm(), 1e-3 * std::max(1.0, r.norm())) << "trial " << trial;
  }
}

TEST(SO3Log, InvertsExpForAnisotropicMetric) {
  std::mt19937_64 rng(43);
  SO3 g(diag123());
  for (int trial = 0; trial < 10; ++trial) {
    const Vec p = g.random_point(rng);
    const Vec v = 0.8 * random_vector(rng).normalized();
    EXPECT_LT((g.log(p, g.exp(p, v)) - v).norm(), 1e-8);
  }
}

TEST(SO3Log, RejectsHalfTurnForBiInvariantMetric) {
  SO3 g;
  const Vec p = so3::to_flat(Matrix3::Identity());
  const Vec q = so3::to_flat(so3::expm(Vector3(M_PI, 0, 0)));
  EXPECT_THROW(g.log(p, q), CutLocusError);
}

TEST(SO3Point, ProjectionRestoresOrthogonality) {
  SO3 g;
  Matrix3 r = so3::expm(Vector3(0.3, -0.2, 1.0));
  r(0, 0) += 1e-4;
  const Vec fixed = g.project_point(so3::to_flat(r));
  EXPECT_TRUE(g.validate_point(fixed).passed());
}

}  // namespace
}  // namespace polyreg
