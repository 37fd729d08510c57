#include "polyreg/geometry.hpp"
#include "polyreg/kendall.hpp"
#include "polyreg/so3.hpp"
#include "polyreg/sphere.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

namespace polyreg {
namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(Euclidean, ExpOfZeroIsIdentity) {
  Euclidean e(2);
  EXPECT_EQ(e.exp(vec({1, 2}), vec({0, 0})), vec({1, 2}));
}

TEST(Euclidean, ExpIsAddition) {
  Euclidean e(2);
  EXPECT_EQ(e.exp(vec({0, 0}), vec({3, 4})), vec({3, 4}));
  EXPECT_EQ(e.log(vec({1, 1}), vec({4, 5})), vec({3, 4}));
  EXPECT_DOUBLE_EQ(e.dist(vec({0, 0}), vec({3, 4})), 5.0);
}

TEST(Euclidean, TransportIsIdentityAndCurvatureVanishes) {
  Euclidean e(2);
  EXPECT_EQ(e.transport(vec({0, 0}), vec({7, -3}), vec({1, 0})), vec({1, 0}));
  EXPECT_EQ(e.curvature(vec({0, 0}), vec({1, 2}), vec({3, 4}), vec({5, 6})), vec({0, 0}));
}

TEST(Euclidean, DimensionMismatchThrows) {
  Euclidean e(2);
  EXPECT_THROW(e.exp(vec({0, 0}), vec({1, 2, 3})), GeometryError);
  EXPECT_THROW(e.log(vec({0, 0, 0}), vec({1, 2})), GeometryError);
}

TEST(ValidatePoint, SphereUnitNormPasses) {
  Sphere s(2);
  EXPECT_TRUE(s.validate_point(vec({0, 0, 1})).passed());
}

TEST(ValidatePoint, SphereReportsNormResidual) {
  Sphere s(2);
  const PointDiagnostics d = s.validate_point(vec({1.1, 0, 0}));
  EXPECT_FALSE(d.passed());
  EXPECT_NEAR(d.max_residual(), 0.1, 1e-12);
}

TEST(ValidatePoint, KendallFlagsCentering) {
  KendallShapeSpace k(3, 2);
  // Rows (x, y): centroid (1e-3, 0), unit norm.
  Vec p = vec({1.0, 0.0, -0.5, 0.5, -0.5 + 3e-3, -0.5});
  p /= p.norm();
  const PointDiagnostics d = k.validate_point(p);
  EXPECT_FALSE(d.passed());
  bool centering_failed = false;
  for (const auto& c : d.checks) {
    if (c.name == "centering") centering_failed = !c.passed();
  }
  EXPECT_TRUE(centering_failed);
}

TEST(ValidatePoint, SO3DetectsReflection) {
  SO3 g;
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  r(2, 2) = -1.0;
  EXPECT_FALSE(g.validate_point(so3::to_flat(r)).passed());
  EXPECT_TRUE(g.validate_point(so3::to_flat(Eigen::Matrix3d::Identity())).passed());
}

TEST(ManifoldKind, NamesRoundTrip) {
  for (auto kind : {ManifoldKind::Euclidean, ManifoldKind::Sphere, ManifoldKind::SO3,
                    ManifoldKind::Kendall}) {
    EXPECT_EQ(manifold_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_THROW(manifold_kind_from_string("torus"), std::invalid_argument);
}

// Contract properties shared by every geometry.

struct ContractCase {
  std::string label;
  std::function<std::unique_ptr<Manifold>()> make;
  double max_radius;  // half the injectivity radius
};

class Contract : public ::testing::TestWithParam<ContractCase> {};

TEST_P(Contract, ExpOfZeroAndLogOfSelfAreExact) {
  const auto m = GetParam().make();
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec p = m->random_point(rng);
    EXPECT_EQ(m->exp(p, m->zero_tangent()), p);
    EXPECT_EQ(m->log(p, p), m->zero_tangent());
  }
}

TEST_P(Contract, LogInvertsExp) {
  const auto m = GetParam().make();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> radius(0.01, GetParam().max_radius);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec p = m->random_point(rng);
    const Vec v = radius(rng) * m->random_tangent(p, rng);
    const Vec q = m->exp(p, v);
    EXPECT_TRUE(m->validate_point(q).passed());
    EXPECT_LT((m->log(p, q) - v).norm(), 1e-6) << "trial " << trial;
  }
}

TEST_P(Contract, DistanceIsSymmetric) {
  const auto m = GetParam().make();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> radius(0.01, GetParam().max_radius);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec p = m->random_point(rng);
    const Vec q = m->exp(p, radius(rng) * m->random_tangent(p, rng));
    EXPECT_NEAR(m->dist(p, q), m->dist(q, p), 1e-9);
  }
}

TEST_P(Contract, TransportIsAnIsometry) {
  const auto m = GetParam().make();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> radius(0.01, GetParam().max_radius);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec p = m->random_point(rng);
    const Vec v = radius(rng) * m->random_tangent(p, rng);
    const Vec x = m->random_tangent(p, rng);
    const Vec y = m->random_tangent(p, rng);
    const Vec q = m->exp(p, v);
    const Vec tx = m->transport(p, v, x);
    const Vec ty = m->transport(p, v, y);
    EXPECT_NEAR(m->inner(q, tx, ty), m->inner(p, x, y), 1e-6);
    EXPECT_NEAR(m->inner(q, tx, tx), m->inner(p, x, x), 1e-6);
  }
}

TEST_P(Contract, TransportedVelocityIsVelocityAtEndpoint) {
  const auto m = GetParam().make();
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> radius(0.05, GetParam().max_radius);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec p = m->random_point(rng);
    const Vec v = radius(rng) * m->random_tangent(p, rng);
    const Vec q = m->exp(p, v);
    // Along a geodesic the velocity is parallel; going back from q reaches p.
    const Vec back = -m->transport(p, v, v);
    EXPECT_LT((m->log(q, p) - back).norm(), 1e-6) << "trial " << trial;
  }
}

TEST_P(Contract, CurvatureSymmetries) {
  const auto m = GetParam().make();
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec p = m->random_point(rng);
    const Vec x = m->random_tangent(p, rng);
    const Vec y = m->random_tangent(p, rng);
    const Vec z = m->random_tangent(p, rng);
    const Vec w = m->random_tangent(p, rng);
    const auto r4 = [&](const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
      return m->inner(p, m->curvature(p, a, b, c), d);
    };
    EXPECT_NEAR(r4(x, y, z, w), -r4(y, x, z, w), 1e-8);
    // Pairing symmetry <R(X,Y)Z, W> = <R(Z,W)X, Y>.
    EXPECT_NEAR(r4(x, y, z, w), r4(z, w, x, y), 1e-8);
    EXPECT_NEAR(r4(x, y, z, w), -r4(x, y, w, z), 1e-8);
    // First Bianchi identity.
    const Vec bianchi = m->curvature(p, x, y, z) + m->curvature(p, y, z, x) +
                        m->curvature(p, z, x, y);
    EXPECT_LT(bianchi.norm(), 1e-8);
  }
}

TEST_P(Contract, TangentBasisIsOrthonormal) {
  const auto m = GetParam().make();
  std::mt19937_64 rng(707);
  const Vec p = m->random_point(rng);
  const auto basis = m->tangent_basis(p);
  ASSERT_FALSE(basis.empty());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      EXPECT_NEAR(m->inner(p, basis[i], basis[j]), i == j ? 1.0 : 0.0, 1e-10);
    }
  }
}

Eigen::Matrix3d diag123() { return Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal(); }

INSTANTIATE_TEST_SUITE_P(
    AllManifolds, Contract,
    ::testing::Values(
        ContractCase{"Euclidean", [] { return std::make_unique<Euclidean>(3); }, 5.0},
        ContractCase{"Sphere2", [] { return std::make_unique<Sphere>(2); }, M_PI / 2},
        ContractCase{"Sphere5", [] { return std::make_unique<Sphere>(5); }, M_PI / 2},
        ContractCase{"SO3BiInvariant", [] { return std::make_unique<SO3>(); }, M_PI / 2},
        ContractCase{"SO3Anisotropic",
                     [] { return std::make_unique<SO3>(so3::MetricSpec(diag123())); }, 0.5},
        ContractCase{"KendallTriangle",
                     [] { return std::make_unique<KendallShapeSpace>(3, 2); }, M_PI / 4},
        ContractCase{"KendallPlanar",
                     [] { return std::make_unique<KendallShapeSpace>(6, 2); }, M_PI / 4},
        // For d = 3 horizontal geodesics can stop minimizing well before pi/2.
        ContractCase{"KendallSpatial",
                     [] { return std::make_unique<KendallShapeSpace>(5, 3); }, 0.4}),
    [](const ::testing::TestParamInfo<ContractCase>& info) { return info.param.label; });

}  // namespace
}  // namespace polyreg
