#include "support.hpp"

#include "esi/basis.hpp"
#include "esi/errors.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace esi;
using esi::test::bare_model;

namespace {

TriMesh two_spheres(int subdiv) {
  const auto a = make_icosphere(subdiv, 10.0);
  return merge_meshes(transform_mesh(a, Eigen::Matrix3d::Identity(), {-30, 0, 0}),
                      transform_mesh(a, Eigen::Matrix3d::Identity(), {30, 0, 0}));
}

double column_match(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::min((a - b).cwiseAbs().maxCoeff(), (a + b).cwiseAbs().maxCoeff());
}

void expect_full_rank(const BasisSet& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b.functions());
  const auto sv = svd.singularValues();
  EXPECT_GT(sv[sv.size() - 1], 1e-10 * sv[0]);
}

}  // namespace

TEST(GbfBasis, SingleModeIsConstant) {
  const auto b = gbf_basis(make_icosphere(2), 1);
  ASSERT_EQ(b.size(), 1);
  EXPECT_NEAR(b.weights()[0], 0.0, 1e-9);
  const Eigen::VectorXd c = b.functions().col(0);
  EXPECT_NEAR(c.maxCoeff() - c.minCoeff(), 0.0, 1e-9);
  EXPECT_EQ(b.family(), BasisFamily::GBF);
}

TEST(GbfBasis, SphereWeightsFollowDegreePattern) {
  const auto b = gbf_basis(make_icosphere(3, 1.0), 16);
  int k = 0;
  for (int l = 0; l <= 3; ++l) {
    for (int m = 0; m < 2 * l + 1; ++m, ++k) {
      const double expected = l * (l + 1.0);
      if (l == 0) {
        EXPECT_NEAR(b.weights()[k], 0.0, 1e-9);
      } else {
        EXPECT_NEAR(b.weights()[k], expected, 0.02 * expected);
      }
    }
  }
}

TEST(GbfBasis, PerHemisphereBlocks) {
  const auto mesh = two_spheres(2);
  const auto b = gbf_basis(mesh, 10, true);
  ASSERT_EQ(b.size(), 20);
  for (int c = 0; c < b.size(); ++c) {
    int left = 0, right = 0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      if (b.functions()(i, c) != 0.0) (mesh.component_of(i) == 0 ? left : right)++;
    }
    EXPECT_TRUE((left > 0) != (right > 0)) << "column " << c;
  }
  for (int c = 1; c < b.size(); ++c) EXPECT_LE(b.weights()[c - 1], b.weights()[c]);
  expect_full_rank(b);
}

TEST(GbfBasis, JointModeUsesWholeMesh) {
  const auto b = gbf_basis(two_spheres(1), 10, false);
  EXPECT_EQ(b.size(), 10);
}

TEST(GbfBasis, Deterministic) {
  const auto mesh = make_icosphere(3);
  const auto a = gbf_basis(mesh, 30);
  const auto b = gbf_basis(mesh, 30);
  EXPECT_EQ(a.functions(), b.functions());
  EXPECT_EQ(a.mesh_fingerprint(), mesh.fingerprint());
}

TEST(GbfBasis, CountAboveComponentSizeIsDimensionError) {
  EXPECT_THROW(gbf_basis(two_spheres(0), 13, true), DimensionError);
}

TEST(SphericalHarmonics, DegreeZeroIsConstant) {
  const double y00 = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  EXPECT_NEAR(real_spherical_harmonic(0, 0, {0, 0, 1}), y00, 1e-15);
  const auto mesh = make_icosphere(2, 5.0);
  const auto b = harmonic_basis(mesh, 0);
  ASSERT_EQ(b.size(), 1);
  for (int i = 0; i < mesh.vertex_count(); ++i) EXPECT_NEAR(b.functions()(i, 0), y00, 1e-14);
}

TEST(SphericalHarmonics, LowDegreeClosedForms) {
  const Eigen::Vector3d d = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  const double pi = std::numbers::pi;
  const double c1 = std::sqrt(3.0 / (4.0 * pi));
  EXPECT_NEAR(real_spherical_harmonic(1, -1, d), c1 * d.y(), 1e-14);
  EXPECT_NEAR(real_spherical_harmonic(1, 0, d), c1 * d.z(), 1e-14);
  EXPECT_NEAR(real_spherical_harmonic(1, 1, d), c1 * d.x(), 1e-14);
  EXPECT_NEAR(real_spherical_harmonic(2, 0, d),
              std::sqrt(5.0 / (16.0 * pi)) * (3 * d.z() * d.z() - 1), 1e-14);
  EXPECT_NEAR(real_spherical_harmonic(2, 2, d),
              std::sqrt(15.0 / (16.0 * pi)) * (d.x() * d.x() - d.y() * d.y()), 1e-14);
  const auto all = real_spherical_harmonics(2, d);
  EXPECT_NEAR(all[2 * 2 + 2 + 1], real_spherical_harmonic(2, 1, d), 1e-15);
}

TEST(HarmonicBasis, DegreeSixGivesFortyNinePerHemisphere) {
  EXPECT_EQ(harmonic_basis(make_icosphere(3), 6).size(), 49);
  const auto two = two_spheres(3);
  const auto b = harmonic_basis(two, 6, true);
  EXPECT_EQ(b.size(), 98);
  EXPECT_EQ(harmonic_basis(two, 6, false).size(), 49);
  for (int c = 1; c < b.size(); ++c) EXPECT_LE(b.weights()[c - 1], b.weights()[c]);
}

TEST(HarmonicBasis, NearOrthogonalOnUnitSphere) {
  const auto mesh = make_icosphere(4, 1.0);
  const auto b = harmonic_basis(mesh, 4);
  const Eigen::MatrixXd g = b.functions().transpose() * b.functions() / mesh.vertex_count();
  const double diag = 1.0 / (4.0 * std::numbers::pi);
  for (int i = 0; i < g.rows(); ++i) {
    EXPECT_NEAR(g(i, i), diag, 0.05 * diag);
    for (int j = 0; j < g.cols(); ++j) {
      if (i != j) EXPECT_LT(std::abs(g(i, j)), 0.05 * g(i, i)) << i << "," << j;
    }
  }
  expect_full_rank(b);
}

TEST(HarmonicBasis, VertexAtCentroidIsGeometryError) {
  // A flat fan whose centre vertex sits at the vertex centroid.
  TriMesh::Vertices v(5, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1, 0;
  TriMesh::Faces f(4, 3);
  f << 0, 1, 2, 0, 2, 3, 0, 3, 4, 0, 4, 1;
  EXPECT_THROW(harmonic_basis(TriMesh(v, f), 1), GeometryError);
}

TEST(MspBasis, IdentityLeadField) {
  const int n = 6;
  const auto fm = bare_model(Eigen::MatrixXd::Identity(n, n));
  const auto b = msp_basis(fm, Eigen::MatrixXd::Identity(n, n), n);
  // Columns are signed unit vectors: A^T A = I and each column has one nonzero.
  EXPECT_LE((b.functions().transpose() * b.functions() - Eigen::MatrixXd::Identity(n, n))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  for (int c = 0; c < n; ++c) EXPECT_NEAR(b.functions().col(c).cwiseAbs().maxCoeff(), 1.0, 1e-12);
  const auto w = msp_basis(fm, Eigen::MatrixXd::Identity(n, n), n,
                           {MspWeighting::InverseSvSquared, 0});
  for (int c = 0; c < n; ++c) EXPECT_NEAR(w.weights()[c], 1.0, 1e-12);
}

TEST(MspBasis, ScalarCovarianceLeavesSubspaceUnchanged) {
  std::mt19937_64 rng(3);
  const auto fm = bare_model(esi::test::random_matrix(5, 8, rng));
  const auto a = msp_basis(fm, Eigen::MatrixXd::Identity(5, 5), 4);
  const auto b = msp_basis(fm, 4.0 * Eigen::MatrixXd::Identity(5, 5), 4);
  for (int c = 0; c < 4; ++c) {
    EXPECT_LE(column_match(a.functions().col(c), b.functions().col(c)), 1e-10);
  }
}

TEST(MspBasis, RecoversConstructedRightSingularVectors) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd u = esi::test::random_orthogonal(5, rng);
  const Eigen::MatrixXd v = esi::test::random_orthogonal(8, rng);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(5, 8);
  const double sv[] = {9.0, 5.0, 3.0, 2.0, 0.5};
  for (int i = 0; i < 5; ++i) sigma(i, i) = sv[i];
  const auto fm = bare_model(u * sigma * v.transpose());
  const auto b = msp_basis(fm, Eigen::MatrixXd::Identity(5, 5), 5,
                           {MspWeighting::InverseSvSquared, 0});
  for (int c = 0; c < 5; ++c) {
    EXPECT_LE(column_match(b.functions().col(c), v.col(c)), 1e-9) << "column " << c;
    EXPECT_NEAR(b.weights()[c], (sv[0] * sv[0]) / (sv[c] * sv[c]), 1e-9 * b.weights()[c]);
  }
  EXPECT_NEAR(b.weights().minCoeff(), 1.0, 1e-12);
}

TEST(MspBasis, NonSpdCovarianceIsLinAlgError) {
  const auto fm = bare_model(Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
  c(2, 2) = -1.0;
  EXPECT_THROW(msp_basis(fm, c, 2), LinAlgError);
}

TEST(MspBasis, CountAboveRankBoundIsDimensionError) {
  const auto fm = bare_model(Eigen::MatrixXd::Ones(3, 5));
  EXPECT_THROW(msp_basis(fm, Eigen::MatrixXd::Identity(3, 3), 4), DimensionError);
}

TEST(BasisSet, InvariantsAreEnforced) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 2);
  EXPECT_NO_THROW(BasisSet(BasisFamily::GBF, a, Eigen::Vector2d(0, 1), 0));
  EXPECT_THROW(BasisSet(BasisFamily::GBF, a, Eigen::Vector2d(1, 0), 0), ValidationError);
  EXPECT_THROW(BasisSet(BasisFamily::GBF, a, Eigen::Vector3d(0, 1, 2), 0), ShapeError);
  EXPECT_THROW(BasisSet(BasisFamily::MSP, a, Eigen::Vector2d(-1, 1), 0), ValidationError);
  a.col(1).setZero();
  EXPECT_THROW(BasisSet(BasisFamily::MSP, a, Eigen::Vector2d(1, 1), 0), DegenerateError);
  EXPECT_THROW(BasisSet(BasisFamily::MSP, Eigen::MatrixXd::Identity(2, 3), Eigen::Vector3d(1, 1, 1), 0),
               ShapeError);
}

TEST(BasisSet, SaveLoadRoundTrip) {
  esi::test::TempDir dir;
  const auto mesh = make_icosphere(2);
  const auto b = gbf_basis(mesh, 12);
  for (auto fmt : {io::MatrixFormat::Csv, io::MatrixFormat::Bin}) {
    const auto sub = dir / (fmt == io::MatrixFormat::Csv ? "csv" : "bin");
    save_basis(sub, b, fmt);
    const auto back = load_basis(sub);
    EXPECT_EQ(back.family(), BasisFamily::GBF);
    EXPECT_EQ(back.functions(), b.functions());
    EXPECT_EQ(back.weights(), b.weights());
    EXPECT_EQ(back.mesh_fingerprint(), mesh.fingerprint());
  }
}
