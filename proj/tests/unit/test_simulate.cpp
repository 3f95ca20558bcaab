#include "support.hpp"

#include "esi/errors.hpp"
#include "esi/matrix_io.hpp"
#include "esi/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace esi;

TEST(PatchSource, CentreAndHalfMaximum) {
  const auto mesh = make_icosphere(3, 75.0);
  const auto s = patch_source(mesh, 10, 30.0, 2.5);
  EXPECT_DOUBLE_EQ(s.values[10], 2.5);
  EXPECT_EQ(s.provenance, "patch-synthetic");
  const Eigen::VectorXd d = geodesic_distances(mesh, 10);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    EXPECT_NEAR(s.values[i], 2.5 * std::pow(0.5, (d[i] / 15.0) * (d[i] / 15.0)), 1e-12);
  }
}

TEST(PatchSource, HalfMaximumAtHalfWidth) {
  // Two vertices 1 apart on a line of triangles: d = fwhm / 2 exactly.
  TriMesh::Vertices v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0;
  TriMesh::Faces f(2, 3);
  f << 0, 1, 2, 1, 3, 2;
  const auto s = patch_source(TriMesh(v, f), 0, 2.0, 4.0);
  EXPECT_NEAR(s.values[1], 2.0, 1e-12);
}

TEST(PatchSource, MassGrowsWithWidth) {
  const auto mesh = make_icosphere(3, 75.0);
  const double narrow = patch_source(mesh, 0, 20.0).values.sum();
  const double wide = patch_source(mesh, 0, 40.0).values.sum();
  EXPECT_LT(narrow, wide);
}

TEST(PatchSource, UnreachableVerticesAreZero) {
  const auto a = make_icosphere(1, 10.0);
  const auto mesh = merge_meshes(a, transform_mesh(a, Eigen::Matrix3d::Identity(), {50, 0, 0}));
  const auto s = patch_source(mesh, 0, 1e6);
  for (int i = a.vertex_count(); i < mesh.vertex_count(); ++i) EXPECT_EQ(s.values[i], 0.0);
  EXPECT_GT(s.values.head(a.vertex_count()).minCoeff(), 0.0);
}

TEST(PatchSource, InvalidArguments) {
  const auto mesh = make_icosphere(1);
  EXPECT_THROW(patch_source(mesh, 0, 0.0), ValidationError);
  EXPECT_THROW(patch_source(mesh, 42, 1.0), IndexError);
}

TEST(ImportSourceMap, ZerosRowsAndRoundTrip) {
  esi::test::TempDir dir;
  const auto mesh = make_icosphere(1);
  io::write_vector(dir / "zero.vec", Eigen::VectorXd::Zero(mesh.vertex_count()));
  const auto z = import_source_map(dir / "zero.vec", mesh);
  EXPECT_EQ(z.values, Eigen::VectorXd::Zero(mesh.vertex_count()));
  EXPECT_EQ(z.provenance, "file-import");

  io::write_vector(dir / "short.vec", Eigen::VectorXd::Ones(mesh.vertex_count() - 1));
  EXPECT_THROW(import_source_map(dir / "short.vec", mesh), ShapeError);

  const auto s = patch_source(mesh, 3, 0.7);
  export_source_map(dir / "s.vec", s);
  EXPECT_EQ(import_source_map(dir / "s.vec", mesh).values, s.values);
}

TEST(GaussianNoise, Deterministic) {
  EXPECT_EQ(gaussian_noise(64, 99), gaussian_noise(64, 99));
  EXPECT_NE(gaussian_noise(64, 99), gaussian_noise(64, 100));
}

TEST(GaussianNoise, StandardNormalMoments) {
  const Eigen::VectorXd x = gaussian_noise(1'000'000, 7);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(RealisticNoise, IdentityCovarianceMatchesGaussian) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(16, 16);
  EXPECT_EQ(realistic_noise(id, 5), gaussian_noise(16, 5));
}

TEST(RealisticNoise, DiagonalCovarianceUnderEachNormalization) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  c(0, 0) = 4.0;
  c(1, 1) = 1.0;
  for (auto norm : {CovNormalization::Correlation, CovNormalization::TraceOne,
                    CovNormalization::None}) {
    const Eigen::MatrixXd target = normalize_covariance(c, norm);
    const Eigen::MatrixXd s = realistic_noise_samples(c, 100'000, 3, norm);
    const Eigen::MatrixXd emp = s * s.transpose() / static_cast<double>(s.cols());
    EXPECT_NEAR(emp(0, 0), target(0, 0), 0.05 * target(0, 0));
    EXPECT_NEAR(emp(1, 1), target(1, 1), 0.05 * target(1, 1));
  }
}

TEST(RealisticNoise, MonteCarloCovarianceMatchesTarget) {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd b = esi::test::random_matrix(12, 12, rng);
  const Eigen::MatrixXd c = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(12, 12);
  const Eigen::MatrixXd target = normalize_covariance(c, CovNormalization::Correlation);
  const Eigen::MatrixXd s = realistic_noise_samples(c, 100'000, 8);
  const Eigen::MatrixXd emp = s * s.transpose() / static_cast<double>(s.cols());
  EXPECT_LT((emp - target).norm() / target.norm(), 0.05);
}

TEST(RealisticNoise, NegativeEigenvalueIsLinAlgError) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(realistic_noise(c, 1, CovNormalization::None), LinAlgError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(realistic_noise(asym, 1), Error);
}

TEST(KernelCovariance, UnitDiagonalAndDecay) {
  Points p(3, 3);
  p << 0, 0, 0, 10, 0, 0, 40, 0, 0;
  const auto c = kernel_covariance(p, 20.0);
  EXPECT_DOUBLE_EQ(c(0, 0), 1.0);
  EXPECT_NEAR(c(0, 1), std::exp(-100.0 / 800.0), 1e-15);
  EXPECT_GT(c(0, 1), c(0, 2));
  EXPECT_THROW(kernel_covariance(p, 0.0), ValidationError);
}

TEST(MixAtSnr, ZeroDbEqualPower) {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd clean = esi::test::random_matrix(32, 1, rng);
  const Eigen::VectorXd noise = esi::test::random_matrix(32, 1, rng);
  const auto r = mix_at_snr(clean, noise, 0.0);
  EXPECT_NEAR((r.noisy - clean).norm(), clean.norm(), 1e-12 * clean.norm());
}

TEST(MixAtSnr, PlusMinusTwentyDb) {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd clean = esi::test::random_matrix(32, 1, rng);
  const Eigen::VectorXd noise = esi::test::random_matrix(32, 1, rng);
  const double p = signal_power(clean);
  EXPECT_NEAR(mix_at_snr(clean, noise, 20.0).noise_power, p / 100.0, 1e-12 * p);
  EXPECT_NEAR(mix_at_snr(clean, noise, -20.0).noise_power, 100.0 * p, 1e-10 * p);
  EXPECT_NEAR(signal_power(mix_at_snr(clean, noise, -20.0).noisy - clean), 100.0 * p, 1e-10 * p);
}

TEST(MixAtSnr, AchievedSnrIsExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> snr(-20.0, 20.0);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd clean = esi::test::random_matrix(64, 1, rng);
    const Eigen::VectorXd noise = esi::test::random_matrix(64, 1, rng);
    const double target = snr(rng);
    const auto r = mix_at_snr(clean, noise, target);
    const double measured = 10.0 * std::log10(signal_power(clean) / signal_power(r.noisy - clean));
    EXPECT_NEAR(measured, target, 1e-6);
    EXPECT_NEAR(r.achieved_snr_db, target, 1e-6);
  }
}

TEST(MixAtSnr, Errors) {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(4);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  EXPECT_THROW(mix_at_snr(zero, one, 0.0), DegenerateError);
  EXPECT_THROW(mix_at_snr(one, zero, 0.0), DegenerateError);
  EXPECT_THROW(mix_at_snr(one, Eigen::VectorXd::Ones(3), 0.0), ShapeError);
  EXPECT_THROW(mix_at_snr(one, one, std::nan("")), ValidationError);
}

TEST(MakeTrial, ZeroSourceIsDegenerate) {
  const auto mesh = make_icosphere(2, 75.0);
  const auto fm = esi::test::fixture_leadfield(mesh);
  const SourceEstimate zero(Eigen::VectorXd::Zero(mesh.vertex_count()), "patch-synthetic");
  EXPECT_THROW(make_trial(fm, zero, NoiseSpec{}), DegenerateError);
}

TEST(MakeTrial, DeterministicForBothNoiseKinds) {
  const auto mesh = make_icosphere(2, 75.0);
  const auto fm = esi::test::fixture_leadfield(mesh);
  const auto src = patch_source(mesh, 5, 30.0);
  for (auto kind : {NoiseKind::GaussianIid, NoiseKind::RealisticCovariance}) {
    NoiseSpec spec;
    spec.kind = kind;
    spec.snr_db = 5.0;
    spec.seed = 1234;
    const auto a = make_trial(fm, src, spec);
    const auto b = make_trial(fm, src, spec);
    EXPECT_EQ(a.noisy_sensors, b.noisy_sensors);
    EXPECT_EQ(a.clean_sensors, fm.leadfield() * src.values);
    EXPECT_NEAR(a.achieved_snr_db, 5.0, 1e-6);
    EXPECT_EQ(a.noise_power, b.noise_power);
    spec.seed = 1235;
    EXPECT_NE(make_trial(fm, src, spec).noisy_sensors, a.noisy_sensors);
  }
}

TEST(MakeTrial, CovarianceSizeMismatchIsShapeError) {
  const auto mesh = make_icosphere(1, 75.0);
  const auto fm = esi::test::fixture_leadfield(mesh, 8);
  NoiseSpec spec;
  spec.kind = NoiseKind::RealisticCovariance;
  spec.covariance = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(make_trial(fm, patch_source(mesh, 0, 30.0), spec), ShapeError);
}

TEST(TrialArchive, WritesFilesAndManifest) {
  esi::test::TempDir dir;
  const auto mesh = make_icosphere(1, 75.0);
  const auto fm = esi::test::fixture_leadfield(mesh, 8);
  NoiseSpec spec;
  spec.snr_db = -5.0;
  spec.seed = 3;
  const auto trial = make_trial(fm, patch_source(mesh, 0, 30.0), spec);
  write_trial_archive(dir.path(), trial);
  EXPECT_EQ(io::read_vector(dir / "noisy.vec"), trial.noisy_sensors);
  const auto m = io::read_manifest(dir / "manifest.txt");
  EXPECT_EQ(m.at("noise_kind"), "gaussian");
  EXPECT_EQ(std::stod(m.at("noise_power")), trial.noise_power);
}

TEST(DeriveSeed, StableAndPathSensitive) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(2, {2, 3}));
  EXPECT_NE(derive_seed(1, {0}), derive_seed(1, {}));
}

TEST(NoiseKinds, NamesRoundTrip) {
  for (auto k : {NoiseKind::GaussianIid, NoiseKind::RealisticCovariance}) {
    EXPECT_EQ(parse_noise_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_noise_kind("pink"), ParseError);
  EXPECT_EQ(parse_cov_normalization("trace-one"), CovNormalization::TraceOne);
}
