// tests/test_model.cc

#include <cmath>
#include <random>

#include "doctest.h"
#include "htplda/model.hpp"
#include "test_util.hpp"

using namespace htplda;
using namespace htplda::testing;

namespace {

Matrix OrthonormalColumns(int D, int d, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix a = RandomMatrix(D, d, rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(D, d);
}

bool Contains(const std::vector<std::string> &report, const std::string &msg) {
  for (const auto &r : report)
    if (r.find(msg) != std::string::npos) return true;
  return false;
}

// 1-D t log-density with precision parametrization, for shape checks.
double LogT1(double z, double mu, double prec, double nu) {
  return std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
         0.5 * std::log(nu * M_PI) + 0.5 * std::log(prec) -
         0.5 * (nu + 1.0) * std::log1p(prec * (z - mu) * (z - mu) / nu);
}

}  // namespace

TEST_CASE("validate_model accepts a simple valid model") {
  std::mt19937_64 rng(7);
  HtPldaModel m;
  m.nu = 2.0;
  m.F = RandomMatrix(10, 2, rng);
  m.W = Matrix::Identity(10, 10);
  CHECK(ValidateModel(m).empty());
}

TEST_CASE("validate_model flags indefinite W") {
  std::mt19937_64 rng(8);
  HtPldaModel m;
  m.nu = 2.0;
  m.F = RandomMatrix(5, 2, rng);
  m.W = Matrix::Identity(5, 5);
  m.W(3, 3) = -1.0;
  CHECK(Contains(ValidateModel(m), "W not positive definite"));
}

TEST_CASE("validate_model flags d == D") {
  std::mt19937_64 rng(9);
  HtPldaModel m;
  m.nu = 2.0;
  m.F = RandomMatrix(4, 4, rng);
  m.W = Matrix::Identity(4, 4);
  CHECK(Contains(ValidateModel(m), "d must be < D"));
}

TEST_CASE("precompute: orthonormal F with identity W") {
  HtPldaModel m;
  m.nu = 3.0;
  m.F = OrthonormalColumns(8, 3, 11);
  m.W = Matrix::Identity(8, 8);
  Projections proj = Precompute(m);
  CHECK(MaxAbs(proj.B0 - Matrix::Identity(3, 3)) < 1e-12);
  Matrix expected_g = Matrix::Identity(8, 8) - m.F * m.F.transpose();
  CHECK(MaxAbs(proj.G - expected_g) < 1e-12);
  CHECK(proj.nu_prime == doctest::Approx(3.0 + 8 - 3));
}

TEST_CASE("precompute: GF = 0 and G W^{-1} G = G for random models") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    HtPldaModel m = RandomModel(12, 3, 2.0, seed);
    Projections proj = Precompute(m);
    CHECK(MaxAbs(proj.G * m.F) <= 1e-10 * MaxAbs(m.W));
    Matrix winv = m.W.inverse();
    CHECK(MaxAbs(proj.G * winv * proj.G - proj.G) <=
          kStructuralTol * MaxAbs(proj.G));
  }
}

TEST_CASE("likelihood_stats: b = 1 exactly at infinite nu") {
  HtPldaModel m = RandomModel(10, 2, kNuInfinity, 3);
  Projections proj = Precompute(m);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5; ++i) {
    Vector r = RandomMatrix(10, 1, rng);
    GaussianLikelihood gl = LikelihoodStats(proj, m, r);
    CHECK(gl.b == 1.0);
    // The G-PLDA sufficient statistic.
    CHECK(MaxAbs(gl.a - m.F.transpose() * m.W * r) < 1e-12);
  }
}

TEST_CASE("likelihood_stats: r = 0 gives the maximal b") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 5);
  Projections proj = Precompute(m);
  GaussianLikelihood gl = LikelihoodStats(proj, m, Vector::Zero(6));
  CHECK(gl.b == doctest::Approx((2.0 + 6 - 2) / 2.0).epsilon(1e-12));
  CHECK(gl.a.norm() < 1e-12);
}

TEST_CASE("likelihood_stats rejects non-finite input") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 5);
  Projections proj = Precompute(m);
  Vector r = Vector::Zero(6);
  r(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(LikelihoodStats(proj, m, r), DataError);
}

TEST_CASE("likelihood_stats: b bounded and invariant to subspace shifts") {
  std::mt19937_64 rng(17);
  HtPldaModel m = RandomModel(9, 3, 1.5, 23);
  Projections proj = Precompute(m);
  const double bmax = proj.nu_prime / m.nu;
  for (int i = 0; i < 30; ++i) {
    Vector r = 3.0 * RandomMatrix(9, 1, rng);
    double b = LikelihoodStats(proj, m, r).b;
    CHECK(b > 0.0);
    CHECK(b <= bmax * (1 + 1e-12));
    Vector u = RandomMatrix(3, 1, rng);
    double b_shift = LikelihoodStats(proj, m, Vector(r + m.F * u)).b;
    CHECK(b_shift == doctest::Approx(b).epsilon(1e-8));
  }
}

TEST_CASE("likelihood as a function of z has the predicted t shape") {
  // D=4, d=1: the exact likelihood log T(r|Fz,W,nu), viewed as a function of
  // z, must differ from log T(z | zhat, b*B0, nu') only by a constant.
  HtPldaModel m = RandomModel(4, 1, 2.0, 31);
  Projections proj = Precompute(m);
  std::mt19937_64 rng(32);
  Vector r = RandomMatrix(4, 1, rng);
  GaussianLikelihood gl = LikelihoodStats(proj, m, r);
  double prec = gl.b * proj.B0(0, 0);
  double zhat = gl.a(0) / prec;
  Vector z0 = Vector::Zero(1);
  double offset =
      LogTDensity(m, z0, r) - LogT1(0.0, zhat, prec, proj.nu_prime);
  for (double z = -3.0; z <= 3.0; z += 0.37) {
    Vector zv(1);
    zv << z;
    double lhs = LogTDensity(m, zv, r);
    double rhs = LogT1(z, zhat, prec, proj.nu_prime) + offset;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("likelihood stats match gradient/curvature in the Gaussian limit") {
  // At very large nu the exact log-likelihood is Gaussian in z, so finite
  // differences at z = 0 recover a and b*B0.
  HtPldaModel m = RandomModel(4, 1, 1e9, 41);
  Projections proj = Precompute(m);
  std::mt19937_64 rng(42);
  Vector r = RandomMatrix(4, 1, rng);
  GaussianLikelihood gl = LikelihoodStats(proj, m, r);
  const double h = 1e-4;
  Vector zp(1), zm(1), z0 = Vector::Zero(1);
  zp << h;
  zm << -h;
  double fp = LogTDensity(m, zp, r), fm = LogTDensity(m, zm, r),
         f0 = LogTDensity(m, z0, r);
  double grad = (fp - fm) / (2.0 * h);
  double curv = (fp - 2.0 * f0 + fm) / (h * h);
  CHECK(grad == doctest::Approx(gl.a(0)).epsilon(1e-5));
  CHECK(curv == doctest::Approx(-gl.b * proj.B0(0, 0)).epsilon(1e-4));
}

TEST_CASE("log_t_density tends to the Gaussian log-density for large nu") {
  HtPldaModel m = RandomModel(5, 2, 1e9, 51);
  HtPldaModel g = m;
  g.nu = kNuInfinity;
  std::mt19937_64 rng(52);
  for (int i = 0; i < 5; ++i) {
    Vector z = RandomMatrix(2, 1, rng);
    Vector r = RandomMatrix(5, 1, rng);
    CHECK(std::abs(LogTDensity(m, z, r) - LogTDensity(g, z, r)) < 1e-5);
  }
}

TEST_CASE("log_t_density integrates to 1 at D = 1") {
  HtPldaModel m;
  m.nu = 2.0;
  m.F.resize(1, 1);  // d = D not used by the density itself
  m.F << 0.7;
  m.W.resize(1, 1);
  m.W << 0.8;
  Vector z(1);
  z << 0.4;
  auto f = [&](double r) {
    Vector rv(1);
    rv << r;
    return std::exp(LogTDensity(m, z, rv));
  };
  double mass = AdaptiveSimpson(f, -20.0, 20.0, 1e-10) +
                AdaptiveSimpson(f, -3000.0, -20.0, 1e-10) +
                AdaptiveSimpson(f, 20.0, 3000.0, 1e-10);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sample is deterministic per seed") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 61);
  std::vector<int> counts = {3, 1, 4};
  SampleResult a = Sample(m, counts, 99);
  SampleResult b = Sample(m, counts, 99);
  CHECK((a.data.X - b.data.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.lambda == b.lambda);
  SampleResult c = Sample(m, counts, 100);
  CHECK((a.data.X - c.data.X).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sampled precision scales have mean 1 at nu = 2") {
  HtPldaModel m = RandomModel(4, 1, 2.0, 62);
  SampleResult s = Sample(m, std::vector<int>(1000, 100), 7);
  double mean = 0.0;
  for (double l : s.lambda) mean += l;
  mean /= s.lambda.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Gaussian sampling matches the law of total covariance") {
  HtPldaModel m = RandomModel(5, 2, kNuInfinity, 63);
  SampleResult s = Sample(m, std::vector<int>(100000, 1), 8);
  Matrix emp = s.data.X.transpose() * s.data.X / s.data.X.rows();
  Matrix expected = m.F * m.F.transpose() + m.W.inverse();
  double rel = (emp - expected).norm() / expected.norm();
  CHECK(rel <= 0.05);
}

TEST_CASE("sample rejects non-positive counts") {
  HtPldaModel m = RandomModel(4, 1, 2.0, 64);
  CHECK_THROWS_AS(Sample(m, {2, 0}, 1), DataError);
}

TEST_CASE("FilterMinUtterances keeps only well-observed speakers") {
  std::mt19937_64 rng(65);
  Matrix x = RandomMatrix(6, 3, rng);
  LabeledEmbeddings data = LabeledEmbeddings::FromLabels(
      x, {"a", "a", "b", "a", "c", "c"});
  LabeledEmbeddings kept = data.FilterMinUtterances(2);
  CHECK(kept.NumSpeakers() == 2);
  CHECK(kept.NumRows() == 5);
  CHECK(kept.speaker_names == std::vector<std::string>{"a", "c"});
}
