// tests/test_scoring.cc

#include <cmath>
#include <random>

#include "doctest.h"
#include "htplda/scoring.hpp"
#include "test_util.hpp"

using namespace htplda;
using namespace htplda::testing;

namespace {

Matrix OrthonormalColumns(int D, int d, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::HouseholderQR<Matrix> qr(RandomMatrix(D, d, rng));
  return qr.householderQ() * Matrix::Identity(D, d);
}

// Same sign convention as Diagonalize, recomputed independently.
Matrix SignFixedEigvecs(const Matrix &b0) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b0);
  Matrix u = eig.eigenvectors();
  for (int k = 0; k < u.cols(); ++k) {
    int imax = 0;
    u.col(k).cwiseAbs().maxCoeff(&imax);
    if (u(imax, k) < 0) u.col(k) = -u.col(k);
  }
  return u;
}

}  // namespace

TEST_CASE("diagonalize: identity-precision orthonormal subspace") {
  HtPldaModel m;
  m.nu = 2.0;
  m.F = OrthonormalColumns(7, 3, 1);
  m.W = Matrix::Identity(7, 7);
  ScoringModel sm = Diagonalize(m);
  CHECK(MaxAbs(Matrix(sm.eigvals.asDiagonal()) - Matrix::Identity(3, 3)) <
        1e-12);
}

TEST_CASE("diagonalize reconstructs B0 and rotates the natural parameter") {
  HtPldaModel m = RandomModel(9, 3, 2.0, 2);
  Projections proj = Precompute(m);
  ScoringModel sm = Diagonalize(m);
  Matrix u = SignFixedEigvecs(proj.B0);
  CHECK(MaxAbs(u * sm.eigvals.asDiagonal() * u.transpose() - proj.B0) <=
        1e-10 * MaxAbs(proj.B0));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    Vector r = RandomMatrix(9, 1, rng);
    MetaEmbedding me = Extract(sm, r);
    GaussianLikelihood gl = LikelihoodStats(proj, m, r);
    CHECK(MaxAbs(u * me.a_rot - gl.a) < 1e-10 * (1.0 + MaxAbs(gl.a)));
    CHECK(me.b == doctest::Approx(gl.b).epsilon(1e-12));
  }
}

TEST_CASE("extract at the origin and at infinite nu") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 4);
  ScoringModel sm = Diagonalize(m);
  MetaEmbedding at0 = Extract(sm, Vector::Zero(6));
  CHECK(at0.a_rot.norm() < 1e-12);
  CHECK(at0.b == doctest::Approx((2.0 + 6 - 2) / 2.0).epsilon(1e-12));

  HtPldaModel g = m;
  g.nu = kNuInfinity;
  ScoringModel smg = Diagonalize(g);
  std::mt19937_64 rng(5);
  Vector r = RandomMatrix(6, 1, rng);
  CHECK(Extract(smg, r).b == 1.0);
}

TEST_CASE("pool: identity element, commutativity, additivity") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 6);
  ScoringModel sm = Diagonalize(m);
  std::mt19937_64 rng(7);
  MetaEmbedding m1 = Extract(sm, Vector(RandomMatrix(6, 1, rng)));
  MetaEmbedding m2 = Extract(sm, Vector(RandomMatrix(6, 1, rng)));
  MetaEmbedding m3 = Extract(sm, Vector(RandomMatrix(6, 1, rng)));

  MetaEmbedding id = Identity(sm);
  CHECK(MaxAbs(Pool(m1, id).a_rot - m1.a_rot) == 0.0);
  CHECK(Pool(m1, id).b == m1.b);

  CHECK(MaxAbs(Pool(m1, m2).a_rot - Pool(m2, m1).a_rot) == 0.0);
  CHECK(Pool(m1, m2).b == Pool(m2, m1).b);

  // Associativity is exact componentwise addition.
  MetaEmbedding left = Pool(Pool(m1, m2), m3);
  MetaEmbedding right = Pool(m1, Pool(m2, m3));
  CHECK(MaxAbs(left.a_rot - right.a_rot) < 1e-15);
  CHECK(left.b == doctest::Approx(right.b).epsilon(1e-15));

  MetaEmbedding x3 = Pool(Pool(m1, m1), m1);
  CHECK(MaxAbs(x3.a_rot - 3.0 * m1.a_rot) < 1e-12);
  CHECK(x3.b == doctest::Approx(3.0 * m1.b).epsilon(1e-12));
  CHECK(x3.count == 3);
}

TEST_CASE("log_expectation: identity, quadrature at d = 1, b -> 0 limit") {
  HtPldaModel m = RandomModel(5, 1, 2.0, 8);
  ScoringModel sm = Diagonalize(m);
  CHECK(LogExpectation(sm, Identity(sm)) == 0.0);

  std::mt19937_64 rng(9);
  Vector r = RandomMatrix(5, 1, rng);
  MetaEmbedding me = Extract(sm, r);
  double lam = sm.eigvals(0);
  auto f = [&](double z) {
    return std::exp(me.a_rot(0) * z - 0.5 * me.b * lam * z * z) *
           std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  };
  double quad = std::log(AdaptiveSimpson(f, -15.0, 15.0, 1e-13));
  CHECK(LogExpectation(sm, me) == doctest::Approx(quad).epsilon(1e-8));

  MetaEmbedding tiny = me;
  tiny.b = 1e-14;
  CHECK(LogExpectation(sm, tiny) ==
        doctest::Approx(0.5 * tiny.a_rot.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("score_trial: uninformative test side gives LLR 0") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 10);
  ScoringModel sm = Diagonalize(m);
  std::mt19937_64 rng(11);
  MetaEmbedding e = Extract(sm, Vector(RandomMatrix(6, 1, rng)));
  CHECK(ScoreTrial(sm, e, Identity(sm)) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("score_trial matches 1-D quadrature of the marginal integrals") {
  HtPldaModel m = RandomModel(4, 1, 2.0, 12);
  ScoringModel sm = Diagonalize(m);
  DenseScorer dense(m);
  std::mt19937_64 rng(13);
  double b0 = dense.B0()(0, 0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector re = RandomMatrix(4, 1, rng), rt = RandomMatrix(4, 1, rng);
    auto [ae, be] = dense.Stats(re);
    auto [at, bt] = dense.Stats(rt);
    auto log_integral = [&](double a, double b) {
      auto f = [&](double z) {
        return std::exp(a * z - 0.5 * b * b0 * z * z - 0.5 * z * z) /
               std::sqrt(2.0 * M_PI);
      };
      return std::log(AdaptiveSimpson(f, -15.0, 15.0, 1e-13));
    };
    double llr_quad = log_integral(ae(0) + at(0), be + bt) -
                      log_integral(ae(0), be) - log_integral(at(0), bt);
    double llr = ScoreTrial(sm, Extract(sm, re), Extract(sm, rt));
    CHECK(llr == doctest::Approx(llr_quad).epsilon(1e-7));
  }
}

TEST_CASE("diagonalized scoring equals the dense-matrix oracle") {
  std::mt19937_64 rng(14);
  for (uint64_t seed = 0; seed < 8; ++seed) {
    int D = 6 + static_cast<int>(seed) * 2;  // up to 20
    int d = 1 + static_cast<int>(seed % 4);
    double nu = (seed % 2 == 0) ? 2.0 : kNuInfinity;
    HtPldaModel m = RandomModel(D, d, nu, 100 + seed);
    ScoringModel sm = Diagonalize(m);
    DenseScorer dense(m);
    for (int t = 0; t < 10; ++t) {
      Vector re = RandomMatrix(D, 1, rng), rt = RandomMatrix(D, 1, rng);
      double fast = ScoreTrial(sm, Extract(sm, re), Extract(sm, rt));
      double slow = dense.Llr({re}, {rt});
      CHECK(fast == doctest::Approx(slow).epsilon(1e-9));
    }
  }
}

TEST_CASE("scores separate target and nontarget trials on model data") {
  HtPldaModel m = RandomModel(10, 2, 2.0, 15);
  m.F *= 3.0;  // strengthen the speaker signal
  SampleResult s = Sample(m, std::vector<int>(200, 2), 16);
  ScoringModel sm = Diagonalize(m);
  double target_sum = 0.0, nontarget_sum = 0.0;
  int nt = 0, nn = 0;
  for (int i = 0; i < 200; ++i) {
    MetaEmbedding e = Extract(sm, Vector(s.data.X.row(2 * i).transpose()));
    MetaEmbedding t = Extract(sm, Vector(s.data.X.row(2 * i + 1).transpose()));
    target_sum += ScoreTrial(sm, e, t);
    ++nt;
    if (i + 1 < 200) {
      MetaEmbedding o =
          Extract(sm, Vector(s.data.X.row(2 * i + 2).transpose()));
      nontarget_sum += ScoreTrial(sm, e, o);
      ++nn;
    }
  }
  CHECK(target_sum / nt > nontarget_sum / nn);
}

TEST_CASE("score_matrix: cross equals the elementwise loop and trials") {
  HtPldaModel m = RandomModel(8, 2, 2.0, 17);
  ScoringModel sm = Diagonalize(m);
  std::mt19937_64 rng(18);
  std::vector<MetaEmbedding> enroll, test;
  for (int i = 0; i < 10; ++i) {
    enroll.push_back(Extract(sm, Vector(RandomMatrix(8, 1, rng))));
    test.push_back(Extract(sm, Vector(RandomMatrix(8, 1, rng))));
  }
  Matrix cross = ScoreCross(sm, enroll, test);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      CHECK(cross(i, j) ==
            doctest::Approx(ScoreTrial(sm, enroll[i], test[j]))
                .epsilon(1e-12));
  Matrix one = ScoreCross(sm, {enroll[0]}, {test[0]});
  CHECK(one(0, 0) == ScoreTrial(sm, enroll[0], test[0]));
}

TEST_CASE("multi-session enrollment pools at the meta-embedding level") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 19);
  ScoringModel sm = Diagonalize(m);
  std::mt19937_64 rng(20);
  Matrix x = RandomMatrix(3, 6, rng);
  std::map<std::string, std::string> mapfile = {{"u1", "spk"}, {"u2", "spk"}};
  auto grouped = ExtractGrouped(sm, {"u1", "u2", "u3"}, x, mapfile);
  CHECK(grouped.size() == 2);
  MetaEmbedding manual = Pool(Extract(sm, Vector(x.row(0).transpose())),
                              Extract(sm, Vector(x.row(1).transpose())));
  CHECK(MaxAbs(grouped.at("spk").a_rot - manual.a_rot) < 1e-15);
  CHECK(grouped.at("spk").count == 2);
  CHECK(grouped.at("u3").count == 1);
}

TEST_CASE("score_trials raises on unknown ids") {
  HtPldaModel m = RandomModel(6, 2, 2.0, 21);
  ScoringModel sm = Diagonalize(m);
  std::map<std::string, MetaEmbedding> e = {{"e1", Identity(sm)}};
  std::map<std::string, MetaEmbedding> t = {{"t1", Identity(sm)}};
  TrialSet trials;
  trials.trials.push_back({"e1", "missing", -1});
  try {
    ScoreTrials(sm, e, t, trials);
    FAIL("expected DataError");
  } catch (const DataError &err) {
    CHECK(std::string(err.what()).find("missing") != std::string::npos);
  }
}

namespace {

ScoreSet MakeScoreSet(const std::vector<double> &scores) {
  ScoreSet s;
  for (size_t i = 0; i < scores.size(); ++i) {
    s.trials.trials.push_back({"e" + std::to_string(i), "t" + std::to_string(i),
                               -1});
    s.scores.push_back(scores[i]);
  }
  return s;
}

}  // namespace

TEST_CASE("snorm: degenerate cohort raises") {
  ScoreSet raw = MakeScoreSet({1.0});
  std::map<std::string, std::vector<double>> ecoh = {{"e0", {2.0, 2.0, 2.0}}};
  std::map<std::string, std::vector<double>> tcoh = {{"t0", {2.0, 2.0, 2.0}}};
  CHECK_THROWS_AS(SnormAdaptive(raw, ecoh, tcoh, 2), NumericalError);
}

TEST_CASE("snorm is invariant under positive affine score maps") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal(0.0, 1.0);
  ScoreSet raw = MakeScoreSet({0.3, -1.2, 2.2});
  std::map<std::string, std::vector<double>> ecoh, tcoh;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> ce(40), ct(40);
    for (auto &v : ce) v = normal(rng);
    for (auto &v : ct) v = normal(rng);
    ecoh["e" + std::to_string(i)] = ce;
    tcoh["t" + std::to_string(i)] = ct;
  }
  ScoreSet base = SnormAdaptive(raw, ecoh, tcoh, 10);

  const double c = 2.7, h = -3.1;
  ScoreSet raw2 = raw;
  for (auto &v : raw2.scores) v = c * v + h;
  auto map_affine = [&](std::map<std::string, std::vector<double>> coh) {
    for (auto &[k, vec] : coh)
      for (auto &v : vec) v = c * v + h;
    return coh;
  };
  ScoreSet mapped =
      SnormAdaptive(raw2, map_affine(ecoh), map_affine(tcoh), 10);
  for (size_t i = 0; i < base.scores.size(); ++i)
    CHECK(mapped.scores[i] == doctest::Approx(base.scores[i]).epsilon(1e-10));
}

TEST_CASE("snorm: symmetric trial reduces to plain z-norm") {
  ScoreSet raw = MakeScoreSet({1.5});
  std::vector<double> cohort = {0.1, 0.9, -0.4, 0.3, 1.1};
  std::map<std::string, std::vector<double>> ecoh = {{"e0", cohort}};
  std::map<std::string, std::vector<double>> tcoh = {{"t0", cohort}};
  ScoreSet out = SnormAdaptive(raw, ecoh, tcoh, 4);
  // mean/std of top-4 {1.1, 0.9, 0.3, 0.1}
  double mu = (1.1 + 0.9 + 0.3 + 0.1) / 4.0;
  double var = 0.0;
  for (double v : {1.1, 0.9, 0.3, 0.1}) var += (v - mu) * (v - mu) / 4.0;
  double expected = (1.5 - mu) / std::sqrt(var);
  CHECK(out.scores[0] == doctest::Approx(expected).epsilon(1e-12));
}
