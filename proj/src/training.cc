// src/training.cc

// Copyright 2026  HT-PLDA backend contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "htplda/training.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

namespace htplda {

SufficientStats SufficientStats::Zero(int D, int d) {
  SufficientStats s;
  s.Sy = Matrix::Zero(D, D);
  s.T = Matrix::Zero(D, d);
  s.R = Matrix::Zero(d, d);
  return s;
}

SufficientStats &SufficientStats::operator+=(const SufficientStats &o) {
  n += o.n;
  sum_b += o.sum_b;
  Sy += o.Sy;
  T += o.T;
  R += o.R;
  return *this;
}

EStepResult EStep(const HtPldaModel &model, const Projections &proj,
                  const LabeledEmbeddings &data) {
  const int D = model.Dim();
  const int d = model.SubspaceDim();
  const int N = data.NumRows();
  const int S = data.NumSpeakers();
  for (int s = 0; s < S; ++s)
    if (data.groups[s].empty()) throw DataError("empty speaker group");

  EStepResult e;
  // The single eigenanalysis of B0 for this E-step.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(proj.B0);
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of B0 failed");
  e.b0_eigvals = eig.eigenvalues();
  e.b0_eigvecs = eig.eigenvectors();
  if (e.b0_eigvals.minCoeff() <= 0)
    throw NumericalError("degenerate speaker subspace (B0 not PD)");

  e.b.resize(N);
  Vector bvec(N);
  Matrix asum = Matrix::Zero(d, S);   // per-speaker sum of a
  Matrix brsum = Matrix::Zero(D, S);  // per-speaker sum of b r
  Vector bsum = Vector::Zero(S);
  for (int j = 0; j < N; ++j) {
    Vector r = data.X.row(j).transpose();
    GaussianLikelihood gl = LikelihoodStats(proj, model, r);
    int s = data.speaker[j];
    e.b[j] = gl.b;
    bvec(j) = gl.b;
    asum.col(s) += gl.a;
    brsum.col(s) += gl.b * r;
    bsum(s) += gl.b;
  }

  e.stats = SufficientStats::Zero(D, d);
  e.stats.n = N;
  e.stats.sum_b = bvec.sum();
  e.stats.Sy = data.X.transpose() * bvec.asDiagonal() * data.X;
  e.posteriors.resize(S);
  const Matrix &U = e.b0_eigvecs;
  for (int s = 0; s < S; ++s) {
    Vector dvec = (1.0 + bsum(s) * e.b0_eigvals.array()).matrix();
    Vector ztil = (U.transpose() * asum.col(s)).cwiseQuotient(dvec);
    Vector zbar = U * ztil;
    e.posteriors[s].zbar = zbar;
    e.posteriors[s].bsum = bsum(s);
    Matrix cov = U * dvec.cwiseInverse().asDiagonal() * U.transpose();
    e.stats.R += bsum(s) * (cov + zbar * zbar.transpose());
    e.stats.T += brsum.col(s) * zbar.transpose();
  }
  return e;
}

Matrix PosteriorCovariance(const EStepResult &e, int speaker) {
  const Matrix &U = e.b0_eigvecs;
  Vector dvec =
      (1.0 + e.posteriors[speaker].bsum * e.b0_eigvals.array()).matrix();
  return U * dvec.cwiseInverse().asDiagonal() * U.transpose();
}

void MStep(const SufficientStats &stats, Matrix *F, Matrix *W) {
  Eigen::LLT<Matrix> rllt(stats.R);
  if (rllt.info() != Eigen::Success)
    throw NumericalError("insufficient data for subspace dimension");
  *F = rllt.solve(stats.T.transpose()).transpose();  // T R^{-1}
  Matrix wcov = (stats.Sy - *F * stats.T.transpose()) / stats.n;
  wcov = (wcov + wcov.transpose()) / 2.0;
  Eigen::LLT<Matrix> wllt(wcov);
  if (wllt.info() != Eigen::Success)
    throw NumericalError("degenerate residual covariance");
  *W = wllt.solve(Matrix::Identity(wcov.rows(), wcov.cols()));
  *W = (*W + W->transpose()) / 2.0;
}

bool MinDivZ(HtPldaModel *model, const EStepResult &e) {
  const int S = static_cast<int>(e.posteriors.size());
  const int d = static_cast<int>(e.b0_eigvals.size());
  Matrix P = Matrix::Zero(d, d);
  for (int s = 0; s < S; ++s) {
    P += PosteriorCovariance(e, s);
    P += e.posteriors[s].zbar * e.posteriors[s].zbar.transpose();
  }
  P /= S;
  Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success) return false;
  model->F = model->F * Matrix(llt.matrixL());
  return true;
}

double MinDivLambda(HtPldaModel *model, const std::vector<double> &b) {
  if (model->IsGaussian()) return 1.0;
  double gamma = 0.0;
  for (double v : b) gamma += v;
  gamma /= b.size();
  model->W *= gamma;
  return gamma;
}

namespace {

double LogDetSpd(const Matrix &m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError("log-determinant of non-PD matrix");
  double acc = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    acc += 2.0 * std::log(llt.matrixL()(i, i));
  return acc;
}

}  // namespace

double VbLowerBound(const HtPldaModel &model, const Projections &proj,
                    const LabeledEmbeddings &data, const EStepResult &e) {
  const int D = model.Dim();
  const int d = model.SubspaceDim();
  const int N = data.NumRows();
  const int S = data.NumSpeakers();
  const double log2pi = std::log(2.0 * M_PI);
  const double logdet_w = LogDetSpd(model.W);

  // Per-observation expected residual term sum_ij b (r'Wr - 2 r'WF zbar).
  double quad = 0.0;
  for (int j = 0; j < N; ++j) {
    Vector r = data.X.row(j).transpose();
    const Vector &zbar = e.posteriors[data.speaker[j]].zbar;
    double e1 = r.dot(model.W * r);
    double e2 = (proj.FtW * r).dot(zbar);
    quad += e.b[j] * (e1 - 2.0 * e2);
  }
  // Per-speaker pieces via the shared diagonalization.
  double bound = 0.0;
  for (int s = 0; s < S; ++s) {
    const SpeakerPosterior &p = e.posteriors[s];
    Vector dvec = (1.0 + p.bsum * e.b0_eigvals.array()).matrix();
    Vector ztil = e.b0_eigvecs.transpose() * p.zbar;
    double tr_cov = dvec.cwiseInverse().sum();
    double tr_b0_cov = (e.b0_eigvals.array() / dvec.array()).sum();
    double z_b0_z = (e.b0_eigvals.array() * ztil.array().square()).sum();
    double logdet_bbar = dvec.array().log().sum();
    quad += p.bsum * (tr_b0_cov + z_b0_z);  // sum_j b * tr(B0 <zz'>)
    // E[log P(z)] + H[Q(z)]
    bound += -0.5 * d * log2pi - 0.5 * (tr_cov + p.zbar.squaredNorm());
    bound += 0.5 * d * (1.0 + log2pi) - 0.5 * logdet_bbar;
  }
  bound += 0.5 * N * logdet_w - 0.5 * N * D * log2pi - 0.5 * quad;

  if (!model.IsGaussian()) {
    const double nu = model.nu;
    const double alpha = proj.nu_prime / 2.0;  // shape of Q(lambda)
    const double psi_alpha = boost::math::digamma(alpha);
    const double lgamma_alpha = std::lgamma(alpha);
    const double prior_const =
        0.5 * nu * std::log(0.5 * nu) - std::lgamma(0.5 * nu);
    for (int j = 0; j < N; ++j) {
      double b = e.b[j];
      double beta = alpha / b;  // rate of Q(lambda)
      double elog = psi_alpha - std::log(beta);
      bound += 0.5 * D * elog;  // from E[log P(r|z,lambda)]
      bound += prior_const + (0.5 * nu - 1.0) * elog - 0.5 * nu * b;
      bound += alpha - std::log(beta) + lgamma_alpha +
               (1.0 - alpha) * psi_alpha;  // H[Q(lambda)]
    }
  }
  return bound;
}

HtPldaModel InitRandom(int D, int d, double nu, uint64_t seed,
                       double data_scale) {
  if (d >= D) throw UsageError("subspace dimension must be < D");
  if (!(data_scale > 0)) throw UsageError("data scale must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  HtPldaModel model;
  model.nu = nu;
  model.F.resize(D, d);
  const double fscale = data_scale / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < d; ++j) model.F(i, j) = fscale * normal(rng);
  model.W = Matrix::Identity(D, D) / (data_scale * data_scale);
  return model;
}

double DataScale(const Matrix &X) {
  Vector mean = X.colwise().mean();
  Matrix centered = X.rowwise() - mean.transpose();
  return std::sqrt(centered.squaredNorm() / centered.size());
}

TrainResult Train(const LabeledEmbeddings &data, const TrainConfig &config,
                  const HtPldaModel *init, std::ostream *log) {
  const int N = data.NumRows();
  const int D = static_cast<int>(data.X.cols());
  if (data.NumSpeakers() < 2) throw DataError("need at least 2 speakers");
  if (config.d <= 0 || config.d >= D)
    throw UsageError("subspace dimension must be in (0, D)");
  if (D > N) throw DataError("need at least D observations");
  if (config.iterations < 1) throw UsageError("iterations must be >= 1");
  if (!(config.tolerance > 0)) throw UsageError("tolerance must be > 0");

  TrainResult res;
  if (init != nullptr) {
    if (init->Dim() != D || init->SubspaceDim() != config.d)
      throw DataError("init model dimensions do not match data/config");
    res.model = *init;
    res.model.nu = config.nu;
  } else {
    res.model = InitRandom(D, config.d, config.nu, config.seed,
                           DataScale(data.X));
  }

  double prev_bound = 0.0;
  for (int t = 1; t <= config.iterations; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    Projections proj = Precompute(res.model);
    EStepResult e = EStep(res.model, proj, data);
    double bound = VbLowerBound(res.model, proj, data, e);
    if (!std::isfinite(bound))
      throw NumericalError("VB bound is not finite at iteration " +
                           std::to_string(t));
    double delta = (t == 1) ? 0.0 : bound - prev_bound;
    bool converged =
        t > 1 && delta < config.tolerance * std::abs(bound) && delta >= 0;

    double gamma = 1.0;
    if (!converged) {
      MStep(e.stats, &res.model.F, &res.model.W);
      if (config.min_div_z) MinDivZ(&res.model, e);
      if (config.min_div_lambda) gamma = MinDivLambda(&res.model, e.b);
    }
    double seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    res.trace.push_back({t, bound, delta, gamma, seconds});
    if (log)
      *log << "iter=" << t << " bound=" << bound << " delta=" << delta
           << " gamma=" << gamma << " seconds=" << seconds << "\n";
    prev_bound = bound;
    if (converged) break;
  }
  return res;
}

HtPldaModel AdaptInterpolate(const HtPldaModel &out_domain,
                             const HtPldaModel &in_domain, double alpha) {
  if (out_domain.Dim() != in_domain.Dim() ||
      out_domain.SubspaceDim() != in_domain.SubspaceDim())
    throw DataError("adapt: model dimensions do not match");
  if (out_domain.nu != in_domain.nu)
    throw DataError("adapt: models must share nu");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw UsageError("adapt: alpha must be in [0, 1]");
  const int D = out_domain.Dim();
  const int d = out_domain.SubspaceDim();

  Matrix bcov = alpha * in_domain.F * in_domain.F.transpose() +
                (1.0 - alpha) * out_domain.F * out_domain.F.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(bcov);
  if (eig.info() != Eigen::Success)
    throw NumericalError("adapt: eigendecomposition failed");

  HtPldaModel model;
  model.nu = out_domain.nu;
  model.F.resize(D, d);
  for (int k = 0; k < d; ++k) {
    int src = D - 1 - k;  // eigenvalues ascending in Eigen
    double val = eig.eigenvalues()(src);
    if (val <= 0)
      throw NumericalError("adapt: interpolated covariance rank < d");
    Vector u = eig.eigenvectors().col(src);
    int imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u(imax) < 0) u = -u;
    model.F.col(k) = std::sqrt(val) * u;
  }
  Matrix wcov =
      alpha * in_domain.W.llt().solve(Matrix::Identity(D, D)) +
      (1.0 - alpha) * out_domain.W.llt().solve(Matrix::Identity(D, D));
  wcov = (wcov + wcov.transpose()) / 2.0;
  Eigen::LLT<Matrix> wllt(wcov);
  if (wllt.info() != Eigen::Success)
    throw NumericalError("adapt: interpolated covariance not PD");
  model.W = wllt.solve(Matrix::Identity(D, D));
  model.W = (model.W + model.W.transpose()) / 2.0;
  return model;
}

}  // namespace htplda
