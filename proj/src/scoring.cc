// src/scoring.cc

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

#include "htplda/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace htplda {

ScoringModel Diagonalize(const HtPldaModel &model) {
  Projections proj = Precompute(model);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(proj.B0);
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of B0 failed");
  ScoringModel sm;
  sm.eigvals = eig.eigenvalues();
  Matrix U = eig.eigenvectors();
  const double scale = sm.eigvals.cwiseAbs().maxCoeff();
  for (int k = 0; k < sm.eigvals.size(); ++k) {
    if (sm.eigvals(k) <= 1e-12 * scale)
      throw NumericalError("B0 numerically singular");
    // Sign convention: largest-magnitude entry of each eigenvector positive.
    int imax = 0;
    U.col(k).cwiseAbs().maxCoeff(&imax);
    if (U(imax, k) < 0) U.col(k) = -U.col(k);
  }
  sm.tmap = U.transpose() * proj.FtW;
  sm.G = proj.G;
  sm.nu = model.nu;
  sm.nu_prime = proj.nu_prime;
  sm.D = model.Dim();
  sm.d = model.SubspaceDim();
  return sm;
}

MetaEmbedding Identity(const ScoringModel &sm) {
  MetaEmbedding m;
  m.a_rot = Vector::Zero(sm.d);
  return m;
}

MetaEmbedding Extract(const ScoringModel &sm, const Vector &r) {
  if (!r.allFinite()) throw DataError("non-finite embedding vector");
  MetaEmbedding m;
  if (std::isinf(sm.nu)) {
    m.b = 1.0;
  } else {
    double rGr = r.dot(sm.G * r);
    if (rGr < 0) rGr = 0;
    m.b = sm.nu_prime / (sm.nu + rGr);
  }
  m.a_rot = m.b * (sm.tmap * r);
  m.count = 1;
  return m;
}

MetaEmbedding Pool(const MetaEmbedding &x, const MetaEmbedding &y) {
  MetaEmbedding m;
  m.a_rot = x.a_rot + y.a_rot;
  m.b = x.b + y.b;
  m.count = x.count + y.count;
  return m;
}

double LogExpectation(const ScoringModel &sm, const MetaEmbedding &m) {
  double acc = 0.0;
  for (int k = 0; k < sm.d; ++k) {
    double denom = 1.0 + m.b * sm.eigvals(k);
    acc += m.a_rot(k) * m.a_rot(k) / denom - std::log(denom);
  }
  return 0.5 * acc;
}

double ScoreTrial(const ScoringModel &sm, const MetaEmbedding &enroll,
                  const MetaEmbedding &test) {
  return LogExpectation(sm, Pool(enroll, test)) - LogExpectation(sm, enroll) -
         LogExpectation(sm, test);
}

std::map<std::string, MetaEmbedding> ExtractGrouped(
    const ScoringModel &sm, const std::vector<std::string> &ids,
    const Matrix &X, const std::map<std::string, std::string> &utt_to_id) {
  std::map<std::string, MetaEmbedding> out;
  for (size_t i = 0; i < ids.size(); ++i) {
    auto it = utt_to_id.find(ids[i]);
    const std::string &key = (it == utt_to_id.end()) ? ids[i] : it->second;
    MetaEmbedding m = Extract(sm, X.row(i).transpose());
    auto pos = out.find(key);
    if (pos == out.end())
      out.emplace(key, std::move(m));
    else
      pos->second = Pool(pos->second, m);
  }
  return out;
}

ScoreSet ScoreTrials(const ScoringModel &sm,
                     const std::map<std::string, MetaEmbedding> &enroll,
                     const std::map<std::string, MetaEmbedding> &test,
                     const TrialSet &trials) {
  ScoreSet out;
  out.trials = trials;
  out.scores.reserve(trials.trials.size());
  for (const Trial &t : trials.trials) {
    auto e = enroll.find(t.enroll);
    if (e == enroll.end())
      throw DataError("unknown enrollment id: " + t.enroll);
    auto s = test.find(t.test);
    if (s == test.end()) throw DataError("unknown test id: " + t.test);
    out.scores.push_back(ScoreTrial(sm, e->second, s->second));
  }
  return out;
}

Matrix ScoreCross(const ScoringModel &sm,
                  const std::vector<MetaEmbedding> &enroll,
                  const std::vector<MetaEmbedding> &test) {
  Matrix out(enroll.size(), test.size());
  for (size_t i = 0; i < enroll.size(); ++i)
    for (size_t j = 0; j < test.size(); ++j)
      out(i, j) = ScoreTrial(sm, enroll[i], test[j]);
  return out;
}

namespace {

// Mean and population std of the top_k largest values.
void TopKStats(const std::vector<double> &scores, int top_k, double *mu,
               double *sigma) {
  std::vector<double> top(scores);
  std::partial_sort(top.begin(), top.begin() + top_k, top.end(),
                    std::greater<double>());
  double m = 0.0;
  for (int i = 0; i < top_k; ++i) m += top[i];
  m /= top_k;
  double v = 0.0;
  for (int i = 0; i < top_k; ++i) v += (top[i] - m) * (top[i] - m);
  v /= top_k;
  *mu = m;
  *sigma = std::sqrt(v);
}

}  // namespace

ScoreSet SnormAdaptive(
    const ScoreSet &raw,
    const std::map<std::string, std::vector<double>> &enroll_cohort,
    const std::map<std::string, std::vector<double>> &test_cohort,
    int top_k) {
  if (top_k < 2) throw UsageError("snorm top-k must be >= 2");
  ScoreSet out;
  out.trials = raw.trials;
  out.scores.reserve(raw.scores.size());
  for (size_t i = 0; i < raw.scores.size(); ++i) {
    const Trial &t = raw.trials.trials[i];
    auto e = enroll_cohort.find(t.enroll);
    if (e == enroll_cohort.end())
      throw DataError("no cohort scores for enrollment id: " + t.enroll);
    auto s = test_cohort.find(t.test);
    if (s == test_cohort.end())
      throw DataError("no cohort scores for test id: " + t.test);
    if (static_cast<int>(e->second.size()) < top_k ||
        static_cast<int>(s->second.size()) < top_k)
      throw UsageError("cohort smaller than top-k");
    double mu_e, sig_e, mu_t, sig_t;
    TopKStats(e->second, top_k, &mu_e, &sig_e);
    TopKStats(s->second, top_k, &mu_t, &sig_t);
    if (sig_e == 0.0 || sig_t == 0.0)
      throw NumericalError("degenerate cohort (zero variance)");
    double v = raw.scores[i];
    out.scores.push_back(0.5 * ((v - mu_e) / sig_e + (v - mu_t) / sig_t));
  }
  return out;
}

}  // namespace htplda
