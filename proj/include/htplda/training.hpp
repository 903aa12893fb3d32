// include/htplda/training.hpp

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

#ifndef HTPLDA_TRAINING_HPP_
#define HTPLDA_TRAINING_HPP_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "htplda/model.hpp"

namespace htplda {

/// Gaussian speaker posterior Q(z) = N(zbar, Bbar^{-1}) in diagonalized form:
/// Bbar = I + bsum * B0, so only the scalar bsum is stored; the shared
/// eigendecomposition of B0 lives in EStepResult.
struct SpeakerPosterior {
  Vector zbar;
  double bsum = 0.0;
};

/// Weighted zero/first/second-order statistics; additive across shards.
struct SufficientStats {
  long n = 0;         // total observation count
  double sum_b = 0.0; // sum of the b weights
  Matrix Sy;          // D x D, sum_ij b r r'
  Matrix T;           // D x d, sum_i (sum_j b r) zbar'
  Matrix R;           // d x d, sum_i bsum (Bbar^{-1} + zbar zbar')

  static SufficientStats Zero(int D, int d);
  SufficientStats &operator+=(const SufficientStats &o);
};

struct EStepResult {
  std::vector<SpeakerPosterior> posteriors;
  SufficientStats stats;
  std::vector<double> b;  // per observation, row order
  Vector b0_eigvals;      // shared diagonalization of B0 (one per E-step)
  Matrix b0_eigvecs;
};

EStepResult EStep(const HtPldaModel &model, const Projections &proj,
                  const LabeledEmbeddings &data);

/// Posterior covariance Bbar^{-1} of one speaker, reconstructed from the
/// shared diagonalization.
Matrix PosteriorCovariance(const EStepResult &e, int speaker);

/// Stationary point of the weighted expected complete-data log-likelihood:
/// F = T R^{-1}, W^{-1} = (Sy - F T') / n, symmetrized.
void MStep(const SufficientStats &stats, Matrix *F, Matrix *W);

/// Minimum divergence on the speaker prior: P = mean posterior second moment,
/// F <- F chol(P).  Skips with a false return if P is not PD.
bool MinDivZ(HtPldaModel *model, const EStepResult &e);

/// Minimum divergence on the precision scales: W <- gamma W with
/// gamma = mean b.  No-op at infinite nu.  Returns gamma.
double MinDivLambda(HtPldaModel *model, const std::vector<double> &b);

/// Evaluates the VB lower bound in closed form for the Q-factors of the given
/// E-step (fixed-form gamma Q(lambda), Gaussian Q(z)), entropies included.
double VbLowerBound(const HtPldaModel &model, const Projections &proj,
                    const LabeledEmbeddings &data, const EStepResult &e);

struct TrainConfig {
  double nu = 2.0;
  int d = 0;
  int iterations = 50;
  uint64_t seed = 0;
  double tolerance = 1e-6;  // relative bound improvement
  bool min_div_z = true;
  bool min_div_lambda = true;
};

struct VbTraceEntry {
  int iter;
  double bound;
  double delta;
  double gamma;
  double seconds;
};

struct TrainResult {
  HtPldaModel model;
  std::vector<VbTraceEntry> trace;
};

/// F entries i.i.d. N(0, data_scale^2 / d), W = I / data_scale^2, so the
/// initial model covariance magnitude matches the data.
HtPldaModel InitRandom(int D, int d, double nu, uint64_t seed,
                       double data_scale);

/// RMS per-dimension deviation from the column mean; the data_scale fed to
/// InitRandom.
double DataScale(const Matrix &X);

/// Full VB loop: init (or continue from *init), then per iteration
/// E-step -> bound -> M-step -> min-div-z -> min-div-lambda, with early
/// stopping on relative bound improvement.  Per-iteration log lines go to
/// *log when given.
TrainResult Train(const LabeledEmbeddings &data, const TrainConfig &config,
                  const HtPldaModel *init = nullptr,
                  std::ostream *log = nullptr);

/// Domain adaptation by interpolation in moment space; the interpolated
/// between-speaker covariance is re-factored by a truncated
/// eigendecomposition.
HtPldaModel AdaptInterpolate(const HtPldaModel &out_domain,
                             const HtPldaModel &in_domain, double alpha);

}  // namespace htplda

#endif  // HTPLDA_TRAINING_HPP_
