// include/htplda/scoring.hpp

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

#ifndef HTPLDA_SCORING_HPP_
#define HTPLDA_SCORING_HPP_

#include <map>
#include <string>
#include <vector>

#include "htplda/model.hpp"

namespace htplda {

/// Scoring form of a trained model.  B0 = U Lambda U' is diagonalized once;
/// all per-observation work is then O(Dd + D^2) and per-trial work O(d).
struct ScoringModel {
  Vector eigvals;   // Lambda, strictly positive
  Matrix tmap;      // d x D, U' F' W
  Matrix G;         // D x D, for the b scale
  double nu;
  double nu_prime;  // nu + D - d
  int D = 0;
  int d = 0;
};

/// Symmetric eigendecomposition of B0 with a fixed sign convention: the
/// largest-magnitude entry of each eigenvector is made positive.  Throws
/// NumericalError if B0 is numerically singular.
ScoringModel Diagonalize(const HtPldaModel &model);

/// Likelihood of z summarized in rotated natural parameters.  Pooling adds
/// componentwise; (0, 0) is the identity element.
struct MetaEmbedding {
  Vector a_rot;  // d-vector
  double b = 0.0;
  int count = 0;
};

MetaEmbedding Identity(const ScoringModel &sm);
MetaEmbedding Extract(const ScoringModel &sm, const Vector &r);
MetaEmbedding Pool(const MetaEmbedding &x, const MetaEmbedding &y);

/// log of the Gaussian integral of the likelihood against the N(0, I) prior:
/// (1/2) sum_k [ a_k^2 / (1 + b L_k) - log(1 + b L_k) ].
double LogExpectation(const ScoringModel &sm, const MetaEmbedding &m);

/// Verification LLR: log E[pool] - log E[enroll] - log E[test].
double ScoreTrial(const ScoringModel &sm, const MetaEmbedding &enroll,
                  const MetaEmbedding &test);

struct Trial {
  std::string enroll;
  std::string test;
  int label = -1;  // 1 target, 0 nontarget, -1 unlabeled
};

struct TrialSet {
  std::vector<Trial> trials;
};

struct ScoreSet {
  TrialSet trials;
  std::vector<double> scores;  // parallel to trials.trials
};

/// Pools multiple sessions per enrollment id.  utt_to_id maps utterance ids
/// to enrollment ids; utterances absent from the map enroll under their own
/// id.
std::map<std::string, MetaEmbedding> ExtractGrouped(
    const ScoringModel &sm, const std::vector<std::string> &ids,
    const Matrix &X, const std::map<std::string, std::string> &utt_to_id);

/// Scores the trial subset; unknown ids raise DataError naming the id.
ScoreSet ScoreTrials(const ScoringModel &sm,
                     const std::map<std::string, MetaEmbedding> &enroll,
                     const std::map<std::string, MetaEmbedding> &test,
                     const TrialSet &trials);

/// Full cross of enroll x test meta-embeddings.
Matrix ScoreCross(const ScoringModel &sm,
                  const std::vector<MetaEmbedding> &enroll,
                  const std::vector<MetaEmbedding> &test);

/// Adaptive symmetric score normalization: per trial side, mean/std of the
/// top_k largest cohort scores (population std).  Throws NumericalError on a
/// zero-variance cohort selection ("degenerate cohort").
ScoreSet SnormAdaptive(
    const ScoreSet &raw,
    const std::map<std::string, std::vector<double>> &enroll_cohort,
    const std::map<std::string, std::vector<double>> &test_cohort, int top_k);

}  // namespace htplda

#endif  // HTPLDA_SCORING_HPP_
