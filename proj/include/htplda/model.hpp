// include/htplda/model.hpp

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

#ifndef HTPLDA_MODEL_HPP_
#define HTPLDA_MODEL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "htplda/common.hpp"

namespace htplda {

/// Heavy-tailed PLDA parameters.  Per speaker, a hidden identity variable
/// z ~ N(0, I_d); per observation, a hidden precision scale
/// lambda ~ Gamma(nu/2, nu/2) (shape-rate, mean 1); the observation is
/// r ~ N(F z, (lambda W)^{-1}).  nu = kNuInfinity pins lambda = 1 and gives
/// Gaussian PLDA exactly.
struct HtPldaModel {
  double nu = kNuInfinity;
  Matrix F;  // D x d factor loading matrix
  Matrix W;  // D x D precision matrix, symmetric positive definite

  int Dim() const { return static_cast<int>(F.rows()); }
  int SubspaceDim() const { return static_cast<int>(F.cols()); }
  bool IsGaussian() const { return std::isinf(nu); }
};

/// Diagnostic check of the HtPldaModel invariants.  Returns one message per
/// violated invariant; empty means valid.  Never throws.
std::vector<std::string> ValidateModel(const HtPldaModel &model);

/// Derived matrices shared by likelihood computation, training and scoring.
/// G is the projection (under the W^{-1} inner product) onto the orthogonal
/// complement of the speaker subspace: G F = 0 and G W^{-1} G = G.
struct Projections {
  Matrix B0;        // d x d, F' W F
  Matrix G;         // D x D, W - W F B0^{-1} F' W
  Matrix FtW;       // d x D, F' W
  double nu_prime;  // nu + D - d
};

/// Computes the derived matrices.  Throws NumericalError if B0 is singular
/// ("degenerate speaker subspace").
Projections Precompute(const HtPldaModel &model);

/// Natural parameters of the Gaussian likelihood approximation for one
/// observation: the likelihood of z is exp[a'z - (b/2) z'B0 z].  B0 is shared
/// across observations and lives in Projections.
struct GaussianLikelihood {
  Vector a;  // d-vector
  double b;  // positive scale; exactly 1 when nu is infinite
};

/// b = (nu + D - d) / (nu + r'Gr) and a = b F'W r.  Exact b = 1 branch for
/// infinite nu.  Rejects non-finite input.
GaussianLikelihood LikelihoodStats(const Projections &proj,
                                   const HtPldaModel &model, const Vector &r);

/// Exact log density of one observation given z, with lambda marginalized
/// out: log T(r | Fz, W, nu) for finite nu, log N(r | Fz, W^{-1}) for
/// infinite nu.  Test oracle; O(D^3) per call.
double LogTDensity(const HtPldaModel &model, const Vector &z, const Vector &r);

/// A labeled embedding set: row j of X belongs to speaker speaker[j].
struct LabeledEmbeddings {
  Matrix X;                                // N x D, rows are embeddings
  std::vector<int> speaker;                // row -> speaker index in [0, S)
  std::vector<std::vector<int>> groups;    // speaker index -> row indices
  std::vector<std::string> speaker_names;  // optional, parallel to groups

  int NumRows() const { return static_cast<int>(X.rows()); }
  int NumSpeakers() const { return static_cast<int>(groups.size()); }

  /// Assembles groups from per-row speaker id strings; speakers are numbered
  /// in order of first appearance.  Throws DataError on size mismatch.
  static LabeledEmbeddings FromLabels(Matrix X,
                                      const std::vector<std::string> &labels);

  /// Returns a copy restricted to speakers with at least min_utts rows.
  LabeledEmbeddings FilterMinUtterances(int min_utts) const;
};

/// Synthetic draw from the generative model, with the hidden record kept for
/// oracle tests.
struct SampleResult {
  LabeledEmbeddings data;
  Matrix z;                    // S x d, one hidden identity per speaker
  std::vector<double> lambda;  // per observation, in row order
};

/// Samples counts.size() speakers with the given per-speaker observation
/// counts.  Deterministic per seed.
SampleResult Sample(const HtPldaModel &model, const std::vector<int> &counts,
                    uint64_t seed);

}  // namespace htplda

#endif  // HTPLDA_MODEL_HPP_
