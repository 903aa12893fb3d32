// include/htplda/metrics.hpp

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

#ifndef HTPLDA_METRICS_HPP_
#define HTPLDA_METRICS_HPP_

#include <utility>
#include <vector>

#include "htplda/common.hpp"

namespace htplda {

struct LabeledScores {
  std::vector<double> target;
  std::vector<double> nontarget;
};

/// One operating point of the empirical detection curve (decision: accept
/// when score >= threshold).
struct RocPoint {
  double p_fa;
  double p_miss;
};

/// The empirical ROC staircase from (0, 1) to (1, 0), tied scores grouped.
std::vector<RocPoint> RocPoints(const LabeledScores &s);

/// Equal error rate from the ROC convex hull (the PAV-consistent convention):
/// the diagonal crossing of the hull, linearly interpolated.
double Eer(const LabeledScores &s);

/// Minimum normalized detection cost over all thresholds.
double MinDcf(const LabeledScores &s, double p_target, double c_miss,
              double c_fa);

/// Mean of MinDcf at p_target 0.01 and 0.005 with unit costs.
double CPrimary(const LabeledScores &s);

/// Scores interpreted as natural-log LLRs.  Returns (Cllr, minCllr); minCllr
/// applies PAV optimal monotone recalibration first.
std::pair<double, double> CllrAndMinCllr(const LabeledScores &s);

}  // namespace htplda

#endif  // HTPLDA_METRICS_HPP_
