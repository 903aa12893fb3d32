// src/metrics.cc

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

#include "htplda/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace htplda {

namespace {

void CheckNonEmpty(const LabeledScores &s) {
  if (s.target.empty() || s.nontarget.empty())
    throw DataError("need both target and nontarget scores");
  for (double v : s.target)
    if (!std::isfinite(v)) throw DataError("non-finite target score");
  for (double v : s.nontarget)
    if (!std::isfinite(v)) throw DataError("non-finite nontarget score");
}

}  // namespace

std::vector<RocPoint> RocPoints(const LabeledScores &s) {
  CheckNonEmpty(s);
  std::vector<std::pair<double, bool>> all;  // (score, is_target)
  all.reserve(s.target.size() + s.nontarget.size());
  for (double v : s.target) all.emplace_back(v, true);
  for (double v : s.nontarget) all.emplace_back(v, false);
  std::sort(all.begin(), all.end(),
            [](const auto &a, const auto &b) { return a.first > b.first; });
  const double t_inv = 1.0 / s.target.size();
  const double n_inv = 1.0 / s.nontarget.size();

  std::vector<RocPoint> pts;
  pts.push_back({0.0, 1.0});  // threshold above every score: reject all
  double p_miss = 1.0, p_fa = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    // Tied scores cross the threshold together.
    size_t j = i;
    int tied_t = 0, tied_n = 0;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? tied_t : tied_n)++;
      ++j;
    }
    p_miss -= tied_t * t_inv;
    p_fa += tied_n * n_inv;
    pts.push_back({p_fa, p_miss});
    i = j;
  }
  pts.back() = {1.0, 0.0};  // remove accumulated rounding at the endpoint
  return pts;
}

double Eer(const LabeledScores &s) {
  std::vector<RocPoint> pts = RocPoints(s);
  // Lower convex hull over (p_fa, p_miss); the points come sorted by p_fa
  // ascending with p_miss descending.
  std::vector<RocPoint> hull;
  for (const RocPoint &p : pts) {
    while (hull.size() >= 2) {
      const RocPoint &a = hull[hull.size() - 2];
      const RocPoint &b = hull[hull.size() - 1];
      double cross = (b.p_fa - a.p_fa) * (p.p_miss - a.p_miss) -
                     (b.p_miss - a.p_miss) * (p.p_fa - a.p_fa);
      if (cross <= 0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  for (size_t k = 0; k < hull.size(); ++k) {
    double g = hull[k].p_miss - hull[k].p_fa;
    if (g > 0) continue;
    if (g == 0 || k == 0) return hull[k].p_fa;
    double gp = hull[k - 1].p_miss - hull[k - 1].p_fa;
    double t = gp / (gp - g);
    return hull[k - 1].p_fa + t * (hull[k].p_fa - hull[k - 1].p_fa);
  }
  return 1.0;  // unreachable: the hull ends at (1, 0)
}

double MinDcf(const LabeledScores &s, double p_target, double c_miss,
              double c_fa) {
  if (!(p_target > 0.0 && p_target < 1.0))
    throw UsageError("p_target must be in (0, 1)");
  if (!(c_miss > 0.0 && c_fa > 0.0)) throw UsageError("costs must be > 0");
  const double wm = p_target * c_miss;
  const double wf = (1.0 - p_target) * c_fa;
  double best = std::numeric_limits<double>::infinity();
  for (const RocPoint &p : RocPoints(s))
    best = std::min(best, wm * p.p_miss + wf * p.p_fa);
  return best / std::min(wm, wf);
}

double CPrimary(const LabeledScores &s) {
  return 0.5 * (MinDcf(s, 0.01, 1.0, 1.0) + MinDcf(s, 0.005, 1.0, 1.0));
}

namespace {

constexpr double kLog2 = 0.6931471805599453;

// Pool-adjacent-violators over score-tied groups.  Returns the calibrated
// posterior probability of target for each group, nondecreasing in score.
struct PavGroup {
  double score;
  double weight;
  double targets;
};

std::vector<std::pair<PavGroup, double>> PavPosteriors(
    const LabeledScores &s) {
  std::vector<std::pair<double, bool>> all;
  for (double v : s.target) all.emplace_back(v, true);
  for (double v : s.nontarget) all.emplace_back(v, false);
  std::sort(all.begin(), all.end());
  // Group tied scores so equal scores get equal calibrated values.
  std::vector<PavGroup> groups;
  for (size_t i = 0; i < all.size();) {
    size_t j = i;
    PavGroup g{all[i].first, 0.0, 0.0};
    while (j < all.size() && all[j].first == all[i].first) {
      g.weight += 1.0;
      if (all[j].second) g.targets += 1.0;
      ++j;
    }
    groups.push_back(g);
    i = j;
  }
  // Stack-based PAV: merge while the fitted means violate monotonicity.
  struct Block {
    double weight;
    double targets;
    size_t ngroups;  // how many score groups this block covers
  };
  std::vector<Block> stack;
  for (const PavGroup &g : groups) {
    Block b{g.weight, g.targets, 1};
    while (!stack.empty() &&
           stack.back().targets * b.weight >= b.targets * stack.back().weight) {
      b.weight += stack.back().weight;
      b.targets += stack.back().targets;
      b.ngroups += stack.back().ngroups;
      stack.pop_back();
    }
    stack.push_back(b);
  }
  std::vector<std::pair<PavGroup, double>> out;
  size_t g = 0;
  for (const Block &b : stack) {
    double p = b.targets / b.weight;
    for (size_t k = 0; k < b.ngroups; ++k, ++g) out.emplace_back(groups[g], p);
  }
  return out;
}

}  // namespace

std::pair<double, double> CllrAndMinCllr(const LabeledScores &s) {
  CheckNonEmpty(s);
  const double nt = static_cast<double>(s.target.size());
  const double nn = static_cast<double>(s.nontarget.size());

  double cllr = 0.0;
  for (double v : s.target) cllr += std::log1p(std::exp(-v)) / (2.0 * nt);
  for (double v : s.nontarget) cllr += std::log1p(std::exp(v)) / (2.0 * nn);
  cllr /= kLog2;

  // minCllr: Cllr of the PAV-recalibrated scores.  The calibrated LLR of a
  // group with posterior p is logit(p) minus the trial-prior log odds; the
  // Cllr contributions are evaluated directly from p so that p = 0 or 1
  // yields exact zero contributions for the classes present.
  const double prior_odds = nt / nn;
  double min_cllr = 0.0;
  for (const auto &[group, p] : PavPosteriors(s)) {
    double nontargets = group.weight - group.targets;
    if (group.targets > 0) {
      // e^{-llr} = ((1-p)/p) * prior_odds
      double e = (1.0 - p) / p * prior_odds;
      min_cllr += group.targets * std::log1p(e) / (2.0 * nt * kLog2);
    }
    if (nontargets > 0) {
      double e = p / (1.0 - p) / prior_odds;
      min_cllr += nontargets * std::log1p(e) / (2.0 * nn * kLog2);
    }
  }
  return {cllr, min_cllr};
}

}  // namespace htplda
