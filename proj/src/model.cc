// src/model.cc

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

#include "htplda/model.hpp"

#include <cmath>
#include <random>
#include <unordered_map>

namespace htplda {

std::vector<std::string> ValidateModel(const HtPldaModel &model) {
  std::vector<std::string> report;
  const int D = model.Dim();
  const int d = model.SubspaceDim();
  if (D <= 0 || d <= 0) {
    report.push_back("empty F");
    return report;
  }
  if (d >= D) report.push_back("d must be < D");
  if (!(model.nu > 0) && !std::isinf(model.nu))
    report.push_back("nu must be positive or infinite");
  if (!model.F.allFinite()) report.push_back("F has non-finite entries");
  if (model.W.rows() != D || model.W.cols() != D) {
    report.push_back("W shape does not match F");
    return report;
  }
  if (!model.W.allFinite()) {
    report.push_back("W has non-finite entries");
    return report;
  }
  const double wscale = MaxAbs(model.W);
  if ((model.W - model.W.transpose()).cwiseAbs().maxCoeff() >
      kStructuralTol * wscale)
    report.push_back("W not symmetric");
  Eigen::LLT<Matrix> llt(Matrix((model.W + model.W.transpose()) / 2.0));
  if (llt.info() != Eigen::Success)
    report.push_back("W not positive definite");
  else if (d < D) {
    // Full column rank of F in the W metric: F'WF must be invertible.
    Matrix b0 = model.F.transpose() * model.W * model.F;
    Eigen::FullPivLU<Matrix> lu(b0);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) report.push_back("F'WF singular");
  }
  return report;
}

Projections Precompute(const HtPldaModel &model) {
  Projections proj;
  proj.FtW = model.F.transpose() * model.W;  // d x D
  proj.B0 = proj.FtW * model.F;
  proj.B0 = (proj.B0 + proj.B0.transpose()) / 2.0;
  Eigen::LLT<Matrix> llt(proj.B0);
  if (llt.info() != Eigen::Success)
    throw NumericalError("degenerate speaker subspace (B0 not PD)");
  // G = W - W F B0^{-1} F' W, symmetrized.
  proj.G = model.W - proj.FtW.transpose() * llt.solve(proj.FtW);
  proj.G = (proj.G + proj.G.transpose()) / 2.0;
  proj.nu_prime = model.nu + model.Dim() - model.SubspaceDim();
  return proj;
}

GaussianLikelihood LikelihoodStats(const Projections &proj,
                                   const HtPldaModel &model, const Vector &r) {
  if (!r.allFinite()) throw DataError("non-finite embedding vector");
  GaussianLikelihood gl;
  if (model.IsGaussian()) {
    gl.b = 1.0;
  } else {
    double rGr = r.dot(proj.G * r);
    if (rGr < 0) rGr = 0;  // clip tiny negative rounding
    gl.b = proj.nu_prime / (model.nu + rGr);
  }
  gl.a = gl.b * (proj.FtW * r);
  return gl;
}

double LogTDensity(const HtPldaModel &model, const Vector &z,
                   const Vector &r) {
  const int D = model.Dim();
  Vector resid = r - model.F * z;
  Eigen::LLT<Matrix> llt(model.W);
  if (llt.info() != Eigen::Success)
    throw NumericalError("W not positive definite");
  double logdet_w = 0.0;
  for (int i = 0; i < D; ++i)
    logdet_w += 2.0 * std::log(llt.matrixL()(i, i));
  double delta = resid.dot(model.W * resid);
  if (model.IsGaussian()) {
    return -0.5 * D * std::log(2.0 * M_PI) + 0.5 * logdet_w - 0.5 * delta;
  }
  const double nu = model.nu;
  return std::lgamma((nu + D) / 2.0) - std::lgamma(nu / 2.0) -
         0.5 * D * std::log(nu * M_PI) + 0.5 * logdet_w -
         0.5 * (nu + D) * std::log1p(delta / nu);
}

LabeledEmbeddings LabeledEmbeddings::FromLabels(
    Matrix X, const std::vector<std::string> &labels) {
  if (static_cast<size_t>(X.rows()) != labels.size())
    throw DataError("label count does not match embedding count");
  LabeledEmbeddings out;
  out.X = std::move(X);
  out.speaker.resize(labels.size());
  std::unordered_map<std::string, int> index;
  for (size_t i = 0; i < labels.size(); ++i) {
    auto it = index.find(labels[i]);
    int s;
    if (it == index.end()) {
      s = static_cast<int>(out.groups.size());
      index.emplace(labels[i], s);
      out.groups.emplace_back();
      out.speaker_names.push_back(labels[i]);
    } else {
      s = it->second;
    }
    out.speaker[i] = s;
    out.groups[s].push_back(static_cast<int>(i));
  }
  return out;
}

LabeledEmbeddings LabeledEmbeddings::FilterMinUtterances(int min_utts) const {
  std::vector<int> keep_rows;
  std::vector<int> keep_speakers;
  for (int s = 0; s < NumSpeakers(); ++s) {
    if (static_cast<int>(groups[s].size()) >= min_utts) {
      keep_speakers.push_back(s);
      for (int j : groups[s]) keep_rows.push_back(j);
    }
  }
  LabeledEmbeddings out;
  out.X.resize(keep_rows.size(), X.cols());
  out.speaker.resize(keep_rows.size());
  out.groups.resize(keep_speakers.size());
  for (size_t s = 0; s < keep_speakers.size(); ++s)
    out.speaker_names.push_back(speaker_names.empty()
                                    ? std::to_string(keep_speakers[s])
                                    : speaker_names[keep_speakers[s]]);
  std::unordered_map<int, int> remap;
  for (size_t s = 0; s < keep_speakers.size(); ++s)
    remap[keep_speakers[s]] = static_cast<int>(s);
  for (size_t i = 0; i < keep_rows.size(); ++i) {
    out.X.row(i) = X.row(keep_rows[i]);
    int s = remap[speaker[keep_rows[i]]];
    out.speaker[i] = s;
    out.groups[s].push_back(static_cast<int>(i));
  }
  return out;
}

SampleResult Sample(const HtPldaModel &model, const std::vector<int> &counts,
                    uint64_t seed) {
  const int D = model.Dim();
  const int d = model.SubspaceDim();
  const int S = static_cast<int>(counts.size());
  int n = 0;
  for (int c : counts) {
    if (c < 1) throw DataError("per-speaker count must be >= 1");
    n += c;
  }

  // One Cholesky of W^{-1} per call: with W = Lw Lw', A = Lw^{-T} satisfies
  // A A' = W^{-1}, so r = Fz + lambda^{-1/2} A eps.
  Eigen::LLT<Matrix> llt(model.W);
  if (llt.info() != Eigen::Success)
    throw NumericalError("W not positive definite");
  Matrix noise_chol =
      llt.matrixL().transpose().solve(Matrix::Identity(D, D));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(model.nu / 2.0, 2.0 / model.nu);

  SampleResult res;
  res.data.X.resize(n, D);
  res.data.speaker.resize(n);
  res.data.groups.resize(S);
  res.z.resize(S, d);
  res.lambda.resize(n);

  int row = 0;
  for (int s = 0; s < S; ++s) {
    res.data.speaker_names.push_back("spk" + std::to_string(s));
    Vector z(d);
    for (int k = 0; k < d; ++k) z(k) = normal(rng);
    res.z.row(s) = z.transpose();
    Vector mean = model.F * z;
    for (int j = 0; j < counts[s]; ++j, ++row) {
      double lambda = model.IsGaussian() ? 1.0 : gamma(rng);
      Vector eps(D);
      for (int k = 0; k < D; ++k) eps(k) = normal(rng);
      res.data.X.row(row) =
          (mean + noise_chol * eps / std::sqrt(lambda)).transpose();
      res.data.speaker[row] = s;
      res.data.groups[s].push_back(row);
      res.lambda[row] = lambda;
    }
  }
  return res;
}

}  // namespace htplda
