// src/preprocessing.cc

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

#include "htplda/preprocessing.hpp"

#include <cmath>

namespace htplda {

Preprocessor FitPreprocessor(const Matrix &X, const PreprocessorOptions &opts) {
  const long n = X.rows();
  const long D = X.cols();
  if (n < 1 || D < 1) throw DataError("empty embedding set");
  Preprocessor p;
  p.mean = X.colwise().mean();
  p.project = opts.project;
  p.radius = opts.radius > 0 ? opts.radius : std::sqrt(static_cast<double>(D));
  if (!opts.whiten) {
    p.whitener = Matrix::Identity(D, D);
    return p;
  }
  if (!opts.shrinkage && n <= D)
    throw DataError("need more than D rows to whiten without shrinkage");
  Matrix centered = X.rowwise() - p.mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n);
  double eps = opts.shrinkage ? 1e-6 * cov.trace() / D : 0.0;
  cov += eps * Matrix::Identity(D, D);
  Eigen::LLT<Matrix> cov_llt(cov);
  if (cov_llt.info() != Eigen::Success)
    throw NumericalError("degenerate covariance");
  Matrix cov_inv = cov_llt.solve(Matrix::Identity(D, D));
  cov_inv = (cov_inv + cov_inv.transpose()) / 2.0;
  Eigen::LLT<Matrix> inv_llt(cov_inv);
  if (inv_llt.info() != Eigen::Success)
    throw NumericalError("degenerate covariance");
  // cov_inv = M M' with M lower; whitener = M' satisfies both
  // whitener' whitener = cov_inv and whitener cov whitener' = I.
  p.whitener = Matrix(inv_llt.matrixL()).transpose();
  return p;
}

Matrix ApplyPreprocessor(const Preprocessor &p, const Matrix &X) {
  if (X.cols() != p.mean.size())
    throw DataError("embedding dimension does not match preprocessor");
  Matrix Y = (X.rowwise() - p.mean.transpose()) * p.whitener.transpose();
  if (p.project) {
    for (long i = 0; i < Y.rows(); ++i) {
      double norm = Y.row(i).norm();
      if (norm == 0.0)
        throw NumericalError("cannot project zero vector onto sphere");
      Y.row(i) *= p.radius / norm;
    }
  }
  return Y;
}

}  // namespace htplda
