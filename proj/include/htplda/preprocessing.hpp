// include/htplda/preprocessing.hpp

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

#ifndef HTPLDA_PREPROCESSING_HPP_
#define HTPLDA_PREPROCESSING_HPP_

#include "htplda/common.hpp"

namespace htplda {

/// Centering + whitening + optional sphere projection, applied in that fixed
/// order: y = whitener (x - mean); if project, y <- radius * y / |y|.
/// Default radius sqrt(D) preserves the expected squared norm of whitened
/// data.
struct Preprocessor {
  Vector mean;
  Matrix whitener;  // upper triangular, whitener' whitener = cov^{-1}
  bool project = false;
  double radius = 0.0;
};

struct PreprocessorOptions {
  bool whiten = true;
  bool project = false;
  double radius = -1.0;    // -1 means sqrt(D)
  bool shrinkage = true;   // covariance shrinkage eps = 1e-6 tr(cov)/D
};

/// Fits mean and whitening transform on the rows of X.  With whiten = false
/// the whitener is the identity (centering only, "global mean
/// normalization").  Throws DataError when N <= D without shrinkage, and
/// NumericalError when the covariance is degenerate even after shrinkage.
Preprocessor FitPreprocessor(const Matrix &X,
                             const PreprocessorOptions &opts = {});

/// Applies the transform row-wise.  Throws NumericalError on a zero vector
/// with projection enabled, DataError on a dimension mismatch.
Matrix ApplyPreprocessor(const Preprocessor &p, const Matrix &X);

}  // namespace htplda

#endif  // HTPLDA_PREPROCESSING_HPP_
