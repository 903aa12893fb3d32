// include/htplda/io.hpp

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

#ifndef HTPLDA_IO_HPP_
#define HTPLDA_IO_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "htplda/model.hpp"
#include "htplda/preprocessing.hpp"
#include "htplda/scoring.hpp"

namespace htplda {

// File formats.  Binary payloads are row-major little-endian float64.
//   model         magic "HTPLDA1\n", text header (D, d, nu; "inf" allowed),
//                 then F (D*d) and W (D*D)
//   embeddings    magic "HTEMB1\n", header "N D", length-prefixed UTF-8 ids,
//                 then the N*D matrix; CSV fallback "id,v1,...,vD" with an
//                 optional header row
//   preprocessor  magic "HTPREP1\n", header (D, project flag, radius), then
//                 mean (D) and whitener (D*D)
//   labels        text lines "<utteranceId> <speakerId>"
//   trials        text lines "<enrollId> <testId> [target|nontarget]"
//   scores        text lines "<enrollId> <testId> <score>"

struct EmbeddingFile {
  std::vector<std::string> ids;
  Matrix X;  // N x D
};

/// Binary or CSV, decided by sniffing the magic string.
EmbeddingFile ReadEmbeddings(const std::string &path);
/// CSV when the path ends in ".csv", binary otherwise.
void WriteEmbeddings(const std::string &path, const EmbeddingFile &data);

HtPldaModel ReadModel(const std::string &path);
void WriteModel(const std::string &path, const HtPldaModel &model);

Preprocessor ReadPreprocessor(const std::string &path);
void WritePreprocessor(const std::string &path, const Preprocessor &p);

/// Ordered (utteranceId, speakerId) pairs; duplicate utterances rejected.
std::vector<std::pair<std::string, std::string>> ReadLabels(
    const std::string &path);
void WriteLabels(const std::string &path,
                 const std::vector<std::pair<std::string, std::string>> &l);

TrialSet ReadTrials(const std::string &path);
void WriteTrials(const std::string &path, const TrialSet &trials);

ScoreSet ReadScores(const std::string &path);
void WriteScores(const std::string &path, const ScoreSet &scores,
                 bool full_precision = false);

/// "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> ReadConfig(const std::string &path);

}  // namespace htplda

#endif  // HTPLDA_IO_HPP_
