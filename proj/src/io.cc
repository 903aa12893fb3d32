// src/io.cc

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

#include "htplda/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace htplda {

namespace {

constexpr char kModelMagic[] = "HTPLDA1\n";
constexpr char kEmbMagic[] = "HTEMB1\n";
constexpr char kPrepMagic[] = "HTPREP1\n";

std::ifstream OpenIn(const std::string &path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream OpenOut(const std::string &path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

void ExpectMagic(std::istream &in, const char *magic, const std::string &path) {
  std::string got(std::strlen(magic), '\0');
  in.read(got.data(), got.size());
  if (!in || got != magic)
    throw DataError(path + ": bad or missing magic string");
}

// Row-major little-endian float64 payload.  This build assumes a
// little-endian host, as the formats are defined in wire order.
void ReadDoubles(std::istream &in, double *dst, size_t count,
                 const std::string &path) {
  in.read(reinterpret_cast<char *>(dst), count * sizeof(double));
  if (static_cast<size_t>(in.gcount()) != count * sizeof(double))
    throw DataError(path + ": payload shorter than header implies");
}

void WriteDoubles(std::ostream &out, const double *src, size_t count) {
  out.write(reinterpret_cast<const char *>(src), count * sizeof(double));
}

void ReadMatrix(std::istream &in, Matrix *m, const std::string &path) {
  // Eigen stores column-major; the wire format is row-major.
  Matrix rm(m->cols(), m->rows());
  ReadDoubles(in, rm.data(), rm.size(), path);
  *m = rm.transpose();
}

void WriteMatrix(std::ostream &out, const Matrix &m) {
  Matrix rm = m.transpose();
  WriteDoubles(out, rm.data(), rm.size());
}

std::string FullPrec(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> SplitWs(const std::string &line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool HasSuffix(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

HtPldaModel ReadModel(const std::string &path) {
  std::ifstream in = OpenIn(path, true);
  ExpectMagic(in, kModelMagic, path);
  int D = -1, d = -1;
  double nu = 0.0;
  bool have_nu = false;
  for (int i = 0; i < 3; ++i) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": truncated header");
    auto tok = SplitWs(line);
    if (tok.size() != 2) throw DataError(path + ": malformed header line");
    if (tok[0] == "D") {
      D = std::stoi(tok[1]);
    } else if (tok[0] == "d") {
      d = std::stoi(tok[1]);
    } else if (tok[0] == "nu") {
      nu = (tok[1] == "inf") ? kNuInfinity : std::stod(tok[1]);
      have_nu = true;
    } else {
      throw DataError(path + ": unknown header key " + tok[0]);
    }
  }
  if (D <= 0 || d <= 0 || !have_nu)
    throw DataError(path + ": incomplete model header");
  HtPldaModel model;
  model.nu = nu;
  model.F.resize(D, d);
  model.W.resize(D, D);
  ReadMatrix(in, &model.F, path);
  ReadMatrix(in, &model.W, path);
  return model;
}

void WriteModel(const std::string &path, const HtPldaModel &model) {
  std::ofstream out = OpenOut(path, true);
  out << kModelMagic;
  out << "D " << model.Dim() << "\n";
  out << "d " << model.SubspaceDim() << "\n";
  out << "nu " << (model.IsGaussian() ? std::string("inf") : FullPrec(model.nu))
      << "\n";
  WriteMatrix(out, model.F);
  WriteMatrix(out, model.W);
  if (!out) throw DataError("failed writing " + path);
}

namespace {

EmbeddingFile ReadEmbeddingsCsv(const std::string &path) {
  std::ifstream in = OpenIn(path, false);
  EmbeddingFile data;
  std::vector<std::vector<double>> rows;
  std::string line;
  long D = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() < 2) throw DataError(path + ": malformed CSV row");
    if (first) {
      first = false;
      // Header row: second field is not numeric.
      char *end = nullptr;
      std::strtod(fields[1].c_str(), &end);
      if (end == fields[1].c_str() || *end != '\0') continue;
    }
    std::vector<double> row;
    for (size_t i = 1; i < fields.size(); ++i) {
      char *end = nullptr;
      double v = std::strtod(fields[i].c_str(), &end);
      if (end == fields[i].c_str() || *end != '\0')
        throw DataError(path + ": non-numeric value '" + fields[i] + "'");
      if (!std::isfinite(v))
        throw DataError(path + ": non-finite value for id " + fields[0]);
      row.push_back(v);
    }
    if (D < 0) D = static_cast<long>(row.size());
    if (static_cast<long>(row.size()) != D)
      throw DataError(path + ": dimension mismatch in CSV row for id " +
                      fields[0]);
    data.ids.push_back(fields[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no embeddings");
  data.X.resize(rows.size(), D);
  for (size_t i = 0; i < rows.size(); ++i)
    for (long j = 0; j < D; ++j) data.X(i, j) = rows[i][j];
  return data;
}

void CheckUniqueIds(const EmbeddingFile &data, const std::string &path) {
  std::set<std::string> seen;
  for (const auto &id : data.ids)
    if (!seen.insert(id).second)
      throw DataError(path + ": duplicate utterance id " + id);
}

}  // namespace

EmbeddingFile ReadEmbeddings(const std::string &path) {
  {
    std::ifstream probe = OpenIn(path, true);
    std::string head(std::strlen(kEmbMagic), '\0');
    probe.read(head.data(), head.size());
    if (!probe || head != kEmbMagic) {
      EmbeddingFile data = ReadEmbeddingsCsv(path);
      CheckUniqueIds(data, path);
      return data;
    }
  }
  std::ifstream in = OpenIn(path, true);
  ExpectMagic(in, kEmbMagic, path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": truncated header");
  auto tok = SplitWs(line);
  if (tok.size() != 2) throw DataError(path + ": malformed header");
  long N = std::stol(tok[0]), D = std::stol(tok[1]);
  if (N <= 0 || D <= 0) throw DataError(path + ": bad dimensions in header");
  EmbeddingFile data;
  data.ids.reserve(N);
  for (long i = 0; i < N; ++i) {
    uint32_t len = 0;
    in.read(reinterpret_cast<char *>(&len), sizeof(len));
    if (!in) throw DataError(path + ": payload shorter than header implies");
    std::string id(len, '\0');
    in.read(id.data(), len);
    if (!in) throw DataError(path + ": payload shorter than header implies");
    data.ids.push_back(std::move(id));
  }
  data.X.resize(N, D);
  ReadMatrix(in, &data.X, path);
  if (!data.X.allFinite()) throw DataError(path + ": non-finite values");
  CheckUniqueIds(data, path);
  return data;
}

void WriteEmbeddings(const std::string &path, const EmbeddingFile &data) {
  if (data.ids.size() != static_cast<size_t>(data.X.rows()))
    throw DataError("id count does not match embedding count");
  if (HasSuffix(path, ".csv")) {
    std::ofstream out = OpenOut(path, false);
    for (size_t i = 0; i < data.ids.size(); ++i) {
      out << data.ids[i];
      for (long j = 0; j < data.X.cols(); ++j)
        out << ',' << FullPrec(data.X(i, j));
      out << '\n';
    }
    if (!out) throw DataError("failed writing " + path);
    return;
  }
  std::ofstream out = OpenOut(path, true);
  out << kEmbMagic << data.X.rows() << ' ' << data.X.cols() << '\n';
  for (const auto &id : data.ids) {
    uint32_t len = static_cast<uint32_t>(id.size());
    out.write(reinterpret_cast<const char *>(&len), sizeof(len));
    out.write(id.data(), len);
  }
  WriteMatrix(out, data.X);
  if (!out) throw DataError("failed writing " + path);
}

Preprocessor ReadPreprocessor(const std::string &path) {
  std::ifstream in = OpenIn(path, true);
  ExpectMagic(in, kPrepMagic, path);
  int D = -1, project = -1;
  double radius = 0.0;
  for (int i = 0; i < 3; ++i) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": truncated header");
    auto tok = SplitWs(line);
    if (tok.size() != 2) throw DataError(path + ": malformed header line");
    if (tok[0] == "D")
      D = std::stoi(tok[1]);
    else if (tok[0] == "project")
      project = std::stoi(tok[1]);
    else if (tok[0] == "radius")
      radius = std::stod(tok[1]);
    else
      throw DataError(path + ": unknown header key " + tok[0]);
  }
  if (D <= 0 || project < 0)
    throw DataError(path + ": incomplete preprocessor header");
  Preprocessor p;
  p.project = project != 0;
  p.radius = radius;
  p.mean.resize(D);
  ReadDoubles(in, p.mean.data(), D, path);
  p.whitener.resize(D, D);
  ReadMatrix(in, &p.whitener, path);
  return p;
}

void WritePreprocessor(const std::string &path, const Preprocessor &p) {
  std::ofstream out = OpenOut(path, true);
  out << kPrepMagic;
  out << "D " << p.mean.size() << "\n";
  out << "project " << (p.project ? 1 : 0) << "\n";
  out << "radius " << FullPrec(p.radius) << "\n";
  WriteDoubles(out, p.mean.data(), p.mean.size());
  WriteMatrix(out, p.whitener);
  if (!out) throw DataError("failed writing " + path);
}

std::vector<std::pair<std::string, std::string>> ReadLabels(
    const std::string &path) {
  std::ifstream in = OpenIn(path, false);
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    auto tok = SplitWs(line);
    if (tok.empty()) continue;
    if (tok.size() != 2)
      throw DataError(path + ": expected '<utteranceId> <speakerId>'");
    if (!seen.insert(tok[0]).second)
      throw DataError(path + ": utterance labeled twice: " + tok[0]);
    out.emplace_back(tok[0], tok[1]);
  }
  return out;
}

void WriteLabels(const std::string &path,
                 const std::vector<std::pair<std::string, std::string>> &l) {
  std::ofstream out = OpenOut(path, false);
  for (const auto &[utt, spk] : l) out << utt << ' ' << spk << '\n';
  if (!out) throw DataError("failed writing " + path);
}

TrialSet ReadTrials(const std::string &path) {
  std::ifstream in = OpenIn(path, false);
  TrialSet out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  while (std::getline(in, line)) {
    auto tok = SplitWs(line);
    if (tok.empty()) continue;
    if (tok.size() < 2 || tok.size() > 3)
      throw DataError(path + ": expected '<enrollId> <testId> [label]'");
    Trial t;
    t.enroll = tok[0];
    t.test = tok[1];
    if (tok.size() == 3) {
      if (tok[2] == "target")
        t.label = 1;
      else if (tok[2] == "nontarget")
        t.label = 0;
      else
        throw DataError(path + ": bad trial label '" + tok[2] + "'");
    }
    if (!seen.emplace(t.enroll, t.test).second)
      throw DataError(path + ": duplicate trial " + t.enroll + " " + t.test);
    out.trials.push_back(std::move(t));
  }
  return out;
}

void WriteTrials(const std::string &path, const TrialSet &trials) {
  std::ofstream out = OpenOut(path, false);
  for (const Trial &t : trials.trials) {
    out << t.enroll << ' ' << t.test;
    if (t.label == 1)
      out << " target";
    else if (t.label == 0)
      out << " nontarget";
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

ScoreSet ReadScores(const std::string &path) {
  std::ifstream in = OpenIn(path, false);
  ScoreSet out;
  std::string line;
  while (std::getline(in, line)) {
    auto tok = SplitWs(line);
    if (tok.empty()) continue;
    if (tok.size() != 3)
      throw DataError(path + ": expected '<enrollId> <testId> <score>'");
    Trial t;
    t.enroll = tok[0];
    t.test = tok[1];
    out.trials.trials.push_back(t);
    char *end = nullptr;
    double v = std::strtod(tok[2].c_str(), &end);
    if (end == tok[2].c_str() || *end != '\0' || !std::isfinite(v))
      throw DataError(path + ": bad score '" + tok[2] + "'");
    out.scores.push_back(v);
  }
  return out;
}

void WriteScores(const std::string &path, const ScoreSet &scores,
                 bool full_precision) {
  std::ofstream out = OpenOut(path, false);
  out << std::setprecision(full_precision ? 17 : 6);
  for (size_t i = 0; i < scores.scores.size(); ++i) {
    const Trial &t = scores.trials.trials[i];
    out << t.enroll << ' ' << t.test << ' ' << scores.scores[i] << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

std::map<std::string, std::string> ReadConfig(const std::string &path) {
  std::ifstream in = OpenIn(path, false);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (!SplitWs(line).empty())
        throw DataError(path + ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw DataError(path + ": empty config key");
    out[key] = value;
  }
  return out;
}

}  // namespace htplda
