// tools/htplda_main.cc

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

// Command-line driver: sample / prep / train / score / snorm / adapt / eval.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htplda/io.hpp"
#include "htplda/metrics.hpp"
#include "htplda/model.hpp"
#include "htplda/preprocessing.hpp"
#include "htplda/scoring.hpp"
#include "htplda/training.hpp"

namespace htplda {
namespace {

// Removes output files written during a failed command so no partial outputs
// survive.  Commit() once everything is on disk.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (committed_) return;
    for (const auto &p : paths_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }
  void Add(const std::string &path) { paths_.push_back(path); }
  void Commit() { committed_ = true; }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

// Echo of the effective settings next to the main output file.
void WriteSidecar(const std::string &out_path, OutputGuard *guard,
                  const std::vector<std::pair<std::string, std::string>> &kv) {
  std::string path = out_path + ".config";
  guard->Add(path);
  std::ofstream out(path);
  for (const auto &[k, v] : kv) out << k << " = " << v << "\n";
  if (!out) throw DataError("failed writing " + path);
}

double ParseNu(const std::string &s) {
  if (s == "inf" || s == "INF" || s == "infinity" || s == "INFINITY")
    return kNuInfinity;
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || !(v > 0))
      throw UsageError("bad --nu value '" + s + "'");
    return v;
  } catch (const std::logic_error &) {
    throw UsageError("bad --nu value '" + s + "'");
  }
}

std::string FormatNu(double nu) {
  if (std::isinf(nu)) return "inf";
  std::ostringstream os;
  os << nu;
  return os.str();
}

LabeledEmbeddings JoinLabels(const EmbeddingFile &emb,
                             const std::string &label_path) {
  std::map<std::string, std::string> utt_to_spk;
  for (const auto &[utt, spk] : ReadLabels(label_path)) utt_to_spk[utt] = spk;
  std::vector<std::string> labels(emb.ids.size());
  for (size_t i = 0; i < emb.ids.size(); ++i) {
    auto it = utt_to_spk.find(emb.ids[i]);
    if (it == utt_to_spk.end())
      throw DataError("no speaker label for utterance " + emb.ids[i]);
    labels[i] = it->second;
  }
  return LabeledEmbeddings::FromLabels(emb.X, labels);
}

std::map<std::string, std::string> ReadIdMap(const std::string &path) {
  std::map<std::string, std::string> m;
  if (path.empty()) return m;
  for (const auto &[utt, id] : ReadLabels(path)) m[utt] = id;
  return m;
}

int CmdSample(const std::string &model_path, int speakers, int per_speaker,
              uint64_t seed, const std::string &out,
              const std::string &labels_out) {
  if (speakers <= 0 || per_speaker <= 0)
    throw UsageError("--speakers and --per-speaker must be positive");
  HtPldaModel model = ReadModel(model_path);
  SampleResult s =
      Sample(model, std::vector<int>(speakers, per_speaker), seed);

  EmbeddingFile emb;
  emb.X = s.data.X;
  std::vector<std::pair<std::string, std::string>> labels;
  char buf[64];
  for (int i = 0; i < speakers; ++i) {
    std::snprintf(buf, sizeof(buf), "spk%05d", i);
    std::string spk = buf;
    for (int j = 0; j < per_speaker; ++j) {
      std::snprintf(buf, sizeof(buf), "spk%05d_utt%03d", i, j);
      emb.ids.push_back(buf);
      labels.emplace_back(buf, spk);
    }
  }

  OutputGuard guard;
  guard.Add(out);
  WriteEmbeddings(out, emb);
  guard.Add(labels_out);
  WriteLabels(labels_out, labels);
  WriteSidecar(out, &guard,
               {{"model", model_path},
                {"speakers", std::to_string(speakers)},
                {"per-speaker", std::to_string(per_speaker)},
                {"seed", std::to_string(seed)}});
  guard.Commit();
  return 0;
}

int CmdPrepFit(const std::string &in, bool whiten, bool project,
               double ln_radius, const std::string &out) {
  EmbeddingFile emb = ReadEmbeddings(in);
  PreprocessorOptions opts;
  opts.whiten = whiten;
  opts.project = project;
  opts.radius = ln_radius;
  Preprocessor p = FitPreprocessor(emb.X, opts);

  OutputGuard guard;
  guard.Add(out);
  WritePreprocessor(out, p);
  WriteSidecar(out, &guard,
               {{"in", in},
                {"whiten", whiten ? "true" : "false"},
                {"project", project ? "true" : "false"},
                {"ln-radius", std::to_string(p.radius)}});
  guard.Commit();
  return 0;
}

int CmdPrepApply(const std::string &prep_path, const std::string &in,
                 const std::string &out) {
  Preprocessor p = ReadPreprocessor(prep_path);
  EmbeddingFile emb = ReadEmbeddings(in);
  emb.X = ApplyPreprocessor(p, emb.X);
  OutputGuard guard;
  guard.Add(out);
  WriteEmbeddings(out, emb);
  guard.Commit();
  return 0;
}

int CmdTrain(const std::string &in, const std::string &labels_path,
             const std::string &nu_str, int dim, int iters, uint64_t seed,
             double tolerance, int min_utts, const std::string &init_model,
             bool no_min_div_z, bool no_min_div_lambda, const std::string &out,
             const std::string &trace_path) {
  TrainConfig cfg;
  cfg.nu = ParseNu(nu_str);
  cfg.d = dim;
  cfg.iterations = iters;
  cfg.seed = seed;
  cfg.tolerance = tolerance;
  cfg.min_div_z = !no_min_div_z;
  cfg.min_div_lambda = !no_min_div_lambda;

  LabeledEmbeddings data = JoinLabels(ReadEmbeddings(in), labels_path);
  if (min_utts > 1) data = data.FilterMinUtterances(min_utts);

  HtPldaModel init;
  const HtPldaModel *init_ptr = nullptr;
  if (!init_model.empty()) {
    init = ReadModel(init_model);
    init_ptr = &init;
  }
  TrainResult res = Train(data, cfg, init_ptr, &std::cerr);

  OutputGuard guard;
  guard.Add(out);
  WriteModel(out, res.model);
  if (!trace_path.empty()) {
    guard.Add(trace_path);
    std::ofstream trace(trace_path);
    trace << "iter,bound,delta,gamma,seconds\n";
    trace.precision(17);
    for (const auto &t : res.trace)
      trace << t.iter << ',' << t.bound << ',' << t.delta << ',' << t.gamma
            << ',' << t.seconds << '\n';
    if (!trace) throw DataError("failed writing " + trace_path);
  }
  WriteSidecar(out, &guard,
               {{"in", in},
                {"labels", labels_path},
                {"nu", FormatNu(cfg.nu)},
                {"dim", std::to_string(dim)},
                {"iters", std::to_string(iters)},
                {"seed", std::to_string(seed)},
                {"tolerance", std::to_string(tolerance)},
                {"min-utts", std::to_string(min_utts)},
                {"init-model", init_model}});
  guard.Commit();
  return 0;
}

int CmdScore(const std::string &model_path, const std::string &enroll_path,
             const std::string &enroll_map, const std::string &test_path,
             const std::string &trials_path, bool full_precision,
             const std::string &out) {
  HtPldaModel model = ReadModel(model_path);
  ScoringModel sm = Diagonalize(model);
  EmbeddingFile enroll = ReadEmbeddings(enroll_path);
  EmbeddingFile test = ReadEmbeddings(test_path);
  auto enroll_me =
      ExtractGrouped(sm, enroll.ids, enroll.X, ReadIdMap(enroll_map));
  auto test_me = ExtractGrouped(sm, test.ids, test.X, {});
  ScoreSet scores = ScoreTrials(sm, enroll_me, test_me,
                                ReadTrials(trials_path));

  OutputGuard guard;
  guard.Add(out);
  WriteScores(out, scores, full_precision);
  WriteSidecar(out, &guard,
               {{"model", model_path},
                {"enroll", enroll_path},
                {"enroll-map", enroll_map},
                {"test", test_path},
                {"trials", trials_path}});
  guard.Commit();
  return 0;
}

int CmdSnorm(const std::string &scores_path, const std::string &cohort_path,
             const std::string &model_path, const std::string &enroll_path,
             const std::string &enroll_map, const std::string &test_path,
             int top_k, bool full_precision, const std::string &out) {
  ScoreSet raw = ReadScores(scores_path);
  HtPldaModel model = ReadModel(model_path);
  ScoringModel sm = Diagonalize(model);

  EmbeddingFile cohort = ReadEmbeddings(cohort_path);
  std::vector<MetaEmbedding> cohort_me;
  cohort_me.reserve(cohort.ids.size());
  for (int i = 0; i < cohort.X.rows(); ++i)
    cohort_me.push_back(Extract(sm, Vector(cohort.X.row(i).transpose())));

  EmbeddingFile enroll = ReadEmbeddings(enroll_path);
  EmbeddingFile test = ReadEmbeddings(test_path);
  auto enroll_me =
      ExtractGrouped(sm, enroll.ids, enroll.X, ReadIdMap(enroll_map));
  auto test_me = ExtractGrouped(sm, test.ids, test.X, {});

  auto side_cohort =
      [&](const std::map<std::string, MetaEmbedding> &side,
          const char *what) {
        std::map<std::string, std::vector<double>> result;
        for (const auto &[id, me] : side) {
          std::vector<double> scores(cohort_me.size());
          for (size_t c = 0; c < cohort_me.size(); ++c)
            scores[c] = ScoreTrial(sm, me, cohort_me[c]);
          result[id] = std::move(scores);
        }
        (void)what;
        return result;
      };
  ScoreSet normed = SnormAdaptive(raw, side_cohort(enroll_me, "enroll"),
                                  side_cohort(test_me, "test"), top_k);

  OutputGuard guard;
  guard.Add(out);
  WriteScores(out, normed, full_precision);
  WriteSidecar(out, &guard,
               {{"scores", scores_path},
                {"cohort", cohort_path},
                {"model", model_path},
                {"enroll", enroll_path},
                {"enroll-map", enroll_map},
                {"test", test_path},
                {"top-k", std::to_string(top_k)}});
  guard.Commit();
  return 0;
}

int CmdAdapt(const std::string &outdomain, const std::string &indomain,
             double alpha, const std::string &out_model) {
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("--alpha must be in [0,1]");
  HtPldaModel adapted =
      AdaptInterpolate(ReadModel(outdomain), ReadModel(indomain), alpha);
  OutputGuard guard;
  guard.Add(out_model);
  WriteModel(out_model, adapted);
  WriteSidecar(out_model, &guard,
               {{"outdomain", outdomain},
                {"indomain", indomain},
                {"alpha", std::to_string(alpha)}});
  guard.Commit();
  return 0;
}

int CmdEval(const std::string &scores_path, const std::string &trials_path,
            const std::string &metrics, const std::string &out) {
  ScoreSet scores = ReadScores(scores_path);
  TrialSet trials = ReadTrials(trials_path);

  std::map<std::pair<std::string, std::string>, double> score_of;
  for (size_t i = 0; i < scores.scores.size(); ++i) {
    const Trial &t = scores.trials.trials[i];
    score_of[{t.enroll, t.test}] = scores.scores[i];
  }
  LabeledScores ls;
  for (const Trial &t : trials.trials) {
    if (t.label < 0)
      throw DataError("trial " + t.enroll + " " + t.test + " has no label");
    auto it = score_of.find({t.enroll, t.test});
    if (it == score_of.end())
      throw DataError("missing score for trial " + t.enroll + " " + t.test);
    (t.label == 1 ? ls.target : ls.nontarget).push_back(it->second);
  }

  std::vector<std::pair<std::string, double>> report;
  std::stringstream tokens(metrics);
  std::string tok;
  while (std::getline(tokens, tok, ',')) {
    if (tok == "eer") {
      report.emplace_back("eer_pct", 100.0 * Eer(ls));
    } else if (tok.rfind("mindcf:", 0) == 0) {
      double pt = 0;
      try {
        pt = std::stod(tok.substr(7));
      } catch (const std::logic_error &) {
        throw UsageError("bad metric '" + tok + "'");
      }
      if (pt <= 0 || pt >= 1) throw UsageError("bad metric '" + tok + "'");
      report.emplace_back(tok, MinDcf(ls, pt, 1.0, 1.0));
    } else if (tok == "cprimary") {
      report.emplace_back(tok, CPrimary(ls));
    } else if (tok == "cllr") {
      auto [cllr, min_cllr] = CllrAndMinCllr(ls);
      report.emplace_back("cllr", cllr);
      report.emplace_back("mincllr", min_cllr);
    } else {
      throw UsageError("unknown metric '" + tok + "'");
    }
  }

  for (const auto &[name, value] : report)
    std::printf("%-14s %12.6f\n", name.c_str(), value);

  OutputGuard guard;
  guard.Add(out);
  std::ofstream csv(out);
  csv << "metric,value\n";
  csv.precision(12);
  for (const auto &[name, value] : report) csv << name << ',' << value << '\n';
  if (!csv) throw DataError("failed writing " + out);
  guard.Commit();
  return 0;
}

// Appends "key = value" config-file entries as trailing --key=value tokens.
// All options use a take-first policy, so explicit command-line flags win.
void AppendConfig(std::vector<std::string> *args) {
  std::string path;
  for (size_t i = 0; i < args->size(); ++i) {
    const std::string &a = (*args)[i];
    if (a == "--config" && i + 1 < args->size()) path = (*args)[i + 1];
    else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  }
  if (path.empty()) return;
  for (const auto &[k, v] : ReadConfig(path))
    args->push_back("--" + k + "=" + v);
}

void TakeFirstEverywhere(CLI::App *app) {
  for (CLI::Option *opt : app->get_options())
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeFirst);
  for (CLI::App *sub : app->get_subcommands({})) TakeFirstEverywhere(sub);
}

int Run(int argc, char **argv) {
  CLI::App app{"Heavy-tailed PLDA speaker verification backend"};
  app.require_subcommand(1);

  int threads = 0;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", "config file with 'key = value' defaults")
        ->check(CLI::ExistingFile);
    sub->add_option("--threads", threads, "Eigen thread count (0 = default)");
  };

  // sample
  std::string s_model, s_out, s_labels_out;
  int s_speakers = 0, s_per = 0;
  uint64_t s_seed = 0;
  CLI::App *sample = app.add_subcommand("sample", "draw synthetic embeddings");
  sample->add_option("--model", s_model)->required();
  sample->add_option("--speakers", s_speakers)->required();
  sample->add_option("--per-speaker", s_per)->required();
  sample->add_option("--seed", s_seed);
  sample->add_option("--out", s_out)->required();
  sample->add_option("--labels-out", s_labels_out)->required();
  add_common(sample);

  // prep fit / prep apply
  CLI::App *prep = app.add_subcommand("prep", "preprocessing transforms");
  prep->require_subcommand(1);
  std::string pf_in, pf_out;
  bool pf_center = false, pf_whiten = false, pf_project = false;
  double pf_radius = -1.0;
  CLI::App *prep_fit = prep->add_subcommand("fit", "fit a preprocessor");
  prep_fit->add_option("--in", pf_in)->required();
  prep_fit->add_flag("--center", pf_center, "always on; kept for clarity");
  prep_fit->add_flag("--whiten", pf_whiten);
  prep_fit->add_flag("--project", pf_project);
  prep_fit->add_option("--ln-radius", pf_radius, "-1 means sqrt(D)");
  prep_fit->add_option("--out", pf_out)->required();
  add_common(prep_fit);

  std::string pa_prep, pa_in, pa_out;
  CLI::App *prep_apply = prep->add_subcommand("apply", "apply a preprocessor");
  prep_apply->add_option("--prep", pa_prep)->required();
  prep_apply->add_option("--in", pa_in)->required();
  prep_apply->add_option("--out", pa_out)->required();
  add_common(prep_apply);

  // train
  std::string t_in, t_labels, t_nu = "inf", t_out, t_trace, t_init;
  int t_dim = 0, t_iters = 50, t_min_utts = 1;
  uint64_t t_seed = 0;
  double t_tol = 1e-6;
  bool t_no_mdz = false, t_no_mdl = false;
  CLI::App *train = app.add_subcommand("train", "variational model training");
  train->add_option("--in", t_in)->required();
  train->add_option("--labels", t_labels)->required();
  train->add_option("--nu", t_nu, "degrees of freedom, number or 'inf'");
  train->add_option("--dim", t_dim, "speaker subspace dimension")->required();
  train->add_option("--iters", t_iters);
  train->add_option("--seed", t_seed);
  train->add_option("--tolerance", t_tol, "relative bound improvement stop");
  train->add_option("--min-utts", t_min_utts,
                    "drop speakers with fewer utterances");
  train->add_option("--init-model", t_init, "continue from this model");
  train->add_flag("--no-min-div-z", t_no_mdz);
  train->add_flag("--no-min-div-lambda", t_no_mdl);
  train->add_option("--out", t_out)->required();
  train->add_option("--trace", t_trace, "per-iteration bound CSV");
  add_common(train);

  // score
  std::string sc_model, sc_enroll, sc_map, sc_test, sc_trials, sc_out;
  bool sc_full = false;
  CLI::App *score = app.add_subcommand("score", "trial LLR scoring");
  score->add_option("--model", sc_model)->required();
  score->add_option("--enroll", sc_enroll)->required();
  score->add_option("--enroll-map", sc_map,
                    "utterance -> enrollment id map for multi-session");
  score->add_option("--test", sc_test)->required();
  score->add_option("--trials", sc_trials)->required();
  score->add_flag("--full-precision", sc_full);
  score->add_option("--out", sc_out)->required();
  add_common(score);

  // snorm
  std::string sn_scores, sn_cohort, sn_model, sn_enroll, sn_map, sn_test,
      sn_out;
  int sn_topk = 200;
  bool sn_full = false;
  CLI::App *snorm =
      app.add_subcommand("snorm", "adaptive symmetric score normalization");
  snorm->add_option("--scores", sn_scores)->required();
  snorm->add_option("--cohort", sn_cohort)->required();
  snorm->add_option("--model", sn_model)->required();
  snorm->add_option("--enroll", sn_enroll)->required();
  snorm->add_option("--enroll-map", sn_map);
  snorm->add_option("--test", sn_test)->required();
  snorm->add_option("--top-k", sn_topk);
  snorm->add_flag("--full-precision", sn_full);
  snorm->add_option("--out", sn_out)->required();
  add_common(snorm);

  // adapt
  std::string a_out, a_outdomain, a_indomain;
  double a_alpha = 0.5;
  CLI::App *adapt = app.add_subcommand("adapt", "domain interpolation");
  adapt->add_option("--out-model", a_out)->required();
  adapt->add_option("--outdomain", a_outdomain)->required();
  adapt->add_option("--indomain", a_indomain)->required();
  adapt->add_option("--alpha", a_alpha, "in-domain weight in [0,1]");
  add_common(adapt);

  // eval
  std::string e_scores, e_trials, e_out,
      e_metrics = "eer,mindcf:0.01,mindcf:0.005,cprimary,cllr";
  CLI::App *eval = app.add_subcommand("eval", "detection metrics report");
  eval->add_option("--scores", e_scores)->required();
  eval->add_option("--trials", e_trials)->required();
  eval->add_option("--metrics", e_metrics);
  eval->add_option("--out", e_out)->required();
  add_common(eval);

  TakeFirstEverywhere(&app);

  std::vector<std::string> args(argv + 1, argv + argc);
  AppendConfig(&args);
  // CLI11 consumes reversed argument vectors.
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }

  if (threads > 0) Eigen::setNbThreads(threads);

  if (sample->parsed())
    return CmdSample(s_model, s_speakers, s_per, s_seed, s_out, s_labels_out);
  if (prep_fit->parsed())
    return CmdPrepFit(pf_in, pf_whiten, pf_project, pf_radius, pf_out);
  if (prep_apply->parsed()) return CmdPrepApply(pa_prep, pa_in, pa_out);
  if (train->parsed())
    return CmdTrain(t_in, t_labels, t_nu, t_dim, t_iters, t_seed, t_tol,
                    t_min_utts, t_init, t_no_mdz, t_no_mdl, t_out, t_trace);
  if (score->parsed())
    return CmdScore(sc_model, sc_enroll, sc_map, sc_test, sc_trials, sc_full,
                    sc_out);
  if (snorm->parsed())
    return CmdSnorm(sn_scores, sn_cohort, sn_model, sn_enroll, sn_map,
                    sn_test, sn_topk, sn_full, sn_out);
  if (adapt->parsed()) return CmdAdapt(a_outdomain, a_indomain, a_alpha, a_out);
  if (eval->parsed()) return CmdEval(e_scores, e_trials, e_metrics, e_out);
  throw UsageError("no command given");
}

}  // namespace
}  // namespace htplda

int main(int argc, char **argv) {
  try {
    return htplda::Run(argc, argv);
  } catch (const htplda::UsageError &e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  } catch (const htplda::DataError &e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return 2;
  } catch (const htplda::NumericalError &e) {
    std::cerr << "numerical error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
}
