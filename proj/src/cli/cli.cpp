#include "iadfp/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iadfp/checkpoint.hpp"
#include "iadfp/config.hpp"
#include "iadfp/errors.hpp"
#include "iadfp/failmetrics.hpp"
#include "iadfp/oracles/suites.hpp"
#include "iadfp/iad_loss.hpp"
#include "iadfp/training.hpp"

namespace iadfp::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// A failure the user can fix (bad config, mismatched checkpoint).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config;
  std::vector<std::string> checkpoints;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = load_config(flags.config);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.train.seed = *flags.seed;
  }
  if (!flags.out_dir.empty()) cfg.output_directory = flags.out_dir;
  fs::create_directories(cfg.output_directory);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_epochs(std::ostream& out, const TrainLog& log) {
  for (const auto& e : log.epochs) {
    char line[160];
    std::snprintf(line, sizeof line, "epoch %3zu  loss %.6f  train_acc %.4f  val_acc %.4f  lambda_t %.4f  %.2fs",
                  e.epoch, e.train_loss, e.train_accuracy, e.validation_accuracy, e.lambda_t, e.wall_seconds);
    out << line << "\n";
  }
}

// The classifier the config describes must be the one in the checkpoint.
void require_matching_classifier(const RunConfig& cfg, const Dataset& data, const Checkpoint& ckpt,
                                 const std::string& path) {
  const auto expected = build_network(cfg.model.architecture, data.example_shape(),
                                      static_cast<std::size_t>(data.num_classes), cfg.model.head);
  if (!(ckpt.spec == expected)) {
    throw UsageError("checkpoint " + path + " does not match model '" + cfg.model.architecture +
                     "' with head " + std::string(to_string(cfg.model.head)) + " on this data");
  }
}

struct LoadedModels {
  Checkpoint classifier;
  std::optional<ConfidenceNet> confidence;
};

LoadedModels load_models(const RunConfig& cfg, const Dataset& data, const std::vector<std::string>& paths) {
  LoadedModels m;
  bool have_classifier = false;
  std::optional<Checkpoint> conf;
  for (const auto& p : paths) {
    Checkpoint ck = load_checkpoint(p);
    if (ck.spec.head() == HeadKind::confidence) {
      if (conf) throw UsageError("more than one confidence checkpoint given");
      conf = std::move(ck);
    } else {
      if (have_classifier) throw UsageError("more than one classifier checkpoint given");
      require_matching_classifier(cfg, data, ck, p);
      m.classifier = std::move(ck);
      have_classifier = true;
    }
  }
  if (!have_classifier) throw UsageError("a classifier checkpoint is required (--checkpoint)");
  if (conf) {
    // The shared prefix must be the classifier's own layers and weights.
    const auto& cl = m.classifier;
    bool ok = conf->frozen_prefix > 0 && conf->frozen_prefix <= cl.spec.layers.size() &&
              conf->spec.input_shape == cl.spec.input_shape;
    for (std::size_t i = 0; ok && i < conf->frozen_prefix; ++i) {
      auto layer = cl.spec.layers[i];
      layer.trainable = false;
      ok = conf->spec.layers[i] == layer && conf->params.layers[i] == cl.params.layers[i];
    }
    if (!ok) throw UsageError("confidence checkpoint was not built from this classifier");
    m.confidence = ConfidenceNet{conf->spec, conf->params, conf->frozen_prefix};
  }
  return m;
}

std::vector<ScoreKind> available_scores(const LoadedModels& m) {
  std::vector<ScoreKind> kinds{ScoreKind::tcp, ScoreKind::mcp};
  if (m.confidence) kinds.push_back(ScoreKind::chat);
  return kinds;
}

void write_records_csv(const fs::path& path, const std::vector<PredictionRecord>& records) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "index,true_class,predicted_class,tcp,mcp,chat,correct\n";
  for (const auto& r : records) {
    f << r.index << ',' << r.true_class << ',' << r.predicted_class << ',' << num(r.tcp) << ',' << num(r.mcp)
      << ',' << (std::isnan(r.chat) ? std::string() : num(r.chat)) << ',' << (r.correct() ? 1 : 0) << '\n';
  }
}

// CDF and histogram CSVs per score and population. Returns the file names.
std::vector<std::string> write_distributions(const fs::path& dir, const std::vector<PredictionRecord>& records,
                                             const std::vector<ScoreKind>& kinds, std::size_t bins) {
  std::vector<std::string> written;
  for (ScoreKind kind : kinds) {
    for (bool correct : {true, false}) {
      std::vector<double> scores;
      for (const auto& r : records) {
        if (r.correct() == correct) scores.push_back(r.score(kind));
      }
      if (scores.empty()) continue;
      const std::string suffix = std::string(to_string(kind)) + (correct ? "_correct" : "_error") + ".csv";
      metrics::write_cdf_csv(dir / ("cdf_" + suffix), metrics::empirical_cdf(scores));
      metrics::write_histogram_csv(dir / ("histogram_" + suffix), metrics::histogram(scores, bins));
      written.push_back("cdf_" + suffix);
      written.push_back("histogram_" + suffix);
    }
  }
  return written;
}

ordered_json report_json(const MetricsReport& r) {
  return {{"auroc", r.auroc},
          {"auprc_success", r.auprc_success},
          {"auprc_error", r.auprc_error},
          {"fpr_at_tpr", r.fpr_at_tpr},
          {"tpr_target", r.tpr_target},
          {"correct", r.correct},
          {"errors", r.errors}};
}

struct Evaluation {
  DataSplits data;
  LoadedModels models;
  std::vector<PredictionRecord> records;
};

Evaluation evaluate_test_split(const RunConfig& cfg, const std::vector<std::string>& checkpoints) {
  Evaluation ev;
  ev.data = load_data(cfg);
  ev.models = load_models(cfg, ev.data.test, checkpoints);
  ev.records = predict_records(ev.models.classifier.spec, ev.models.classifier.params, ev.data.test,
                               ev.models.confidence ? &*ev.models.confidence : nullptr);
  return ev;
}

int cmd_train(const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = resolve_config(flags);
  const DataSplits data = load_data(cfg);
  const auto spec = build_network(cfg.model.architecture, data.train.example_shape(),
                                  static_cast<std::size_t>(data.train.num_classes), cfg.model.head);
  const auto result = train_classifier(spec, init_parameters(spec, cfg.seed), data.train,
                                       data.validation.size() > 0 ? &data.validation : nullptr,
                                       cfg.classifier_train_config());
  print_epochs(out, result.log);

  const fs::path dir = cfg.output_directory;
  save_checkpoint(dir / "classifier.ckpt", {spec, result.params, data.train.num_classes, 0});
  result.log.write_csv(dir / "train_log.csv");
  write_text(dir / "resolved_config.json", resolved_config_json(cfg));
  out << "wrote " << (dir / "classifier.ckpt").string() << ", train_log.csv, resolved_config.json\n";
  return kOk;
}

int cmd_train_confidence(const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = resolve_config(flags);
  if (flags.checkpoints.size() != 1) throw UsageError("train-confidence takes one classifier --checkpoint");
  const DataSplits data = load_data(cfg);
  const Checkpoint classifier = load_checkpoint(flags.checkpoints[0]);
  if (classifier.spec.head() == HeadKind::confidence) {
    throw UsageError(flags.checkpoints[0] + " is a confidence network, not a classifier");
  }
  require_matching_classifier(cfg, data.train, classifier, flags.checkpoints[0]);

  // Offset the seed so the new layers do not reuse the classifier's draws.
  const std::uint64_t seed = cfg.seed ^ 0x636f6e66ULL;
  const ConfidenceNet net = build_confidence_net(classifier.spec, classifier.params, cfg.confidence.n_h, seed);
  const auto targets = confidence_targets(classifier.spec, classifier.params, data.train);
  TrainConfig tc = cfg.confidence_train_config(data.train.num_classes);
  tc.seed = seed;
  const auto result = train_confidence(net, data.train, targets, tc);
  print_epochs(out, result.log);

  const fs::path dir = cfg.output_directory;
  save_checkpoint(dir / "confidence.ckpt", {net.spec, result.params, data.train.num_classes, net.frozen_prefix});
  result.log.write_csv(dir / "confidence_train_log.csv");
  write_text(dir / "resolved_config.json", resolved_config_json(cfg));
  std::size_t failed = 0;
  for (const auto& t : targets) failed += t.failed ? 1 : 0;
  out << "training-set failures used as s=1 targets: " << failed << " of " << targets.size() << "\n";
  out << "wrote " << (dir / "confidence.ckpt").string() << ", confidence_train_log.csv\n";
  return kOk;
}

int cmd_eval(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(flags);
  const Evaluation ev = evaluate_test_split(cfg, flags.checkpoints);
  if (cfg.eval.score == ScoreKind::chat && !ev.models.confidence) {
    throw UsageError("eval.score is 'chat' but no confidence checkpoint was given");
  }
  const fs::path dir = cfg.output_directory;
  write_records_csv(dir / "records.csv", ev.records);

  std::size_t correct = 0;
  for (const auto& r : ev.records) correct += r.correct() ? 1 : 0;
  const std::size_t errors = ev.records.size() - correct;

  ordered_json doc;
  doc["split"] = "test";
  doc["examples"] = ev.records.size();
  doc["accuracy"] = static_cast<double>(correct) / static_cast<double>(ev.records.size());
  doc["correct"] = correct;
  doc["errors"] = errors;
  doc["score"] = to_string(cfg.eval.score);

  const auto guarantees = confidence::check_tcp_guarantees(ev.records);
  doc["tcp_guarantees"] = {{"above_half", guarantees.above_half},
                           {"below_inv_k", guarantees.below_inv_k},
                           {"violations", guarantees.violations.size()}};

  if (correct == 0 || errors == 0) {
    doc["degenerate"] = errors == 0 ? "no misclassified test examples" : "no correctly classified test examples";
    write_text(dir / "metrics.json", doc.dump(2) + "\n");
    err << "degenerate evaluation: the test split has " << (errors == 0 ? "no misclassified" : "no correct")
        << " examples, so failure-prediction metrics are undefined (records.csv was still written)\n";
    return kDegenerate;
  }

  const auto kinds = available_scores(ev.models);
  ordered_json reports;
  for (ScoreKind kind : kinds) {
    auto j = report_json(metrics::evaluate(scored(ev.records, kind), cfg.eval.tpr_target));
    j["oracle"] = kind == ScoreKind::tcp;
    reports[std::string(to_string(kind))] = j;
  }
  doc["reports"] = reports;
  doc["note"] = "tcp uses the true labels and is an oracle upper bound; mcp and chat are deployable";
  write_text(dir / "metrics.json", doc.dump(2) + "\n");
  write_distributions(dir, ev.records, kinds, cfg.eval.histogram_bins);
  write_text(dir / "resolved_config.json", resolved_config_json(cfg));

  char line[200];
  std::snprintf(line, sizeof line, "test examples %zu  accuracy %.4f  errors %zu\n", ev.records.size(),
                static_cast<double>(correct) / static_cast<double>(ev.records.size()), errors);
  out << line;
  out << "score        AUROC  AUPRC-Succ  AUPRC-Err  FPR@" << cfg.eval.tpr_target * 100 << "%TPR\n";
  for (ScoreKind kind : kinds) {
    const auto& j = reports[std::string(to_string(kind))];
    std::snprintf(line, sizeof line, "%-11s %6.2f  %10.2f  %9.2f  %8.2f%s\n",
                  std::string(to_string(kind)).c_str(), 100 * j["auroc"].get<double>(),
                  100 * j["auprc_success"].get<double>(), 100 * j["auprc_error"].get<double>(),
                  100 * j["fpr_at_tpr"].get<double>(), kind == ScoreKind::tcp ? "  (oracle)" : "");
    out << line;
  }
  out << "wrote metrics.json, records.csv, cdf_*.csv, histogram_*.csv to " << dir.string() << "\n";
  return kOk;
}

int cmd_export_cdf(const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = resolve_config(flags);
  const Evaluation ev = evaluate_test_split(cfg, flags.checkpoints);
  const auto files = write_distributions(cfg.output_directory, ev.records, available_scores(ev.models),
                                         cfg.eval.histogram_bins);
  for (const auto& f : files) out << "wrote " << (cfg.output_directory / f).string() << "\n";
  return kOk;
}

int cmd_verify(bool quick, std::optional<std::uint64_t> seed, const std::string& fault, std::ostream& out) {
  oracles::SuiteOptions opt;
  if (seed) opt.seed = *seed;
  if (quick) {
    opt.configs = 20;
    opt.mc_samples = 100'000;
    opt.mc_configs = 3;
    opt.metric_trials = 200;
    opt.tcp_draws = 10'000;
  }
  if (fault == "grad_r_sign") {
    opt.grad_r = [](const Concentration& a, std::size_t c) {
      auto g = iad::grad_r(a, c);
      for (auto& v : g) v = -v;
      return g;
    };
  } else if (!fault.empty()) {
    throw UsageError("unknown fault '" + fault + "'");
  }

  bool all = true;
  for (const auto& suite : oracles::run_all_suites(opt)) {
    all = all && suite.passed();
    char line[200];
    std::snprintf(line, sizeof line, "[%s] %-16s worst error/tolerance %.3g  (%.1fs)\n",
                  suite.passed() ? "PASS" : "FAIL", suite.name.c_str(), suite.worst_ratio(), suite.seconds);
    out << line;
    for (const auto& c : suite.checks) {
      std::snprintf(line, sizeof line, "    %s %-.120s: %.3g (tol %.3g)\n", c.passed() ? "ok  " : "FAIL",
                    c.label.c_str(), c.error, c.tolerance);
      out << line;
    }
    for (const auto& n : suite.notes) out << "    note " << n << "\n";
  }
  out << (all ? "verify: all suites passed\n" : "verify: FAILED\n");
  return all ? kOk : kFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirichlet-loss training and TCP-based failure prediction"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::uint64_t seed_value = 0;
  auto add_common = [&](CLI::App* sub, bool needs_checkpoint, bool many_checkpoints) {
    sub->add_option("--config", flags.config, "JSON run config")->required()->check(CLI::ExistingFile);
    if (needs_checkpoint) {
      auto* opt = sub->add_option("--checkpoint", flags.checkpoints,
                                  many_checkpoints ? "classifier checkpoint, then optionally a confidence checkpoint"
                                                   : "classifier checkpoint");
      opt->required()->check(CLI::ExistingFile);
      if (!many_checkpoints) opt->expected(1);
    }
    sub->add_option("--out", flags.out_dir, "output directory (overrides output.directory)");
    sub->add_option("--seed", seed_value, "seed (overrides the config)");
  };

  auto* train = app.add_subcommand("train", "train a classifier");
  add_common(train, false, false);
  auto* train_conf = app.add_subcommand("train-confidence", "train a confidence network on a frozen classifier");
  add_common(train_conf, true, false);
  auto* eval = app.add_subcommand("eval", "failure-prediction metrics and CSV exports on the test split");
  add_common(eval, true, true);
  auto* export_cdf = app.add_subcommand("export-cdf", "write score CDF and histogram CSVs only");
  add_common(export_cdf, true, true);

  auto* verify = app.add_subcommand("verify", "run the gradient, Monte-Carlo and metric oracle suites");
  bool quick = false;
  std::string fault;
  verify->add_flag("--quick", quick, "smaller sample counts");
  verify->add_option("--seed", seed_value, "seed for the random configurations");
  verify->add_option("--inject-fault", fault)->group("");  // mutation check: grad_r_sign

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << "\n";
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
    return kUsage;
  }

  auto* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) flags.seed = seed_value;

  try {
    if (active == train) return cmd_train(flags, out);
    if (active == train_conf) return cmd_train_confidence(flags, out);
    if (active == eval) return cmd_eval(flags, out, err);
    if (active == export_cdf) return cmd_export_cdf(flags, out);
    return cmd_verify(quick, flags.seed, fault, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace iadfp::cli
