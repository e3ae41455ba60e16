// Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Usage: iadfp_acceptance [work-dir]
//
// The failure-prediction experiment uses Fashion-MNIST when the directory in
// $IADFP_FASHION_MNIST holds the four IDX files, and the synthetic-blobs
// recipe in configs/blobs_acceptance.json otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iadfp/checkpoint.hpp"
#include "iadfp/cli.hpp"
#include "iadfp/config.hpp"
#include "iadfp/confidence.hpp"
#include "iadfp/data_io.hpp"
#include "iadfp/iad_loss.hpp"
#include "iadfp/oracles/suites.hpp"
#include "iadfp/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace iadfp;

namespace {

// Pinned limits.
constexpr double kGradientSeconds = 60.0;
constexpr double kMonteCarloSeconds = 120.0;
constexpr double kExperimentSeconds = 1800.0;
constexpr double kGoldenF = 0.577350;
constexpr double kGoldenFTol = 1e-6;
constexpr double kGoldenR = 0.125;
constexpr double kGoldenRTol = 1e-9;
constexpr double kMarginFashion = 5.0;  // AUPRC points
constexpr double kMarginBlobs = 3.0;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

struct Verdict {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void print_suite(const oracles::SuiteResult& s) {
  std::cout << "  " << (s.passed() ? "ok  " : "FAIL") << " " << s.name << fmt(" (%.1f s, worst err/tol %.3g)", s.seconds, s.worst_ratio())
            << "\n";
  for (const auto& c : s.checks) {
    if (!c.passed()) std::cout << "       failed: " << c.label << fmt(" err %.3g tol %.3g", c.error, c.tolerance) << "\n";
  }
  for (const auto& n : s.notes) std::cout << "       note: " << n << "\n";
}

bool all_passed(const std::vector<oracles::SuiteResult>& suites) {
  for (const auto& s : suites) {
    if (!s.passed()) return false;
  }
  return true;
}

double total_seconds(const std::vector<oracles::SuiteResult>& suites) {
  double t = 0.0;
  for (const auto& s : suites) t += s.seconds;
  return t;
}

double worst_ratio(const std::vector<oracles::SuiteResult>& suites) {
  double w = 0.0;
  for (const auto& s : suites) w = std::max(w, s.worst_ratio());
  return w;
}

// Runs the command-line tool in-process. Its chatter goes to `log`.
int tool(std::vector<std::string> args, std::ostream& log) {
  args.insert(args.begin(), "iadfp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  log << out.str() << err.str();
  return code;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  return json::parse(in, nullptr, true, true);
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream(path) << doc.dump(2) << "\n";
}

// Fraction of the scores strictly below `threshold`, read back from an
// exported empirical CDF.
double cdf_fraction_below(const fs::path& path, double threshold) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  std::string line;
  std::getline(in, line);  // header
  double fraction = 0.0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const double score = std::stod(line.substr(0, comma));
    if (!(score < threshold)) break;
    fraction = std::stod(line.substr(comma + 1));
  }
  return fraction;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------
// Failure-prediction experiment

struct RunResult {
  double accuracy = 0.0;
  double mcp = 0.0;   // AUPRC-Error, points
  double chat = 0.0;
  double tcp = 0.0;
  double errors_tcp_below_inv_k = 0.0;
  double errors_chat_below_te = 0.0;
};

struct Experiment {
  bool fashion = false;
  double margin = kMarginBlobs;
  json base;
  fs::path dir;
  std::ofstream log;
  int num_classes = 10;
  double t_error = 0.0;
  std::vector<RunResult> iad, ce, iad_unconstrained;
  std::vector<PredictionRecord> trained_records;  // IAD test predictions, for the TCP rules
  double seconds = 0.0;
  std::string failure;
};

json experiment_config(const Experiment& ex, std::uint64_t seed, const std::string& head, double lambda_c) {
  json cfg = ex.base;
  cfg["seed"] = seed;
  cfg["model"]["head"] = head;
  cfg["confidence"]["lambda_c"] = lambda_c;
  if (!ex.fashion) cfg["data"]["synthetic"]["seed"] = 100 + seed;
  return cfg;
}

RunResult evaluate_run(Experiment& ex, const fs::path& run_dir, const fs::path& cfg_path,
                       const std::string& confidence_ckpt) {
  if (tool({"eval", "--config", cfg_path.string(), "--checkpoint", (run_dir / "classifier.ckpt").string(),
            "--checkpoint", confidence_ckpt, "--out", run_dir.string()},
           ex.log) != cli::kOk) {
    throw std::runtime_error("eval failed in " + run_dir.string());
  }
  const json m = read_json(run_dir / "metrics.json");
  RunResult r;
  r.accuracy = m["accuracy"];
  r.mcp = 100.0 * m["reports"]["mcp"]["auprc_error"].get<double>();
  r.chat = 100.0 * m["reports"]["chat"]["auprc_error"].get<double>();
  r.tcp = 100.0 * m["reports"]["tcp"]["auprc_error"].get<double>();
  r.errors_tcp_below_inv_k = cdf_fraction_below(run_dir / "cdf_tcp_error.csv", 1.0 / ex.num_classes);
  r.errors_chat_below_te = cdf_fraction_below(run_dir / "cdf_chat_error.csv", ex.t_error);
  return r;
}

void run_seed(Experiment& ex, std::uint64_t seed, const std::string& head) {
  const fs::path run_dir = ex.dir / fmt("%s_seed%llu", head.c_str(), static_cast<unsigned long long>(seed));
  fs::create_directories(run_dir);
  const json cfg = experiment_config(ex, seed, head, ex.base["confidence"]["lambda_c"].get<double>());
  const fs::path cfg_path = run_dir / "config.json";
  write_json(cfg_path, cfg);
  const std::string classifier = (run_dir / "classifier.ckpt").string();

  if (tool({"train", "--config", cfg_path.string(), "--out", run_dir.string()}, ex.log) != cli::kOk) {
    throw std::runtime_error("train failed in " + run_dir.string());
  }
  if (tool({"train-confidence", "--config", cfg_path.string(), "--checkpoint", classifier, "--out",
            run_dir.string()},
           ex.log) != cli::kOk) {
    throw std::runtime_error("train-confidence failed in " + run_dir.string());
  }
  const RunResult r = evaluate_run(ex, run_dir, cfg_path, (run_dir / "confidence.ckpt").string());
  (head == "iad" ? ex.iad : ex.ce).push_back(r);
  if (head != "iad") return;

  // Trained-model alphas for the TCP rules.
  const RunConfig rc = load_config(cfg_path);
  const DataSplits data = load_data(rc);
  const Checkpoint ck = load_checkpoint(classifier);
  auto records = predict_records(ck.spec, ck.params, data.test);
  ex.trained_records.insert(ex.trained_records.end(), records.begin(), records.end());

  // Same classifier, confidence net retrained without the barrier terms.
  const fs::path free_dir = run_dir / "lambda_c0";
  fs::create_directories(free_dir);
  const fs::path free_cfg = free_dir / "config.json";
  write_json(free_cfg, experiment_config(ex, seed, head, 0.0));
  fs::copy_file(classifier, free_dir / "classifier.ckpt", fs::copy_options::overwrite_existing);
  if (tool({"train-confidence", "--config", free_cfg.string(), "--checkpoint", (free_dir / "classifier.ckpt").string(),
            "--out", free_dir.string()},
           ex.log) != cli::kOk) {
    throw std::runtime_error("train-confidence failed in " + free_dir.string());
  }
  ex.iad_unconstrained.push_back(evaluate_run(ex, free_dir, free_cfg, (free_dir / "confidence.ckpt").string()));
}

bool fashion_files_present(const fs::path& dir) {
  for (const char* f : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                        "t10k-labels-idx1-ubyte"}) {
    if (!fs::exists(dir / f)) return false;
  }
  return true;
}

void run_experiment(Experiment& ex, const fs::path& work) {
  const fs::path configs = IADFP_CONFIG_DIR;
  const char* env = std::getenv("IADFP_FASHION_MNIST");
  ex.fashion = env != nullptr && fashion_files_present(env);
  ex.dir = work / "experiment";
  fs::create_directories(ex.dir);
  ex.log.open(ex.dir / "tool_output.log");
  if (ex.fashion) {
    ex.base = read_json(configs / "fashion_mnist_lenet.json");
    const fs::path d = fs::absolute(env);
    ex.base["data"]["train_images"] = (d / "train-images-idx3-ubyte").string();
    ex.base["data"]["train_labels"] = (d / "train-labels-idx1-ubyte").string();
    ex.base["data"]["test_images"] = (d / "t10k-images-idx3-ubyte").string();
    ex.base["data"]["test_labels"] = (d / "t10k-labels-idx1-ubyte").string();
    ex.margin = kMarginFashion;
    ex.num_classes = 10;
  } else {
    ex.base = read_json(configs / "blobs_acceptance.json");
    ex.margin = kMarginBlobs;
    ex.num_classes = ex.base["data"]["synthetic"]["classes"];
  }
  ConfidenceConfig cc;
  cc.k = ex.num_classes;
  if (ex.base["confidence"].contains("delta")) cc.delta = ex.base["confidence"]["delta"];
  ex.t_error = cc.t_error();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    for (const auto seed : kSeeds) {
      run_seed(ex, seed, "iad");
      run_seed(ex, seed, "ce");
    }
  } catch (const std::exception& e) {
    ex.failure = e.what();
  }
  ex.seconds = seconds_since(t0);
}

std::vector<double> column(const std::vector<RunResult>& runs, double RunResult::*field) {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.*field);
  return out;
}

void print_experiment(const Experiment& ex) {
  std::cout << "  experiment: " << (ex.fashion ? "Fashion-MNIST, reduced LeNet" : "synthetic blobs (Fashion-MNIST not found)")
            << fmt(", seeds 1-3, %.0f s, outputs in %s", ex.seconds, ex.dir.string().c_str()) << "\n";
  std::cout << "  run           acc     MCP    chat     TCP   err TCP<1/K   err chat<t_e\n";
  auto row = [](const char* name, std::size_t i, const RunResult& r) {
    std::cout << fmt("  %-9s s%zu  %.4f  %6.2f  %6.2f  %6.2f  %11.3f  %13.3f\n", name, i + 1, r.accuracy, r.mcp, r.chat,
                     r.tcp, r.errors_tcp_below_inv_k, r.errors_chat_below_te);
  };
  for (std::size_t i = 0; i < ex.iad.size(); ++i) row("iad", i, ex.iad[i]);
  for (std::size_t i = 0; i < ex.iad_unconstrained.size(); ++i) row("iad lc=0", i, ex.iad_unconstrained[i]);
  for (std::size_t i = 0; i < ex.ce.size(); ++i) row("ce", i, ex.ce[i]);
}

// ---------------------------------------------------------------------------
// Plumbing checks

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v)};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                              static_cast<std::streamsize>(bytes.size()));
}

template <typename F>
bool throws_idx(IdxError::Kind kind, F&& f) {
  try {
    f();
  } catch (const IdxError& e) {
    return e.kind() == kind;
  }
  return false;
}

std::vector<std::string> plumbing_failures(const fs::path& work) {
  std::vector<std::string> failed;
  const fs::path dir = work / "plumbing";
  fs::create_directories(dir);

  // Two 2x3 images and their labels, byte for byte.
  const std::vector<std::uint8_t> pixels{0, 51, 102, 153, 204, 255, 255, 0, 255, 0, 255, 0};
  std::vector<std::uint8_t> images = be32(kIdxImageMagic);
  for (auto v : {2u, 2u, 3u}) {
    const auto b = be32(v);
    images.insert(images.end(), b.begin(), b.end());
  }
  images.insert(images.end(), pixels.begin(), pixels.end());
  std::vector<std::uint8_t> labels = be32(kIdxLabelMagic);
  const auto n = be32(2);
  labels.insert(labels.end(), n.begin(), n.end());
  labels.insert(labels.end(), {7, 2});
  write_bytes(dir / "images", images);
  write_bytes(dir / "labels", labels);
  try {
    const Dataset d = read_idx(dir / "images", dir / "labels", 10);
    bool ok = d.features.shape == Shape{2, 2, 3} && d.labels == std::vector<int>{7, 2};
    for (std::size_t i = 0; ok && i < pixels.size(); ++i) ok = d.features[i] == pixels[i] / 255.0;
    if (!ok) failed.push_back("IDX fixture parsed to the wrong values");
  } catch (const std::exception& e) {
    failed.push_back(std::string("IDX fixture rejected: ") + e.what());
  }

  auto bad_magic = images;
  bad_magic[3] = 0x02;
  write_bytes(dir / "bad_magic", bad_magic);
  if (!throws_idx(IdxError::Kind::bad_magic, [&] { read_idx(dir / "bad_magic", dir / "labels"); })) {
    failed.push_back("corrupted magic not rejected");
  }
  write_bytes(dir / "truncated", {images.begin(), images.end() - 1});
  if (!throws_idx(IdxError::Kind::truncated, [&] { read_idx(dir / "truncated", dir / "labels"); })) {
    failed.push_back("truncated image file not rejected");
  }
  auto wrong_count = labels;
  wrong_count[7] = 3;
  wrong_count.push_back(1);
  write_bytes(dir / "wrong_count", wrong_count);
  if (!throws_idx(IdxError::Kind::count_mismatch, [&] { read_idx(dir / "images", dir / "wrong_count"); })) {
    failed.push_back("image/label count mismatch not rejected");
  }

  // Checkpoint round trip, conv and dense layers.
  Checkpoint ck;
  ck.spec = build_network("lenet:3{3}-8", Shape{1, 10, 10}, 4, HeadKind::dirichlet);
  ck.params = init_parameters(ck.spec, 99);
  ck.num_classes = 4;
  save_checkpoint(dir / "roundtrip.ckpt", ck);
  const Checkpoint back = load_checkpoint(dir / "roundtrip.ckpt");
  if (!(back.spec == ck.spec && back.params == ck.params && back.num_classes == 4)) {
    failed.push_back("checkpoint did not round-trip");
  }

  // Same seed, same bytes, for both training phases.
  const std::string cfg = (fs::path(IADFP_CONFIG_DIR) / "quickstart.json").string();
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    const std::string out = (dir / run).string();
    tool({"train", "--config", cfg, "--out", out}, sink);
    tool({"train-confidence", "--config", cfg, "--checkpoint", out + "/classifier.ckpt", "--out", out}, sink);
  }
  for (const char* file : {"classifier.ckpt", "confidence.ckpt"}) {
    const std::string a = slurp(dir / "a" / file);
    if (a.empty() || a != slurp(dir / "b" / file)) failed.push_back(std::string("same seed gave different ") + file);
  }
  return failed;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = fs::absolute(argc > 1 ? argv[1] : "acceptance_work");
  fs::create_directories(work);
  oracles::SuiteOptions opt;
  std::vector<Verdict> verdicts;

  std::cout << "AC1 suites\n";
  const std::vector<oracles::SuiteResult> grad{oracles::suite_iad_gradients(opt), oracles::suite_confidence(opt),
                                               oracles::suite_network(opt)};
  for (const auto& s : grad) print_suite(s);
  verdicts.push_back({"AC1", all_passed(grad) && total_seconds(grad) < kGradientSeconds,
                      fmt("gradient fidelity, %zu configs per check, worst err/tol %.3g, %.1f s (limit %.0f s)",
                          opt.configs, worst_ratio(grad), total_seconds(grad), kGradientSeconds)});

  std::cout << "AC2 suites\n";
  const std::vector<oracles::SuiteResult> mc{oracles::suite_dirichlet(opt), oracles::suite_iad_monte_carlo(opt)};
  for (const auto& s : mc) print_suite(s);
  verdicts.push_back({"AC2", all_passed(mc) && mc[1].seconds < kMonteCarloSeconds,
                      fmt("Monte-Carlo p-norm, %zu draws x %zu alphas per (K, p), worst err/tol %.3g, %.1f s (limit %.0f s)",
                          opt.mc_samples, opt.mc_configs, worst_ratio(mc), mc[1].seconds, kMonteCarloSeconds)});

  std::cout << "AC3 suites\n";
  const std::vector<oracles::SuiteResult> closed{oracles::suite_specfun(opt), oracles::suite_iad_properties(opt)};
  for (const auto& s : closed) print_suite(s);
  const double f = iad::f_term(Concentration{2.0, 1.0}, 0, 2);
  const double r = iad::r_term(Concentration{3.0, 2.0}, 0);
  const bool golden = std::abs(f - kGoldenF) <= kGoldenFTol && std::abs(r - kGoldenR) <= kGoldenRTol;
  verdicts.push_back({"AC3", golden && all_passed(closed),
                      fmt("f_term=%.9f (want %.6f +- %.0e), r_term=%.12f (want %.3f +- %.0e), identities worst err/tol %.3g",
                          f, kGoldenF, kGoldenFTol, r, kGoldenR, kGoldenRTol, worst_ratio(closed))});

  std::cout << "AC5 suites\n";
  const auto metric_suite = oracles::suite_metrics(opt);
  print_suite(metric_suite);

  std::cout << "AC4 suites\n";
  const auto tcp_suite = oracles::suite_tcp_guarantees(opt);
  print_suite(tcp_suite);

  std::cout << "AC6-AC8 experiment\n";
  Experiment ex;
  run_experiment(ex, work);
  print_experiment(ex);
  const bool ran = ex.failure.empty();
  if (!ran) std::cout << "  experiment aborted: " << ex.failure << "\n";

  const auto trained = confidence::check_tcp_guarantees(ex.trained_records);
  verdicts.push_back({"AC4", tcp_suite.passed() && ran && trained.ok() && trained.total > 0,
                      fmt("TCP rules, %zu random alphas with %.0f violations, %zu trained-model alphas with %zu violations",
                          opt.tcp_draws, tcp_suite.checks.empty() ? -1.0 : tcp_suite.checks[0].error, trained.total,
                          trained.violations.size())});
  verdicts.push_back({"AC5", metric_suite.passed(),
                      fmt("metric oracles, %zu random sets, worst err/tol %.3g", opt.metric_trials, metric_suite.worst_ratio())});

  const double iad_mcp = mean(column(ex.iad, &RunResult::mcp));
  const double ce_mcp = mean(column(ex.ce, &RunResult::mcp));
  const double iad_chat = mean(column(ex.iad, &RunResult::chat));
  const double iad_tcp = mean(column(ex.iad, &RunResult::tcp));
  const bool a = ran && iad_mcp - ce_mcp >= ex.margin;
  const bool b = ran && iad_chat >= iad_mcp;
  const bool c = ran && iad_tcp >= iad_chat;
  verdicts.push_back({"AC6", a && b && c && ex.seconds <= kExperimentSeconds,
                      fmt("AUPRC-Error means: (a) IAD-MCP %.2f - CE-MCP %.2f = %+.2f, want >= %.0f [%s]; (b) chat %.2f >= "
                          "IAD-MCP %.2f [%s]; (c) TCP %.2f >= chat %.2f [%s]; %.0f s (limit %.0f s)",
                          iad_mcp, ce_mcp, iad_mcp - ce_mcp, ex.margin, a ? "ok" : "no", iad_chat, iad_mcp,
                          b ? "ok" : "no", iad_tcp, iad_chat, c ? "ok" : "no", ex.seconds, kExperimentSeconds)});

  const double iad_low = mean(column(ex.iad, &RunResult::errors_tcp_below_inv_k));
  const double ce_low = mean(column(ex.ce, &RunResult::errors_tcp_below_inv_k));
  verdicts.push_back({"AC7", ran && iad_low > ce_low,
                      fmt("errors with TCP < 1/K (from cdf_tcp_error.csv): IAD %.3f > CE %.3f", iad_low, ce_low)});

  const double with_c = mean(column(ex.iad, &RunResult::errors_chat_below_te));
  const double without_c = mean(column(ex.iad_unconstrained, &RunResult::errors_chat_below_te));
  verdicts.push_back({"AC8", ran && with_c > without_c,
                      fmt("errors with chat < t_e=%.3f: lambda_c=5 %.3f > lambda_c=0 %.3f", ex.t_error, with_c, without_c)});

  std::cout << "AC9 plumbing\n";
  const auto plumbing = plumbing_failures(work);
  for (const auto& p : plumbing) std::cout << "       failed: " << p << "\n";
  verdicts.push_back({"AC9", plumbing.empty(),
                      plumbing.empty() ? "IDX fixture and corrupt headers, checkpoint round trip, byte-identical reruns"
                                       : fmt("%zu plumbing checks failed", plumbing.size())});

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& x, const Verdict& y) { return x.id < y.id; });
  std::cout << "\n";
  bool ok = true;
  json summary = json::object();
  for (const auto& v : verdicts) {
    std::cout << v.id << " " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << "\n";
    summary[v.id] = {{"pass", v.pass}, {"detail", v.detail}};
    ok = ok && v.pass;
  }
  write_json(work / "acceptance_summary.json", summary);
  return ok ? 0 : 1;
}
