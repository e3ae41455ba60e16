#include "iadfp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace iadfp {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "(root)" : path_, "expected an object");
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    const auto it = node_.find(std::string(key));
    return it == node_.end() ? nullptr : &*it;
  }

  Section child(std::string_view key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, field(key));
  }

  void read(std::string_view key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void read(std::string_view key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) {
        throw ConfigError(field(key), "expected a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void read(std::string_view key, std::uint64_t& out, int /*tag*/) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(std::string_view key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void read(std::string_view key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void read(std::string_view key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void read(std::string_view key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    if (find(key) == nullptr) return;
    read(key, s);
    std::filesystem::path p(s);
    out = p.is_relative() && !base.empty() ? base / p : p;
  }

  // Parses an enumerated string with `parse`, reporting failures at this key.
  template <typename T, typename Parse>
  void read_enum(std::string_view key, T& out, Parse parse) {
    std::string s;
    if (find(key) == nullptr) return;
    read(key, s);
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

HeadKind parse_head(std::string_view s) {
  if (s == "iad") return HeadKind::dirichlet;
  if (s == "ce") return HeadKind::softmax;
  throw std::invalid_argument("expected 'iad' or 'ce', got '" + std::string(s) + "'");
}

std::string_view head_name(HeadKind h) { return h == HeadKind::softmax ? "ce" : "iad"; }

// Runs a validate() and rewrites std::invalid_argument as a ConfigError at `where`.
template <typename F>
void check(const std::string& where, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(where, e.what());
  }
}

Shape example_shape_for(const DataConfig& d) {
  if (d.kind == "idx") return {1, 28, 28};
  return {d.synthetic.dim};
}

}  // namespace

TrainConfig RunConfig::classifier_train_config() const {
  TrainConfig t = train;
  t.loss = model.head == HeadKind::softmax ? LossKind::softmax_ce : LossKind::iad;
  t.iad = iad;
  return t;
}

TrainConfig RunConfig::confidence_train_config(int num_classes) const {
  TrainConfig t = train;
  t.loss = LossKind::confidence;
  t.confidence = confidence.loss;
  t.confidence.k = num_classes;
  if (confidence.epochs) t.epochs = confidence.epochs;
  if (confidence.batch_size) t.batch_size = confidence.batch_size;
  if (confidence.learning_rate > 0.0) t.learning_rate = confidence.learning_rate;
  return t;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    // nlohmann reports "... at line L, column C: ..."
    const std::string what = e.what();
    const auto at = what.find("line ");
    const auto colon = what.find(':', at == std::string::npos ? 0 : at);
    std::string where = at == std::string::npos ? "" : what.substr(at, colon - at);
    throw ConfigError(where, "syntax error (" + what + ")");
  }

  RunConfig cfg;
  Section root(doc, "");
  root.read("seed", cfg.seed, 0);

  {
    Section s = root.child("data");
    s.read("kind", cfg.data.kind);
    if (cfg.data.kind != "synthetic" && cfg.data.kind != "idx") {
      throw ConfigError(s.field("kind"), "expected 'synthetic' or 'idx', got '" + cfg.data.kind + "'");
    }
    s.read("train_images", cfg.data.train_images, base_dir);
    s.read("train_labels", cfg.data.train_labels, base_dir);
    s.read("test_images", cfg.data.test_images, base_dir);
    s.read("test_labels", cfg.data.test_labels, base_dir);
    s.read("train_subset", cfg.data.train_subset);
    s.read("standardize", cfg.data.standardize);
    if (const json* split = s.find("split")) {
      if (!split->is_array() || split->size() != 3 ||
          !std::all_of(split->begin(), split->end(), [](const json& v) { return v.is_number(); })) {
        throw ConfigError(s.field("split"), "expected three numbers [train, validation, test]");
      }
      for (std::size_t i = 0; i < 3; ++i) cfg.data.split[i] = (*split)[i].get<double>();
    }
    double total = 0.0;
    for (double f : cfg.data.split) {
      if (f < 0.0) throw ConfigError(s.field("split"), "fractions must be non-negative");
      total += f;
    }
    if (total > 1.0 + 1e-12) throw ConfigError(s.field("split"), "fractions sum past 1");
    if (cfg.data.split[0] <= 0.0) throw ConfigError(s.field("split"), "train fraction must be positive");
    if (cfg.data.kind == "synthetic" && cfg.data.split[2] <= 0.0) {
      throw ConfigError(s.field("split"), "test fraction must be positive for synthetic data");
    }

    Section syn = s.child("synthetic");
    syn.read("classes", cfg.data.synthetic.classes);
    syn.read("dim", cfg.data.synthetic.dim);
    syn.read("separation", cfg.data.synthetic.separation);
    syn.read("stddev", cfg.data.synthetic.stddev);
    syn.read("per_class", cfg.data.synthetic.per_class);
    syn.read("seed", cfg.data.synthetic.seed, 0);
    syn.reject_unknown();
    if (cfg.data.kind == "synthetic") check(s.field("synthetic"), [&] { cfg.data.synthetic.validate(); });
    if (cfg.data.kind == "idx") {
      for (const auto& [key, path] : {std::pair{"train_images", &cfg.data.train_images},
                                      std::pair{"train_labels", &cfg.data.train_labels},
                                      std::pair{"test_images", &cfg.data.test_images},
                                      std::pair{"test_labels", &cfg.data.test_labels}}) {
        if (path->empty()) throw ConfigError(s.field(key), "required when kind is 'idx'");
      }
    }
    s.reject_unknown();
  }

  {
    Section s = root.child("model");
    s.read("architecture", cfg.model.architecture);
    s.read_enum("head", cfg.model.head, parse_head);
    s.reject_unknown();
    const int classes = cfg.data.kind == "idx" ? 10 : cfg.data.synthetic.classes;
    check(s.field("architecture"), [&] {
      build_network(cfg.model.architecture, example_shape_for(cfg.data), static_cast<std::size_t>(classes),
                    cfg.model.head);
    });
  }

  {
    Section s = root.child("train");
    s.read("epochs", cfg.train.epochs);
    s.read("batch_size", cfg.train.batch_size);
    s.read("learning_rate", cfg.train.learning_rate);
    s.read_enum("optimizer", cfg.train.optimizer, parse_optimizer_kind);
    s.read("weight_decay", cfg.train.weight_decay);
    s.read("shuffle", cfg.train.shuffle);
    s.reject_unknown();
  }

  {
    Section s = root.child("iad");
    s.read("p", cfg.iad.p);
    s.read("lambda", cfg.iad.lambda);
    s.read("t0", cfg.iad.t0);
    s.read("t_ramp", cfg.iad.t_ramp);
    s.reject_unknown();
    check("iad", [&] { cfg.iad.validate(); });
  }

  {
    Section s = root.child("confidence");
    s.read("lambda_c", cfg.confidence.loss.lambda_c);
    s.read("zeta", cfg.confidence.loss.zeta);
    s.read("m", cfg.confidence.loss.m);
    s.read("delta", cfg.confidence.loss.delta);
    s.read("epsilon", cfg.confidence.loss.epsilon);
    s.read("n_h", cfg.confidence.n_h);
    s.read("epochs", cfg.confidence.epochs);
    s.read("batch_size", cfg.confidence.batch_size);
    s.read("learning_rate", cfg.confidence.learning_rate);
    s.reject_unknown();
    if (cfg.confidence.n_h == 0) throw ConfigError(s.field("n_h"), "must be positive");
    if (cfg.confidence.learning_rate < 0.0) throw ConfigError(s.field("learning_rate"), "must be non-negative");
    cfg.confidence.loss.k = cfg.data.kind == "idx" ? 10 : cfg.data.synthetic.classes;
    check("confidence", [&] { cfg.confidence.loss.validate(); });
  }

  {
    Section s = root.child("eval");
    s.read_enum("score", cfg.eval.score, parse_score_kind);
    s.read("tpr_target", cfg.eval.tpr_target);
    s.read("histogram_bins", cfg.eval.histogram_bins);
    s.reject_unknown();
    if (!(cfg.eval.tpr_target > 0.0 && cfg.eval.tpr_target <= 1.0)) {
      throw ConfigError(s.field("tpr_target"), "must lie in (0, 1]");
    }
    if (cfg.eval.histogram_bins == 0) throw ConfigError(s.field("histogram_bins"), "must be positive");
  }

  {
    Section s = root.child("output");
    s.read("directory", cfg.output_directory, base_dir);
    s.reject_unknown();
  }
  root.reject_unknown();

  cfg.train.seed = cfg.seed;
  check("train", [&] { cfg.classifier_train_config().validate(); });
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string resolved_config_json(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  auto& d = j["data"];
  d["kind"] = cfg.data.kind;
  d["train_images"] = cfg.data.train_images.string();
  d["train_labels"] = cfg.data.train_labels.string();
  d["test_images"] = cfg.data.test_images.string();
  d["test_labels"] = cfg.data.test_labels.string();
  d["train_subset"] = cfg.data.train_subset;
  d["split"] = cfg.data.split;
  d["standardize"] = cfg.data.standardize;
  d["synthetic"] = {{"classes", cfg.data.synthetic.classes},       {"dim", cfg.data.synthetic.dim},
                    {"separation", cfg.data.synthetic.separation}, {"stddev", cfg.data.synthetic.stddev},
                    {"per_class", cfg.data.synthetic.per_class},   {"seed", cfg.data.synthetic.seed}};
  j["model"] = {{"architecture", cfg.model.architecture}, {"head", head_name(cfg.model.head)}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"learning_rate", cfg.train.learning_rate},
                {"optimizer", to_string(cfg.train.optimizer)},
                {"weight_decay", cfg.train.weight_decay},
                {"shuffle", cfg.train.shuffle}};
  j["iad"] = {{"p", cfg.iad.p}, {"lambda", cfg.iad.lambda}, {"t0", cfg.iad.t0}, {"t_ramp", cfg.iad.t_ramp}};
  const auto& c = cfg.confidence;
  j["confidence"] = {{"lambda_c", c.loss.lambda_c}, {"zeta", c.loss.zeta},
                     {"m", c.loss.m},               {"delta", c.loss.delta},
                     {"epsilon", c.loss.epsilon},   {"n_h", c.n_h},
                     {"epochs", c.epochs},          {"batch_size", c.batch_size},
                     {"learning_rate", c.learning_rate}};
  j["eval"] = {{"score", to_string(cfg.eval.score)},
               {"tpr_target", cfg.eval.tpr_target},
               {"histogram_bins", cfg.eval.histogram_bins}};
  j["output"] = {{"directory", cfg.output_directory.string()}};
  return j.dump(2) + "\n";
}

DataSplits load_data(const RunConfig& cfg) {
  DataSplits out;
  const auto& d = cfg.data;
  if (d.kind == "synthetic") {
    auto parts = split_shuffle(synthetic_blobs(d.synthetic), d.split, cfg.seed);
    out.train = std::move(parts[0]);
    out.validation = std::move(parts[1]);
    out.test = std::move(parts[2]);
  } else {
    Dataset train = read_idx(d.train_images, d.train_labels, 10);
    Dataset test = read_idx(d.test_images, d.test_labels, 10);
    // Add the channel axis the conv layers expect.
    auto with_channel = [](Dataset& ds) {
      const auto& s = ds.features.shape;
      ds.features = ds.features.reshaped({s[0], 1, s[1], s[2]});
    };
    with_channel(train);
    with_channel(test);
    const double used = d.split[0] + d.split[1];
    auto parts = split_shuffle(train, {d.split[0] / used, d.split[1] / used, 0.0}, cfg.seed);
    out.train = std::move(parts[0]);
    out.validation = std::move(parts[1]);
    out.test = std::move(test);
    out.test.split = Split::test;
    if (d.train_subset > 0 && d.train_subset < out.train.size()) {
      std::vector<std::size_t> keep(d.train_subset);
      for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
      out.train = out.train.subset(keep);
    }
  }
  if (d.standardize) {
    const Dataset reference = out.train;
    standardize(out.train, reference);
    if (out.validation.size() > 0) standardize(out.validation, reference);
    standardize(out.test, reference);
  }
  return out;
}

}  // namespace iadfp
