#include "dacxai/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "dacxai/explain.hpp"
#include "dacxai/global_xai.hpp"
#include "dacxai/io.hpp"
#include "dacxai/metrics.hpp"
#include "dacxai/model.hpp"
#include "dacxai/render.hpp"

namespace dacxai {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

[[noreturn]] void fail_at(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

// Typed access into a JSON object that reports the dotted path of whatever
// field is missing or malformed.
class Conf {
 public:
  Conf(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const {
    return j_->is_object() && j_->contains(key) && !j_->at(key).is_null();
  }

  Conf child(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_object()) fail_at(join(key), "expected an object");
    return Conf(v, join(key));
  }

  std::optional<Conf> maybe_child(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child(key);
  }

  double num(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail_at(join(key), "expected a number");
    return v.get<double>();
  }
  double num(const std::string& key, double def) const { return has(key) ? num(key) : def; }
  std::optional<double> maybe_num(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return num(key);
  }

  long long integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail_at(join(key), "expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long def) const {
    return has(key) ? integer(key) : def;
  }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const json& v = at(key);
    if (!v.is_boolean()) fail_at(join(key), "expected true or false");
    return v.get<bool>();
  }

  std::string str(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail_at(join(key), "expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& def) const {
    return has(key) ? str(key) : def;
  }

  const json& array(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail_at(join(key), "expected an array");
    return v;
  }

  std::vector<double> num_list(const std::string& key) const {
    const json& v = array(key);
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail_at(elem(key, i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key) const {
    const json& v = array(key);
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) fail_at(elem(key, i), "expected an integer");
      out.push_back(v[i].get<int>());
    }
    return out;
  }

  std::vector<std::string> str_list(const std::string& key) const {
    const json& v = array(key);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail_at(elem(key, i), "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  // Rejects keys outside the allowed set so config typos fail loudly.
  void check_keys(std::initializer_list<const char*> allowed) const {
    for (const auto& item : j_->items()) {
      bool known = false;
      for (const char* a : allowed)
        if (item.key() == a) known = true;
      if (!known) fail_at(join(item.key()), "unknown field");
    }
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  std::string elem(const std::string& key, std::size_t i) const {
    return join(key) + "[" + std::to_string(i) + "]";
  }

 private:
  const json& at(const std::string& key) const {
    if (!j_->is_object()) fail_at(path_.empty() ? "<top>" : path_, "expected an object");
    auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) fail_at(join(key), "missing required field");
    return *it;
  }

  const json* j_;
  std::string path_;
};

TaskSchema parse_task_schema(const Conf& t) {
  t.check_keys({"name", "classes", "keywords", "hierarchy", "priors"});
  TaskSchema s;
  s.task_name = t.str("name");
  s.class_names = t.str_list("classes");
  const Conf kw = t.child("keywords");
  for (const auto& item : kw.raw().items()) {
    if (!item.value().is_array()) fail_at(kw.join(item.key()), "expected an array of strings");
    std::vector<std::string> words;
    for (std::size_t i = 0; i < item.value().size(); ++i) {
      const json& w = item.value()[i];
      if (!w.is_string()) fail_at(kw.elem(item.key(), i), "expected a string");
      words.push_back(w.get<std::string>());
    }
    s.keyword_map[item.key()] = std::move(words);
  }
  if (t.has("hierarchy")) {
    const json& h = t.array("hierarchy");
    for (std::size_t i = 0; i < h.size(); ++i) {
      const json& pair = h[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        fail_at(t.elem("hierarchy", i), "expected a [parent, child] pair of class names");
      s.hierarchy.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
  }
  return s;
}

TuneMode parse_mode(const Conf& c) {
  const std::string m = c.str("mode", "accuracy");
  if (m == "accuracy") return TuneMode::accuracy_only;
  if (m == "abstention") return TuneMode::abstention_only;
  if (m == "mixed") return TuneMode::mixed;
  fail_at(c.join("mode"), "expected one of \"accuracy\", \"abstention\", \"mixed\"");
}

std::size_t find_task(std::span<const TaskSchema> schemas, const std::string& name,
                      const std::string& field) {
  for (std::size_t i = 0; i < schemas.size(); ++i)
    if (schemas[i].task_name == name) return i;
  std::string known;
  for (const auto& s : schemas) known += (known.empty() ? "" : ", ") + s.task_name;
  throw ConfigError("config field '" + field + "': unknown task \"" + name +
                    "\" (tasks: " + known + ")");
}

SplitResult load_splits(const fs::path& corpus_dir, const Corpus& corpus) {
  const fs::path path = corpus_dir / "splits.json";
  const json j = json::parse(io::read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw std::runtime_error(path.string() + ": invalid JSON");
  std::unordered_map<int, const TokenizedReport*> by_id;
  for (const auto& r : corpus.reports) by_id[r.report_id] = &r;
  auto take = [&](const char* key) {
    std::vector<TokenizedReport> out;
    for (const auto& v : j.at(key)) {
      auto it = by_id.find(v.get<int>());
      if (it == by_id.end())
        throw std::runtime_error(path.string() + ": unknown report id " + v.dump());
      out.push_back(*it->second);
    }
    return out;
  };
  SplitResult r;
  r.train = take("train");
  r.val = take("val");
  r.test = take("test");
  return r;
}

const std::vector<TokenizedReport>& pick_split(const SplitResult& splits,
                                               const std::string& name) {
  if (name == "train") return splits.train;
  if (name == "val") return splits.val;
  if (name == "test") return splits.test;
  throw ConfigError("config field 'explain.split': expected \"train\", \"val\" or \"test\"");
}

double silverman_bandwidth(const NumArray& pts) {
  const std::size_t n = pts.rows();
  if (n < 2) return 1.0;
  double var = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += pts(i, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pts(i, c) - mean;
      ss += d * d;
    }
    var += ss / static_cast<double>(n - 1);
  }
  const double sigma = std::sqrt(var / 2.0);
  return std::max(1e-9, 1.06 * sigma * std::pow(static_cast<double>(n), -0.2));
}

std::vector<int> top_truth_classes(const std::vector<TokenizedReport>& reports,
                                   const std::unordered_set<int>& covered_ids, std::size_t task,
                                   int n_classes, int top) {
  std::vector<long> counts(static_cast<std::size_t>(n_classes), 0);
  for (const auto& r : reports) {
    if (!covered_ids.contains(r.report_id)) continue;
    const int label = r.labels.at(task);
    if (label >= 0 && label < n_classes) ++counts[static_cast<std::size_t>(label)];
  }
  std::vector<int> order(static_cast<std::size_t>(n_classes));
  for (int i = 0; i < n_classes; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
  });
  std::vector<int> subset;
  for (int cls : order) {
    if (static_cast<int>(subset.size()) >= top) break;
    if (counts[static_cast<std::size_t>(cls)] > 0) subset.push_back(cls);
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

double stage_seconds(std::chrono::steady_clock::time_point t0) {
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double>(dt).count();
}

}  // namespace

const char* tool_version() { return kToolVersion; }

PipelineConfig parse_pipeline_config(const std::string& json_text, const std::string& origin) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(origin + ": invalid JSON");
  if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");

  Conf root(j, "");
  root.check_keys({"seed", "threads", "corpus", "model", "dac", "explain", "aggregate", "pca",
                   "report", "sweep"});

  PipelineConfig cfg;
  {
    const long long seed = root.integer("seed", 0);
    if (seed < 0) fail_at("seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  cfg.threads = static_cast<int>(root.integer("threads", 1));
  if (cfg.threads < 1) fail_at("threads", "must be at least 1");

  if (auto c = root.maybe_child("corpus")) {
    c->check_keys({"n_reports", "max_len", "noise_rate", "conflict_rate", "empty_rate", "split",
                   "tasks"});
    CorpusSpec spec;
    spec.n_reports = static_cast<int>(c->integer("n_reports"));
    spec.max_len = static_cast<int>(c->integer("max_len", 3000));
    spec.noise_rate = c->num("noise_rate", 0.0);
    spec.conflict_rate = c->num("conflict_rate", 0.0);
    spec.empty_rate = c->num("empty_rate", 0.0);
    const json& tasks = c->array("tasks");
    if (tasks.empty()) fail_at(c->join("tasks"), "at least one task is required");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      Conf t(tasks[i], c->elem("tasks", i));
      TaskSchema schema = parse_task_schema(t);
      if (t.has("priors"))
        spec.class_prior.push_back(t.num_list("priors"));
      else
        spec.class_prior.emplace_back();
      spec.schemas.push_back(std::move(schema));
    }
    if (c->has("split")) {
      const std::vector<double> f = c->num_list("split");
      if (f.size() != 3) fail_at(c->join("split"), "expected [train, val, test] fractions");
      cfg.split_fractions = {f[0], f[1], f[2]};
    }
    spec.rng_seed = cfg.seed;
    try {
      spec.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config field 'corpus': ") + e.what());
    }
    cfg.corpus = std::move(spec);
  }

  if (auto m = root.maybe_child("model")) {
    m->check_keys({"embed_dim", "filter_sizes", "n_filters", "hidden_dim"});
    cfg.embed_dim = static_cast<int>(m->integer("embed_dim", cfg.embed_dim));
    if (m->has("filter_sizes")) cfg.filter_sizes = m->int_list("filter_sizes");
    cfg.n_filters = static_cast<int>(m->integer("n_filters", cfg.n_filters));
    cfg.hidden_dim = static_cast<int>(m->integer("hidden_dim", cfg.hidden_dim));
    if (cfg.embed_dim < 1) fail_at(m->join("embed_dim"), "must be positive");
    if (cfg.n_filters < 1) fail_at(m->join("n_filters"), "must be positive");
    if (cfg.hidden_dim < 1) fail_at(m->join("hidden_dim"), "must be positive");
    if (cfg.filter_sizes.empty()) fail_at(m->join("filter_sizes"), "must be non-empty");
    for (int s : cfg.filter_sizes)
      if (s < 1) fail_at(m->join("filter_sizes"), "sizes must be positive");
  }

  if (auto d = root.maybe_child("dac")) {
    d->check_keys({"alpha_init", "dummy_alpha", "accuracy_target", "accuracy_band", "max_epochs",
                   "learning_rate", "batch_size", "momentum", "gamma", "alpha_min", "alpha_max",
                   "mode"});
    DacConfig& dc = cfg.dac;
    if (d->has("alpha_init")) {
      const json& a = d->raw().at("alpha_init");
      if (a.is_number())
        dc.alpha_init = {a.get<double>()};
      else
        dc.alpha_init = d->num_list("alpha_init");
    }
    dc.dummy_alpha = d->maybe_num("dummy_alpha");
    dc.accuracy_target = d->num("accuracy_target", dc.accuracy_target);
    dc.accuracy_band = d->num("accuracy_band", dc.accuracy_band);
    dc.max_epochs = static_cast<int>(d->integer("max_epochs", dc.max_epochs));
    dc.learning_rate = d->num("learning_rate", dc.learning_rate);
    dc.batch_size = static_cast<int>(d->integer("batch_size", dc.batch_size));
    dc.momentum = d->num("momentum", dc.momentum);
    dc.gamma = d->num("gamma", dc.gamma);
    dc.alpha_min = d->num("alpha_min", dc.alpha_min);
    dc.alpha_max = d->num("alpha_max", dc.alpha_max);
    dc.mode = parse_mode(*d);
  }

  if (auto e = root.maybe_child("explain")) {
    e->check_keys({"split"});
    cfg.explain_split = e->str("split", cfg.explain_split);
    if (cfg.explain_split != "train" && cfg.explain_split != "val" && cfg.explain_split != "test")
      fail_at(e->join("split"), "expected \"train\", \"val\" or \"test\"");
  }

  if (auto a = root.maybe_child("aggregate")) {
    a->check_keys({"task", "gate_task", "top_classes", "cap", "abstained"});
    cfg.aggregate_task = a->str("task", "");
    if (a->has("gate_task")) cfg.gate_task = a->str("gate_task");
    cfg.top_classes = static_cast<int>(a->integer("top_classes", cfg.top_classes));
    cfg.cap = static_cast<int>(a->integer("cap", cfg.cap));
    cfg.aggregate_abstained = a->boolean("abstained", cfg.aggregate_abstained);
    if (cfg.top_classes < 1) fail_at(a->join("top_classes"), "must be positive");
    if (cfg.cap < 1) fail_at(a->join("cap"), "must be positive");
  }

  if (auto p = root.maybe_child("pca")) {
    p->check_keys({"variance_goal", "threshold", "top_columns", "annotations", "kde_resolution",
                   "kde_bandwidth"});
    cfg.variance_goal = p->num("variance_goal", cfg.variance_goal);
    cfg.threshold = p->maybe_num("threshold");
    cfg.top_columns = static_cast<std::size_t>(p->integer("top_columns",
                                                          static_cast<long long>(cfg.top_columns)));
    cfg.annotations = static_cast<std::size_t>(
        p->integer("annotations", static_cast<long long>(cfg.annotations)));
    cfg.kde_resolution = static_cast<std::size_t>(
        p->integer("kde_resolution", static_cast<long long>(cfg.kde_resolution)));
    cfg.kde_bandwidth = p->maybe_num("kde_bandwidth");
    if (!(cfg.variance_goal > 0.0 && cfg.variance_goal <= 1.0))
      fail_at(p->join("variance_goal"), "must lie in (0, 1]");
    if (cfg.top_columns < 1) fail_at(p->join("top_columns"), "must be positive");
    if (cfg.kde_resolution < 2) fail_at(p->join("kde_resolution"), "must be at least 2");
    if (cfg.kde_bandwidth && *cfg.kde_bandwidth <= 0.0)
      fail_at(p->join("kde_bandwidth"), "must be positive");
  }

  if (auto r = root.maybe_child("report")) {
    r->check_keys({"confusion_top_k"});
    cfg.confusion_top_k = static_cast<std::size_t>(
        r->integer("confusion_top_k", static_cast<long long>(cfg.confusion_top_k)));
    if (cfg.confusion_top_k < 1) fail_at(r->join("confusion_top_k"), "must be positive");
  }

  if (auto s = root.maybe_child("sweep")) {
    s->check_keys({"targets"});
    if (s->has("targets")) {
      cfg.sweep_targets = s->num_list("targets");
      for (double t : cfg.sweep_targets)
        if (!(t > 0.0 && t < 1.0)) fail_at(s->join("targets"), "targets must lie in (0, 1)");
    }
  }

  if (cfg.corpus) {
    try {
      cfg.dac.validate(cfg.corpus->schemas.size());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config field 'dac': ") + e.what());
    }
    if (!cfg.aggregate_task.empty())
      find_task(cfg.corpus->schemas, cfg.aggregate_task, "aggregate.task");
    if (cfg.gate_task) find_task(cfg.corpus->schemas, *cfg.gate_task, "aggregate.gate_task");
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& config_path) {
  if (!fs::exists(config_path))
    throw ConfigError("config file not found: " + config_path.string());
  return parse_pipeline_config(io::read_text_file(config_path), config_path.string());
}

ModelConfig model_config_for(const PipelineConfig& cfg, const Corpus& corpus) {
  ModelConfig mc;
  mc.vocab_size = static_cast<int>(corpus.vocab.size());
  mc.embed_dim = cfg.embed_dim;
  mc.filter_sizes = cfg.filter_sizes;
  mc.n_filters = cfg.n_filters;
  mc.hidden_dim = cfg.hidden_dim;
  for (const auto& s : corpus.schemas) mc.tasks.push_back({s.task_name, s.n_classes()});
  mc.ntask_dummy = cfg.dac.dummy_alpha.has_value();
  mc.init_seed = cfg.seed;
  return mc;
}

std::vector<fs::path> stage_gen(const PipelineConfig& cfg, const fs::path& out_dir) {
  if (!cfg.corpus) throw ConfigError("config field 'corpus': section is required by gen");
  CorpusSpec spec = *cfg.corpus;
  spec.rng_seed = cfg.seed;
  const Corpus corpus = generate_corpus(spec);
  const SplitResult splits = split(corpus.reports, cfg.split_fractions, cfg.seed);

  fs::create_directories(out_dir);
  io::save_corpus(corpus, out_dir);

  json j;
  j["fractions"] = {cfg.split_fractions[0], cfg.split_fractions[1], cfg.split_fractions[2]};
  auto ids = [](const std::vector<TokenizedReport>& v) {
    std::vector<int> out;
    out.reserve(v.size());
    for (const auto& r : v) out.push_back(r.report_id);
    return out;
  };
  j["train"] = ids(splits.train);
  j["val"] = ids(splits.val);
  j["test"] = ids(splits.test);
  io::write_text_file(out_dir / "splits.json", j.dump(2) + "\n");

  return {out_dir / "corpus.jsonl", out_dir / "vocab.json", out_dir / "schema.json",
          out_dir / "splits.json"};
}

std::vector<fs::path> stage_train(const PipelineConfig& cfg, const fs::path& corpus_dir,
                                  const fs::path& out_dir) {
  const Corpus corpus = io::load_corpus(corpus_dir);
  const SplitResult splits = load_splits(corpus_dir, corpus);
  const ModelConfig mc = model_config_for(cfg, corpus);
  DacConfig dc = cfg.dac;
  dc.seed = cfg.seed;
  try {
    dc.validate(mc.tasks.size());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field 'dac': ") + e.what());
  }

  const TrainResult result = train(mc, splits.train, splits.val, dc);

  fs::create_directories(out_dir);
  io::save_checkpoint(out_dir, mc, result.params, cfg.seed);
  io::save_training_log(out_dir / "train_log.csv", result.log);
  return {out_dir / "ckpt.bin", out_dir / "ckpt.json", out_dir / "train_log.csv"};
}

std::vector<fs::path> stage_explain(const PipelineConfig& cfg, const fs::path& corpus_dir,
                                    const fs::path& ckpt_dir, const std::string& task_name,
                                    const fs::path& attrs_path) {
  const Corpus corpus = io::load_corpus(corpus_dir);
  const SplitResult splits = load_splits(corpus_dir, corpus);
  io::Checkpoint ck = io::load_checkpoint(ckpt_dir);
  const MtcnnModel model(ck.cfg, std::move(ck.params));

  const std::vector<TokenizedReport>& set = pick_split(splits, cfg.explain_split);
  const std::size_t task = task_name.empty() ? 0 : find_task(corpus.schemas, task_name, "task");

  std::vector<PredictionRecord> preds;
  std::vector<AttributionRecord> attrs;
  preds.reserve(set.size());
  attrs.reserve(set.size());
  for (const auto& report : set) {
    PredictionRecord pr{report.report_id, model.predict_all(report.tokens)};
    const TaskOutput& out = pr.tasks.at(task);
    const TargetKind kind =
        out.abstained() ? TargetKind::second_choice : TargetKind::top_prediction;
    TokenAttribution ta = grad_input(model, report, task, kind);
    WordAttribution wa = aggregate_words(ta, report, corpus.vocab);
    attrs.push_back({std::move(ta), std::move(wa)});
    preds.push_back(std::move(pr));
  }

  fs::create_directories(attrs_path.parent_path());
  io::save_attributions(attrs_path, attrs);
  const fs::path preds_path = attrs_path.parent_path() / "preds.jsonl";
  io::save_predictions(preds_path, preds);
  return {attrs_path, preds_path};
}

std::vector<fs::path> stage_aggregate(const PipelineConfig& cfg, const fs::path& corpus_dir,
                                      const fs::path& attrs_path, const fs::path& preds_path,
                                      const fs::path& out_dir) {
  const Corpus corpus = io::load_corpus(corpus_dir);
  const std::vector<PredictionRecord> preds = io::load_predictions(preds_path);
  const std::vector<AttributionRecord> attrs = io::load_attributions(attrs_path);

  const std::size_t task = cfg.aggregate_task.empty()
                               ? 0
                               : find_task(corpus.schemas, cfg.aggregate_task, "aggregate.task");

  std::unordered_set<int> covered;
  for (const auto& p : preds) covered.insert(p.report_id);

  CohortSpec cs;
  cs.task = task;
  if (cfg.gate_task)
    cs.gate_task = find_task(corpus.schemas, *cfg.gate_task, "aggregate.gate_task");
  cs.cap = cfg.cap;
  cs.seed = cfg.seed;
  cs.abstained = false;
  cs.class_subset = top_truth_classes(corpus.reports, covered, task,
                                      corpus.schemas.at(task).n_classes(), cfg.top_classes);
  if (cs.class_subset.empty())
    throw std::runtime_error("aggregate: no truth class has any explained report");
  cs.validate(corpus.schemas.size());

  fs::create_directories(out_dir);
  const AleMatrix retained = build_cohort(corpus.reports, preds, attrs, cs);
  io::save_ale(retained, out_dir / "ale.csv", out_dir / "ale_meta.jsonl");
  std::vector<fs::path> files{out_dir / "ale.csv", out_dir / "ale_meta.jsonl"};

  if (cfg.aggregate_abstained) {
    CohortSpec ab = cs;
    ab.abstained = true;
    try {
      const AleMatrix m = build_cohort(corpus.reports, preds, attrs, ab);
      io::save_ale(m, out_dir / "ale_abstained.csv", out_dir / "ale_abstained_meta.jsonl");
      files.push_back(out_dir / "ale_abstained.csv");
      files.push_back(out_dir / "ale_abstained_meta.jsonl");
    } catch (const std::invalid_argument&) {
      // No abstained rows survive the filters; the optional matrix is skipped.
    }
  }
  return files;
}

std::vector<fs::path> stage_pca(const PipelineConfig& cfg, const fs::path& ale_csv,
                                const fs::path& ale_meta, const fs::path& out_dir) {
  const AleMatrix m = io::load_ale(ale_csv, ale_meta);
  const double threshold =
      cfg.threshold ? *cfg.threshold : threshold_for_top_columns(m, cfg.top_columns);
  const AleMatrix kept = truncate(m, threshold);
  const PcaResult result = pca(kept, cfg.variance_goal);
  fs::create_directories(out_dir);
  io::save_pca(result, kept.words, kept.rows, out_dir);
  return {out_dir / "pca.json", out_dir / "projections.csv", out_dir / "eigen_table.csv"};
}

std::vector<fs::path> stage_report(const PipelineConfig& cfg, const fs::path& preds_path,
                                   const fs::path& corpus_dir,
                                   const std::optional<fs::path>& pca_dir,
                                   const fs::path& out_dir) {
  const Corpus corpus = io::load_corpus(corpus_dir);
  const std::vector<PredictionRecord> preds = io::load_predictions(preds_path);

  std::unordered_set<int> covered;
  for (const auto& p : preds) covered.insert(p.report_id);
  std::vector<TokenizedReport> truths;
  for (const auto& r : corpus.reports)
    if (covered.contains(r.report_id)) truths.push_back(r);

  fs::create_directories(out_dir);
  std::vector<fs::path> files;

  const ScoreReport rep = score(preds, truths, corpus.schemas);
  io::save_score_csv(rep, out_dir / "metrics_tasks.csv", out_dir / "metrics_classes.csv");
  files.push_back(out_dir / "metrics_tasks.csv");
  files.push_back(out_dir / "metrics_classes.csv");

  for (std::size_t t = 0; t < corpus.schemas.size(); ++t) {
    const TaskSchema& schema = corpus.schemas[t];
    const ConfusionMatrix cm = confusion_topk(preds, truths, t, schema, cfg.confusion_top_k);
    const fs::path csv = out_dir / ("confusion_" + schema.task_name + ".csv");
    const fs::path svg = out_dir / ("confusion_" + schema.task_name + ".svg");
    io::save_confusion_csv(cm, csv);
    io::write_text_file(svg, svg_confusion_heatmap(cm));
    files.push_back(csv);
    files.push_back(svg);

    std::vector<PredictionRecord> ab_preds;
    std::vector<TokenizedReport> ab_truths;
    std::unordered_map<int, const PredictionRecord*> pred_by_id;
    for (const auto& p : preds) pred_by_id[p.report_id] = &p;
    for (const auto& r : truths) {
      const PredictionRecord& p = *pred_by_id.at(r.report_id);
      if (p.tasks.at(t).abstained()) {
        ab_preds.push_back(p);
        ab_truths.push_back(r);
      }
    }
    const ConfusionMatrix sc = second_choice_matrix(ab_preds, ab_truths, t, schema);
    const fs::path sc_csv = out_dir / ("second_choice_" + schema.task_name + ".csv");
    io::save_confusion_csv(sc, sc_csv);
    files.push_back(sc_csv);
  }

  if (pca_dir) {
    const io::PcaArtifacts pa = io::load_pca(*pca_dir);
    const std::size_t task = cfg.aggregate_task.empty()
                                 ? 0
                                 : find_task(corpus.schemas, cfg.aggregate_task, "aggregate.task");
    const TaskSchema& schema = corpus.schemas.at(task);
    auto class_label = [&](int cls) -> std::string {
      if (cls >= 0 && cls < schema.n_classes())
        return schema.class_names[static_cast<std::size_t>(cls)];
      return "abstain";
    };

    const NumArray& proj = pa.result.projections;
    std::map<std::pair<int, int>, ScatterGroup> groups;
    NumArray pts({proj.rows(), 2});
    for (std::size_t i = 0; i < proj.rows(); ++i) {
      const double x = proj.cols() >= 1 ? proj(i, 0) : 0.0;
      const double y = proj.cols() >= 2 ? proj(i, 1) : 0.0;
      pts(i, 0) = x;
      pts(i, 1) = y;
      const AleRowMeta& row = pa.rows.at(i);
      auto [it, inserted] = groups.try_emplace({row.truth, row.prediction});
      if (inserted)
        it->second.label = class_label(row.truth) + " -> " + class_label(row.prediction);
      it->second.points.emplace_back(x, y);
    }
    std::vector<ScatterGroup> group_list;
    group_list.reserve(groups.size());
    for (auto& [key, g] : groups) group_list.push_back(std::move(g));

    const auto annotations =
        keyword_annotations(pa.result, pa.words, std::min(cfg.annotations, pa.words.size()));
    const fs::path svg = out_dir / "pc_scatter.svg";
    if (pts.rows() >= 2) {
      const double bw = cfg.kde_bandwidth ? *cfg.kde_bandwidth : silverman_bandwidth(pts);
      const KdeGrid kde = kde2d(pts, cfg.kde_resolution, bw, cfg.threads);
      io::write_text_file(svg, svg_pc_scatter(group_list, &kde, annotations));
    } else {
      io::write_text_file(svg, svg_pc_scatter(group_list, nullptr, annotations));
    }
    files.push_back(svg);
  }
  return files;
}

std::vector<fs::path> stage_sweep(const PipelineConfig& cfg, const fs::path& corpus_dir,
                                  const fs::path& out_dir) {
  const Corpus corpus = io::load_corpus(corpus_dir);
  const SplitResult splits = load_splits(corpus_dir, corpus);
  const ModelConfig mc = model_config_for(cfg, corpus);
  DacConfig dc = cfg.dac;
  dc.seed = cfg.seed;
  try {
    dc.validate(mc.tasks.size());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field 'dac': ") + e.what());
  }
  const std::vector<double> targets =
      cfg.sweep_targets.empty() ? default_sweep_targets() : cfg.sweep_targets;

  const std::vector<TradeoffPoint> points = tradeoff_sweep(mc, splits, dc, targets);

  fs::create_directories(out_dir);
  io::save_tradeoff_csv(points, out_dir / "tradeoff.csv");
  io::write_text_file(out_dir / "tradeoff.svg", svg_tradeoff(points));
  return {out_dir / "tradeoff.csv", out_dir / "tradeoff.svg"};
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed,
                    const std::string& config_digest, const std::vector<StageTiming>& timings,
                    const std::vector<fs::path>& files) {
  json j;
  j["tool"] = "dacxai";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config_digest"] = config_digest;
  json stages = json::array();
  for (const auto& t : timings) stages.push_back({{"name", t.name}, {"seconds", t.seconds}});
  j["stages"] = std::move(stages);
  json digests = json::object();
  for (const auto& f : files) {
    if (f.filename() == "manifest.json") continue;
    digests[fs::relative(f, dir).generic_string()] = io::file_digest(f);
  }
  j["files"] = std::move(digests);
  io::write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

void run_pipeline(const PipelineConfig& cfg, const std::string& config_digest,
                  const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<StageTiming> timings;
  std::vector<fs::path> all_files;
  auto timed = [&](const char* name, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<fs::path> files = fn();
    timings.push_back({name, stage_seconds(t0)});
    all_files.insert(all_files.end(), files.begin(), files.end());
  };

  const fs::path corpus_dir = out_dir / "corpus";
  const fs::path ckpt_dir = out_dir / "ckpt";
  const fs::path explain_dir = out_dir / "explain";
  const fs::path ale_dir = out_dir / "ale";
  const fs::path pca_dir = out_dir / "pca";
  const fs::path report_dir = out_dir / "report";

  timed("gen", [&] { return stage_gen(cfg, corpus_dir); });
  timed("train", [&] { return stage_train(cfg, corpus_dir, ckpt_dir); });
  timed("explain", [&] {
    return stage_explain(cfg, corpus_dir, ckpt_dir, cfg.aggregate_task,
                         explain_dir / "attrs.jsonl");
  });
  timed("aggregate", [&] {
    return stage_aggregate(cfg, corpus_dir, explain_dir / "attrs.jsonl",
                           explain_dir / "preds.jsonl", ale_dir);
  });
  timed("pca", [&] {
    return stage_pca(cfg, ale_dir / "ale.csv", ale_dir / "ale_meta.jsonl", pca_dir);
  });
  timed("report", [&] {
    return stage_report(cfg, explain_dir / "preds.jsonl", corpus_dir, pca_dir, report_dir);
  });

  write_manifest(out_dir, "pipeline", cfg.seed, config_digest, timings, all_files);
}

}  // namespace dacxai
