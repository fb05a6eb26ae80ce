#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dacxai/io.hpp"
#include "dacxai/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dacxai;

namespace {

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string digest_of_config(const std::string& path) {
  return path.empty() ? std::string("0000000000000000") : io::file_digest(path);
}

// One stage = one manifest in the output directory.
void finish(const fs::path& dir, const std::string& command, const PipelineConfig& cfg,
            const std::string& config_path, std::chrono::steady_clock::time_point t0,
            const std::vector<fs::path>& files) {
  write_manifest(dir, command, cfg.seed, digest_of_config(config_path), {{command, elapsed(t0)}},
                 files);
}

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  int threads = 1;
  CLI::Option* threads_opt = nullptr;

  PipelineConfig load(bool config_required) const {
    if (config_required && config.empty())
      throw ConfigError("a config file is required (--config)");
    PipelineConfig cfg =
        config.empty() ? PipelineConfig{} : load_pipeline_config(fs::path(config));
    if (seed_opt != nullptr && seed_opt->count() > 0) cfg.seed = seed;
    if (threads_opt != nullptr && threads_opt->count() > 0) {
      if (threads < 1) throw ConfigError("--threads must be at least 1");
      cfg.threads = threads;
    }
    return cfg;
  }
};

void add_common(CLI::App* sub, Common& c, const char* config_names = "--config") {
  c.seed_opt = sub->add_option("--seed", c.seed, "RNG seed override")->envname("DACXAI_SEED");
  c.threads_opt =
      sub->add_option("--threads", c.threads, "worker threads for density grids")
          ->envname("DACXAI_THREADS");
  sub->add_option(config_names, c.config, "pipeline config JSON")->envname("DACXAI_CONFIG");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dacxai: abstaining multi-task text classification with explanations"};
  app.set_version_flag("--version,-V", std::string(tool_version()));
  app.require_subcommand(1);

  // gen
  Common gen_c;
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus with splits");
  add_common(gen, gen_c, "--config,--spec");
  gen->add_option("--out", gen_c.out, "output corpus directory")
      ->required()
      ->envname("DACXAI_OUT");

  // train
  Common train_c;
  std::string train_corpus;
  auto* train_cmd = app.add_subcommand("train", "train the abstaining multi-task model");
  add_common(train_cmd, train_c);
  train_cmd->add_option("--corpus", train_corpus, "corpus directory")->required();
  train_cmd->add_option("--out", train_c.out, "checkpoint directory")
      ->required()
      ->envname("DACXAI_OUT");

  // explain
  Common explain_c;
  std::string explain_ckpt, explain_corpus, explain_task, explain_split;
  auto* explain_cmd =
      app.add_subcommand("explain", "per-report gradient-times-input attributions");
  add_common(explain_cmd, explain_c);
  explain_cmd->add_option("--ckpt", explain_ckpt, "checkpoint directory")->required();
  explain_cmd->add_option("--corpus", explain_corpus, "corpus directory")->required();
  explain_cmd->add_option("--task", explain_task, "task to attribute (default: first)");
  explain_cmd->add_option("--split", explain_split, "corpus split (train|val|test)");
  explain_cmd->add_option("--out", explain_c.out, "attributions JSONL path")
      ->required()
      ->envname("DACXAI_OUT");

  // aggregate
  Common agg_c;
  std::string agg_corpus, agg_attrs, agg_preds, agg_task, agg_gate;
  int agg_top_classes = 0, agg_cap = 0;
  bool agg_abstained = true;
  auto* agg_cmd = app.add_subcommand("aggregate", "stack attributions into cohort matrices");
  add_common(agg_cmd, agg_c);
  agg_cmd->add_option("--corpus", agg_corpus, "corpus directory")->required();
  agg_cmd->add_option("--attrs", agg_attrs, "attributions JSONL")->required();
  agg_cmd->add_option("--preds", agg_preds, "predictions JSONL")->required();
  agg_cmd->add_option("--task", agg_task, "task under analysis");
  agg_cmd->add_option("--gate-task", agg_gate, "keep only reports this task got right");
  auto* agg_top_opt = agg_cmd->add_option("--top-classes", agg_top_classes,
                                          "admit this many most prevalent truth classes");
  auto* agg_cap_opt =
      agg_cmd->add_option("--cap", agg_cap, "per-(truth, prediction) row cap");
  agg_cmd->add_flag("--abstained,!--no-abstained", agg_abstained,
                    "also emit the abstained-cohort matrix");
  agg_cmd->add_option("--out", agg_c.out, "output directory")
      ->required()
      ->envname("DACXAI_OUT");

  // pca
  Common pca_c;
  std::string pca_ale, pca_meta;
  double pca_threshold = 0.0, pca_goal = 0.0;
  long long pca_top_columns = 0;
  auto* pca_cmd = app.add_subcommand("pca", "truncate the cohort matrix and project it");
  add_common(pca_cmd, pca_c);
  pca_cmd->add_option("--ale", pca_ale, "cohort matrix CSV")->required();
  pca_cmd->add_option("--meta", pca_meta, "cohort row metadata JSONL")->required();
  auto* pca_thr_opt =
      pca_cmd->add_option("--threshold", pca_threshold, "column |sum| cutoff");
  auto* pca_goal_opt =
      pca_cmd->add_option("--variance-goal", pca_goal, "explained-variance goal in (0, 1]");
  auto* pca_cols_opt = pca_cmd->add_option("--top-columns", pca_top_columns,
                                           "columns kept when no threshold is given");
  pca_cmd->add_option("--out", pca_c.out, "output directory")
      ->required()
      ->envname("DACXAI_OUT");

  // report
  Common report_c;
  std::string report_pred, report_truth, report_pca;
  long long report_top_k = 0;
  auto* report_cmd = app.add_subcommand("report", "score predictions and render plots");
  add_common(report_cmd, report_c);
  report_cmd->add_option("--pred", report_pred, "predictions JSONL")->required();
  report_cmd->add_option("--truth", report_truth, "corpus directory with ground truth")
      ->required();
  report_cmd->add_option("--pca", report_pca, "projection directory for the scatter plot");
  auto* report_k_opt =
      report_cmd->add_option("--top-k", report_top_k, "confusion rows before pooling");
  report_cmd->add_option("--out", report_c.out, "report directory")
      ->required()
      ->envname("DACXAI_OUT");

  // sweep
  Common sweep_c;
  std::string sweep_corpus;
  std::vector<double> sweep_targets;
  auto* sweep_cmd = app.add_subcommand("sweep", "accuracy/abstention trade-off sweep");
  add_common(sweep_cmd, sweep_c);
  sweep_cmd->add_option("--corpus", sweep_corpus, "corpus directory")->required();
  sweep_cmd->add_option("--targets", sweep_targets, "accuracy targets")->delimiter(',');
  sweep_cmd->add_option("--out", sweep_c.out, "output directory")
      ->required()
      ->envname("DACXAI_OUT");

  // pipeline
  Common pipe_c;
  auto* pipe_cmd = app.add_subcommand("pipeline", "gen, train, explain, aggregate, pca, report");
  add_common(pipe_cmd, pipe_c);
  pipe_cmd->add_option("--out", pipe_c.out, "pipeline output directory")
      ->required()
      ->envname("DACXAI_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    if (gen->parsed()) {
      const PipelineConfig cfg = gen_c.load(true);
      const auto files = stage_gen(cfg, gen_c.out);
      finish(gen_c.out, "gen", cfg, gen_c.config, t0, files);
    } else if (train_cmd->parsed()) {
      const PipelineConfig cfg = train_c.load(true);
      const auto files = stage_train(cfg, train_corpus, train_c.out);
      finish(train_c.out, "train", cfg, train_c.config, t0, files);
    } else if (explain_cmd->parsed()) {
      PipelineConfig cfg = explain_c.load(false);
      if (!explain_split.empty()) {
        if (explain_split != "train" && explain_split != "val" && explain_split != "test")
          throw ConfigError("--split expects \"train\", \"val\" or \"test\"");
        cfg.explain_split = explain_split;
      }
      const fs::path attrs_path(explain_c.out);
      const auto files = stage_explain(cfg, explain_corpus, explain_ckpt, explain_task,
                                       attrs_path);
      finish(attrs_path.parent_path(), "explain", cfg, explain_c.config, t0, files);
    } else if (agg_cmd->parsed()) {
      PipelineConfig cfg = agg_c.load(false);
      if (!agg_task.empty()) cfg.aggregate_task = agg_task;
      if (!agg_gate.empty()) cfg.gate_task = agg_gate;
      if (agg_top_opt->count() > 0) cfg.top_classes = agg_top_classes;
      if (agg_cap_opt->count() > 0) cfg.cap = agg_cap;
      cfg.aggregate_abstained = agg_abstained;
      if (cfg.top_classes < 1) throw ConfigError("--top-classes must be positive");
      if (cfg.cap < 1) throw ConfigError("--cap must be positive");
      const auto files = stage_aggregate(cfg, agg_corpus, agg_attrs, agg_preds, agg_c.out);
      finish(agg_c.out, "aggregate", cfg, agg_c.config, t0, files);
    } else if (pca_cmd->parsed()) {
      PipelineConfig cfg = pca_c.load(false);
      if (pca_thr_opt->count() > 0) cfg.threshold = pca_threshold;
      if (pca_goal_opt->count() > 0) cfg.variance_goal = pca_goal;
      if (pca_cols_opt->count() > 0) {
        if (pca_top_columns < 1) throw ConfigError("--top-columns must be positive");
        cfg.top_columns = static_cast<std::size_t>(pca_top_columns);
      }
      if (!(cfg.variance_goal > 0.0 && cfg.variance_goal <= 1.0))
        throw ConfigError("--variance-goal must lie in (0, 1]");
      const auto files = stage_pca(cfg, pca_ale, pca_meta, pca_c.out);
      finish(pca_c.out, "pca", cfg, pca_c.config, t0, files);
    } else if (report_cmd->parsed()) {
      PipelineConfig cfg = report_c.load(false);
      if (report_k_opt->count() > 0) {
        if (report_top_k < 1) throw ConfigError("--top-k must be positive");
        cfg.confusion_top_k = static_cast<std::size_t>(report_top_k);
      }
      std::optional<fs::path> pca_dir;
      if (!report_pca.empty()) pca_dir = fs::path(report_pca);
      const auto files = stage_report(cfg, report_pred, report_truth, pca_dir, report_c.out);
      finish(report_c.out, "report", cfg, report_c.config, t0, files);
    } else if (sweep_cmd->parsed()) {
      PipelineConfig cfg = sweep_c.load(true);
      if (!sweep_targets.empty()) {
        for (double t : sweep_targets)
          if (!(t > 0.0 && t < 1.0)) throw ConfigError("--targets must lie in (0, 1)");
        cfg.sweep_targets = sweep_targets;
      }
      const auto files = stage_sweep(cfg, sweep_corpus, sweep_c.out);
      finish(sweep_c.out, "sweep", cfg, sweep_c.config, t0, files);
    } else if (pipe_cmd->parsed()) {
      const PipelineConfig cfg = pipe_c.load(true);
      run_pipeline(cfg, digest_of_config(pipe_c.config), pipe_c.out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
