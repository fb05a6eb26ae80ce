#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dacxai/corpus.hpp"
#include "dacxai/dac.hpp"
#include "dacxai/nn.hpp"

namespace dacxai {

// Config-shape problems (missing file, wrong type, bad value) carry the JSON
// field path; the CLI maps them to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

const char* tool_version();

struct PipelineConfig {
  std::uint64_t seed = 0;
  int threads = 1;

  std::optional<CorpusSpec> corpus;  // required by gen/pipeline/sweep
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};

  // model section (vocab size and task list come from the corpus)
  int embed_dim = 16;
  std::vector<int> filter_sizes{3, 4, 5};
  int n_filters = 8;
  int hidden_dim = 32;

  DacConfig dac;

  std::string explain_split = "test";
  std::string aggregate_task;  // empty -> first task
  std::optional<std::string> gate_task;
  int top_classes = 4;
  int cap = 1000;
  bool aggregate_abstained = true;
  std::optional<double> threshold;  // column truncation; unset -> top_columns rule
  std::size_t top_columns = 200;
  double variance_goal = 0.9;
  std::size_t annotations = 8;
  std::size_t kde_resolution = 40;
  std::optional<double> kde_bandwidth;  // unset -> Silverman-style default
  std::size_t confusion_top_k = 20;
  std::vector<double> sweep_targets;  // empty -> default_sweep_targets()
};

// Parses and validates; throws ConfigError naming the offending field path.
PipelineConfig load_pipeline_config(const std::filesystem::path& config_path);

PipelineConfig parse_pipeline_config(const std::string& json_text, const std::string& origin);

// Assemble the model architecture for a given corpus.
ModelConfig model_config_for(const PipelineConfig& cfg, const Corpus& corpus);

// Stage entry points; each writes its file contract into out locations and
// returns the files it produced (absolute paths).

std::vector<std::filesystem::path> stage_gen(const PipelineConfig& cfg,
                                             const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> stage_train(const PipelineConfig& cfg,
                                               const std::filesystem::path& corpus_dir,
                                               const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> stage_explain(const PipelineConfig& cfg,
                                                 const std::filesystem::path& corpus_dir,
                                                 const std::filesystem::path& ckpt_dir,
                                                 const std::string& task_name,
                                                 const std::filesystem::path& attrs_path);

std::vector<std::filesystem::path> stage_aggregate(const PipelineConfig& cfg,
                                                   const std::filesystem::path& corpus_dir,
                                                   const std::filesystem::path& attrs_path,
                                                   const std::filesystem::path& preds_path,
                                                   const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> stage_pca(const PipelineConfig& cfg,
                                             const std::filesystem::path& ale_csv,
                                             const std::filesystem::path& ale_meta,
                                             const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> stage_report(const PipelineConfig& cfg,
                                                const std::filesystem::path& preds_path,
                                                const std::filesystem::path& corpus_dir,
                                                const std::optional<std::filesystem::path>& pca_dir,
                                                const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> stage_sweep(const PipelineConfig& cfg,
                                               const std::filesystem::path& corpus_dir,
                                               const std::filesystem::path& out_dir);

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

// Writes manifest.json into dir: tool version, seed, config digest, timings,
// and the FNV-1a digest of every listed artifact (manifest files excluded).
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    std::uint64_t seed, const std::string& config_digest,
                    const std::vector<StageTiming>& timings,
                    const std::vector<std::filesystem::path>& files);

// gen -> train -> explain -> aggregate -> pca -> report, with a root manifest.
void run_pipeline(const PipelineConfig& cfg, const std::string& config_digest,
                  const std::filesystem::path& out_dir);

}  // namespace dacxai
