#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dacxai/corpus.hpp"
#include "dacxai/dac.hpp"
#include "dacxai/explain.hpp"
#include "dacxai/global_xai.hpp"
#include "dacxai/metrics.hpp"
#include "dacxai/model.hpp"

namespace dacxai::io {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a 64 over raw bytes, as a 16-digit hex string.
std::uint64_t fnv1a64(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

// corpus.jsonl + vocab.json + schema.json
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

// ckpt.bin (little-endian shape headers + raw doubles) + ckpt.json sidecar.
void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                     const LayerParams& params, std::uint64_t seed);
struct Checkpoint {
  ModelConfig cfg;
  LayerParams params;
  std::uint64_t seed = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

void save_predictions(const std::filesystem::path& path,
                      std::span<const PredictionRecord> records);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

void save_attributions(const std::filesystem::path& path,
                       std::span<const AttributionRecord> records);
std::vector<AttributionRecord> load_attributions(const std::filesystem::path& path);

// ale.csv (header: report_id + words) and ale_meta.jsonl (row grouping labels).
void save_ale(const AleMatrix& m, const std::filesystem::path& csv_path,
              const std::filesystem::path& meta_path);
AleMatrix load_ale(const std::filesystem::path& csv_path,
                   const std::filesystem::path& meta_path);

// pca.json + projections.csv + eigen_table.csv
void save_pca(const PcaResult& p, std::span<const std::string> words,
              std::span<const AleRowMeta> rows, const std::filesystem::path& dir);
struct PcaArtifacts {
  PcaResult result;
  std::vector<std::string> words;
  std::vector<AleRowMeta> rows;
};
PcaArtifacts load_pca(const std::filesystem::path& dir);

void save_training_log(const std::filesystem::path& path, std::span<const EpochLogRow> log);

void save_score_csv(const ScoreReport& rep, const std::filesystem::path& task_csv,
                    const std::filesystem::path& class_csv);
void save_confusion_csv(const ConfusionMatrix& m, const std::filesystem::path& path);
void save_tradeoff_csv(std::span<const TradeoffPoint> points,
                       const std::filesystem::path& path);

}  // namespace dacxai::io
