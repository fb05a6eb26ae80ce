#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dacxai {

struct TaskSchema {
  std::string task_name;
  std::vector<std::string> class_names;
  std::map<std::string, std::vector<std::string>> keyword_map;       // class -> keywords
  std::vector<std::pair<std::string, std::string>> hierarchy;        // (parent, child)

  int n_classes() const { return static_cast<int>(class_names.size()); }
  int class_index(const std::string& name) const;
  void validate() const;
};

struct CorpusSpec {
  std::vector<TaskSchema> schemas;
  int n_reports = 0;
  int max_len = 3000;
  double noise_rate = 0.0;
  double conflict_rate = 0.0;
  double empty_rate = 0.0;
  std::vector<std::vector<double>> class_prior;  // per task; empty -> uniform
  std::uint64_t rng_seed = 0;

  void validate() const;
};

enum class Provenance { clean, label_noise, conflicting, empty_evidence };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& s);

struct TokenizedReport {
  int report_id = 0;
  std::vector<int> tokens;    // vocabulary indices, already reversed + trimmed
  std::vector<int> labels;    // one ground-truth class index per task
  Provenance provenance = Provenance::clean;
};

struct Vocabulary {
  static constexpr int pad_index = 0;
  static constexpr const char* pad_word = "<pad>";

  std::unordered_map<std::string, int> word_to_index;
  std::vector<std::string> index_to_word;

  Vocabulary() { add(pad_word); }
  int add(const std::string& word);
  int index_of(const std::string& word) const;  // -1 when absent
  const std::string& word(int index) const { return index_to_word.at(static_cast<std::size_t>(index)); }
  std::size_t size() const { return index_to_word.size(); }
};

struct Corpus {
  Vocabulary vocab;
  std::vector<TokenizedReport> reports;
  std::vector<TaskSchema> schemas;
  int max_len = 3000;
};

Corpus generate_corpus(const CorpusSpec& spec);

// Reverse, then keep the first max_len of the reversed sequence, so the tail
// of a long document survives trimming.
std::vector<int> preprocess(std::span<const int> tokens, std::size_t max_len);

struct SplitResult {
  std::vector<TokenizedReport> train, val, test;
};

SplitResult split(const std::vector<TokenizedReport>& reports, std::array<double, 3> fractions,
                  std::uint64_t seed);

}  // namespace dacxai
