#include "dacxai/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dacxai/render.hpp"

namespace dacxai::io {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts need byte swaps");

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_digest(const std::filesystem::path& path) {
  const std::uint64_t h = fnv1a64(read_text_file(path));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("malformed JSON in " + where);
  return j;
}

json schema_to_json(const TaskSchema& s) {
  json j;
  j["task_name"] = s.task_name;
  j["class_names"] = s.class_names;
  json km = json::object();
  for (const auto& [cls, kws] : s.keyword_map) km[cls] = kws;
  j["keyword_map"] = km;
  json hier = json::array();
  for (const auto& [p, c] : s.hierarchy) hier.push_back(json::array({p, c}));
  j["hierarchy"] = hier;
  return j;
}

TaskSchema schema_from_json(const json& j) {
  TaskSchema s;
  s.task_name = j.at("task_name").get<std::string>();
  s.class_names = j.at("class_names").get<std::vector<std::string>>();
  for (const auto& [cls, kws] : j.at("keyword_map").items()) {
    s.keyword_map[cls] = kws.get<std::vector<std::string>>();
  }
  for (const auto& pair : j.at("hierarchy")) {
    s.hierarchy.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  }
  return s;
}

json model_cfg_to_json(const ModelConfig& cfg) {
  json j;
  j["vocab_size"] = cfg.vocab_size;
  j["embed_dim"] = cfg.embed_dim;
  j["filter_sizes"] = cfg.filter_sizes;
  j["n_filters"] = cfg.n_filters;
  j["hidden_dim"] = cfg.hidden_dim;
  json tasks = json::array();
  for (const auto& t : cfg.tasks) tasks.push_back({{"name", t.name}, {"n_classes", t.n_classes}});
  j["tasks"] = tasks;
  j["ntask_dummy"] = cfg.ntask_dummy;
  j["init_seed"] = cfg.init_seed;
  return j;
}

ModelConfig model_cfg_from_json(const json& j) {
  ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.filter_sizes = j.at("filter_sizes").get<std::vector<int>>();
  cfg.n_filters = j.at("n_filters").get<int>();
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  for (const auto& t : j.at("tasks")) {
    cfg.tasks.push_back({t.at("name").get<std::string>(), t.at("n_classes").get<int>()});
  }
  cfg.ntask_dummy = j.at("ntask_dummy").get<bool>();
  cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::string lines;
    for (const auto& r : corpus.reports) {
      json j;
      j["id"] = r.report_id;
      j["tokens"] = r.tokens;
      j["labels"] = r.labels;
      j["provenance"] = provenance_name(r.provenance);
      lines += j.dump();
      lines += '\n';
    }
    write_text_file(dir / "corpus.jsonl", lines);
  }
  {
    json j;
    j["words"] = corpus.vocab.index_to_word;
    write_text_file(dir / "vocab.json", j.dump(2) + "\n");
  }
  {
    json j;
    j["max_len"] = corpus.max_len;
    json tasks = json::array();
    for (const auto& s : corpus.schemas) tasks.push_back(schema_to_json(s));
    j["tasks"] = tasks;
    write_text_file(dir / "schema.json", j.dump(2) + "\n");
  }
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  {
    const json j = parse_json(read_text_file(dir / "vocab.json"), (dir / "vocab.json").string());
    const auto words = j.at("words").get<std::vector<std::string>>();
    if (words.empty() || words.front() != Vocabulary::pad_word) {
      throw std::runtime_error("vocab.json: index 0 must be the padding word");
    }
    for (std::size_t i = 1; i < words.size(); ++i) corpus.vocab.add(words[i]);
  }
  {
    const json j = parse_json(read_text_file(dir / "schema.json"), (dir / "schema.json").string());
    corpus.max_len = j.at("max_len").get<int>();
    for (const auto& t : j.at("tasks")) corpus.schemas.push_back(schema_from_json(t));
  }
  {
    std::istringstream in(read_text_file(dir / "corpus.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = parse_json(line, (dir / "corpus.jsonl").string());
      TokenizedReport r;
      r.report_id = j.at("id").get<int>();
      r.tokens = j.at("tokens").get<std::vector<int>>();
      r.labels = j.at("labels").get<std::vector<int>>();
      r.provenance = provenance_from_name(j.at("provenance").get<std::string>());
      corpus.reports.push_back(std::move(r));
    }
  }
  return corpus;
}

namespace {

void write_array(std::ofstream& out, const NumArray& a) {
  const std::uint32_t rank = static_cast<std::uint32_t>(a.shape.size());
  out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
  for (std::size_t d : a.shape) {
    const std::uint64_t dim = d;
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  }
  out.write(reinterpret_cast<const char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(double)));
}

NumArray read_array(std::ifstream& in) {
  std::uint32_t rank = 0;
  in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
  if (!in || rank > 4) throw std::runtime_error("checkpoint: bad array header");
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) {
    std::uint64_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    d = static_cast<std::size_t>(dim);
  }
  NumArray a = NumArray::zeros(shape);
  in.read(reinterpret_cast<char*>(a.data.data()),
          static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated array data");
  return a;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                     const LayerParams& params, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "ckpt.bin", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "ckpt.bin").string());
  out.write("DACX", 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  std::uint32_t count = 0;
  params.for_each([&](const NumArray&) { ++count; });
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  params.for_each([&](const NumArray& a) { write_array(out, a); });
  if (!out) throw std::runtime_error("write failed for " + (dir / "ckpt.bin").string());
  out.close();

  json j;
  j["model"] = model_cfg_to_json(cfg);
  j["seed"] = seed;
  write_text_file(dir / "ckpt.json", j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint ck;
  const json j = parse_json(read_text_file(dir / "ckpt.json"), (dir / "ckpt.json").string());
  ck.cfg = model_cfg_from_json(j.at("model"));
  ck.seed = j.at("seed").get<std::uint64_t>();

  std::ifstream in(dir / "ckpt.bin", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + (dir / "ckpt.bin").string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DACX", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + (dir / "ckpt.bin").string());
  }
  std::uint32_t version = 0, count = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");

  ck.params = init_params(ck.cfg);  // correct shapes, then overwritten
  std::uint32_t seen = 0;
  ck.params.for_each([&](NumArray& a) {
    a = read_array(in);
    ++seen;
  });
  if (seen != count) throw std::runtime_error("checkpoint: array count mismatch");
  return ck;
}

namespace {

json task_output_to_json(const TaskOutput& t) {
  json j;
  j["task"] = t.task_name;
  j["probs"] = t.probs;
  j["predicted"] = t.predicted;
  j["abstained"] = t.abstained();
  if (t.second_choice) j["second_choice"] = *t.second_choice;
  else j["second_choice"] = nullptr;
  return j;
}

TaskOutput task_output_from_json(const json& j) {
  TaskOutput t;
  t.task_name = j.at("task").get<std::string>();
  t.probs = j.at("probs").get<std::vector<double>>();
  t.predicted = j.at("predicted").get<int>();
  if (!j.at("second_choice").is_null()) t.second_choice = j.at("second_choice").get<int>();
  return t;
}

}  // namespace

void save_predictions(const std::filesystem::path& path,
                      std::span<const PredictionRecord> records) {
  std::string lines;
  for (const auto& r : records) {
    json j;
    j["report_id"] = r.report_id;
    json tasks = json::array();
    for (const auto& t : r.tasks) tasks.push_back(task_output_to_json(t));
    j["tasks"] = tasks;
    lines += j.dump();
    lines += '\n';
  }
  write_text_file(path, lines);
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = parse_json(line, path.string());
    PredictionRecord r;
    r.report_id = j.at("report_id").get<int>();
    for (const auto& t : j.at("tasks")) r.tasks.push_back(task_output_from_json(t));
    out.push_back(std::move(r));
  }
  return out;
}

void save_attributions(const std::filesystem::path& path,
                       std::span<const AttributionRecord> records) {
  std::string lines;
  for (const auto& r : records) {
    json j;
    j["report_id"] = r.attr.report_id;
    j["task"] = r.attr.task_name;
    j["target_class"] = r.attr.target_class;
    j["target_kind"] = target_kind_name(r.attr.target_kind);
    j["weights"] = r.attr.weights;
    json sums = json::object();
    for (const auto& [w, v] : r.words.weights) sums[w] = v;
    j["word_sums"] = sums;
    lines += j.dump();
    lines += '\n';
  }
  write_text_file(path, lines);
}

std::vector<AttributionRecord> load_attributions(const std::filesystem::path& path) {
  std::vector<AttributionRecord> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = parse_json(line, path.string());
    AttributionRecord r;
    r.attr.report_id = j.at("report_id").get<int>();
    r.attr.task_name = j.at("task").get<std::string>();
    r.attr.target_class = j.at("target_class").get<int>();
    r.attr.target_kind = target_kind_from_name(j.at("target_kind").get<std::string>());
    r.attr.weights = j.at("weights").get<std::vector<double>>();
    r.words.report_id = r.attr.report_id;
    for (const auto& [w, v] : j.at("word_sums").items()) {
      r.words.weights[w] = v.get<double>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_ale(const AleMatrix& m, const std::filesystem::path& csv_path,
              const std::filesystem::path& meta_path) {
  std::vector<std::string> header{"report_id"};
  header.insert(header.end(), m.words.begin(), m.words.end());
  std::vector<std::vector<std::string>> rows;
  rows.reserve(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::vector<std::string> row{std::to_string(m.rows[i].report_id)};
    for (std::size_t j = 0; j < m.words.size(); ++j) row.push_back(fmt_num(m.values(i, j)));
    rows.push_back(std::move(row));
  }
  write_csv(csv_path, header, rows);

  std::string lines;
  for (const auto& r : m.rows) {
    json j;
    j["report_id"] = r.report_id;
    j["truth"] = r.truth;
    j["prediction"] = r.prediction;
    j["provenance"] = provenance_name(r.provenance);
    j["target_kind"] = target_kind_name(r.target_kind);
    lines += j.dump();
    lines += '\n';
  }
  write_text_file(meta_path, lines);
}

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\r') {
      // swallow; rows are CRLF terminated
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

AleMatrix load_ale(const std::filesystem::path& csv_path,
                   const std::filesystem::path& meta_path) {
  AleMatrix m;
  std::istringstream in(read_text_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty ALE csv " + csv_path.string());
  std::vector<std::string> header = parse_csv_line(line);
  if (header.empty() || header.front() != "report_id") {
    throw std::runtime_error("ALE csv must start with report_id column");
  }
  m.words.assign(header.begin() + 1, header.end());

  std::vector<std::vector<double>> values;
  std::vector<int> ids;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = parse_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("ALE csv row width mismatch in " + csv_path.string());
    }
    ids.push_back(std::stoi(fields[0]));
    std::vector<double> row(m.words.size());
    for (std::size_t j = 0; j < m.words.size(); ++j) row[j] = std::stod(fields[j + 1]);
    values.push_back(std::move(row));
  }

  std::map<int, AleRowMeta> meta;
  std::istringstream min(read_text_file(meta_path));
  while (std::getline(min, line)) {
    if (line.empty()) continue;
    const json j = parse_json(line, meta_path.string());
    AleRowMeta r;
    r.report_id = j.at("report_id").get<int>();
    r.truth = j.at("truth").get<int>();
    r.prediction = j.at("prediction").get<int>();
    r.provenance = provenance_from_name(j.at("provenance").get<std::string>());
    r.target_kind = target_kind_from_name(j.at("target_kind").get<std::string>());
    meta[r.report_id] = r;
  }

  m.values = NumArray::zeros({values.size(), m.words.size()});
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto it = meta.find(ids[i]);
    if (it == meta.end()) {
      throw std::runtime_error("ALE metadata missing report " + std::to_string(ids[i]));
    }
    m.rows.push_back(it->second);
    for (std::size_t j = 0; j < m.words.size(); ++j) m.values(i, j) = values[i][j];
  }
  return m;
}

void save_pca(const PcaResult& p, std::span<const std::string> words,
              std::span<const AleRowMeta> rows, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    json j;
    j["means"] = p.means;
    j["eigenvalues"] = p.eigenvalues;
    std::vector<std::vector<double>> vecs(p.eigenvectors.shape[0]);
    for (std::size_t i = 0; i < p.eigenvectors.shape[0]; ++i) {
      vecs[i].resize(p.eigenvectors.shape[1]);
      for (std::size_t jj = 0; jj < p.eigenvectors.shape[1]; ++jj) {
        vecs[i][jj] = p.eigenvectors(i, jj);
      }
    }
    j["eigenvectors"] = vecs;  // row i = word i's loadings
    j["explained"] = p.explained;
    j["retained_count"] = p.retained_count;
    j["words"] = std::vector<std::string>(words.begin(), words.end());
    write_text_file(dir / "pca.json", j.dump(2) + "\n");
  }
  {
    std::vector<std::string> header{"report_id", "truth", "prediction", "provenance"};
    for (std::size_t c = 0; c < p.retained_count; ++c) {
      header.push_back("pc" + std::to_string(c + 1));
    }
    std::vector<std::vector<std::string>> body;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<std::string> row{std::to_string(rows[i].report_id),
                                   std::to_string(rows[i].truth),
                                   std::to_string(rows[i].prediction),
                                   provenance_name(rows[i].provenance)};
      for (std::size_t c = 0; c < p.retained_count; ++c) row.push_back(fmt_num(p.projections(i, c)));
      body.push_back(std::move(row));
    }
    write_csv(dir / "projections.csv", header, body);
  }
  {
    std::vector<std::string> header{"word"};
    for (std::size_t c = 0; c < p.retained_count; ++c) {
      header.push_back("pc" + std::to_string(c + 1));
    }
    std::vector<std::vector<std::string>> body;
    for (std::size_t w = 0; w < words.size(); ++w) {
      std::vector<std::string> row{words[w]};
      for (std::size_t c = 0; c < p.retained_count; ++c) {
        row.push_back(fmt_num(p.eigenvectors(w, c)));
      }
      body.push_back(std::move(row));
    }
    write_csv(dir / "eigen_table.csv", header, body);
  }
}

PcaArtifacts load_pca(const std::filesystem::path& dir) {
  PcaArtifacts out;
  const json j = parse_json(read_text_file(dir / "pca.json"), (dir / "pca.json").string());
  out.result.means = j.at("means").get<std::vector<double>>();
  out.result.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  out.result.explained = j.at("explained").get<std::vector<double>>();
  out.result.retained_count = j.at("retained_count").get<std::size_t>();
  out.words = j.at("words").get<std::vector<std::string>>();
  const auto vecs = j.at("eigenvectors").get<std::vector<std::vector<double>>>();
  const std::size_t m = vecs.size();
  out.result.eigenvectors = NumArray::zeros({m, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < m; ++c) out.result.eigenvectors(i, c) = vecs[i][c];
  }

  std::istringstream in(read_text_file(dir / "projections.csv"));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty projections.csv");
  const auto header = parse_csv_line(line);
  const std::size_t k = header.size() - 4;
  std::vector<std::vector<double>> proj;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = parse_csv_line(line);
    AleRowMeta meta;
    meta.report_id = std::stoi(fields.at(0));
    meta.truth = std::stoi(fields.at(1));
    meta.prediction = std::stoi(fields.at(2));
    meta.provenance = provenance_from_name(fields.at(3));
    out.rows.push_back(meta);
    std::vector<double> row(k);
    for (std::size_t c = 0; c < k; ++c) row[c] = std::stod(fields.at(4 + c));
    proj.push_back(std::move(row));
  }
  out.result.projections = NumArray::zeros({proj.size(), k});
  for (std::size_t i = 0; i < proj.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) out.result.projections(i, c) = proj[i][c];
  }
  return out;
}

void save_training_log(const std::filesystem::path& path, std::span<const EpochLogRow> log) {
  const std::vector<std::string> header{"epoch",      "task",
                                        "alpha",      "train_loss",
                                        "val_retained_accuracy", "val_abstention"};
  std::vector<std::vector<std::string>> rows;
  rows.reserve(log.size());
  for (const auto& r : log) {
    rows.push_back({std::to_string(r.epoch), r.task, fmt_num(r.alpha), fmt_num(r.train_loss),
                    fmt_num(r.val_retained_accuracy), fmt_num(r.val_abstention)});
  }
  write_csv(path, header, rows);
}

void save_score_csv(const ScoreReport& rep, const std::filesystem::path& task_csv,
                    const std::filesystem::path& class_csv) {
  {
    const std::vector<std::string> header{"task",     "retained", "abstained",
                                          "correct",  "retained_accuracy", "abstention"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : rep.tasks) {
      rows.push_back({t.task_name, std::to_string(t.retained), std::to_string(t.abstained),
                      std::to_string(t.correct), fmt_num(t.retained_accuracy),
                      fmt_num(t.abstention)});
    }
    rows.push_back({"__joint__", std::to_string(rep.joint_retained), "",
                    std::to_string(rep.joint_correct), fmt_num(rep.joint_retained_accuracy),
                    fmt_num(1.0 - rep.joint_retained_fraction)});
    rows.push_back({"__micro__", "", "", "", fmt_num(rep.micro_retained_accuracy()),
                    fmt_num(rep.micro_abstention())});
    write_csv(task_csv, header, rows);
  }
  {
    const std::vector<std::string> header{"task", "class",  "truth_count", "ppv",
                                          "recall", "abstention"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : rep.tasks) {
      for (const auto& c : t.per_class) {
        rows.push_back({t.task_name, c.class_name, std::to_string(c.truth_count),
                        fmt_num(c.ppv), fmt_num(c.recall), fmt_num(c.abstention)});
      }
    }
    write_csv(class_csv, header, rows);
  }
}

void save_confusion_csv(const ConfusionMatrix& m, const std::filesystem::path& path) {
  std::vector<std::string> header{"truth\\prediction"};
  header.insert(header.end(), m.col_labels.begin(), m.col_labels.end());
  header.push_back("recall");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
    std::vector<std::string> row{m.row_labels[i]};
    for (std::size_t j = 0; j < m.col_labels.size(); ++j) row.push_back(fmt_num(m.counts(i, j)));
    row.push_back(fmt_num(m.recall[i]));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> ppv_row{"ppv"};
  for (std::size_t j = 0; j < m.col_labels.size(); ++j) ppv_row.push_back(fmt_num(m.ppv[j]));
  ppv_row.push_back("");
  rows.push_back(std::move(ppv_row));
  write_csv(path, header, rows);
}

void save_tradeoff_csv(std::span<const TradeoffPoint> points,
                       const std::filesystem::path& path) {
  std::vector<std::string> header{"target", "retained_accuracy", "abstention", "epochs_run"};
  std::size_t n_tasks = points.empty() ? 0 : points.front().per_task.size();
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const std::string& name = points.front().per_task[t].task_name;
    header.push_back(name + "_retained_accuracy");
    header.push_back(name + "_abstention");
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : points) {
    std::vector<std::string> row{fmt_num(p.target), fmt_num(p.retained_accuracy),
                                 fmt_num(p.abstention), std::to_string(p.epochs_run)};
    for (const auto& t : p.per_task) {
      row.push_back(fmt_num(t.retained_accuracy));
      row.push_back(fmt_num(t.abstention));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace dacxai::io
