#include "dacxai/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "dacxai/rng.hpp"

namespace dacxai {

namespace {

const std::vector<std::string>& filler_pool() {
  static const std::vector<std::string> pool = {
      "specimen",    "received",  "formalin",   "sections",   "examined",
      "microscopic", "tissue",    "fragments",  "consistent", "with",
      "findings",    "noted",     "margins",    "unremarkable", "cellular",
      "architecture", "observed", "focal",      "areas",      "without",
      "evidence",    "adjacent",  "benign",     "stroma",     "mild",
      "moderate",    "present",   "absent",     "review",     "clinical",
      "correlation", "recommended", "addendum", "block",      "slide",
      "stained",     "grossly",   "submitted",  "representative", "material",
  };
  return pool;
}

std::string pick_filler(std::mt19937_64& rng) {
  const auto& pool = filler_pool();
  return pool[rand_index(rng, pool.size())];
}

void emit_filler(std::vector<std::string>& words, std::mt19937_64& rng, int lo, int hi) {
  const int n = rand_between(rng, lo, hi);
  for (int i = 0; i < n; ++i) words.push_back(pick_filler(rng));
}

// Keywords the child class shares with one of its hierarchy parents.
std::vector<std::string> shared_parent_keywords(const TaskSchema& schema,
                                                const std::string& cls) {
  std::vector<std::string> shared;
  auto it = schema.keyword_map.find(cls);
  if (it == schema.keyword_map.end()) return shared;
  for (const auto& [parent, child] : schema.hierarchy) {
    if (child != cls) continue;
    auto pit = schema.keyword_map.find(parent);
    if (pit == schema.keyword_map.end()) continue;
    for (const std::string& kw : it->second) {
      if (std::find(pit->second.begin(), pit->second.end(), kw) != pit->second.end()) {
        shared.push_back(kw);
      }
    }
  }
  return shared;
}

// One keyword of the class; a child class occasionally voices the phrasing it
// shares with its parent.
std::string pick_keyword(const TaskSchema& schema, const std::string& cls,
                         std::mt19937_64& rng) {
  const auto& kws = schema.keyword_map.at(cls);
  std::vector<std::string> parentish = shared_parent_keywords(schema, cls);
  if (!parentish.empty() && rand_unit(rng) < 0.25) {
    return parentish[rand_index(rng, parentish.size())];
  }
  return kws[rand_index(rng, kws.size())];
}

void emit_evidence(std::vector<std::string>& words, const TaskSchema& schema,
                   const std::string& cls, std::mt19937_64& rng) {
  const std::string kw = pick_keyword(schema, cls, rng);
  const int reps = rand_between(rng, 2, 4);
  for (int r = 0; r < reps; ++r) {
    words.push_back(kw);
    emit_filler(words, rng, 1, 2);
  }
}

// Worst-case token count of the diagnosis section plus trailer; the part the
// tail-retaining trim must never cut into.
int longest_template(const CorpusSpec& spec) {
  // Per task: marker + up to two evidence classes, each keyword repeated up
  // to 4 times with up to 2 fillers after each occurrence.
  const int per_task = 1 + 2 * (4 * (1 + 2));
  const int diag = 2 + per_task * static_cast<int>(spec.schemas.size());
  return diag + 3;  // trailer "end of report"
}

int sample_class(const std::vector<double>& prior, std::mt19937_64& rng) {
  const double u = rand_unit(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    cum += prior[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(prior.size()) - 1;
}

int pick_other_class(int true_class, int n_classes, std::mt19937_64& rng) {
  int other = static_cast<int>(rand_index(rng, static_cast<std::size_t>(n_classes - 1)));
  if (other >= true_class) ++other;
  return other;
}

}  // namespace

int TaskSchema::class_index(const std::string& name) const {
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown class '" + name + "' in task " + task_name);
}

void TaskSchema::validate() const {
  if (task_name.empty()) throw std::invalid_argument("TaskSchema: empty task name");
  if (class_names.size() < 2) {
    throw std::invalid_argument("TaskSchema " + task_name + ": need at least 2 classes");
  }
  std::set<std::string> seen(class_names.begin(), class_names.end());
  if (seen.size() != class_names.size()) {
    throw std::invalid_argument("TaskSchema " + task_name + ": duplicate class names");
  }
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& [parent, child] : hierarchy) {
    if (!seen.count(parent) || !seen.count(child)) {
      throw std::invalid_argument("TaskSchema " + task_name + ": hierarchy names unknown class");
    }
    pairs.insert({parent, child});
    pairs.insert({child, parent});
  }
  std::map<std::string, std::vector<std::string>> owners;  // keyword -> classes
  for (const std::string& cls : class_names) {
    auto it = keyword_map.find(cls);
    if (it == keyword_map.end() || it->second.empty()) {
      throw std::invalid_argument("TaskSchema " + task_name + ": class '" + cls +
                                  "' has no keywords");
    }
    for (const std::string& kw : it->second) {
      if (kw.empty() || kw.find(' ') != std::string::npos) {
        throw std::invalid_argument("TaskSchema " + task_name +
                                    ": keywords must be single non-empty tokens");
      }
      owners[kw].push_back(cls);
    }
  }
  for (const auto& [kw, classes] : owners) {
    for (std::size_t a = 0; a < classes.size(); ++a) {
      for (std::size_t b = a + 1; b < classes.size(); ++b) {
        if (!pairs.count({classes[a], classes[b]})) {
          throw std::invalid_argument("TaskSchema " + task_name + ": keyword '" + kw +
                                      "' shared by '" + classes[a] + "' and '" + classes[b] +
                                      "' without a hierarchy pair");
        }
      }
    }
  }
  for (const auto& [cls, kws] : keyword_map) {
    if (!seen.count(cls)) {
      throw std::invalid_argument("TaskSchema " + task_name + ": keyword_map names unknown class '" +
                                  cls + "'");
    }
    (void)kws;
  }
}

void CorpusSpec::validate() const {
  if (schemas.empty()) throw std::invalid_argument("CorpusSpec: no task schemas");
  for (const auto& s : schemas) s.validate();
  if (n_reports < 1) throw std::invalid_argument("CorpusSpec: n_reports must be >= 1");
  if (max_len < 1) throw std::invalid_argument("CorpusSpec: max_len must be >= 1");
  auto frac = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!frac(noise_rate) || !frac(conflict_rate) || !frac(empty_rate)) {
    throw std::invalid_argument("CorpusSpec: rates must lie in [0, 1]");
  }
  if (noise_rate + conflict_rate + empty_rate > 1.0 + 1e-12) {
    throw std::invalid_argument("CorpusSpec: noise + conflict + empty rates exceed 1");
  }
  if (!class_prior.empty() && class_prior.size() != schemas.size()) {
    throw std::invalid_argument("CorpusSpec: class_prior must have one entry per task");
  }
  for (std::size_t t = 0; t < class_prior.size(); ++t) {
    const auto& prior = class_prior[t];
    if (prior.empty()) continue;  // uniform
    if (prior.size() != schemas[t].class_names.size()) {
      throw std::invalid_argument("CorpusSpec: class_prior size mismatch for task " +
                                  schemas[t].task_name);
    }
    double sum = 0.0;
    for (double p : prior) {
      if (p < 0.0) throw std::invalid_argument("CorpusSpec: negative class prior");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("CorpusSpec: class_prior must sum to 1 for task " +
                                  schemas[t].task_name);
    }
  }
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::clean: return "clean";
    case Provenance::label_noise: return "label_noise";
    case Provenance::conflicting: return "conflicting";
    case Provenance::empty_evidence: return "empty_evidence";
  }
  throw std::logic_error("unknown Provenance");
}

Provenance provenance_from_name(const std::string& s) {
  if (s == "clean") return Provenance::clean;
  if (s == "label_noise") return Provenance::label_noise;
  if (s == "conflicting") return Provenance::conflicting;
  if (s == "empty_evidence") return Provenance::empty_evidence;
  throw std::invalid_argument("unknown provenance: " + s);
}

int Vocabulary::add(const std::string& word) {
  auto it = word_to_index.find(word);
  if (it != word_to_index.end()) return it->second;
  const int idx = static_cast<int>(index_to_word.size());
  word_to_index.emplace(word, idx);
  index_to_word.push_back(word);
  return idx;
}

int Vocabulary::index_of(const std::string& word) const {
  auto it = word_to_index.find(word);
  return it == word_to_index.end() ? -1 : it->second;
}

std::vector<int> preprocess(std::span<const int> tokens, std::size_t max_len) {
  std::vector<int> out(tokens.rbegin(), tokens.rend());
  if (out.size() > max_len) out.resize(max_len);
  return out;
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const int needed = longest_template(spec);
  if (spec.max_len < needed) {
    throw std::invalid_argument("CorpusSpec: max_len " + std::to_string(spec.max_len) +
                                " is shorter than the longest report template (" +
                                std::to_string(needed) + ")");
  }

  std::mt19937_64 rng(spec.rng_seed);

  // Exact provenance quotas, shuffled; keeps observed fractions within 1/n of
  // the requested rates.
  const int n = spec.n_reports;
  auto quota = [&](double rate) { return static_cast<int>(std::llround(rate * n)); };
  int n_noise = quota(spec.noise_rate);
  int n_conflict = quota(spec.conflict_rate);
  int n_empty = quota(spec.empty_rate);
  while (n_noise + n_conflict + n_empty > n) --n_noise;  // rounding overshoot
  std::vector<Provenance> provenance;
  provenance.reserve(static_cast<std::size_t>(n));
  provenance.insert(provenance.end(), static_cast<std::size_t>(n_noise), Provenance::label_noise);
  provenance.insert(provenance.end(), static_cast<std::size_t>(n_conflict), Provenance::conflicting);
  provenance.insert(provenance.end(), static_cast<std::size_t>(n_empty), Provenance::empty_evidence);
  provenance.insert(provenance.end(), static_cast<std::size_t>(n) - provenance.size(),
                    Provenance::clean);
  shuffle_inplace(provenance, rng);

  std::vector<std::vector<double>> priors(spec.schemas.size());
  for (std::size_t t = 0; t < spec.schemas.size(); ++t) {
    if (t < spec.class_prior.size() && !spec.class_prior[t].empty()) {
      priors[t] = spec.class_prior[t];
    } else {
      priors[t].assign(spec.schemas[t].class_names.size(),
                       1.0 / static_cast<double>(spec.schemas[t].class_names.size()));
    }
  }

  Corpus corpus;
  corpus.schemas = spec.schemas;
  corpus.max_len = spec.max_len;
  for (const std::string& w : filler_pool()) corpus.vocab.add(w);

  for (int id = 0; id < n; ++id) {
    const Provenance prov = provenance[static_cast<std::size_t>(id)];
    std::vector<std::string> words;

    words.push_back("specimen");
    words.push_back("received");
    emit_filler(words, rng, 2, 4);
    words.push_back("microscopic");
    words.push_back("examination");
    emit_filler(words, rng, 8, 16);

    words.push_back("final");
    words.push_back("diagnosis");
    std::vector<int> labels(spec.schemas.size(), 0);
    for (std::size_t t = 0; t < spec.schemas.size(); ++t) {
      const TaskSchema& schema = spec.schemas[t];
      const int truth = sample_class(priors[t], rng);
      labels[t] = truth;
      words.push_back(schema.task_name);
      switch (prov) {
        case Provenance::clean:
          emit_evidence(words, schema, schema.class_names[static_cast<std::size_t>(truth)], rng);
          break;
        case Provenance::label_noise: {
          const int wrong = pick_other_class(truth, schema.n_classes(), rng);
          emit_evidence(words, schema, schema.class_names[static_cast<std::size_t>(wrong)], rng);
          break;
        }
        case Provenance::conflicting: {
          const int other = pick_other_class(truth, schema.n_classes(), rng);
          emit_evidence(words, schema, schema.class_names[static_cast<std::size_t>(truth)], rng);
          emit_evidence(words, schema, schema.class_names[static_cast<std::size_t>(other)], rng);
          break;
        }
        case Provenance::empty_evidence:
          emit_filler(words, rng, 2, 4);
          break;
      }
    }
    words.push_back("end");
    words.push_back("of");
    words.push_back("report");

    std::vector<int> raw;
    raw.reserve(words.size());
    for (const std::string& w : words) raw.push_back(corpus.vocab.add(w));

    TokenizedReport rep;
    rep.report_id = id;
    rep.tokens = preprocess(raw, static_cast<std::size_t>(spec.max_len));
    rep.labels = std::move(labels);
    rep.provenance = prov;
    corpus.reports.push_back(std::move(rep));
  }
  return corpus;
}

SplitResult split(const std::vector<TokenizedReport>& reports, std::array<double, 3> fractions,
                  std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }

  const std::size_t n = reports.size();
  // Largest-remainder apportionment of the global sizes.
  auto apportion = [&fractions](std::size_t count) {
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t used = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = fractions[static_cast<std::size_t>(k)] * static_cast<double>(count);
      sizes[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      remainder[static_cast<std::size_t>(k)] = exact - std::floor(exact + 1e-9);
      used += sizes[static_cast<std::size_t>(k)];
    }
    while (used < count) {
      int best = 0;
      for (int k = 1; k < 3; ++k) {
        if (remainder[static_cast<std::size_t>(k)] > remainder[static_cast<std::size_t>(best)] + 1e-15) best = k;
      }
      ++sizes[static_cast<std::size_t>(best)];
      remainder[static_cast<std::size_t>(best)] = -1.0;
      ++used;
    }
    return sizes;
  };
  const std::array<std::size_t, 3> target = apportion(n);

  // Group by the full label tuple so every split keeps the class mix.
  std::map<std::vector<int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[reports[i].labels].push_back(i);

  std::mt19937_64 rng(seed ^ 0xa5a5a5a55a5a5a5aULL);
  std::array<std::vector<std::size_t>, 3> members;
  for (auto& [labels, idxs] : groups) {
    shuffle_inplace(idxs, rng);
    const std::array<std::size_t, 3> want = apportion(idxs.size());
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < want[static_cast<std::size_t>(k)]; ++j) {
        members[static_cast<std::size_t>(k)].push_back(idxs[pos++]);
      }
    }
  }

  // Per-group rounding can leave the global totals a few off target; move the
  // most recently assigned items between splits to settle it.
  for (int from = 0; from < 3; ++from) {
    auto& src = members[static_cast<std::size_t>(from)];
    while (src.size() > target[static_cast<std::size_t>(from)]) {
      int to = -1;
      for (int k = 0; k < 3; ++k) {
        if (members[static_cast<std::size_t>(k)].size() < target[static_cast<std::size_t>(k)]) {
          to = k;
          break;
        }
      }
      if (to < 0) throw std::logic_error("split: apportionment imbalance");
      members[static_cast<std::size_t>(to)].push_back(src.back());
      src.pop_back();
    }
  }

  SplitResult out;
  std::array<std::vector<TokenizedReport>*, 3> dests{&out.train, &out.val, &out.test};
  for (int k = 0; k < 3; ++k) {
    auto& idxs = members[static_cast<std::size_t>(k)];
    std::sort(idxs.begin(), idxs.end());
    for (std::size_t i : idxs) dests[static_cast<std::size_t>(k)]->push_back(reports[i]);
  }
  return out;
}

}  // namespace dacxai
