#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include <doctest.h>

#include "dacxai/corpus.hpp"

using namespace dacxai;

namespace {

// Keyword tokens chosen to never collide with the generator's structural or
// filler vocabulary.
CorpusSpec two_task_spec(int n_reports) {
  TaskSchema site;
  site.task_name = "site";
  site.class_names = {"colon", "lung", "breast"};
  site.keyword_map = {{"colon", {"colonic", "cecal"}},
                      {"lung", {"pulmonary", "bronchial"}},
                      {"breast", {"ductal", "lobular"}}};

  TaskSchema grade;
  grade.task_name = "grade";
  grade.class_names = {"low", "high"};
  grade.keyword_map = {{"low", {"indolent"}}, {"high", {"anaplastic", "pleomorphic"}}};

  CorpusSpec spec;
  spec.schemas = {site, grade};
  spec.n_reports = n_reports;
  spec.max_len = 400;
  spec.noise_rate = 0.1;
  spec.conflict_rate = 0.05;
  spec.empty_rate = 0.05;
  spec.rng_seed = 42;
  return spec;
}

std::set<int> keyword_ids(const Corpus& corpus, std::size_t task, int cls) {
  std::set<int> ids;
  const TaskSchema& schema = corpus.schemas[task];
  for (const auto& kw : schema.keyword_map.at(schema.class_names[static_cast<std::size_t>(cls)])) {
    const int id = corpus.vocab.index_of(kw);
    if (id >= 0) ids.insert(id);
  }
  return ids;
}

bool contains_any(const std::vector<int>& tokens, const std::set<int>& ids) {
  for (int t : tokens)
    if (ids.count(t)) return true;
  return false;
}

}  // namespace

TEST_CASE("preprocess reverses and keeps the tail of long documents") {
  const std::vector<int> abc{1, 2, 3};
  CHECK(preprocess(abc, 10) == std::vector<int>{3, 2, 1});
  const std::vector<int> long5{1, 2, 3, 4, 5};
  CHECK(preprocess(long5, 3) == std::vector<int>{5, 4, 3});
  CHECK(preprocess(std::vector<int>{}, 4).empty());
}

TEST_CASE("generation is deterministic in the seed") {
  const CorpusSpec spec = two_task_spec(200);
  const Corpus a = generate_corpus(spec);
  const Corpus b = generate_corpus(spec);
  REQUIRE(a.reports.size() == b.reports.size());
  CHECK(a.vocab.index_to_word == b.vocab.index_to_word);
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(a.reports[i].tokens == b.reports[i].tokens);
    CHECK(a.reports[i].labels == b.reports[i].labels);
    CHECK(a.reports[i].provenance == b.reports[i].provenance);
  }

  CorpusSpec other = spec;
  other.rng_seed = 43;
  const Corpus c = generate_corpus(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.reports.size() && !any_diff; ++i) {
    any_diff = a.reports[i].tokens != c.reports[i].tokens;
  }
  CHECK(any_diff);
}

TEST_CASE("provenance counts hit their quotas exactly") {
  CorpusSpec spec = two_task_spec(10000);
  spec.max_len = 3000;
  const Corpus corpus = generate_corpus(spec);
  std::map<Provenance, int> counts;
  for (const auto& r : corpus.reports) ++counts[r.provenance];
  CHECK(counts[Provenance::label_noise] == 1000);
  CHECK(counts[Provenance::conflicting] == 500);
  CHECK(counts[Provenance::empty_evidence] == 500);
  CHECK(counts[Provenance::clean] == 8000);
}

TEST_CASE("report ids are consecutive and labels are in range") {
  const Corpus corpus = generate_corpus(two_task_spec(150));
  for (std::size_t i = 0; i < corpus.reports.size(); ++i) {
    const auto& r = corpus.reports[i];
    CHECK(r.report_id == static_cast<int>(i));
    REQUIRE(r.labels.size() == 2);
    CHECK(r.labels[0] >= 0);
    CHECK(r.labels[0] < 3);
    CHECK(r.labels[1] >= 0);
    CHECK(r.labels[1] < 2);
    CHECK(r.tokens.size() <= 400);
    for (int t : r.tokens) {
      CHECK(t >= 0);
      CHECK(t < static_cast<int>(corpus.vocab.size()));
    }
  }
}

TEST_CASE("provenance controls which keywords a report voices") {
  const Corpus corpus = generate_corpus(two_task_spec(400));
  for (const auto& r : corpus.reports) {
    for (std::size_t t = 0; t < 2; ++t) {
      const int truth = r.labels[t];
      const std::set<int> own = keyword_ids(corpus, t, truth);
      std::set<int> others;
      for (int c = 0; c < corpus.schemas[t].n_classes(); ++c) {
        if (c == truth) continue;
        for (int id : keyword_ids(corpus, t, c)) others.insert(id);
      }
      switch (r.provenance) {
        case Provenance::clean:
          CHECK(contains_any(r.tokens, own));
          CHECK_FALSE(contains_any(r.tokens, others));
          break;
        case Provenance::label_noise:
          CHECK_FALSE(contains_any(r.tokens, own));
          CHECK(contains_any(r.tokens, others));
          break;
        case Provenance::conflicting:
          CHECK(contains_any(r.tokens, own));
          CHECK(contains_any(r.tokens, others));
          break;
        case Provenance::empty_evidence:
          CHECK_FALSE(contains_any(r.tokens, own));
          CHECK_FALSE(contains_any(r.tokens, others));
          break;
      }
    }
  }
}

TEST_CASE("keywords survive aggressive trimming because evidence sits at the tail") {
  CorpusSpec spec = two_task_spec(300);
  // Tightest legal budget: exactly the worst-case diagnosis-plus-trailer.
  spec.max_len = 2 + (1 + 2 * (4 * 3)) * 2 + 3;
  const Corpus corpus = generate_corpus(spec);
  int trimmed = 0;
  for (const auto& r : corpus.reports) {
    if (r.tokens.size() == static_cast<std::size_t>(spec.max_len)) ++trimmed;
    if (r.provenance != Provenance::clean) continue;
    for (std::size_t t = 0; t < 2; ++t) {
      CHECK(contains_any(r.tokens, keyword_ids(corpus, t, r.labels[t])));
    }
  }
  CHECK(trimmed > 0);  // the budget actually bites

  spec.max_len = 10;  // below the worst-case template
  CHECK_THROWS_AS(generate_corpus(spec), std::invalid_argument);
}

TEST_CASE("class priors skew the label distribution") {
  CorpusSpec spec = two_task_spec(2000);
  spec.class_prior = {{0.8, 0.1, 0.1}, {}};
  const Corpus corpus = generate_corpus(spec);
  int majority = 0;
  for (const auto& r : corpus.reports) majority += r.labels[0] == 0 ? 1 : 0;
  CHECK(majority > 1500);
  CHECK(majority < 1900);
}

TEST_CASE("vocabulary reserves index zero for padding") {
  const Corpus corpus = generate_corpus(two_task_spec(50));
  CHECK(corpus.vocab.index_to_word[0] == std::string(Vocabulary::pad_word));
  CHECK(corpus.vocab.index_of(Vocabulary::pad_word) == 0);
  CHECK(corpus.vocab.index_of("no-such-token") == -1);
  for (std::size_t i = 0; i < corpus.vocab.size(); ++i) {
    CHECK(corpus.vocab.index_of(corpus.vocab.word(static_cast<int>(i))) == static_cast<int>(i));
  }
  // No generated report may contain the padding index.
  for (const auto& r : corpus.reports) {
    CHECK(std::find(r.tokens.begin(), r.tokens.end(), Vocabulary::pad_index) == r.tokens.end());
  }
}

TEST_CASE("hierarchy lets a child class voice shared parent phrasing") {
  TaskSchema task;
  task.task_name = "site";
  task.class_names = {"carcinoma", "adeno"};
  // "neoplastic" belongs to both, legal because of the hierarchy pair.
  task.keyword_map = {{"carcinoma", {"neoplastic", "infiltrating"}},
                      {"adeno", {"neoplastic", "glandular"}}};
  task.hierarchy = {{"carcinoma", "adeno"}};

  CorpusSpec spec;
  spec.schemas = {task};
  spec.n_reports = 600;
  spec.max_len = 200;
  spec.rng_seed = 9;
  const Corpus corpus = generate_corpus(spec);

  const int shared = corpus.vocab.index_of("neoplastic");
  const int child_only = corpus.vocab.index_of("glandular");
  REQUIRE(shared >= 0);
  int child_reports = 0, child_voicing_shared = 0;
  for (const auto& r : corpus.reports) {
    if (r.labels[0] != 1) continue;
    ++child_reports;
    const bool has_shared = std::find(r.tokens.begin(), r.tokens.end(), shared) != r.tokens.end();
    const bool has_own = child_only >= 0 &&
                         std::find(r.tokens.begin(), r.tokens.end(), child_only) != r.tokens.end();
    if (has_shared) ++child_voicing_shared;
    CHECK((has_shared || has_own));
  }
  REQUIRE(child_reports > 100);
  // A majority — but not all — of child reports use the shared phrasing.
  CHECK(child_voicing_shared > child_reports / 4);
  CHECK(child_voicing_shared < (9 * child_reports) / 10);

  // Sharing a keyword without declaring the hierarchy is a schema error.
  TaskSchema bad = task;
  bad.hierarchy.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("split honors global sizes and stratifies by label tuple") {
  const Corpus corpus = generate_corpus(two_task_spec(1000));
  const SplitResult s = split(corpus.reports, {0.8, 0.1, 0.1}, 7);
  CHECK(s.train.size() == 800);
  CHECK(s.val.size() == 100);
  CHECK(s.test.size() == 100);

  // Disjoint cover.
  std::set<int> seen;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (const auto& r : *part) CHECK(seen.insert(r.report_id).second);
  }
  CHECK(seen.size() == 1000);

  // Per-label-tuple fractions stay within two points of the targets.
  std::map<std::vector<int>, std::array<double, 4>> tally;  // train,val,test,total
  for (const auto& r : corpus.reports) tally[r.labels][3] += 1.0;
  for (const auto& r : s.train) tally[r.labels][0] += 1.0;
  for (const auto& r : s.val) tally[r.labels][1] += 1.0;
  for (const auto& r : s.test) tally[r.labels][2] += 1.0;
  const double want[3] = {0.8, 0.1, 0.1};
  for (const auto& [labels, row] : tally) {
    if (row[3] < 50) continue;  // tiny groups cannot hold a percentage
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(row[static_cast<std::size_t>(k)] / row[3] - want[k]) <= 0.02);
    }
  }

  // Determinism and seed sensitivity.
  const SplitResult again = split(corpus.reports, {0.8, 0.1, 0.1}, 7);
  REQUIRE(again.test.size() == s.test.size());
  for (std::size_t i = 0; i < s.test.size(); ++i) {
    CHECK(again.test[i].report_id == s.test[i].report_id);
  }
  const SplitResult other = split(corpus.reports, {0.8, 0.1, 0.1}, 8);
  bool differs = false;
  for (std::size_t i = 0; i < s.test.size() && !differs; ++i) {
    differs = other.test[i].report_id != s.test[i].report_id;
  }
  CHECK(differs);

  CHECK_THROWS_AS(split(corpus.reports, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(corpus.reports, {1.2, -0.1, -0.1}, 1), std::invalid_argument);
}

TEST_CASE("corpus spec validation rejects inconsistent inputs") {
  CorpusSpec spec = two_task_spec(10);
  spec.n_reports = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_task_spec(10);
  spec.noise_rate = 0.7;
  spec.conflict_rate = 0.4;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_task_spec(10);
  spec.class_prior = {{0.5, 0.5, 0.5}, {}};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_task_spec(10);
  spec.schemas[0].keyword_map["colon"] = {};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_task_spec(10);
  spec.schemas[0].class_names = {"colon"};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
