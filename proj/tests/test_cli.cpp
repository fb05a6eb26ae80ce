#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "dacxai/io.hpp"

#ifdef _WIN32
#error "CLI tests assume a POSIX shell"
#endif
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = {}) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / "dacxai_cli_io";
  fs::create_directories(dir);
  const fs::path out_f = dir / ("out" + std::to_string(counter) + ".txt");
  const fs::path err_f = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  std::string cmd = env_prefix + std::string(DACXAI_CLI_PATH) + " " + args + " >" +
                    out_f.string() + " 2>" + err_f.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_f);
  r.err = slurp(err_f);
  return r;
}

const char* kPipelineConfig = R"json({
  "seed": 7,
  "threads": 2,
  "corpus": {
    "n_reports": 240,
    "max_len": 160,
    "noise_rate": 0.1,
    "conflict_rate": 0.05,
    "empty_rate": 0.05,
    "split": [0.75, 0.125, 0.125],
    "tasks": [
      {
        "name": "site",
        "classes": ["alpha_site", "beta_site"],
        "keywords": {
          "alpha_site": ["colonic", "cecal"],
          "beta_site": ["pulmonary", "bronchial"]
        }
      },
      {
        "name": "grade",
        "classes": ["low_grade", "high_grade"],
        "keywords": {
          "low_grade": ["indolent"],
          "high_grade": ["anaplastic", "pleomorphic"]
        }
      }
    ]
  },
  "model": {"embed_dim": 8, "filter_sizes": [2, 3], "n_filters": 4, "hidden_dim": 16},
  "dac": {
    "alpha_init": 1.0,
    "accuracy_target": 0.85,
    "accuracy_band": 0.05,
    "max_epochs": 4,
    "learning_rate": 0.15,
    "batch_size": 16,
    "momentum": 0.9,
    "gamma": 1.2,
    "mode": "accuracy"
  },
  "explain": {"split": "test"},
  "aggregate": {"task": "site", "top_classes": 2, "cap": 500, "abstained": true},
  "pca": {"variance_goal": 0.9, "top_columns": 50, "annotations": 4, "kde_resolution": 24},
  "report": {"confusion_top_k": 5},
  "sweep": {"targets": [0.8, 0.9]}
})json";

struct TempTree {
  fs::path root;
  explicit TempTree(const std::string& tag) {
    root = fs::temp_directory_path() / ("dacxai_cli_" + tag);
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
};

fs::path write_config(const fs::path& dir, const char* text) {
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << text;
  return p;
}

}  // namespace

TEST_CASE("version and usage exit codes") {
  CHECK(run_cli("--version").exit_code == 0);
  CHECK(run_cli("--version").out.find("0.1.0") != std::string::npos);
  CHECK(run_cli("--help").exit_code == 0);

  const RunResult none = run_cli("");
  CHECK(none.exit_code == 2);  // a subcommand is required

  const RunResult unknown = run_cli("--frobnicate");
  CHECK(unknown.exit_code == 2);

  const RunResult bad_sub = run_cli("transmogrify");
  CHECK(bad_sub.exit_code == 2);
}

TEST_CASE("configuration errors exit with code 2 and name the problem") {
  TempTree t("cfgerr");

  const RunResult missing =
      run_cli("pipeline --config " + (t.root / "nope.json").string() + " --out " +
              (t.root / "out").string());
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("config error:") != std::string::npos);
  CHECK(missing.err.find("nope.json") != std::string::npos);

  std::string bad = kPipelineConfig;
  const auto pos = bad.find("\"gamma\": 1.2");
  REQUIRE(pos != std::string::npos);
  bad.replace(pos, std::string("\"gamma\": 1.2").size(), "\"gamma\": 1.0");
  const fs::path cfg = t.root / "bad.json";
  {
    std::ofstream out(cfg);
    out << bad;
  }
  const RunResult gamma = run_cli("pipeline --config " + cfg.string() + " --out " +
                                  (t.root / "out").string());
  CHECK(gamma.exit_code == 2);
  CHECK(gamma.err.find("config field 'dac'") != std::string::npos);

  std::string unknown = kPipelineConfig;
  unknown.insert(unknown.rfind('}'), ", \"surprise\": 1\n");
  const fs::path cfg2 = t.root / "unknown.json";
  {
    std::ofstream out(cfg2);
    out << unknown;
  }
  const RunResult extra = run_cli("pipeline --config " + cfg2.string() + " --out " +
                                  (t.root / "out").string());
  CHECK(extra.exit_code == 2);
  CHECK(extra.err.find("surprise") != std::string::npos);
}

TEST_CASE("gen honors seed overrides from flag and environment") {
  TempTree t("gen");
  const fs::path cfg = write_config(t.root, kPipelineConfig);

  auto gen_digest = [&](const std::string& tag, const std::string& extra,
                        const std::string& env = {}) {
    const fs::path out = t.root / tag;
    const RunResult r =
        run_cli("gen --config " + cfg.string() + " --out " + out.string() + extra, env);
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    return dacxai::io::file_digest(out / "corpus.jsonl");
  };

  const std::string base = gen_digest("a", "");
  const std::string same = gen_digest("b", "");
  const std::string flag1 = gen_digest("c", " --seed 101");
  const std::string flag1b = gen_digest("d", " --seed 101");
  const std::string flag2 = gen_digest("e", " --seed 202");
  const std::string env1 = gen_digest("f", "", "DACXAI_SEED=101 ");

  CHECK(base == same);       // default seed comes from the config
  CHECK(flag1 == flag1b);    // explicit seed is deterministic
  CHECK(flag1 != base);
  CHECK(flag2 != flag1);
  CHECK(env1 == flag1);      // env override behaves like the flag
}

TEST_CASE("pipeline produces a manifest and bit-identical reruns") {
  TempTree t("pipe");
  const fs::path cfg = write_config(t.root, kPipelineConfig);

  auto run_pipeline = [&](const std::string& tag) {
    const fs::path out = t.root / tag;
    const RunResult r =
        run_cli("pipeline --config " + cfg.string() + " --out " + out.string());
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    return out;
  };

  const fs::path out1 = run_pipeline("run1");
  REQUIRE(fs::exists(out1 / "manifest.json"));
  const json manifest = json::parse(slurp(out1 / "manifest.json"));
  CHECK(manifest.at("tool") == "dacxai");
  CHECK(manifest.at("version") == "0.1.0");
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("stages").size() >= 6);
  const auto& files = manifest.at("files");
  CHECK(files.size() >= 10);
  CHECK(files.contains("corpus/corpus.jsonl"));
  CHECK(files.contains("ckpt/ckpt.bin"));
  CHECK(!files.contains("manifest.json"));

  // Every listed digest matches the file on disk.
  for (const auto& [rel, digest] : files.items()) {
    const fs::path p = out1 / rel;
    REQUIRE(fs::exists(p));
    CHECK(dacxai::io::file_digest(p) == digest.get<std::string>());
  }

  const fs::path out2 = run_pipeline("run2");
  const json manifest2 = json::parse(slurp(out2 / "manifest.json"));
  CHECK(manifest2.at("files") == manifest.at("files"));
  CHECK(manifest2.at("config_digest") == manifest.at("config_digest"));
}

TEST_CASE("standalone stages chain through their artifact directories") {
  TempTree t("stages");
  const fs::path cfg = write_config(t.root, kPipelineConfig);
  const fs::path out = t.root / "work";

  auto stage = [&](const std::string& args) {
    const RunResult r = run_cli(args);
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
  };

  stage("gen --config " + cfg.string() + " --out " + (out / "corpus").string());
  REQUIRE(fs::exists(out / "corpus" / "corpus.jsonl"));
  stage("train --config " + cfg.string() + " --corpus " + (out / "corpus").string() +
        " --out " + (out / "ckpt").string());
  REQUIRE(fs::exists(out / "ckpt" / "ckpt.bin"));
  stage("sweep --config " + cfg.string() + " --corpus " + (out / "corpus").string() +
        " --targets 0.8,0.9 --out " + (out / "sweep").string());
  CHECK(fs::exists(out / "sweep" / "tradeoff.csv"));
  CHECK(fs::exists(out / "sweep" / "tradeoff.svg"));
  CHECK(fs::exists(out / "sweep" / "manifest.json"));
}
