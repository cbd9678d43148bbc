#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const fs::path& cwd, const std::string& args) {
  const fs::path log = cwd / "cli.log";
  const std::string cmd =
      "cd '" + cwd.string() + "' && '" HIERCROP_CLI_PATH "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shared workspace: a 16-sample dataset, its split and a quick config.
struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "hiercrop_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "quick.json") << R"({
      "synth": {"count": 16, "seed": 5},
      "run": {"epochs": 1, "deterministic": true},
      "eval": {"split": "test"}
    })";
  }
  ~Workspace() { fs::remove_all(dir); }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("synth writes the dataset layout deterministically") {
    const auto& d = ws().dir;
    const Result a = run(d, "synth -c quick.json -o data");
    REQUIRE_MESSAGE(a.code == 0, a.out);
    CHECK(fs::exists(d / "data" / "meta.json"));
    CHECK(fs::exists(d / "data" / "taxonomy.json"));
    std::size_t dirs = 0;
    for (const auto& e : fs::directory_iterator(d / "data" / "samples")) {
      dirs += e.is_directory();
      for (const char* f : {"hsi.bin", "msi.bin", "labels.bin", "prior.bin", "sample.json"})
        CHECK(fs::exists(e.path() / f));
    }
    CHECK(dirs == 16);
    const auto meta = nlohmann::json::parse(slurp(d / "data" / "meta.json"));
    CHECK(meta.contains("config_hash"));

    REQUIRE(run(d, "synth -c quick.json -o again").code == 0);
    for (const auto& e : fs::recursive_directory_iterator(d / "data" / "samples")) {
      if (!e.is_regular_file()) continue;
      const fs::path twin = d / "again" / fs::relative(e.path(), d / "data");
      CHECK(slurp(e.path()) == slurp(twin));
    }
    CHECK(slurp(d / "data" / "meta.json") == slurp(d / "again" / "meta.json"));
  }

  TEST_CASE("usage errors exit with code 2") {
    const auto& d = ws().dir;
    const Result ratio = run(d, "synth -c quick.json -o bad -s synth.dims.msi_w=25");
    CHECK(ratio.code == 2);
    CHECK(ratio.out.find("resolution ratio") != std::string::npos);
    const Result unknown = run(d, "synth -c quick.json -o bad -s synth.colour=1");
    CHECK(unknown.code == 2);
    CHECK(unknown.out.find("synth.colour") != std::string::npos);
    CHECK(run(d, "frobnicate").code == 2);
    const Result missing = run(d, "eval -c quick.json -s paths.dataset=data -s paths.run_dir=nowhere");
    CHECK(missing.code == 2);
    CHECK(missing.out.find("nowhere") != std::string::npos);
    const Result no_data = run(d, "split -c quick.json -s paths.dataset=absent");
    CHECK(no_data.code == 2);
    CHECK(no_data.out.find("absent") != std::string::npos);
  }

  TEST_CASE("split, train and eval") {
    const auto& d = ws().dir;
    REQUIRE(run(d, "split -c quick.json -s paths.dataset=data").code == 0);
    REQUIRE(fs::exists(d / "data" / "splits.json"));
    const Result t = run(d, "train -c quick.json -s paths.dataset=data run.months_used=10 run.use_prior=false -o run");
    REQUIRE_MESSAGE(t.code == 0, t.out);
    const std::string hist = slurp(d / "run" / "history.csv");
    CHECK(hist.find("months_used=10") != std::string::npos);
    CHECK(fs::exists(d / "run" / "checkpoints" / "best.ckpt" / "manifest.json"));
    CHECK(fs::exists(d / "run" / "run.json"));

    const Result e = run(d, "eval -c quick.json -s paths.dataset=data paths.run_dir=run -o eval");
    REQUIRE_MESSAGE(e.code == 0, e.out);
    const std::string csv = slurp(d / "eval" / "report.csv");
    for (const char* s : {",all,", ",changed,", ",unchanged,"}) CHECK(csv.find(s) != std::string::npos);
    const auto rep = nlohmann::json::parse(slurp(d / "eval" / "report.json"));
    CHECK(rep.at("configs").at(0).at("use_prior") == false);
    CHECK(rep.at("configs").at(0).at("months_used") == 10);
  }

  TEST_CASE("grid training and report") {
    const auto& d = ws().dir;
    const Result g = run(d,
                         "train -c quick.json -s paths.dataset=data grid.use_hyper=[false,true] "
                         "grid.use_prior=[false,true] -o grid");
    REQUIRE_MESSAGE(g.code == 0, g.out);
    const std::string deltas = slurp(d / "grid" / "deltas.csv");
    std::istringstream lines(deltas);
    std::string line;
    std::getline(lines, line);
    std::size_t hyper_rows = 0;
    bool with_prior = false, without_prior = false;
    while (std::getline(lines, line)) {
      if (line.rfind("use_hyper,", 0) != 0) continue;
      ++hyper_rows;
      with_prior = with_prior || line.find("+Prior") != std::string::npos;
      without_prior = without_prior || line.find("+Prior") == std::string::npos;
    }
    CHECK(hyper_rows == 2 * 3);
    CHECK(with_prior);
    CHECK(without_prior);

    const Result r = run(d, "report -c quick.json -s paths.run_dir=grid -o rep");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    CHECK(fs::exists(d / "rep" / "deltas.csv"));
    CHECK(fs::exists(d / "rep" / "f1_by_level_changed.svg"));
    CHECK(slurp(d / "rep" / "deltas.csv") == deltas);
  }
}
