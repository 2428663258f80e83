#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "dagreg/io.hpp"
#include "pipeline.hpp"

using namespace dagreg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "dagreg");
  return cli::run(std::move(args));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("simulate writes a reproducible bundle") {
  TempDir tmp("dagreg_cli_sim");
  const std::string out = tmp.path.string();
  REQUIRE(run({"simulate", "--scenario", "1", "--setting", "1", "--seed", "5", "--out", out}) == 0);
  const fs::path b = tmp.path / "1_1_5";
  const arma::mat X = read_csv(b / "X.csv"), Y = read_csv(b / "Y.csv");
  CHECK(X.n_rows == 100);
  CHECK(X.n_cols == 100);
  CHECK(Y.n_rows == 100);
  CHECK(Y.n_cols == 50);
  const std::string y1 = slurp(b / "Y.csv"), m1 = slurp(b / "manifest.json");
  REQUIRE(run({"simulate", "--scenario", "1", "--setting", "1", "--seed", "5", "--out", out}) == 0);
  CHECK(slurp(b / "Y.csv") == y1);
  CHECK(slurp(b / "manifest.json") == m1);
  const auto manifest = read_json(b / "manifest.json");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["version"] == kArtifactVersion);

  SimSpec s{1, 1, 5};
  const std::string h = cli::spec_hash(s);
  CHECK(manifest["spec_hash"] == h);
  s.setting = 2;
  CHECK(cli::spec_hash(s) != h);
  s = SimSpec{1, 1, 6};
  CHECK(cli::spec_hash(s) != h);
  s = SimSpec{1, 1, 5};
  s.n = 99;
  CHECK(cli::spec_hash(s) != h);
}

TEST_CASE("fit validates inputs before sampling") {
  TempDir tmp("dagreg_cli_missing");
  REQUIRE(run({"simulate", "--scenario", "1", "--seed", "1", "--n", "20", "--p", "5", "--q", "3",
               "--out", tmp.path.string()}) == 0);
  const fs::path b = tmp.path / "1_1_1";
  CHECK(run({"fit", "--x", (b / "X.csv").string(), "--y", (b / "nope.csv").string(), "--out",
             (tmp.path / "fit").string()}) == 2);
  CHECK_FALSE(fs::exists(tmp.path / "fit"));
  // dimension mismatch
  write_csv(arma::mat(7, 3, arma::fill::ones), tmp.path / "short.csv");
  CHECK(run({"fit", "--x", (b / "X.csv").string(), "--y", (tmp.path / "short.csv").string()}) == 2);
  CHECK(run({"simulate", "--scenario", "9"}) == 2);
  CHECK(run({"fit", "--method", "bogus", "--data", b.string()}) == 2);
  // output path blocked by a regular file
  std::ofstream(tmp.path / "blocker") << "x";
  CHECK(run({"fit", "--data", b.string(), "--iterations", "20", "--burn-in", "10", "--out",
             (tmp.path / "blocker" / "fit").string()}) == 4);
}

TEST_CASE("fit emits all artifacts and echoes the effective config") {
  TempDir tmp("dagreg_cli_fit");
  REQUIRE(run({"simulate", "--scenario", "1", "--seed", "2", "--n", "40", "--p", "10", "--q", "5",
               "--out", tmp.path.string()}) == 0);
  const fs::path b = tmp.path / "1_1_2";
  const fs::path ess = tmp.path / "ess", tes = tmp.path / "tes";
  REQUIRE(run({"fit", "--method", "ess", "--data", b.string(), "--iterations", "60", "--burn-in",
               "20", "--out", ess.string(), "--export-csv"}) == 0);
  for (const char* f : {"Gamma_hat.csv", "B_hat.csv", "L_hat.csv", "D_hat.csv", "Omega_hat.csv",
                        "dag_hat.json", "chain.bin", "chain.bin.json", "chain.csv", "timing.json",
                        "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(ess / f), f);
  }
  CHECK(read_chain(ess / "chain.bin").draws.size() == 40);
  CHECK(read_json(ess / "timing.json").contains("per_iteration_s"));

  REQUIRE(run({"fit", "--method", "tes", "--data", b.string(), "--alpha", "0.5", "--iterations",
               "60", "--burn-in", "20", "--out", tes.string()}) == 0);
  const auto m = read_json(tes / "manifest.json");
  CHECK(m["config"]["alpha"] == 0.5);
  CHECK(m["config"]["effective_cap"] == 10);
  CHECK(m.contains("config_hash"));
  CHECK(fs::exists(tes / "gamma_chain.bin"));
  CHECK(fs::exists(tes / "dag_chain.bin"));

  // identical inputs give identical numbers
  const std::string first = slurp(tes / "B_hat.csv");
  REQUIRE(run({"fit", "--method", "tes", "--data", b.string(), "--alpha", "0.5", "--iterations",
               "60", "--burn-in", "20", "--out", tes.string()}) == 0);
  CHECK(slurp(tes / "B_hat.csv") == first);

  // config file, overridden by a flag
  std::ofstream(tmp.path / "run.toml") << "[fit]\nmethod = \"tes\"\niterations = 30\nburn-in = 10\nalpha = 0.7\n";
  REQUIRE(run({"--config", (tmp.path / "run.toml").string(), "fit", "--data", b.string(),
               "--alpha", "0.9", "--out", (tmp.path / "cfg").string()}) == 0);
  const auto mc = read_json(tmp.path / "cfg" / "manifest.json");
  CHECK(mc["config"]["iterations"] == 30);
  CHECK(mc["config"]["alpha"] == 0.9);
}

TEST_CASE("evaluate scores a perfect estimate and flags undefined ratios") {
  TempDir tmp("dagreg_cli_eval");
  REQUIRE(run({"simulate", "--scenario", "1", "--seed", "3", "--n", "30", "--p", "10", "--q", "4",
               "--out", tmp.path.string()}) == 0);
  const fs::path b = tmp.path / "1_1_3", fit = tmp.path / "perfect";
  fs::create_directories(fit);
  fs::copy_file(b / "Gamma0.csv", fit / "Gamma_hat.csv");
  fs::copy_file(b / "dag0.json", fit / "dag_hat.json");
  fs::copy_file(b / "Omega0.csv", fit / "Omega_hat.csv");
  write_json({{"method", "oracle"}}, fit / "manifest.json");
  REQUIRE(run({"evaluate", "--fit", fit.string(), "--truth", b.string(), "--out",
               (tmp.path / "ev").string()}) == 0);
  const auto records = read_json(tmp.path / "ev" / "metrics.json");
  int checked = 0;
  for (const auto& r : records) {
    const std::string name = r["metric"];
    if (name.rfind("B.", 0) == 0) {
      CHECK(r["value"].get<double>() == doctest::Approx(1.0));
      ++checked;
    }
    if (name == "L.sensitivity" || name == "L.precision" || name == "L.mcc") {
      // q = 4 gives q/5 = 0 true edges
      CHECK(r["value"].is_null());
      CHECK(r["undefined"] == true);
      ++checked;
    }
    if (name.rfind("Omega.", 0) == 0) CHECK(r["value"].get<double>() <= 1e-12);
    CHECK(r.contains("scenario"));
    CHECK(r.contains("setting"));
    CHECK(r.contains("replicate"));
  }
  CHECK(checked == 7);
  const std::string table = slurp(tmp.path / "ev" / "table.csv");
  CHECK(table.find("scenario,setting,method,target,sensitivity,specificity,precision,mcc") == 0);
  CHECK(table.find("1,1,oracle,L,undefined,1.0000,undefined,undefined") != std::string::npos);
  CHECK(table.find("1,1,oracle,B,1.0000,1.0000,1.0000,1.0000") != std::string::npos);
}

TEST_CASE("replicate with count 1 reduces to a single pipeline") {
  TempDir tmp("dagreg_cli_rep");
  const fs::path out = tmp.path / "rep";
  REQUIRE(run({"replicate", "--scenario", "1", "--setting", "1", "--n", "40", "--p", "10", "--q",
               "5", "--method", "tes", "--count", "1", "--seed", "9", "--iterations", "80",
               "--burn-in", "20", "--out", out.string()}) == 0);
  const auto records = read_json(out / "metrics.json");

  SimSpec s{1, 1, 9};
  s.n = 40;
  s.p = 10;
  s.q = 5;
  const SimData sim = generate(s);
  TesConfig cfg = TesConfig::defaults(5);
  cfg.iterations = 80;
  cfg.burn_in = 20;
  cfg.seed = 9;
  const cli::FitOutput fit = cli::fit_tes(sim.data, cfg);
  const auto expect = cli::metric_records(cli::evaluate(fit.gamma_hat, fit.dag_hat, fit.Omega_hat, sim.truth),
                                          1, 1, "tes", 1);
  REQUIRE(records.size() == expect.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i]["metric"] == expect[i]["metric"]);
    CHECK(records[i]["value"] == expect[i]["value"]);
  }
  CHECK(fs::exists(out / "table1.csv"));
  CHECK(read_json(out / "manifest.json")["failures"].empty());
}

TEST_CASE("replicate records failures per replicate") {
  TempDir tmp("dagreg_cli_fail");
  write_csv(arma::mat(2, 2, arma::fill::zeros), tmp.path / "bad.csv");
  const fs::path out = tmp.path / "rep";
  const int code = run({"replicate", "--n", "30", "--p", "6", "--q", "3", "--count", "2",
                        "--iterations", "20", "--burn-in", "5", "--warm-start",
                        (tmp.path / "bad.csv").string(), "--out", out.string()});
  CHECK(code == 3);
  const auto failures = read_json(out / "manifest.json")["failures"];
  CHECK(failures.size() == 2);
  CHECK(failures[0].contains("error"));
}

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code_for(ErrorKind::Validation) == 2);
  CHECK(cli::exit_code_for(ErrorKind::Io) == 4);
  CHECK(cli::exit_code_for(ErrorKind::RankDeficient) == 3);
  CHECK(cli::exit_code_for(ErrorKind::NotPositiveDefinite) == 3);
}
