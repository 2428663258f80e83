#include "pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "dagreg/error.hpp"
#include "dagreg/io.hpp"

namespace dagreg::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::InvalidShape:
    case ErrorKind::CapExceeded:
    case ErrorKind::CountTooLarge:
      return kValidation;
    case ErrorKind::Io:
      return kIo;
    default:
      return kNumeric;
  }
}

FitOutput fit_ess(const RegressionData& data, const EssConfig& cfg) {
  EssResult run = ess_run(data, cfg);
  EssEstimates est = ess_estimates(data, cfg, run.chain);
  FitOutput out;
  out.method = "ess";
  out.gamma_hat = std::move(est.gamma_hat);
  out.B_hat = std::move(est.B_hat);
  out.dag_hat = std::move(est.dag_hat);
  out.LD_hat = std::move(est.LD_hat);
  out.Omega_hat = mcd_compose(out.LD_hat);
  out.config = cfg.to_json();
  out.timing = run.timing.to_json();
  out.timing["dag_acceptance"] = run.dag_acceptance;
  out.chains.emplace_back("chain", std::move(run.chain));
  return out;
}

FitOutput fit_tes(const RegressionData& data, const TesConfig& cfg) {
  TesResult run = tes_run(data, cfg);
  FitOutput out;
  out.method = "tes";
  out.gamma_hat = std::move(run.gamma_hat);
  out.B_hat = std::move(run.B_hat);
  out.dag_hat = std::move(run.dag_hat);
  out.LD_hat = std::move(run.LD_hat);
  out.Omega_hat = mcd_compose(out.LD_hat);
  out.config = cfg.to_json();
  out.config["effective_cap"] = cfg.effective_cap(data.n(), data.p());
  out.timing = {{"iterations", run.iterations},
                {"step1_s", run.step1_seconds},
                {"step2_s", run.step2_seconds},
                {"total_s", run.step1_seconds + run.step2_seconds},
                {"per_iteration_s", run.per_iteration_seconds()},
                {"gamma_acceptance", run.gamma_acceptance},
                {"dag_acceptance", run.dag_acceptance}};
  out.chains.emplace_back("gamma_chain", std::move(run.gamma_chain));
  out.chains.emplace_back("dag_chain", std::move(run.dag_chain));
  return out;
}

Evaluation evaluate(const arma::umat& gamma_hat, const OrderedDag& dag_hat,
                    const arma::mat& Omega_hat, const GroundTruth& truth) {
  Evaluation ev;
  ev.gamma = selection_metrics(gamma_hat, truth.B0.Gamma);
  ev.dag = selection_metrics(dag_hat, truth.dag0);
  ev.omega = relative_errors(Omega_hat, arma::inv_sympd(truth.Sigma0));
  return ev;
}

nlohmann::json metric_records(const Evaluation& ev, int scenario, int setting,
                              const std::string& method, std::optional<int> replicate) {
  nlohmann::json out = nlohmann::json::array();
  auto add = [&](const std::string& name, std::optional<double> v) {
    nlohmann::json r = {{"scenario", scenario},
                        {"setting", setting},
                        {"method", method},
                        {"replicate", replicate ? nlohmann::json(*replicate) : nlohmann::json()},
                        {"metric", name},
                        {"value", v ? nlohmann::json(*v) : nlohmann::json()}};
    if (!v) r["undefined"] = true;
    out.push_back(std::move(r));
  };
  for (const auto& [target, m] : {std::pair{"B", ev.gamma}, std::pair{"L", ev.dag}}) {
    add(std::string(target) + ".sensitivity", m.sensitivity);
    add(std::string(target) + ".specificity", m.specificity);
    add(std::string(target) + ".precision", m.precision);
    add(std::string(target) + ".mcc", m.mcc);
  }
  add("Omega.E1", ev.omega.e1);
  add("Omega.E2", ev.omega.e2);
  add("Omega.E3", ev.omega.e3);
  add("Omega.E4", ev.omega.e4);
  return out;
}

std::string table_csv(const nlohmann::json& records) {
  using Key = std::tuple<int, int, std::string>;
  std::map<Key, std::map<std::string, std::vector<std::optional<double>>>> groups;
  for (const auto& r : records) {
    const Key key{r.at("scenario").get<int>(), r.at("setting").get<int>(),
                  r.at("method").get<std::string>()};
    const auto& v = r.at("value");
    groups[key][r.at("metric").get<std::string>()].push_back(
        v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  std::ostringstream out;
  char buf[32];
  auto cell = [&](const std::map<std::string, std::vector<std::optional<double>>>& g,
                  const std::string& name) {
    const auto it = g.find(name);
    if (it == g.end()) return std::string("NA");
    const MetricAverage a = average_defined(it->second);
    if (!a.mean) return std::string("undefined");
    std::snprintf(buf, sizeof buf, "%.4f", *a.mean);
    std::string s = buf;
    if (a.undefined) s += " (" + std::to_string(a.undefined) + " undefined)";
    return s;
  };
  out << "scenario,setting,method,target,sensitivity,specificity,precision,mcc\n";
  for (const auto& [key, g] : groups) {
    for (const char* target : {"B", "L"}) {
      const std::string t = target;
      out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << t
          << ',' << cell(g, t + ".sensitivity") << ',' << cell(g, t + ".specificity") << ','
          << cell(g, t + ".precision") << ',' << cell(g, t + ".mcc") << '\n';
    }
  }
  out << "\nscenario,setting,method,E1,E2,E3,E4\n";
  for (const auto& [key, g] : groups) {
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
        << cell(g, "Omega.E1") << ',' << cell(g, "Omega.E2") << ',' << cell(g, "Omega.E3") << ','
        << cell(g, "Omega.E4") << '\n';
  }
  return out.str();
}

std::string bundle_name(const SimSpec& spec) {
  return std::to_string(spec.scenario) + "_" + std::to_string(spec.setting) + "_" +
         std::to_string(spec.seed);
}

std::string spec_hash(const SimSpec& spec) { return fnv1a_hex(spec.to_json().dump()); }

fs::path write_bundle(const SimData& sim, const SimSpec& spec, const fs::path& root) {
  const fs::path dir = root / bundle_name(spec);
  fs::create_directories(dir);
  const GroundTruth& t = sim.truth;
  write_csv(sim.data.X, dir / "X.csv");
  write_csv(sim.data.Y, dir / "Y.csv");
  write_csv(t.B0.B, dir / "B0.csv");
  write_csv(t.B0.Gamma, dir / "Gamma0.csv");
  write_csv(t.L0D0.L, dir / "L0.csv");
  write_csv(arma::mat(t.L0D0.d), dir / "D0.csv");
  write_csv(t.Sigma0, dir / "Sigma0.csv");
  write_csv(arma::mat(arma::inv_sympd(t.Sigma0)), dir / "Omega0.csv");
  write_json(t.dag0.to_json(), dir / "dag0.json");
  nlohmann::json manifest = {{"kind", "bundle"},
                             {"spec", spec.to_json()},
                             {"spec_hash", spec_hash(spec)},
                             {"seed", spec.seed},
                             {"version", kArtifactVersion},
                             {"n", sim.data.n()},
                             {"p", sim.data.p()},
                             {"q", sim.data.q()}};
  if (!t.permutation.empty()) {
    std::vector<std::size_t> one_based(t.permutation);
    for (auto& v : one_based) ++v;
    manifest["permutation"] = one_based;
  }
  write_json(manifest, dir / "manifest.json");
  return dir;
}

RegressionData read_data(const fs::path& x_csv, const fs::path& y_csv) {
  for (const auto& path : {x_csv, y_csv}) {
    if (!fs::exists(path)) throw Error(ErrorKind::Validation, "missing input file " + path.string());
  }
  RegressionData data{read_csv(x_csv), read_csv(y_csv)};
  data.validate();
  return data;
}

std::pair<GroundTruth, SimSpec> read_truth(const fs::path& bundle) {
  const fs::path manifest_path = bundle / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorKind::Validation, "no manifest.json in " + bundle.string());
  }
  const nlohmann::json manifest = read_json(manifest_path);
  const SimSpec spec = SimSpec::from_json(manifest.at("spec"));
  GroundTruth t;
  t.B0.B = read_csv(bundle / "B0.csv");
  t.B0.Gamma = arma::conv_to<arma::umat>::from(read_csv(bundle / "Gamma0.csv"));
  t.L0D0.L = read_csv(bundle / "L0.csv");
  t.L0D0.d = arma::vectorise(read_csv(bundle / "D0.csv"));
  t.Sigma0 = read_csv(bundle / "Sigma0.csv");
  t.dag0 = OrderedDag::from_json(read_json(bundle / "dag0.json"));
  if (manifest.contains("permutation")) {
    for (std::size_t v : manifest["permutation"].get<std::vector<std::size_t>>()) {
      t.permutation.push_back(v - 1);
    }
  }
  return {std::move(t), spec};
}

void write_fit(const FitOutput& fit, const fs::path& dir, bool export_csv,
               const nlohmann::json& inputs) {
  fs::create_directories(dir);
  write_csv(fit.gamma_hat, dir / "Gamma_hat.csv");
  write_csv(fit.B_hat.B, dir / "B_hat.csv");
  write_csv(fit.LD_hat.L, dir / "L_hat.csv");
  write_csv(arma::mat(fit.LD_hat.d), dir / "D_hat.csv");
  write_csv(fit.Omega_hat, dir / "Omega_hat.csv");
  write_json(fit.dag_hat.to_json(), dir / "dag_hat.json");
  for (const auto& [stem, chain] : fit.chains) {
    write_chain(chain, dir / (stem + ".bin"));
    if (export_csv) export_chain_csv(chain, dir / (stem + ".csv"));
  }
  write_json(fit.timing, dir / "timing.json");
  const nlohmann::json manifest = {{"kind", "fit"},
                                   {"method", fit.method},
                                   {"config", fit.config},
                                   {"config_hash", fnv1a_hex(fit.config.dump())},
                                   {"seed", fit.config.value("seed", std::uint64_t{0})},
                                   {"inputs", inputs},
                                   {"version", kArtifactVersion}};
  write_json(manifest, dir / "manifest.json");
}

FitFiles read_fit(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorKind::Validation, "no manifest.json in " + dir.string());
  }
  FitFiles f;
  f.method = read_json(manifest_path).value("method", "unknown");
  f.gamma_hat = arma::conv_to<arma::umat>::from(read_csv(dir / "Gamma_hat.csv"));
  f.dag_hat = OrderedDag::from_json(read_json(dir / "dag_hat.json"));
  f.Omega_hat = read_csv(dir / "Omega_hat.csv");
  return f;
}

}  // namespace dagreg::cli
