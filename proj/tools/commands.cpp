#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>

#include "dagreg/error.hpp"
#include "dagreg/io.hpp"
#include "dagreg/parallel.hpp"
#include "pipeline.hpp"

namespace dagreg::cli {

namespace fs = std::filesystem;

namespace {

struct SamplerFlags {
  std::string method = "tes";
  std::size_t iterations = 3000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::uint64_t chain_id = 0;
  std::size_t workers = 1;
  double alpha = 0.999;
  double kappa = 0.1;
  double nu0 = 0.0;
  double c1 = 2.0;
  std::optional<double> eta1;
  std::optional<double> eta2;
  double tau1_sq = 1.0;
  double shape_offset = 10.0;
  std::optional<std::size_t> cap;
  bool theory_cap = false;
  double c3 = 1.0;
  bool sample_coefficients = false;
  std::string warm_start;
};

void add_sampler_flags(CLI::App* cmd, SamplerFlags& f) {
  cmd->add_option("--iterations", f.iterations, "total MCMC iterations")->capture_default_str();
  cmd->add_option("--burn-in", f.burn_in, "iterations discarded before storing")->capture_default_str();
  cmd->add_option("--thin", f.thin, "store every thin-th draw")->capture_default_str();
  cmd->add_option("--chain-id", f.chain_id)->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "fractional power (tes)")->capture_default_str();
  cmd->add_option("--kappa", f.kappa, "g-prior scale (tes)")->capture_default_str();
  cmd->add_option("--nu0", f.nu0, "variance prior shape (tes)")->capture_default_str();
  cmd->add_option("--c1", f.c1, "model-size penalty (tes)")->capture_default_str();
  cmd->add_option("--cap-Rj", f.cap, "model-size cap R_j (tes, default p)");
  cmd->add_flag("--theory-cap", f.theory_cap, "cap R_j at floor(c3 n / log p) (tes)");
  cmd->add_option("--c3", f.c3)->capture_default_str();
  cmd->add_flag("--sample-coefficients", f.sample_coefficients, "draw (sigma^2, b) per stored gamma (tes)");
  cmd->add_option("--eta1", f.eta1, "coefficient inclusion probability (ess, default 1/p)");
  cmd->add_option("--eta2", f.eta2, "edge inclusion probability (default 1/q)");
  cmd->add_option("--tau1-sq", f.tau1_sq, "slab variance (ess)")->capture_default_str();
  cmd->add_option("--shape-offset", f.shape_offset, "DAG-Wishart shape offset c")->capture_default_str();
  cmd->add_option("--warm-start", f.warm_start, "p x q CSV initial B (ess) or support (tes)");
}

EssConfig ess_config(const SamplerFlags& f, const RegressionData& data) {
  EssConfig cfg = EssConfig::defaults(data.p(), data.q());
  if (f.eta1) cfg.eta1 = *f.eta1;
  if (f.eta2) cfg.dag.eta2 = *f.eta2;
  cfg.tau1_sq = f.tau1_sq;
  cfg.dag.shape_offset = f.shape_offset;
  cfg.iterations = f.iterations;
  cfg.burn_in = f.burn_in;
  cfg.thin = f.thin;
  cfg.seed = f.seed;
  cfg.chain_id = f.chain_id;
  cfg.workers = f.workers;
  if (!f.warm_start.empty()) cfg.warm_start_B = read_csv(f.warm_start);
  cfg.validate(data.n(), data.p(), data.q());
  return cfg;
}

TesConfig tes_config(const SamplerFlags& f, const RegressionData& data) {
  TesConfig cfg = TesConfig::defaults(data.q());
  cfg.alpha = f.alpha;
  cfg.kappa = f.kappa;
  cfg.nu0 = f.nu0;
  cfg.c1 = f.c1;
  cfg.cap = f.cap;
  cfg.theory_cap = f.theory_cap;
  cfg.c3 = f.c3;
  if (f.eta2) cfg.dag.eta2 = *f.eta2;
  cfg.dag.shape_offset = f.shape_offset;
  cfg.iterations = f.iterations;
  cfg.burn_in = f.burn_in;
  cfg.thin = f.thin;
  cfg.seed = f.seed;
  cfg.chain_id = f.chain_id;
  cfg.workers = f.workers;
  cfg.sample_coefficients = f.sample_coefficients;
  if (!f.warm_start.empty()) {
    cfg.warm_start_gamma = arma::conv_to<arma::umat>::from(read_csv(f.warm_start) != 0.0);
  }
  cfg.validate(data.n(), data.p(), data.q());
  return cfg;
}

FitOutput fit_with(const SamplerFlags& f, const RegressionData& data) {
  if (f.method == "ess") return fit_ess(data, ess_config(f, data));
  if (f.method == "tes") return fit_tes(data, tes_config(f, data));
  throw Error(ErrorKind::Validation, "unknown method '" + f.method + "'");
}

void write_text(const std::string& text, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
}

std::string fmt(std::optional<double> v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(std::move(args));
}

int run(std::vector<std::string> args) {
  CLI::App app{"Bayesian sparse multivariate regression with DAG-structured errors"};
  app.set_config("--config", "", "key = value file; flags override it");
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  // simulate
  SimSpec sim_spec;
  std::optional<std::size_t> sim_n, sim_p, sim_q;
  std::string sim_out = ".";
  auto* simulate = app.add_subcommand("simulate", "write a synthetic data bundle");
  simulate->add_option("--scenario", sim_spec.scenario)->check(CLI::Range(1, 5))->capture_default_str();
  simulate->add_option("--setting", sim_spec.setting)->check(CLI::Range(1, 4))->capture_default_str();
  simulate->add_option("--seed", sim_spec.seed)->capture_default_str();
  simulate->add_option("--n", sim_n);
  simulate->add_option("--p", sim_p);
  simulate->add_option("--q", sim_q);
  simulate->add_option("--out", sim_out, "parent directory of the bundle")->capture_default_str();

  // fit
  SamplerFlags fit_flags;
  std::string fit_x, fit_y, fit_data, fit_out = "fit";
  bool export_csv = false;
  auto* fit = app.add_subcommand("fit", "run ESS or TES on X/Y CSV files");
  fit->add_option("--method", fit_flags.method)->check(CLI::IsMember({"ess", "tes"}))->capture_default_str();
  fit->add_option("--x", fit_x, "n x p predictor CSV");
  fit->add_option("--y", fit_y, "n x q response CSV");
  fit->add_option("--data", fit_data, "bundle directory holding X.csv and Y.csv");
  fit->add_option("--out", fit_out)->capture_default_str();
  fit->add_option("--seed", fit_flags.seed)->capture_default_str();
  fit->add_option("--workers", fit_flags.workers)->capture_default_str();
  fit->add_flag("--export-csv", export_csv, "also dump chains as CSV");
  add_sampler_flags(fit, fit_flags);

  // evaluate
  std::string ev_fit, ev_truth, ev_out = "metrics";
  std::optional<int> ev_replicate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a fit against a bundle's ground truth");
  evaluate_cmd->add_option("--fit", ev_fit, "fit output directory")->required();
  evaluate_cmd->add_option("--truth", ev_truth, "bundle directory")->required();
  evaluate_cmd->add_option("--replicate", ev_replicate);
  evaluate_cmd->add_option("--out", ev_out, "directory for metrics.json and table.csv")->capture_default_str();

  // replicate
  SimSpec rep_spec;
  std::optional<std::size_t> rep_n, rep_p, rep_q;
  SamplerFlags rep_flags;
  std::size_t rep_count = 10;
  std::string rep_out = "replicates";
  std::string rep_method = "tes";
  bool keep = false;
  auto* replicate = app.add_subcommand("replicate", "generate, fit and evaluate over seeds");
  replicate->add_option("--scenario", rep_spec.scenario)->check(CLI::Range(1, 5))->capture_default_str();
  replicate->add_option("--setting", rep_spec.setting)->check(CLI::Range(1, 4))->capture_default_str();
  replicate->add_option("--n", rep_n);
  replicate->add_option("--p", rep_p);
  replicate->add_option("--q", rep_q);
  replicate->add_option("--method", rep_method)->check(CLI::IsMember({"ess", "tes", "both"}))->capture_default_str();
  replicate->add_option("--count", rep_count)->capture_default_str();
  replicate->add_option("--seed", rep_spec.seed, "base seed; replicate r uses seed + r")->capture_default_str();
  replicate->add_option("--workers", rep_flags.workers, "replicates run concurrently")->capture_default_str();
  replicate->add_option("--out", rep_out)->capture_default_str();
  replicate->add_flag("--keep", keep, "write every bundle and fit");
  add_sampler_flags(replicate, rep_flags);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*simulate) {
      sim_spec.n = sim_n;
      sim_spec.p = sim_p;
      sim_spec.q = sim_q;
      sim_spec.validate();
      const SimData sim = generate(sim_spec);
      const fs::path dir = write_bundle(sim, sim_spec, sim_out);
      std::cout << "bundle " << dir.string() << " (n=" << sim.data.n() << ", p=" << sim.data.p()
                << ", q=" << sim.data.q() << ", |Gamma0|=" << arma::accu(sim.truth.B0.Gamma)
                << ", edges=" << sim.truth.dag0.edge_count() << ")\n";
      return kOk;
    }

    if (*fit) {
      if (!fit_data.empty()) {
        if (fit_x.empty()) fit_x = (fs::path(fit_data) / "X.csv").string();
        if (fit_y.empty()) fit_y = (fs::path(fit_data) / "Y.csv").string();
      }
      if (fit_x.empty() || fit_y.empty()) {
        throw Error(ErrorKind::Validation, "fit needs --x and --y, or --data");
      }
      const RegressionData data = read_data(fit_x, fit_y);
      const FitOutput out = fit_with(fit_flags, data);
      const nlohmann::json inputs = {{"x", fit_x}, {"y", fit_y}, {"n", data.n()},
                                     {"p", data.p()}, {"q", data.q()}};
      write_fit(out, fit_out, export_csv, inputs);
      std::cout << out.method << " fit written to " << fit_out << "\n"
                << "  selected coefficients " << arma::accu(out.gamma_hat) << ", edges "
                << out.dag_hat.edge_count() << "\n"
                << "  wall time per iteration " << out.timing.value("per_iteration_s", 0.0)
                << " s\n";
      return kOk;
    }

    if (*evaluate_cmd) {
      const auto [truth, spec] = read_truth(ev_truth);
      const FitFiles f = read_fit(ev_fit);
      const Evaluation ev = evaluate(f.gamma_hat, f.dag_hat, f.Omega_hat, truth);
      const nlohmann::json records =
          metric_records(ev, spec.scenario, spec.setting, f.method, ev_replicate);
      write_json(records, fs::path(ev_out) / "metrics.json");
      write_text(table_csv(records), fs::path(ev_out) / "table.csv");
      std::cout << "B: sens " << fmt(ev.gamma.sensitivity) << " spec " << fmt(ev.gamma.specificity)
                << " prec " << fmt(ev.gamma.precision) << " mcc " << fmt(ev.gamma.mcc) << "\n"
                << "L: sens " << fmt(ev.dag.sensitivity) << " spec " << fmt(ev.dag.specificity)
                << " prec " << fmt(ev.dag.precision) << " mcc " << fmt(ev.dag.mcc) << "\n"
                << "Omega: E1 " << ev.omega.e1 << " E2 " << ev.omega.e2 << " E3 " << ev.omega.e3
                << " E4 " << ev.omega.e4 << "\n";
      return kOk;
    }

    if (*replicate) {
      rep_spec.n = rep_n;
      rep_spec.p = rep_p;
      rep_spec.q = rep_q;
      rep_spec.validate();
      std::vector<std::string> methods;
      if (rep_method == "both") methods = {"ess", "tes"};
      else methods = {rep_method};

      nlohmann::json records = nlohmann::json::array();
      nlohmann::json failures = nlohmann::json::array();
      std::mutex mu;
      const std::size_t pool = rep_flags.workers;
      parallel_for(rep_count, pool, [&](std::size_t r) {
        SimSpec spec = rep_spec;
        spec.seed = rep_spec.seed + r;
        for (const auto& method : methods) {
          try {
            const SimData sim = generate(spec);
            SamplerFlags flags = rep_flags;
            flags.method = method;
            flags.seed = spec.seed;
            flags.workers = 1;
            const FitOutput out = fit_with(flags, sim.data);
            const Evaluation ev = evaluate(out.gamma_hat, out.dag_hat, out.Omega_hat, sim.truth);
            nlohmann::json recs = metric_records(ev, spec.scenario, spec.setting, method, int(r + 1));
            if (keep) {
              const fs::path bundle = write_bundle(sim, spec, fs::path(rep_out) / "bundles");
              write_fit(out, fs::path(rep_out) / "fits" / (bundle_name(spec) + "_" + method), false,
                        {{"bundle", bundle.string()}});
            }
            std::lock_guard lock(mu);
            for (auto& rec : recs) {
              rec["seed"] = spec.seed;
              records.push_back(std::move(rec));
            }
          } catch (const std::exception& e) {
            std::lock_guard lock(mu);
            failures.push_back({{"replicate", r + 1}, {"seed", spec.seed}, {"method", method},
                                {"error", e.what()}});
          }
        }
      });

      nlohmann::json cfg_echo = {{"spec", rep_spec.to_json()},
                                 {"count", rep_count},
                                 {"method", rep_method},
                                 {"iterations", rep_flags.iterations},
                                 {"burn_in", rep_flags.burn_in},
                                 {"thin", rep_flags.thin}};
      write_json({{"config", cfg_echo},
                  {"config_hash", fnv1a_hex(cfg_echo.dump())},
                  {"seed", rep_spec.seed},
                  {"version", kArtifactVersion},
                  {"failures", failures}},
                 fs::path(rep_out) / "manifest.json");
      write_json(records, fs::path(rep_out) / "metrics.json");
      const std::string table = table_csv(records);
      write_text(table, fs::path(rep_out) / "table1.csv");
      std::cout << table;
      if (!failures.empty()) {
        std::cerr << failures.size() << " replicate fit(s) failed; see manifest.json\n";
      }
      return failures.size() == rep_count * methods.size() && rep_count > 0 ? kNumeric : kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kOk;
}

}  // namespace dagreg::cli
