#pragma once

// generate -> fit -> evaluate plumbing shared by the CLI commands and the
// acceptance harness.

#include <armadillo>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dagreg/chain.hpp"
#include "dagreg/core_model.hpp"
#include "dagreg/error.hpp"
#include "dagreg/ess_sampler.hpp"
#include "dagreg/metrics.hpp"
#include "dagreg/simgen.hpp"
#include "dagreg/tes_sampler.hpp"

namespace dagreg::cli {

/// Process exit codes.
enum ExitCode { kOk = 0, kValidation = 2, kNumeric = 3, kIo = 4 };
int exit_code_for(ErrorKind kind);

struct FitOutput {
  std::string method;  // "ess" or "tes"
  arma::umat gamma_hat;
  SparseCoefState B_hat;
  OrderedDag dag_hat;
  CholeskyPair LD_hat;
  arma::mat Omega_hat;
  nlohmann::json config;
  nlohmann::json timing;
  std::vector<std::pair<std::string, ChainRecord>> chains;  // file stem, chain
};

FitOutput fit_ess(const RegressionData& data, const EssConfig& cfg);
FitOutput fit_tes(const RegressionData& data, const TesConfig& cfg);

struct Evaluation {
  SelectionMetrics gamma;
  SelectionMetrics dag;
  RelativeErrors omega;
};

Evaluation evaluate(const arma::umat& gamma_hat, const OrderedDag& dag_hat,
                    const arma::mat& Omega_hat, const GroundTruth& truth);

/// Records {scenario, setting, method, replicate, metric, value}; undefined
/// ratios carry a null value and "undefined": true.
nlohmann::json metric_records(const Evaluation& ev, int scenario, int setting,
                              const std::string& method, std::optional<int> replicate);

/// Selection rows laid out as scenario,setting,method,target,sens,spec,prec,mcc
/// followed by relative-error rows; averages skip undefined values and count them.
std::string table_csv(const nlohmann::json& records);

std::string bundle_name(const SimSpec& spec);
std::string spec_hash(const SimSpec& spec);

/// Bundle directory layout: X.csv, Y.csv, B0.csv, Gamma0.csv, L0.csv, D0.csv,
/// Sigma0.csv, Omega0.csv, dag0.json, manifest.json.
std::filesystem::path write_bundle(const SimData& sim, const SimSpec& spec,
                                   const std::filesystem::path& root);
RegressionData read_data(const std::filesystem::path& x_csv, const std::filesystem::path& y_csv);
/// Ground truth and the spec stored in a bundle's manifest.
std::pair<GroundTruth, SimSpec> read_truth(const std::filesystem::path& bundle);

/// Writes estimates, chains, timing and a manifest into dir.
void write_fit(const FitOutput& fit, const std::filesystem::path& dir, bool export_csv,
               const nlohmann::json& inputs);

struct FitFiles {
  arma::umat gamma_hat;
  OrderedDag dag_hat;
  arma::mat Omega_hat;
  std::string method;
};
FitFiles read_fit(const std::filesystem::path& dir);

}  // namespace dagreg::cli
