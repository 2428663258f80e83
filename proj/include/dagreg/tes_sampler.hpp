#pragma once

// Two-step approach. Step 1 runs an independent add/delete MH chain per response
// over the support gamma_j under the alpha-fractional posterior with the empirical
// sparse prior; B-hat is the least-squares fit on the median probability model.
// Step 2 treats the residuals as Gaussian DAG data: an MH chain over parent sets,
// then closed-form (L, D) on the selected DAG.

#include <armadillo>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dagreg/chain.hpp"
#include "dagreg/core_model.hpp"
#include "dagreg/dag_wishart.hpp"
#include "dagreg/rng.hpp"

namespace dagreg {

struct TesConfig {
  double alpha = 0.999;
  double kappa = 0.1;
  double nu0 = 0.0;
  double c1 = 2.0;
  /// Requested model-size cap R_j; unset means p.
  std::optional<std::size_t> cap;
  /// Use floor(c3 * n / log p) as the cap instead.
  bool theory_cap = false;
  double c3 = 1.0;
  DagWishartParams dag;
  std::size_t iterations = 3000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::uint64_t chain_id = 0;
  std::size_t workers = 1;
  bool sample_coefficients = false;
  std::optional<arma::umat> warm_start_gamma;  // p x q

  /// alpha = 0.999, kappa = 0.1, nu0 = 0, c1 = 2, R_j = p, eta2 = 1/q, U = I, c = 10.
  static TesConfig defaults(arma::uword q);
  /// Cap actually applied: min(requested or theory cap, p, n - 1).
  std::size_t effective_cap(arma::uword n, arma::uword p) const;
  void validate(arma::uword n, arma::uword p, arma::uword q) const;
  nlohmann::json to_json() const;
};

/// Cross-products X^T X, X^T Y and diag(Y^T Y), computed once.
struct TesGrams {
  arma::mat XtX;
  arma::mat XtY;
  arma::vec yty;
  std::size_t n = 0;
  std::size_t p = 0;

  explicit TesGrams(const RegressionData& data);
};

enum class GammaStatus { Ok, CapExceeded, RankDeficient };

struct GammaEvaluation {
  GammaStatus status = GammaStatus::Ok;
  double log_post = -std::numeric_limits<double>::infinity();
  double sigma_sq_hat = 0.0;  // after flooring
};

GammaEvaluation evaluate_gamma(const TesGrams& grams, std::size_t j,
                               const std::vector<std::size_t>& gamma, const TesConfig& cfg,
                               std::size_t cap);

/// Unnormalised log pi_alpha(gamma_j | y_j); -inf for capped or rank-deficient models.
double log_post_gamma(const TesGrams& grams, std::size_t j, const std::vector<std::size_t>& gamma,
                      const TesConfig& cfg);

struct GammaChainState {
  std::vector<std::size_t> gamma;  // sorted predictor indices
  double log_post = 0.0;
  std::size_t proposals = 0;
  std::size_t accepts = 0;
};

GammaChainState init_gamma_state(const TesGrams& grams, std::size_t j,
                                 std::vector<std::size_t> gamma, const TesConfig& cfg);

/// One add/delete MH move; returns whether it was accepted.
bool mh_gamma_step(GammaChainState& state, const TesGrams& grams, std::size_t j,
                   const TesConfig& cfg, Rng& rng);

/// Per-response draws of gamma_j, post burn-in and thinned.
struct GammaChain {
  std::vector<std::vector<std::vector<std::size_t>>> draws;  // [response][draw]
  std::vector<std::size_t> proposals;
  std::vector<std::size_t> accepts;
};

struct SigmaBDraw {
  double sigma_sq = 0.0;
  arma::vec b;  // aligned with gamma
};

/// sigma^2 ~ InvGamma((alpha n + nu0)/2, alpha n sigma_hat^2 / 2), then
/// b ~ N(b_hat, sigma^2 / (alpha + kappa) (X_g^T X_g)^{-1}).
SigmaBDraw sample_sigma_b(Rng& rng, const TesGrams& grams, std::size_t j,
                          const std::vector<std::size_t>& gamma, const TesConfig& cfg);

/// Least squares of y_j on X restricted to gamma_hat(:, j), per response.
SparseCoefState compute_B_hat(const RegressionData& data, const arma::umat& gamma_hat);

ErrorEstimate compute_error_estimate(const RegressionData& data, const arma::mat& B_hat);

/// S~ = (n S-hat + U) / n.
arma::mat scatter_tilde(const ErrorEstimate& est, const arma::mat& U);

struct DagChainResult {
  ChainRecord chain;  // kind tes-step2, DAG only
  std::vector<std::size_t> proposals;
  std::vector<std::size_t> accepts;
  double seconds = 0.0;
};

/// Independent parent-set MH chains for every vertex on S~ from est.
DagChainResult tes_dag_run(const ErrorEstimate& est, const TesConfig& cfg);

/// Posterior-mean L columns and posterior-mode d_j on the selected DAG.
CholeskyPair tes_estimate_LD(const ErrorEstimate& est, const OrderedDag& dag_hat,
                             const TesConfig& cfg);

struct TesResult {
  ChainRecord gamma_chain;  // kind tes-step1
  ChainRecord dag_chain;    // kind tes-step2
  arma::umat gamma_hat;
  SparseCoefState B_hat;
  ErrorEstimate error;
  OrderedDag dag_hat;
  CholeskyPair LD_hat;
  double step1_seconds = 0.0;
  double step2_seconds = 0.0;
  std::size_t iterations = 0;
  double gamma_acceptance = 0.0;
  double dag_acceptance = 0.0;

  /// Wall time per iteration: all response chains plus the DAG chain.
  double per_iteration_seconds() const {
    return iterations ? (step1_seconds + step2_seconds) / double(iterations) : 0.0;
  }
};

TesResult tes_run(const RegressionData& data, const TesConfig& cfg);

}  // namespace dagreg
