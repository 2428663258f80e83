#include "dagreg/tes_sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "dagreg/distributions.hpp"
#include "dagreg/error.hpp"
#include "dagreg/mh_kernel.hpp"
#include "dagreg/parallel.hpp"
#include "dagreg/selection.hpp"

namespace dagreg {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kCoefStreams = std::uint64_t{1} << 32;
constexpr std::uint64_t kDagStreams = std::uint64_t{2} << 32;

// Relative pivot floor for treating a Gram block as singular.
constexpr double kRankTol = 1e-12;
// sigma_hat^2 is floored at this fraction of y^T y / n.
constexpr double kSigmaFloor = 1e-12;

double log_binomial(std::size_t p, std::size_t s) {
  return std::lgamma(double(p) + 1.0) - std::lgamma(double(s) + 1.0) -
         std::lgamma(double(p - s) + 1.0);
}

// Upper Cholesky factor of X_g^T X_g, or nullopt when the block is singular.
std::optional<arma::mat> gram_factor(const TesGrams& grams, const arma::uvec& idx) {
  const arma::mat G = grams.XtX.submat(idx, idx);
  arma::mat R;
  if (!arma::chol(R, G)) return std::nullopt;
  const arma::vec piv = arma::square(R.diag());
  if (!(piv.min() > kRankTol * G.diag().max())) return std::nullopt;
  return R;
}

arma::uvec as_uvec(const std::vector<std::size_t>& v) {
  return arma::conv_to<arma::uvec>::from(v);
}

}  // namespace

TesConfig TesConfig::defaults(arma::uword q) {
  TesConfig cfg;
  cfg.dag = DagWishartParams::defaults(q);
  return cfg;
}

std::size_t TesConfig::effective_cap(arma::uword n, arma::uword p) const {
  std::size_t requested = cap.value_or(p);
  if (theory_cap && p > 1) {
    requested = static_cast<std::size_t>(std::floor(c3 * double(n) / std::log(double(p))));
  }
  const std::size_t rank_limit = n > 0 ? n - 1 : 0;
  return std::min({requested, static_cast<std::size_t>(p), rank_limit});
}

void TesConfig::validate(arma::uword n, arma::uword p, arma::uword q) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Validation, "alpha must lie in (0, 1)");
  if (!(kappa > 0.0)) throw Error(ErrorKind::Validation, "kappa must be positive");
  if (!(nu0 >= 0.0)) throw Error(ErrorKind::Validation, "nu0 must be non-negative");
  if (!(c1 >= 2.0)) throw Error(ErrorKind::Validation, "c1 must be at least 2");
  if (theory_cap && !(c3 > 0.0)) throw Error(ErrorKind::Validation, "c3 must be positive");
  if (thin < 1) throw Error(ErrorKind::Validation, "thin must be at least 1");
  if (burn_in > iterations) throw Error(ErrorKind::Validation, "burn_in exceeds iterations");
  if (n < 2) throw Error(ErrorKind::Validation, "need at least two samples");
  dag.validate(q);
  if (warm_start_gamma) {
    if (warm_start_gamma->n_rows != p || warm_start_gamma->n_cols != q) {
      throw Error(ErrorKind::Validation, "warm-start gamma must be " + std::to_string(p) + "x" +
                                             std::to_string(q));
    }
  }
}

nlohmann::json TesConfig::to_json() const {
  nlohmann::json j = {{"method", "tes"},
                      {"alpha", alpha},
                      {"kappa", kappa},
                      {"nu0", nu0},
                      {"c1", c1},
                      {"theory_cap", theory_cap},
                      {"c3", c3},
                      {"eta2", dag.eta2},
                      {"shape_offset", dag.shape_offset},
                      {"iterations", iterations},
                      {"burn_in", burn_in},
                      {"thin", thin},
                      {"seed", seed},
                      {"chain_id", chain_id},
                      {"sample_coefficients", sample_coefficients},
                      {"warm_start", warm_start_gamma.has_value()}};
  j["cap"] = cap ? nlohmann::json(*cap) : nlohmann::json("p");
  return j;
}

TesGrams::TesGrams(const RegressionData& data)
    : XtX(data.X.t() * data.X),
      XtY(data.X.t() * data.Y),
      yty(arma::sum(arma::square(data.Y), 0).t()),
      n(data.n()),
      p(data.p()) {}

GammaEvaluation evaluate_gamma(const TesGrams& grams, std::size_t j,
                               const std::vector<std::size_t>& gamma, const TesConfig& cfg,
                               std::size_t cap) {
  GammaEvaluation ev;
  const std::size_t s = gamma.size();
  if (s > cap) {
    ev.status = GammaStatus::CapExceeded;
    return ev;
  }
  const double nd = static_cast<double>(grams.n);
  double rss = grams.yty(j);
  if (s > 0) {
    const arma::uvec idx = as_uvec(gamma);
    const auto R = gram_factor(grams, idx);
    if (!R) {
      ev.status = GammaStatus::RankDeficient;
      return ev;
    }
    const arma::uvec col = {static_cast<arma::uword>(j)};
    const arma::vec z = arma::solve(arma::trimatl(R->t()), arma::vec(grams.XtY.submat(idx, col)));
    rss -= arma::dot(z, z);
  }
  const double floor = std::max(kSigmaFloor * grams.yty(j) / nd,
                                std::numeric_limits<double>::min());
  ev.sigma_sq_hat = std::max(rss / nd, floor);
  const double log_prior =
      -log_binomial(grams.p, s) - cfg.c1 * double(s) * std::log(double(grams.p));
  ev.log_post = log_prior - 0.5 * double(s) * std::log1p(cfg.alpha / cfg.kappa) -
                0.5 * (cfg.alpha * nd + cfg.nu0) * std::log(ev.sigma_sq_hat);
  return ev;
}

double log_post_gamma(const TesGrams& grams, std::size_t j, const std::vector<std::size_t>& gamma,
                      const TesConfig& cfg) {
  return evaluate_gamma(grams, j, gamma, cfg, cfg.effective_cap(grams.n, grams.p)).log_post;
}

GammaChainState init_gamma_state(const TesGrams& grams, std::size_t j,
                                 std::vector<std::size_t> gamma, const TesConfig& cfg) {
  std::sort(gamma.begin(), gamma.end());
  GammaChainState state;
  state.gamma = std::move(gamma);
  state.log_post = log_post_gamma(grams, j, state.gamma, cfg);
  if (!std::isfinite(state.log_post)) {
    throw Error(ErrorKind::Validation, "initial gamma for response " + std::to_string(j + 1) +
                                           " has zero posterior mass");
  }
  return state;
}

bool mh_gamma_step(GammaChainState& state, const TesGrams& grams, std::size_t j,
                   const TesConfig& cfg, Rng& rng) {
  const std::size_t cap = cfg.effective_cap(grams.n, grams.p);
  const AddDeleteKernel kernel(0, grams.p, cap);
  const auto move = kernel.propose(rng, state.gamma);
  ++state.proposals;
  if (!move) return false;
  std::vector<std::size_t> proposed = state.gamma;
  AddDeleteKernel::apply(proposed, *move);
  const double log_new = evaluate_gamma(grams, j, proposed, cfg, cap).log_post;
  const double log_ratio = log_new - state.log_post + move->log_hastings;
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
    state.gamma = std::move(proposed);
    state.log_post = log_new;
    ++state.accepts;
    return true;
  }
  return false;
}

SigmaBDraw sample_sigma_b(Rng& rng, const TesGrams& grams, std::size_t j,
                          const std::vector<std::size_t>& gamma, const TesConfig& cfg) {
  const double nd = static_cast<double>(grams.n);
  double rss = grams.yty(j);
  arma::vec b_hat;
  std::optional<arma::mat> R;
  if (!gamma.empty()) {
    const arma::uvec idx = as_uvec(gamma);
    R = gram_factor(grams, idx);
    if (!R) throw Error(ErrorKind::RankDeficient, "X_gamma is rank deficient");
    const arma::uvec col = {static_cast<arma::uword>(j)};
    const arma::vec z = arma::solve(arma::trimatl(R->t()), arma::vec(grams.XtY.submat(idx, col)));
    rss -= arma::dot(z, z);
    b_hat = arma::solve(arma::trimatu(*R), z);
  }
  const double sigma_hat_sq = rss / nd;
  if (!(sigma_hat_sq > kSigmaFloor * grams.yty(j) / nd)) {
    throw Error(ErrorKind::DegenerateVariance, "residual variance is numerically zero");
  }
  SigmaBDraw out;
  out.sigma_sq = draw_inverse_gamma(rng, (cfg.alpha * nd + cfg.nu0) / 2.0,
                                    cfg.alpha * nd * sigma_hat_sq / 2.0);
  if (R) {
    const arma::vec z = draw_normal_vec(rng, R->n_rows);
    out.b = b_hat + std::sqrt(out.sigma_sq / (cfg.alpha + cfg.kappa)) *
                        arma::solve(arma::trimatu(*R), z);
  }
  return out;
}

SparseCoefState compute_B_hat(const RegressionData& data, const arma::umat& gamma_hat) {
  if (gamma_hat.n_rows != data.p() || gamma_hat.n_cols != data.q()) {
    throw Error(ErrorKind::InvalidShape, "gamma_hat must be p x q");
  }
  SparseCoefState out = SparseCoefState::zeros(data.p(), data.q());
  for (arma::uword j = 0; j < data.q(); ++j) {
    const arma::uvec idx = arma::find(gamma_hat.col(j));
    if (idx.is_empty()) continue;
    const arma::mat Xg = data.X.cols(idx);
    arma::mat Q, R;
    if (Xg.n_cols > Xg.n_rows || !arma::qr_econ(Q, R, Xg)) {
      throw Error(ErrorKind::RankDeficient, "X_gamma for response " + std::to_string(j + 1) +
                                                " is rank deficient");
    }
    const arma::vec diag = arma::abs(R.diag());
    if (!(diag.min() > 1e-10 * diag.max())) {
      throw Error(ErrorKind::RankDeficient, "X_gamma for response " + std::to_string(j + 1) +
                                                " is rank deficient");
    }
    const arma::vec b = arma::solve(arma::trimatu(R), Q.t() * data.Y.col(j));
    for (arma::uword r = 0; r < idx.n_elem; ++r) {
      out.B(idx(r), j) = b(r);
      out.Gamma(idx(r), j) = 1;
    }
  }
  return out;
}

ErrorEstimate compute_error_estimate(const RegressionData& data, const arma::mat& B_hat) {
  ErrorEstimate est;
  est.Ehat = data.Y - data.X * B_hat;
  est.Shat = arma::symmatu(est.Ehat.t() * est.Ehat / static_cast<double>(data.n()));
  return est;
}

arma::mat scatter_tilde(const ErrorEstimate& est, const arma::mat& U) {
  const double n = static_cast<double>(est.Ehat.n_rows);
  return arma::symmatu((n * est.Shat + U) / n);
}

DagChainResult tes_dag_run(const ErrorEstimate& est, const TesConfig& cfg) {
  const auto t0 = Clock::now();
  const std::size_t n = est.Ehat.n_rows;
  const std::size_t q = est.Shat.n_rows;
  cfg.dag.validate(q);
  const arma::mat S_tilde = scatter_tilde(est, cfg.dag.U);
  const Rng base(cfg.seed, cfg.chain_id, 0);
  const std::size_t stored = stored_draw_count(cfg.iterations, cfg.burn_in, cfg.thin);

  // per-vertex draws of pa_j; the target factorises over vertices
  std::vector<std::vector<std::vector<std::size_t>>> draws(q);
  DagChainResult result;
  result.proposals.assign(q, 0);
  result.accepts.assign(q, 0);

  parallel_for(q > 0 ? q - 1 : 0, cfg.workers, [&](std::size_t j) {
    Rng rng = base.stream(kDagStreams + j);
    OrderedDag dag(q);
    const AddDeleteKernel kernel(j + 1, q - 1 - j, cfg.dag.parent_cap(j, q));
    double log_cur = log_parent_set_posterior(S_tilde, cfg.dag, dag, j, n);
    draws[j].reserve(stored);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      const auto move = kernel.propose(rng, dag.parents(j));
      ++result.proposals[j];
      if (move) {
        std::vector<std::size_t> current = dag.parents(j);
        std::vector<std::size_t> proposed = current;
        AddDeleteKernel::apply(proposed, *move);
        dag.set_parents(j, std::move(proposed));
        const double log_new = log_parent_set_posterior(S_tilde, cfg.dag, dag, j, n);
        const double log_ratio = log_new - log_cur + move->log_hastings;
        if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
          log_cur = log_new;
          ++result.accepts[j];
        } else {
          dag.set_parents(j, std::move(current));
        }
      }
      if (is_stored_iteration(it, cfg.burn_in, cfg.thin)) draws[j].push_back(dag.parents(j));
    }
  });

  result.chain.kind = ChainKind::TesStep2;
  result.chain.p = 0;
  result.chain.q = q;
  result.chain.seed = cfg.seed;
  result.chain.config = cfg.to_json();
  result.chain.draws.resize(stored);
  for (std::size_t t = 0; t < stored; ++t) {
    std::vector<std::vector<std::size_t>> parents(q);
    for (std::size_t j = 0; j + 1 < q; ++j) parents[j] = draws[j][t];
    result.chain.draws[t].dag = OrderedDag(q, std::move(parents));
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

CholeskyPair tes_estimate_LD(const ErrorEstimate& est, const OrderedDag& dag_hat,
                             const TesConfig& cfg) {
  const arma::mat S_tilde = scatter_tilde(est, cfg.dag.U);
  return {estimate_L_posterior_mean(S_tilde, dag_hat),
          estimate_D_posterior_mode(S_tilde, dag_hat, est.Ehat.n_rows, cfg.dag.shape_offset)};
}

TesResult tes_run(const RegressionData& data, const TesConfig& cfg) {
  data.validate();
  cfg.validate(data.n(), data.p(), data.q());
  const std::size_t p = data.p();
  const std::size_t q = data.q();
  const std::size_t stored = stored_draw_count(cfg.iterations, cfg.burn_in, cfg.thin);
  TesResult result;
  result.iterations = cfg.iterations;

  auto t0 = Clock::now();
  const TesGrams grams(data);
  const Rng base(cfg.seed, cfg.chain_id, 0);
  GammaChain gchain;
  gchain.draws.resize(q);
  gchain.proposals.assign(q, 0);
  gchain.accepts.assign(q, 0);
  std::vector<std::vector<SigmaBDraw>> coef_draws(q);

  parallel_for(q, cfg.workers, [&](std::size_t j) {
    Rng rng = base.stream(j);
    std::vector<std::size_t> init;
    if (cfg.warm_start_gamma) {
      const arma::uvec idx = arma::find(cfg.warm_start_gamma->col(j));
      init.assign(idx.begin(), idx.end());
    }
    GammaChainState state = init_gamma_state(grams, j, std::move(init), cfg);
    gchain.draws[j].reserve(stored);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      mh_gamma_step(state, grams, j, cfg, rng);
      if (is_stored_iteration(it, cfg.burn_in, cfg.thin)) gchain.draws[j].push_back(state.gamma);
    }
    gchain.proposals[j] = state.proposals;
    gchain.accepts[j] = state.accepts;
    if (cfg.sample_coefficients) {
      Rng coef_rng = base.stream(kCoefStreams + j);
      coef_draws[j].reserve(stored);
      for (const auto& g : gchain.draws[j]) {
        coef_draws[j].push_back(sample_sigma_b(coef_rng, grams, j, g, cfg));
      }
    }
  });

  ChainRecord& gamma_chain = result.gamma_chain;
  gamma_chain.kind = ChainKind::TesStep1;
  gamma_chain.p = p;
  gamma_chain.q = q;
  gamma_chain.has_coef_values = cfg.sample_coefficients;
  gamma_chain.seed = cfg.seed;
  gamma_chain.config = cfg.to_json();
  gamma_chain.draws.resize(stored);
  for (std::size_t t = 0; t < stored; ++t) {
    auto& cells = gamma_chain.draws[t].coef;
    for (std::size_t j = 0; j < q; ++j) {
      const auto& g = gchain.draws[j][t];
      for (std::size_t r = 0; r < g.size(); ++r) {
        const double value = cfg.sample_coefficients ? coef_draws[j][t].b(r) : 0.0;
        cells.push_back({static_cast<std::uint32_t>(g[r]), static_cast<std::uint32_t>(j), value});
      }
    }
  }
  std::size_t props = 0, accs = 0;
  for (std::size_t j = 0; j < q; ++j) {
    props += gchain.proposals[j];
    accs += gchain.accepts[j];
  }
  result.gamma_acceptance = props ? double(accs) / double(props) : 0.0;
  result.step1_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  if (stored == 0) {
    result.gamma_hat = arma::umat(p, q, arma::fill::zeros);
  } else {
    result.gamma_hat = mpm_select_gamma(gamma_chain);
  }
  result.B_hat = compute_B_hat(data, result.gamma_hat);
  result.error = compute_error_estimate(data, result.B_hat.B);

  DagChainResult dag_run = tes_dag_run(result.error, cfg);
  result.step2_seconds = dag_run.seconds;
  result.dag_chain = std::move(dag_run.chain);
  std::size_t dprops = 0, daccs = 0;
  for (std::size_t j = 0; j < q; ++j) {
    dprops += dag_run.proposals[j];
    daccs += dag_run.accepts[j];
  }
  result.dag_acceptance = dprops ? double(daccs) / double(dprops) : 0.0;
  result.dag_hat = stored == 0 ? OrderedDag(q) : mpm_select_dag(result.dag_chain);
  result.LD_hat = tes_estimate_LD(result.error, result.dag_hat, cfg);
  return result;
}

}  // namespace dagreg
