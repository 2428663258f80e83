#include "dagreg/ess_sampler.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "dagreg/distributions.hpp"
#include "dagreg/error.hpp"
#include "dagreg/mh_kernel.hpp"
#include "dagreg/parallel.hpp"
#include "dagreg/selection.hpp"
#include "dagreg/tes_sampler.hpp"

namespace dagreg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

EssConfig EssConfig::defaults(arma::uword p, arma::uword q) {
  EssConfig cfg;
  cfg.eta1 = 1.0 / static_cast<double>(p);
  cfg.tau1_sq = 1.0;
  cfg.dag = DagWishartParams::defaults(q);
  return cfg;
}

void EssConfig::validate(arma::uword n, arma::uword p, arma::uword q) const {
  if (!(eta1 > 0.0 && eta1 < 1.0)) throw Error(ErrorKind::Validation, "eta1 must lie in (0, 1)");
  if (!(tau1_sq > 0.0)) throw Error(ErrorKind::Validation, "tau1_sq must be positive");
  if (thin < 1) throw Error(ErrorKind::Validation, "thin must be at least 1");
  if (burn_in > iterations) throw Error(ErrorKind::Validation, "burn_in exceeds iterations");
  if (n < 1) throw Error(ErrorKind::Validation, "need at least one sample");
  dag.validate(q);
  if (warm_start_B && (warm_start_B->n_rows != p || warm_start_B->n_cols != q)) {
    throw Error(ErrorKind::Validation, "warm-start B must be " + std::to_string(p) + "x" +
                                           std::to_string(q));
  }
}

nlohmann::json EssConfig::to_json() const {
  return {{"method", "ess"},
          {"eta1", eta1},
          {"eta2", dag.eta2},
          {"tau1_sq", tau1_sq},
          {"shape_offset", dag.shape_offset},
          {"U_is_identity", arma::approx_equal(dag.U, arma::eye(dag.U.n_rows, dag.U.n_cols),
                                               "absdiff", 0.0)},
          {"iterations", iterations},
          {"burn_in", burn_in},
          {"thin", thin},
          {"seed", seed},
          {"chain_id", chain_id},
          {"warm_start", warm_start_B.has_value()}};
}

nlohmann::json SamplerTiming::to_json() const {
  return {{"iterations", iterations},
          {"coefficients_s", coefficients},
          {"scatter_s", scatter},
          {"dag_s", dag},
          {"omega_s", omega},
          {"total_s", total()},
          {"per_iteration_s", per_iteration()}};
}

EssSampler::EssSampler(const RegressionData& data, EssConfig cfg)
    : data_(&data), cfg_(std::move(cfg)), base_(cfg_.seed, cfg_.chain_id, 0) {
  data.validate();
  cfg_.validate(data.n(), data.p(), data.q());
  XtX_ = data.X.t() * data.X;
  XtYt_ = (data.X.t() * data.Y).t();

  const arma::uword q = data.q();
  SparseCoefState coef = cfg_.warm_start_B ? SparseCoefState::from_dense(*cfg_.warm_start_B)
                                           : SparseCoefState::zeros(data.p(), q);
  set_state(std::move(coef), CholeskyPair::identity(q), OrderedDag(q));
}

void EssSampler::set_state(SparseCoefState coef, CholeskyPair chol, OrderedDag dag) {
  state_.coef = std::move(coef);
  state_.chol = std::move(chol);
  state_.dag = std::move(dag);
  rebuild_caches();
}

void EssSampler::rebuild_caches() {
  state_.Omega = mcd_compose(state_.chol);
  state_.M = state_.coef.B.t() * XtX_;
}

double EssSampler::inclusion_probability(std::size_t k, std::size_t j) const {
  const arma::mat& Omega = state_.Omega;
  const double omega_jj = Omega(j, j);
  const double c1 = omega_jj * XtX_(k, k) + 1.0 / cfg_.tau1_sq;
  const double c2 = arma::dot(XtYt_.col(k), Omega.col(j)) -
                    arma::dot(state_.M.col(k), Omega.col(j)) +
                    omega_jj * XtX_(k, k) * state_.coef.B(k, j);
  const double log_nu = std::log(cfg_.eta1) - std::log1p(-cfg_.eta1) -
                        0.5 * std::log(cfg_.tau1_sq) - 0.5 * std::log(c1) + c2 * c2 / (2.0 * c1);
  return 1.0 / (1.0 + std::exp(-log_nu));
}

void EssSampler::update_gamma_b_entry(std::size_t k, std::size_t j, Rng& rng) {
  const arma::mat& Omega = state_.Omega;
  const double omega_jj = Omega(j, j);
  const double xkk = XtX_(k, k);
  const double b_old = state_.coef.B(k, j);

  // C2 = (X^T Y Omega)_kj - sum_l M_lk omega_lj + omega_jj xkk b_kj, which
  // removes the current b_kj contribution from the residual.
  const double c1 = omega_jj * xkk + 1.0 / cfg_.tau1_sq;
  const double c2 = arma::dot(XtYt_.col(k), Omega.col(j)) -
                    arma::dot(state_.M.col(k), Omega.col(j)) + omega_jj * xkk * b_old;
  const double log_nu = std::log(cfg_.eta1) - std::log1p(-cfg_.eta1) -
                        0.5 * std::log(cfg_.tau1_sq) - 0.5 * std::log(c1) + c2 * c2 / (2.0 * c1);
  const double prob = 1.0 / (1.0 + std::exp(-log_nu));

  const bool include = draw_bernoulli(rng, prob);
  const double b_new = include ? c2 / c1 + draw_normal(rng) / std::sqrt(c1) : 0.0;
  state_.coef.Gamma(k, j) = include ? 1 : 0;
  state_.coef.B(k, j) = b_new;

  const double delta = b_new - b_old;
  if (delta != 0.0) state_.M.row(j) += delta * XtX_.row(k);
}

void EssSampler::sweep_coefficients(Rng& rng) {
  const arma::uword p = data_->p();
  const arma::uword q = data_->q();
  for (arma::uword k = 0; k < p; ++k) {
    for (arma::uword j = 0; j < q; ++j) update_gamma_b_entry(k, j, rng);
  }
}

arma::mat EssSampler::scatter_tilde() const {
  const arma::mat E = data_->Y - data_->X * state_.coef.B;
  arma::mat S = E.t() * E + cfg_.dag.U;
  S /= static_cast<double>(data_->n());
  return arma::symmatu(S);
}

void EssSampler::update_d_q(const arma::mat& S_tilde, Rng& rng) {
  const std::size_t last = data_->q() - 1;
  state_.chol.d(last) = sample_d_j(rng, S_tilde, state_.dag, last, data_->n(),
                                   cfg_.dag.shape_offset);
}

bool EssSampler::mh_parent_set_step(std::size_t j, const arma::mat& S_tilde, Rng& rng) {
  const std::size_t q = data_->q();
  const std::size_t n = data_->n();
  if (j + 1 >= q) return false;
  const AddDeleteKernel kernel(j + 1, q - 1 - j, cfg_.dag.parent_cap(j, q));

  std::vector<std::size_t> current = state_.dag.parents(j);
  const auto move = kernel.propose(rng, current);
  if (!move) return false;

  const double log_old = log_parent_set_posterior(S_tilde, cfg_.dag, state_.dag, j, n);
  std::vector<std::size_t> proposed = current;
  AddDeleteKernel::apply(proposed, *move);
  state_.dag.set_parents(j, proposed);
  const double log_new = log_parent_set_posterior(S_tilde, cfg_.dag, state_.dag, j, n);

  const double log_ratio = log_new - log_old + move->log_hastings;
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) return true;
  state_.dag.set_parents(j, std::move(current));
  return false;
}

void EssSampler::update_vertex(std::size_t j, const arma::mat& S_tilde, Rng& rng) {
  const std::size_t n = data_->n();
  mh_parent_set_step(j, S_tilde, rng);
  const double d_j = sample_d_j(rng, S_tilde, state_.dag, j, n, cfg_.dag.shape_offset);
  state_.chol.d(j) = d_j;
  const arma::vec column = sample_L_column(rng, S_tilde, d_j, state_.dag, j, double(n));
  // column j of L: unit diagonal, parents get the draw, everything else 0
  const arma::uword q = data_->q();
  for (arma::uword i = j + 1; i < q; ++i) state_.chol.L(i, j) = 0.0;
  const auto& pa = state_.dag.parents(j);
  for (std::size_t r = 0; r < pa.size(); ++r) state_.chol.L(pa[r], j) = column(r);
}

void EssSampler::refresh_omega() { state_.Omega = mcd_compose(state_.chol); }

void EssSampler::iterate(std::size_t iteration) {
  const std::size_t q = data_->q();
  const std::uint64_t base = static_cast<std::uint64_t>(iteration) * (q + 2);

  auto t0 = Clock::now();
  Rng coef_rng = base_.stream(base);
  sweep_coefficients(coef_rng);
  timing_.coefficients += seconds_since(t0);

  t0 = Clock::now();
  const arma::mat S_tilde = scatter_tilde();
  timing_.scatter += seconds_since(t0);

  t0 = Clock::now();
  Rng dq_rng = base_.stream(base + 1);
  update_d_q(S_tilde, dq_rng);

  // vertices read the same S~ and write disjoint state, so they may run in parallel
  std::vector<std::size_t> before(q > 0 ? q - 1 : 0);
  for (std::size_t j = 0; j + 1 < q; ++j) before[j] = state_.dag.nu(j);
  std::vector<char> accepted(before.size(), 0);
  parallel_for(before.size(), cfg_.workers, [&](std::size_t j) {
    Rng rng = base_.stream(base + 2 + j);
    const auto old = state_.dag.parents(j);
    update_vertex(j, S_tilde, rng);
    accepted[j] = state_.dag.parents(j) != old;
  });
  for (std::size_t j = 0; j + 1 < q; ++j) {
    ++dag_proposals_;
    dag_accepts_ += accepted[j] ? 1 : 0;
  }
  timing_.dag += seconds_since(t0);

  t0 = Clock::now();
  refresh_omega();
  timing_.omega += seconds_since(t0);
  ++timing_.iterations;
}

ChainDraw EssSampler::snapshot() const {
  ChainDraw draw;
  const arma::mat& B = state_.coef.B;
  const arma::umat& G = state_.coef.Gamma;
  for (arma::uword j = 0; j < B.n_cols; ++j) {
    for (arma::uword k = 0; k < B.n_rows; ++k) {
      if (G(k, j) != 0) {
        draw.coef.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j), B(k, j)});
      }
    }
  }
  draw.dag = state_.dag;
  for (std::size_t j = 0; j < state_.dag.q(); ++j) {
    for (auto i : state_.dag.parents(j)) draw.l_values.push_back(state_.chol.L(i, j));
  }
  draw.d = arma::conv_to<std::vector<double>>::from(state_.chol.d);
  return draw;
}

EssResult ess_run(const RegressionData& data, const EssConfig& cfg) {
  EssSampler sampler(data, cfg);
  EssResult result;
  result.chain.kind = ChainKind::Ess;
  result.chain.p = data.p();
  result.chain.q = data.q();
  result.chain.has_coef_values = true;
  result.chain.seed = cfg.seed;
  result.chain.config = cfg.to_json();
  result.chain.draws.reserve(stored_draw_count(cfg.iterations, cfg.burn_in, cfg.thin));
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    sampler.iterate(it);
    if (is_stored_iteration(it, cfg.burn_in, cfg.thin)) {
      result.chain.draws.push_back(sampler.snapshot());
    }
  }
  result.timing = sampler.timing();
  result.dag_acceptance = sampler.dag_proposals()
                              ? double(sampler.dag_accepts()) / double(sampler.dag_proposals())
                              : 0.0;
  return result;
}

EssEstimates ess_estimates(const RegressionData& data, const EssConfig& cfg,
                           const ChainRecord& chain) {
  EssEstimates out;
  out.gamma_hat = mpm_select_gamma(chain);
  out.B_hat = estimate_B_from_chain(chain, out.gamma_hat);
  out.dag_hat = mpm_select_dag(chain);
  out.LD_hat.L = estimate_L_from_chain(chain, out.dag_hat);
  const arma::mat S_tilde = scatter_tilde(compute_error_estimate(data, out.B_hat.B), cfg.dag.U);
  out.LD_hat.d = estimate_D_posterior_mode(S_tilde, out.dag_hat, data.n(), cfg.dag.shape_offset);
  return out;
}

}  // namespace dagreg
