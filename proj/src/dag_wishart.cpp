#include "dagreg/dag_wishart.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dagreg/distributions.hpp"
#include "dagreg/error.hpp"

namespace dagreg {

DagWishartParams DagWishartParams::defaults(arma::uword q) {
  DagWishartParams p;
  p.U = arma::eye(q, q);
  p.shape_offset = 10.0;
  p.eta2 = q > 1 ? 1.0 / static_cast<double>(q) : 0.5;
  return p;
}

std::size_t DagWishartParams::parent_cap(std::size_t j, std::size_t q) const {
  const std::size_t structural = q - 1 - j;
  if (!max_parents) return structural;
  return std::min(structural, (*max_parents)[j]);
}

void DagWishartParams::validate(arma::uword q) const {
  if (U.n_rows != q || U.n_cols != q) {
    throw Error(ErrorKind::Validation, "U must be " + std::to_string(q) + "x" + std::to_string(q));
  }
  arma::mat R;
  if (!U.is_symmetric(1e-10) || !arma::chol(R, U)) {
    throw Error(ErrorKind::Validation, "U must be symmetric positive definite");
  }
  if (!(shape_offset > 2.0)) throw Error(ErrorKind::Validation, "shape offset c must exceed 2");
  if (!(eta2 > 0.0 && eta2 < 1.0)) throw Error(ErrorKind::Validation, "eta2 must lie in (0, 1)");
  if (max_parents && max_parents->size() != q) {
    throw Error(ErrorKind::Validation, "max_parents needs one cap per vertex");
  }
}

double log_zeta_j(const arma::mat& A, double phi_j, const OrderedDag& dag, std::size_t j) {
  const double nu = static_cast<double>(dag.nu(j));
  const double a = phi_j / 2.0 - nu / 2.0 - 1.0;
  if (!(phi_j - nu > 2.0)) {
    throw Error(ErrorKind::InvalidShape, "phi_j - nu_j must exceed 2 at vertex " +
                                             std::to_string(j + 1));
  }
  const DagBlocks blocks = dag_submatrices(A, dag, j);
  if (!(blocks.schur > 0.0)) {
    throw Error(ErrorKind::SingularBlock,
                "non-positive Schur complement at vertex " + std::to_string(j + 1));
  }
  return std::lgamma(a) + (phi_j / 2.0 - 1.0) * std::numbers::ln2 +
         0.5 * nu * std::log(std::numbers::pi) - a * std::log(blocks.schur) -
         0.5 * blocks.log_det_block;
}

double log_prior_dag(const OrderedDag& dag, const DagWishartParams& params) {
  const std::size_t q = dag.q();
  const double log_in = std::log(params.eta2);
  const double log_out = std::log1p(-params.eta2);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < q; ++j) {
    const std::size_t nu = dag.nu(j);
    if (nu > params.parent_cap(j, q)) {
      throw Error(ErrorKind::CapExceeded, "vertex " + std::to_string(j + 1) + " has " +
                                              std::to_string(nu) + " parents");
    }
    total += static_cast<double>(nu) * log_in + static_cast<double>(q - 1 - j - nu) * log_out;
  }
  return total;
}

double log_parent_set_posterior(const arma::mat& S_tilde, const DagWishartParams& params,
                                const OrderedDag& dag, std::size_t j, std::size_t n) {
  const std::size_t q = dag.q();
  const std::size_t nu = dag.nu(j);
  if (nu > params.parent_cap(j, q)) return -std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  const double phi = params.phi(dag, j);
  const double post = log_zeta_j(nd * S_tilde, phi + nd, dag, j);
  const double prior = log_zeta_j(params.U, phi, dag, j);
  return post - prior + static_cast<double>(nu) * std::log(params.eta2) +
         static_cast<double>(q - 1 - j - nu) * std::log1p(-params.eta2);
}

InverseGammaParams d_j_conditional(const arma::mat& Atilde, const OrderedDag& dag, std::size_t j,
                                   std::size_t n, double c) {
  const DagBlocks blocks = dag_submatrices(Atilde, dag, j);
  const double nd = static_cast<double>(n);
  InverseGammaParams ig{(c + nd) / 2.0 - 1.0, nd * blocks.schur / 2.0};
  if (!(ig.shape > 0.0)) {
    throw Error(ErrorKind::InvalidShape, "inverse-gamma shape must be positive");
  }
  return ig;
}

double sample_d_j(Rng& rng, const arma::mat& Atilde, const OrderedDag& dag, std::size_t j,
                  std::size_t n, double c) {
  const auto ig = d_j_conditional(Atilde, dag, j, n, c);
  if (!(ig.rate > 0.0)) {
    throw Error(ErrorKind::SingularBlock, "non-positive Schur complement at vertex " +
                                              std::to_string(j + 1));
  }
  return draw_inverse_gamma(rng, ig.shape, ig.rate);
}

arma::vec sample_L_column(Rng& rng, const arma::mat& Atilde, double d_j, const OrderedDag& dag,
                          std::size_t j, double n) {
  if (dag.nu(j) == 0) return {};
  const DagBlocks blocks = dag_submatrices(Atilde, dag, j);
  const arma::mat& R = blocks.block_chol;
  // mean = -block^{-1} col via two triangular solves
  const arma::vec half = arma::solve(arma::trimatl(R.t()), blocks.col);
  const arma::vec mean = -arma::solve(arma::trimatu(R), half);
  // R^{-1} z has covariance block^{-1}
  const arma::vec z = draw_normal_vec(rng, R.n_rows);
  return mean + std::sqrt(d_j / n) * arma::solve(arma::trimatu(R), z);
}

arma::vec posterior_mean_L_column(const arma::mat& Atilde, const OrderedDag& dag, std::size_t j) {
  if (dag.nu(j) == 0) return {};
  const DagBlocks blocks = dag_submatrices(Atilde, dag, j);
  const arma::mat& R = blocks.block_chol;
  const arma::vec half = arma::solve(arma::trimatl(R.t()), blocks.col);
  return -arma::solve(arma::trimatu(R), half);
}

double posterior_mode_d_j(const arma::mat& Atilde, const OrderedDag& dag, std::size_t j,
                          std::size_t n, double c) {
  const auto ig = d_j_conditional(Atilde, dag, j, n, c);
  return ig.rate / (ig.shape + 1.0);
}

}  // namespace dagreg
