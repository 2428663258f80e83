#pragma once

// DAG-Wishart prior on (L, D) given an ordered DAG, with the Bernoulli edge
// prior on the DAG itself. All densities are in log space.

#include <armadillo>
#include <cstddef>
#include <optional>
#include <vector>

#include "dagreg/core_model.hpp"
#include "dagreg/rng.hpp"

namespace dagreg {

struct DagWishartParams {
  arma::mat U;                // SPD scale, q x q
  double shape_offset = 10.0; // c, with phi_j(D) = nu_j(D) + c
  double eta2 = 0.5;          // edge inclusion probability
  std::optional<std::vector<std::size_t>> max_parents;

  static DagWishartParams defaults(arma::uword q);

  double phi(const OrderedDag& dag, std::size_t j) const {
    return static_cast<double>(dag.nu(j)) + shape_offset;
  }
  /// Largest parent-set size allowed at vertex j.
  std::size_t parent_cap(std::size_t j, std::size_t q) const;

  void validate(arma::uword q) const;
};

/// log zeta_D^j(A, phi_j):
///   lgamma(phi/2 - nu/2 - 1) + (phi/2 - 1) log 2 + (nu/2) log pi
///   - (phi/2 - nu/2 - 1) log A_{j|pa} - (1/2) log det(A_pa,pa)
double log_zeta_j(const arma::mat& A, double phi_j, const OrderedDag& dag, std::size_t j);

/// Log of the Bernoulli(eta2) edge prior. Throws CapExceeded when a vertex has
/// more parents than params.max_parents allows.
double log_prior_dag(const OrderedDag& dag, const DagWishartParams& params);

/// Unnormalised log posterior of pa_j given error scatter:
///   log zeta(n S~, phi + n) - log zeta(U, phi) + edge prior term for vertex j.
/// S_tilde = (n S + U) / n. Returns -inf above the parent cap.
double log_parent_set_posterior(const arma::mat& S_tilde, const DagWishartParams& params,
                                const OrderedDag& dag, std::size_t j, std::size_t n);

struct InverseGammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

/// Conditional of d_j: shape (c + n)/2 - 1, rate n * Atilde_{j|pa} / 2.
InverseGammaParams d_j_conditional(const arma::mat& Atilde, const OrderedDag& dag, std::size_t j,
                                   std::size_t n, double c);

double sample_d_j(Rng& rng, const arma::mat& Atilde, const OrderedDag& dag, std::size_t j,
                  std::size_t n, double c);

/// Draw from N(-block^{-1} col, d_j / n * block^{-1}) on the parents of j.
arma::vec sample_L_column(Rng& rng, const arma::mat& Atilde, double d_j, const OrderedDag& dag,
                          std::size_t j, double n);

arma::vec posterior_mean_L_column(const arma::mat& Atilde, const OrderedDag& dag, std::size_t j);

/// Inverse-gamma mode rate / (shape + 1) with the parameters of d_j_conditional.
double posterior_mode_d_j(const arma::mat& Atilde, const OrderedDag& dag, std::size_t j,
                          std::size_t n, double c);

}  // namespace dagreg
