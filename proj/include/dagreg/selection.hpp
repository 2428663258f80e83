#pragma once

// Median probability model selection and point estimates from chains.

#include <armadillo>

#include "dagreg/chain.hpp"
#include "dagreg/core_model.hpp"

namespace dagreg {

/// Entry included iff it appears in at least half of the draws.
arma::umat mpm_select_gamma(const ChainRecord& chain);
OrderedDag mpm_select_dag(const ChainRecord& chain);

/// Per-entry mean of coefficient draws over the iterations where the entry was
/// active; zero outside gamma_hat. UndefinedEstimator if a selected entry was
/// never active.
SparseCoefState estimate_B_from_chain(const ChainRecord& chain, const arma::umat& gamma_hat);

/// Same averaging for the strictly-lower entries of L restricted to dag_hat.
arma::mat estimate_L_from_chain(const ChainRecord& chain, const OrderedDag& dag_hat);

/// Closed-form alternatives given S~ = (n S + U) / n.
arma::mat estimate_L_posterior_mean(const arma::mat& S_tilde, const OrderedDag& dag_hat);
arma::vec estimate_D_posterior_mode(const arma::mat& S_tilde, const OrderedDag& dag_hat,
                                    std::size_t n, double shape_offset);

}  // namespace dagreg
