#include "dagreg/selection.hpp"

#include <string>

#include "dagreg/dag_wishart.hpp"
#include "dagreg/error.hpp"

namespace dagreg {

namespace {

void require_draws(const ChainRecord& chain) {
  if (chain.draws.empty()) throw Error(ErrorKind::EmptyChain, "chain has no stored draws");
}

// 2 * count >= M keeps ties at exactly one half
arma::umat majority(const arma::umat& counts, std::size_t draws) {
  arma::umat out(counts.n_rows, counts.n_cols, arma::fill::zeros);
  out.elem(arma::find(2 * counts >= draws)).ones();
  return out;
}

}  // namespace

arma::umat mpm_select_gamma(const ChainRecord& chain) {
  require_draws(chain);
  arma::umat counts(chain.p, chain.q, arma::fill::zeros);
  for (const auto& draw : chain.draws) {
    for (const auto& cell : draw.coef) ++counts(cell.row, cell.col);
  }
  return majority(counts, chain.draws.size());
}

OrderedDag mpm_select_dag(const ChainRecord& chain) {
  require_draws(chain);
  arma::umat counts(chain.q, chain.q, arma::fill::zeros);
  for (const auto& draw : chain.draws) {
    if (!draw.dag) throw Error(ErrorKind::Validation, "chain draws carry no DAG");
    counts += draw.dag->adjacency();
  }
  arma::umat adj = majority(counts, chain.draws.size());
  adj = arma::trimatl(adj, -1);
  return OrderedDag::from_adjacency(adj);
}

SparseCoefState estimate_B_from_chain(const ChainRecord& chain, const arma::umat& gamma_hat) {
  require_draws(chain);
  if (!chain.has_coef_values) {
    throw Error(ErrorKind::Validation, "chain does not record coefficient values");
  }
  if (gamma_hat.n_rows != chain.p || gamma_hat.n_cols != chain.q) {
    throw Error(ErrorKind::InvalidShape, "gamma_hat does not match chain dimensions");
  }
  arma::mat sums(chain.p, chain.q, arma::fill::zeros);
  arma::umat counts(chain.p, chain.q, arma::fill::zeros);
  for (const auto& draw : chain.draws) {
    for (const auto& cell : draw.coef) {
      sums(cell.row, cell.col) += cell.value;
      ++counts(cell.row, cell.col);
    }
  }
  SparseCoefState out = SparseCoefState::zeros(chain.p, chain.q);
  for (arma::uword i = 0; i < gamma_hat.n_elem; ++i) {
    if (gamma_hat(i) == 0) continue;
    if (counts(i) == 0) {
      throw Error(ErrorKind::UndefinedEstimator,
                  "selected coefficient (" + std::to_string(i % chain.p + 1) + ", " +
                      std::to_string(i / chain.p + 1) + ") is never active in the chain");
    }
    out.B(i) = sums(i) / static_cast<double>(counts(i));
    out.Gamma(i) = 1;
  }
  return out;
}

arma::mat estimate_L_from_chain(const ChainRecord& chain, const OrderedDag& dag_hat) {
  require_draws(chain);
  const std::size_t q = chain.q;
  if (dag_hat.q() != q) throw Error(ErrorKind::InvalidShape, "dag_hat does not match chain");
  arma::mat sums(q, q, arma::fill::zeros);
  arma::umat counts(q, q, arma::fill::zeros);
  for (const auto& draw : chain.draws) {
    if (!draw.dag) throw Error(ErrorKind::Validation, "chain draws carry no DAG");
    if (draw.l_values.size() != draw.dag->edge_count()) {
      throw Error(ErrorKind::Validation, "chain draws carry no L values");
    }
    std::size_t pos = 0;
    for (std::size_t j = 0; j < q; ++j) {
      for (auto i : draw.dag->parents(j)) {
        sums(i, j) += draw.l_values[pos++];
        ++counts(i, j);
      }
    }
  }
  arma::mat L = arma::eye(q, q);
  for (std::size_t j = 0; j < q; ++j) {
    for (auto i : dag_hat.parents(j)) {
      if (counts(i, j) == 0) {
        throw Error(ErrorKind::UndefinedEstimator, "selected edge " + std::to_string(i + 1) +
                                                       " -> " + std::to_string(j + 1) +
                                                       " is never present in the chain");
      }
      L(i, j) = sums(i, j) / static_cast<double>(counts(i, j));
    }
  }
  return L;
}

arma::mat estimate_L_posterior_mean(const arma::mat& S_tilde, const OrderedDag& dag_hat) {
  const std::size_t q = dag_hat.q();
  arma::mat L = arma::eye(q, q);
  for (std::size_t j = 0; j < q; ++j) {
    const arma::vec col = posterior_mean_L_column(S_tilde, dag_hat, j);
    const auto& pa = dag_hat.parents(j);
    for (std::size_t r = 0; r < pa.size(); ++r) L(pa[r], j) = col(r);
  }
  return L;
}

arma::vec estimate_D_posterior_mode(const arma::mat& S_tilde, const OrderedDag& dag_hat,
                                    std::size_t n, double shape_offset) {
  arma::vec d(dag_hat.q());
  for (std::size_t j = 0; j < dag_hat.q(); ++j) {
    d(j) = posterior_mode_d_j(S_tilde, dag_hat, j, n, shape_offset);
  }
  return d;
}

}  // namespace dagreg
