#pragma once

// Shared model types: regression data, sparse coefficients, ordered DAGs and the
// modified Cholesky decomposition (MCD) Omega = L D^{-1} L^T.
//
// Vertices are 0-based everywhere in the C++ API. Files and the CLI use 1-based
// labels; the conversion happens only in the (de)serialisers.

#include <armadillo>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace dagreg {

struct RegressionData {
  arma::mat X;  // n x p
  arma::mat Y;  // n x q

  arma::uword n() const { return X.n_rows; }
  arma::uword p() const { return X.n_cols; }
  arma::uword q() const { return Y.n_cols; }

  /// Throws Validation on empty inputs, row mismatch or non-finite entries.
  void validate() const;
};

struct SparseCoefState {
  arma::mat B;       // p x q
  arma::umat Gamma;  // p x q, entries in {0, 1}

  static SparseCoefState zeros(arma::uword p, arma::uword q);
  /// Gamma taken as the support of B.
  static SparseCoefState from_dense(const arma::mat& B);

  bool consistent() const;
};

/// DAG on q vertices under a fixed parent ordering: every parent of j is > j.
class OrderedDag {
 public:
  OrderedDag() = default;
  explicit OrderedDag(std::size_t q);
  /// Parents given per vertex; sorted and checked against the ordering.
  OrderedDag(std::size_t q, std::vector<std::vector<std::size_t>> parents);

  std::size_t q() const { return parents_.size(); }
  const std::vector<std::size_t>& parents(std::size_t j) const { return parents_[j]; }
  std::size_t nu(std::size_t j) const { return parents_[j].size(); }
  std::size_t edge_count() const;

  bool has_edge(std::size_t parent, std::size_t child) const;
  void add_parent(std::size_t child, std::size_t parent);
  void remove_parent(std::size_t child, std::size_t parent);
  void set_parents(std::size_t child, std::vector<std::size_t> parents);

  /// Adjacency indicator: entry (i, j) = 1 iff i is a parent of j (so i > j).
  arma::umat adjacency() const;
  static OrderedDag from_adjacency(const arma::umat& adj);

  nlohmann::json to_json() const;
  static OrderedDag from_json(const nlohmann::json& j);

  bool operator==(const OrderedDag&) const = default;

 private:
  std::vector<std::vector<std::size_t>> parents_;
};

struct CholeskyPair {
  arma::mat L;  // unit lower triangular
  arma::vec d;  // strictly positive

  static CholeskyPair identity(arma::uword q);

  /// L has unit diagonal, is lower triangular, and d > 0.
  bool valid(double tol = 0.0) const;
  /// Every nonzero strictly-lower entry of L sits on an edge of dag.
  bool supported_by(const OrderedDag& dag) const;
};

struct ErrorEstimate {
  arma::mat Ehat;  // n x q
  arma::mat Shat;  // q x q, Ehat^T Ehat / n
};

arma::mat mcd_compose(const CholeskyPair& chol);

/// Unique (L, d) with Omega = L diag(1/d) L^T. Pivots at or below
/// pivot_rel_eps * max(diag(Omega)) raise NotPositiveDefinite.
CholeskyPair mcd_decompose(const arma::mat& Omega, double pivot_rel_eps = 1e-12);

/// Blocks of a symmetric matrix A around vertex j: A_jj, A restricted to
/// (parents, j), A restricted to (parents, parents) and the Schur complement
/// A_jj - col^T block^{-1} col. Parents keep ascending order.
struct DagBlocks {
  double ajj = 0.0;
  arma::vec col;
  arma::mat block;
  double schur = 0.0;
  double log_det_block = 0.0;  // 0 for an empty parent set
  arma::mat block_chol;        // upper R with R^T R = block
};

DagBlocks dag_submatrices(const arma::mat& A, const OrderedDag& dag, std::size_t j);

}  // namespace dagreg
