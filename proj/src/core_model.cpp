#include "dagreg/core_model.hpp"

#include <algorithm>
#include <cmath>

#include "dagreg/error.hpp"

namespace dagreg {

void RegressionData::validate() const {
  if (X.n_rows == 0 || X.n_cols == 0 || Y.n_cols == 0) {
    throw Error(ErrorKind::Validation, "X and Y must be non-empty");
  }
  if (X.n_rows != Y.n_rows) {
    throw Error(ErrorKind::Validation, "X has " + std::to_string(X.n_rows) + " rows but Y has " +
                                           std::to_string(Y.n_rows));
  }
  if (!X.is_finite() || !Y.is_finite()) {
    throw Error(ErrorKind::Validation, "X and Y must contain only finite values");
  }
}

SparseCoefState SparseCoefState::zeros(arma::uword p, arma::uword q) {
  return {arma::mat(p, q, arma::fill::zeros), arma::umat(p, q, arma::fill::zeros)};
}

SparseCoefState SparseCoefState::from_dense(const arma::mat& B) {
  SparseCoefState s{B, arma::umat(B.n_rows, B.n_cols, arma::fill::zeros)};
  s.Gamma.elem(arma::find(B != 0.0)).ones();
  return s;
}

bool SparseCoefState::consistent() const {
  if (B.n_rows != Gamma.n_rows || B.n_cols != Gamma.n_cols) return false;
  for (arma::uword i = 0; i < B.n_elem; ++i) {
    if (Gamma(i) > 1) return false;
    if (Gamma(i) == 0 && B(i) != 0.0) return false;
  }
  return true;
}

OrderedDag::OrderedDag(std::size_t q) : parents_(q) {}

OrderedDag::OrderedDag(std::size_t q, std::vector<std::vector<std::size_t>> parents)
    : parents_(q) {
  if (parents.size() != q) {
    throw Error(ErrorKind::Validation, "parent list size does not match q");
  }
  for (std::size_t j = 0; j < q; ++j) set_parents(j, std::move(parents[j]));
}

std::size_t OrderedDag::edge_count() const {
  std::size_t total = 0;
  for (const auto& pa : parents_) total += pa.size();
  return total;
}

bool OrderedDag::has_edge(std::size_t parent, std::size_t child) const {
  const auto& pa = parents_[child];
  return std::binary_search(pa.begin(), pa.end(), parent);
}

void OrderedDag::add_parent(std::size_t child, std::size_t parent) {
  if (parent <= child || parent >= q()) {
    throw Error(ErrorKind::Validation, "parent must be larger than child and < q");
  }
  auto& pa = parents_[child];
  auto it = std::lower_bound(pa.begin(), pa.end(), parent);
  if (it == pa.end() || *it != parent) pa.insert(it, parent);
}

void OrderedDag::remove_parent(std::size_t child, std::size_t parent) {
  auto& pa = parents_[child];
  auto it = std::lower_bound(pa.begin(), pa.end(), parent);
  if (it != pa.end() && *it == parent) pa.erase(it);
}

void OrderedDag::set_parents(std::size_t child, std::vector<std::size_t> parents) {
  std::sort(parents.begin(), parents.end());
  parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
  for (auto v : parents) {
    if (v <= child || v >= q()) {
      throw Error(ErrorKind::Validation, "vertex " + std::to_string(child + 1) +
                                             " has invalid parent " + std::to_string(v + 1));
    }
  }
  parents_[child] = std::move(parents);
}

arma::umat OrderedDag::adjacency() const {
  arma::umat adj(q(), q(), arma::fill::zeros);
  for (std::size_t j = 0; j < q(); ++j) {
    for (auto i : parents_[j]) adj(i, j) = 1;
  }
  return adj;
}

OrderedDag OrderedDag::from_adjacency(const arma::umat& adj) {
  OrderedDag dag(adj.n_rows);
  for (arma::uword j = 0; j < adj.n_cols; ++j) {
    for (arma::uword i = j + 1; i < adj.n_rows; ++i) {
      if (adj(i, j) != 0) dag.parents_[j].push_back(i);
    }
  }
  return dag;
}

nlohmann::json OrderedDag::to_json() const {
  nlohmann::json parents = nlohmann::json::object();
  for (std::size_t j = 0; j < q(); ++j) {
    nlohmann::json labels = nlohmann::json::array();
    for (auto i : parents_[j]) labels.push_back(i + 1);
    parents[std::to_string(j + 1)] = std::move(labels);
  }
  return {{"q", q()}, {"parents", std::move(parents)}};
}

OrderedDag OrderedDag::from_json(const nlohmann::json& j) {
  if (!j.contains("q") || !j.contains("parents")) {
    throw Error(ErrorKind::Validation, "DAG JSON needs \"q\" and \"parents\"");
  }
  const auto q = j.at("q").get<std::size_t>();
  OrderedDag dag(q);
  for (const auto& [label, list] : j.at("parents").items()) {
    const auto child = std::stoul(label);
    if (child < 1 || child > q) {
      throw Error(ErrorKind::Validation, "DAG vertex label out of range: " + label);
    }
    std::vector<std::size_t> pa;
    for (const auto& v : list) {
      const auto parent = v.get<std::size_t>();
      if (parent < 1) throw Error(ErrorKind::Validation, "DAG labels are 1-based");
      pa.push_back(parent - 1);
    }
    dag.set_parents(child - 1, std::move(pa));
  }
  return dag;
}

CholeskyPair CholeskyPair::identity(arma::uword q) {
  return {arma::eye(q, q), arma::ones<arma::vec>(q)};
}

bool CholeskyPair::valid(double tol) const {
  if (!L.is_square() || L.n_rows != d.n_elem) return false;
  for (arma::uword j = 0; j < L.n_cols; ++j) {
    if (std::abs(L(j, j) - 1.0) > tol) return false;
    for (arma::uword i = 0; i < j; ++i) {
      if (std::abs(L(i, j)) > tol) return false;
    }
  }
  return arma::all(d > 0.0);
}

bool CholeskyPair::supported_by(const OrderedDag& dag) const {
  for (arma::uword j = 0; j < L.n_cols; ++j) {
    for (arma::uword i = j + 1; i < L.n_rows; ++i) {
      if (L(i, j) != 0.0 && !dag.has_edge(i, j)) return false;
    }
  }
  return true;
}

arma::mat mcd_compose(const CholeskyPair& chol) {
  arma::mat scaled = chol.L.each_row() / chol.d.t();
  arma::mat omega = scaled * chol.L.t();
  return arma::symmatu(omega);
}

CholeskyPair mcd_decompose(const arma::mat& Omega, double pivot_rel_eps) {
  if (!Omega.is_square()) throw Error(ErrorKind::InvalidShape, "Omega must be square");
  const arma::uword q = Omega.n_rows;
  const double eps = pivot_rel_eps * Omega.diag().max();

  // Omega = L diag(delta) L^T with delta = 1 / d
  arma::mat L = arma::eye(q, q);
  arma::vec delta(q);
  for (arma::uword j = 0; j < q; ++j) {
    double pivot = Omega(j, j);
    for (arma::uword k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k) * delta(k);
    if (!(pivot > eps)) {
      throw Error(ErrorKind::NotPositiveDefinite,
                  "pivot " + std::to_string(pivot) + " at column " + std::to_string(j + 1));
    }
    delta(j) = pivot;
    for (arma::uword i = j + 1; i < q; ++i) {
      double v = Omega(i, j);
      for (arma::uword k = 0; k < j; ++k) v -= L(i, k) * L(j, k) * delta(k);
      L(i, j) = v / pivot;
    }
  }
  return {std::move(L), 1.0 / delta};
}

DagBlocks dag_submatrices(const arma::mat& A, const OrderedDag& dag, std::size_t j) {
  if (j >= dag.q() || A.n_rows != dag.q() || A.n_cols != dag.q()) {
    throw Error(ErrorKind::InvalidShape, "vertex or matrix does not match the DAG");
  }
  DagBlocks out;
  out.ajj = A(j, j);
  const auto& pa = dag.parents(j);
  if (pa.empty()) {
    out.schur = out.ajj;
    return out;
  }
  const arma::uvec idx = arma::conv_to<arma::uvec>::from(pa);
  const arma::uvec jj = {static_cast<arma::uword>(j)};
  out.col = arma::vec(A.submat(idx, jj));
  out.block = A.submat(idx, idx);

  arma::mat R;
  const double scale = out.block.diag().max();
  if (!arma::chol(R, out.block) || !(arma::min(R.diag()) > 0.0) ||
      arma::min(arma::square(R.diag())) <= 1e-12 * scale) {
    throw Error(ErrorKind::SingularBlock,
                "parent block of vertex " + std::to_string(j + 1) + " is not positive definite");
  }
  const arma::vec z = arma::solve(arma::trimatl(R.t()), out.col);
  out.schur = out.ajj - arma::dot(z, z);
  out.log_det_block = 2.0 * arma::accu(arma::log(R.diag()));
  out.block_chol = std::move(R);
  return out;
}

}  // namespace dagreg
