#pragma once

// Synthetic benchmark data: Y = X B0 + E with X_i ~ N(0, C0), E_i ~ N(0, Sigma0).

#include <armadillo>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dagreg/core_model.hpp"
#include "dagreg/rng.hpp"

namespace dagreg {

struct SimSpec {
  int scenario = 1;  // 1..5
  int setting = 1;   // 1..4, ignored for scenario 5
  std::uint64_t seed = 1;
  std::optional<std::size_t> n, p, q;

  void validate() const;
  /// Dimensions after applying overrides to the scenario table.
  std::size_t dim_n() const;
  std::size_t dim_p() const;
  std::size_t dim_q() const;
  /// ||Gamma0||_0 and sum_j nu_j(D0), rounded down.
  std::size_t support_count() const;
  std::size_t edge_count() const;

  nlohmann::json to_json() const;
  static SimSpec from_json(const nlohmann::json& j);
};

struct GroundTruth {
  SparseCoefState B0;
  CholeskyPair L0D0;
  OrderedDag dag0;
  arma::mat Sigma0;  // q x q, in the column order of Y
  arma::mat C0;      // p x p
  /// Scenario 4 only: column c of Y is column permutation[c] of the unshuffled errors.
  std::vector<std::size_t> permutation;
};

struct SimData {
  RegressionData data;
  GroundTruth truth;
};

SimData generate(const SimSpec& spec);

/// `count` distinct cells of a p x q grid, uniformly at random, in draw order.
std::vector<std::pair<std::size_t, std::size_t>> place_support(Rng& rng, std::size_t p,
                                                               std::size_t q, std::size_t count);

/// Draw from the uniform law of a setting's signal set.
double draw_signal(Rng& rng, int setting);

/// (C0)_rs = rho^|r - s|.
arma::mat ar1_correlation(std::size_t p, double rho);

/// Banded (Sigma~)_ij = 2 (1 - |i-j|/10) 1(|i-j| <= 5), shifted so lambda_min = 0.01.
arma::mat banded_sigma(std::size_t q);

}  // namespace dagreg
