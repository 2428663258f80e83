#pragma once

// Selection scores, relative estimation errors and the MCMC effective sample size.

#include <armadillo>
#include <cstddef>
#include <optional>
#include <vector>

#include "dagreg/core_model.hpp"

namespace dagreg {

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
};

/// Every cell of two same-shaped indicator matrices.
ConfusionCounts confusion(const arma::umat& est, const arma::umat& truth);
/// The q(q-1)/2 ordered pairs (i > j) of two DAGs.
ConfusionCounts confusion(const OrderedDag& est, const OrderedDag& truth);

/// nullopt marks a zero denominator.
struct SelectionMetrics {
  std::optional<double> precision, sensitivity, specificity, mcc;
};

SelectionMetrics selection_metrics(const ConfusionCounts& c);
SelectionMetrics selection_metrics(const arma::umat& est, const arma::umat& truth);
SelectionMetrics selection_metrics(const OrderedDag& est, const OrderedDag& truth);

struct RelativeErrors {
  double e1 = 0.0;  // matrix l1 (max column sum)
  double e2 = 0.0;  // spectral
  double e3 = 0.0;  // Frobenius
  double e4 = 0.0;  // entrywise max
};

RelativeErrors relative_errors(const arma::mat& Omega_hat, const arma::mat& Omega0);

/// Single-chain ESS with Geyer's initial monotone sequence; a constant series
/// returns its length. Needs at least 8 values.
double effective_sample_size(const arma::vec& series);

/// Mean over the defined values, with the number skipped.
struct MetricAverage {
  std::optional<double> mean;
  std::size_t defined = 0;
  std::size_t undefined = 0;
};

MetricAverage average_defined(const std::vector<std::optional<double>>& values);

}  // namespace dagreg
