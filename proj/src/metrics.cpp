#include "dagreg/metrics.hpp"

#include <cmath>
#include <algorithm>
#include <complex>
#include <limits>
#include <string>

#include "dagreg/error.hpp"

namespace dagreg {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

ConfusionCounts confusion(const arma::umat& est, const arma::umat& truth) {
  if (est.n_rows != truth.n_rows || est.n_cols != truth.n_cols) {
    throw Error(ErrorKind::InvalidShape, "estimate and truth shapes differ");
  }
  ConfusionCounts c;
  for (arma::uword i = 0; i < est.n_elem; ++i) {
    const bool e = est(i) != 0, t = truth(i) != 0;
    if (e && t) ++c.tp;
    else if (e) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ConfusionCounts confusion(const OrderedDag& est, const OrderedDag& truth) {
  if (est.q() != truth.q()) throw Error(ErrorKind::InvalidShape, "DAG sizes differ");
  ConfusionCounts c;
  const std::size_t q = est.q();
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t i = j + 1; i < q; ++i) {
      const bool e = est.has_edge(i, j), t = truth.has_edge(i, j);
      if (e && t) ++c.tp;
      else if (e) ++c.fp;
      else if (t) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

SelectionMetrics selection_metrics(const ConfusionCounts& c) {
  const double tp = double(c.tp), tn = double(c.tn), fp = double(c.fp), fn = double(c.fn);
  SelectionMetrics m;
  m.precision = ratio(tp, tp + fp);
  m.sensitivity = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den > 0.0) m.mcc = (tp * tn - fp * fn) / std::sqrt(den);
  return m;
}

SelectionMetrics selection_metrics(const arma::umat& est, const arma::umat& truth) {
  return selection_metrics(confusion(est, truth));
}

SelectionMetrics selection_metrics(const OrderedDag& est, const OrderedDag& truth) {
  return selection_metrics(confusion(est, truth));
}

RelativeErrors relative_errors(const arma::mat& Omega_hat, const arma::mat& Omega0) {
  if (Omega_hat.n_rows != Omega0.n_rows || Omega_hat.n_cols != Omega0.n_cols) {
    throw Error(ErrorKind::InvalidShape, "matrix shapes differ");
  }
  const double ref_max = arma::abs(Omega0).max();
  if (!(ref_max > 0.0)) throw Error(ErrorKind::ZeroReference, "reference matrix is zero");
  const arma::mat diff = Omega_hat - Omega0;
  RelativeErrors r;
  r.e1 = arma::norm(diff, 1) / arma::norm(Omega0, 1);
  r.e2 = arma::norm(diff, 2) / arma::norm(Omega0, 2);
  r.e3 = arma::norm(diff, "fro") / arma::norm(Omega0, "fro");
  r.e4 = arma::abs(diff).max() / ref_max;
  return r;
}

double effective_sample_size(const arma::vec& series) {
  const arma::uword n = series.n_elem;
  if (n < 8) {
    throw Error(ErrorKind::TooShort, "need at least 8 draws, got " + std::to_string(n));
  }
  const arma::vec x = series - arma::mean(series);
  const double var0 = arma::dot(x, x) / double(n);
  if (!(var0 > 1e-300)) return double(n);

  // autocovariance by zero-padded FFT
  arma::uword m = 1;
  while (m < 2 * n) m <<= 1;
  arma::vec padded(m, arma::fill::zeros);
  padded.head(n) = x;
  const arma::cx_vec f = arma::fft(padded);
  const arma::vec full = arma::real(arma::ifft(arma::cx_vec(f % arma::conj(f))));
  const arma::vec acov = full.head(n) / double(n);
  const arma::vec rho = acov / acov(0);

  // Geyer: pair sums Gamma_k = rho_{2k} + rho_{2k+1}, positive and made monotone
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (arma::uword k = 0; 2 * k + 1 < n; ++k) {
    double g = rho(2 * k) + rho(2 * k + 1);
    if (!(g > 0.0)) break;
    if (g > prev) g = prev;
    sum += g;
    prev = g;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / double(n));
  return std::min(double(n) / tau, double(n));
}

MetricAverage average_defined(const std::vector<std::optional<double>>& values) {
  MetricAverage out;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++out.defined;
    } else {
      ++out.undefined;
    }
  }
  if (out.defined) out.mean = sum / double(out.defined);
  return out;
}

}  // namespace dagreg
