#pragma once

#include <armadillo>
#include <cstddef>
#include <random>

#include "dagreg/rng.hpp"

namespace dagreg {

inline double draw_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline arma::vec draw_normal_vec(Rng& rng, arma::uword size) {
  arma::vec out(size);
  for (arma::uword i = 0; i < size; ++i) out(i) = draw_normal(rng);
  return out;
}

/// Inverse-Gamma(shape, rate): density proportional to x^{-shape-1} exp(-rate / x).
inline double draw_inverse_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return 1.0 / dist(rng);
}

inline bool draw_bernoulli(Rng& rng, double prob) { return rng.uniform() < prob; }

/// Uniform integer in [0, n).
inline std::size_t draw_index(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

}  // namespace dagreg
