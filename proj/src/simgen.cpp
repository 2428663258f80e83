#include "dagreg/simgen.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "dagreg/distributions.hpp"
#include "dagreg/error.hpp"

namespace dagreg {

namespace {

struct ScenarioRow {
  std::size_t n, p, q;
};

constexpr ScenarioRow kScenarios[5] = {
    {100, 100, 50}, {100, 200, 200}, {150, 300, 200}, {100, 150, 100}, {100, 100, 50}};

// stream ids under (seed, chain 0)
enum Stream : std::uint64_t { kSupport = 0, kSignal, kDag, kLValues, kDValues, kX, kE, kShuffle };

double uniform(Rng& rng, double a, double b) { return a + (b - a) * rng.uniform(); }

// Uniform on [a1, b1] u [a2, b2], pieces picked by length.
double uniform_union(Rng& rng, double a1, double b1, double a2, double b2) {
  const double l1 = b1 - a1, l2 = b2 - a2;
  const double u = rng.uniform() * (l1 + l2);
  return u < l1 ? a1 + u : a2 + (u - l1);
}

std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t universe, std::size_t count) {
  std::vector<std::size_t> pool(universe);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = i + draw_index(rng, universe - i);
    std::swap(pool[i], pool[r]);
  }
  pool.resize(count);
  return pool;
}

arma::mat mvn_rows(Rng& rng, std::size_t n, const arma::mat& cov) {
  const arma::mat R = arma::chol(cov);  // R^T R = cov
  arma::mat Z(n, cov.n_rows);
  for (arma::uword i = 0; i < Z.n_rows; ++i)
    for (arma::uword c = 0; c < Z.n_cols; ++c) Z(i, c) = draw_normal(rng);
  return Z * R;
}

}  // namespace

void SimSpec::validate() const {
  if (scenario < 1 || scenario > 5) throw Error(ErrorKind::Validation, "scenario must be in 1..5");
  if (scenario != 5 && (setting < 1 || setting > 4)) {
    throw Error(ErrorKind::Validation, "setting must be in 1..4");
  }
  if (dim_n() < 2 || dim_p() < 1 || dim_q() < 1) {
    throw Error(ErrorKind::Validation, "dimensions must be positive (n >= 2)");
  }
}

std::size_t SimSpec::dim_n() const { return n.value_or(kScenarios[scenario - 1].n); }
std::size_t SimSpec::dim_p() const { return p.value_or(kScenarios[scenario - 1].p); }
std::size_t SimSpec::dim_q() const { return q.value_or(kScenarios[scenario - 1].q); }

std::size_t SimSpec::support_count() const {
  switch (scenario) {
    case 3: return dim_p() / 30;
    case 4: return dim_p() / 10;
    case 5: return 20;
    default: return dim_p() / 5;
  }
}

std::size_t SimSpec::edge_count() const {
  switch (scenario) {
    case 3: return dim_q() / 20;
    case 4: return 0;  // banded Sigma0, no DAG draw
    default: return dim_q() / 5;
  }
}

nlohmann::json SimSpec::to_json() const {
  nlohmann::json j = {{"scenario", scenario}, {"setting", setting}, {"seed", seed}};
  if (n) j["n"] = *n;
  if (p) j["p"] = *p;
  if (q) j["q"] = *q;
  return j;
}

SimSpec SimSpec::from_json(const nlohmann::json& j) {
  SimSpec s;
  s.scenario = j.value("scenario", 1);
  s.setting = j.value("setting", 1);
  s.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("n")) s.n = j["n"].get<std::size_t>();
  if (j.contains("p")) s.p = j["p"].get<std::size_t>();
  if (j.contains("q")) s.q = j["q"].get<std::size_t>();
  s.validate();
  return s;
}

std::vector<std::pair<std::size_t, std::size_t>> place_support(Rng& rng, std::size_t p,
                                                               std::size_t q, std::size_t count) {
  if (count > p * q) {
    throw Error(ErrorKind::CountTooLarge, "cannot place " + std::to_string(count) + " cells in a " +
                                              std::to_string(p) + "x" + std::to_string(q) +
                                              " grid");
  }
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(count);
  for (std::size_t idx : sample_distinct(rng, p * q, count)) cells.emplace_back(idx % p, idx / p);
  return cells;
}

double draw_signal(Rng& rng, int setting) {
  switch (setting) {
    case 1: return uniform(rng, 1.5, 3.0);
    case 2: return uniform_union(rng, -3.0, -1.5, 1.5, 3.0);
    case 3: return uniform_union(rng, -1.5, -0.5, 0.5, 1.5);
    case 4: return uniform_union(rng, -1.5, -0.5, 1.5, 3.0);
  }
  throw Error(ErrorKind::Validation, "setting must be in 1..4");
}

arma::mat ar1_correlation(std::size_t p, double rho) {
  arma::mat C(p, p);
  for (arma::uword r = 0; r < p; ++r)
    for (arma::uword s = 0; s < p; ++s)
      C(r, s) = std::pow(rho, std::abs(double(r) - double(s)));
  return C;
}

arma::mat banded_sigma(std::size_t q) {
  arma::mat S(q, q, arma::fill::zeros);
  for (arma::uword i = 0; i < q; ++i) {
    for (arma::uword j = 0; j < q; ++j) {
      const double gap = std::abs(double(i) - double(j));
      if (gap <= 5.0) S(i, j) = 2.0 * (1.0 - gap / 10.0);
    }
  }
  const double lmin = arma::eig_sym(S).min();
  S.diag() += 0.01 - lmin;
  return S;
}

SimData generate(const SimSpec& spec) {
  spec.validate();
  const std::size_t n = spec.dim_n(), p = spec.dim_p(), q = spec.dim_q();
  const Rng root(spec.seed, 0, 0);
  SimData out;
  GroundTruth& truth = out.truth;

  // B0
  truth.B0 = SparseCoefState::zeros(p, q);
  {
    Rng rs = root.stream(kSupport);
    Rng rv = root.stream(kSignal);
    const auto cells = place_support(rs, p, q, spec.support_count());
    for (std::size_t r = 0; r < cells.size(); ++r) {
      double v;
      if (spec.scenario == 5) {
        v = r < 5 ? 1.5 : r < 10 ? 1.0 : uniform(rv, 0.0, 0.3);
      } else {
        v = draw_signal(rv, spec.setting);
      }
      truth.B0.B(cells[r].first, cells[r].second) = v;
      truth.B0.Gamma(cells[r].first, cells[r].second) = 1;
    }
  }

  // Sigma0
  if (spec.scenario == 4) {
    const arma::mat base = banded_sigma(q);
    Rng rp = root.stream(kShuffle);
    truth.permutation.resize(q);
    std::iota(truth.permutation.begin(), truth.permutation.end(), 0);
    for (std::size_t i = q; i > 1; --i) std::swap(truth.permutation[i - 1], truth.permutation[draw_index(rp, i)]);
    const arma::uvec perm = arma::conv_to<arma::uvec>::from(truth.permutation);
    truth.Sigma0 = base.submat(perm, perm);
    truth.L0D0 = mcd_decompose(arma::inv_sympd(truth.Sigma0));
    // true DAG: support of L0 up to round-off
    const double tol = 1e-10 * arma::abs(truth.L0D0.L).max();
    arma::umat adj(q, q, arma::fill::zeros);
    for (arma::uword j = 0; j < q; ++j)
      for (arma::uword i = j + 1; i < q; ++i) adj(i, j) = std::abs(truth.L0D0.L(i, j)) > tol;
    truth.dag0 = OrderedDag::from_adjacency(adj);
  } else {
    Rng rg = root.stream(kDag);
    Rng rl = root.stream(kLValues);
    Rng rd = root.stream(kDValues);
    const std::size_t pairs = q * (q - 1) / 2;
    const std::size_t edges = std::min(spec.edge_count(), pairs);
    // pair index -> (parent i, child j), i > j, enumerated child-major
    std::vector<std::pair<std::size_t, std::size_t>> index;
    index.reserve(pairs);
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t i = j + 1; i < q; ++i) index.emplace_back(i, j);
    truth.dag0 = OrderedDag(q);
    truth.L0D0 = CholeskyPair::identity(q);
    for (std::size_t e : sample_distinct(rg, pairs, edges)) {
      const auto [i, j] = index[e];
      truth.dag0.add_parent(j, i);
      truth.L0D0.L(i, j) = uniform_union(rl, -0.7, -0.3, 0.3, 0.7);
    }
    for (arma::uword j = 0; j < q; ++j) truth.L0D0.d(j) = uniform(rd, 2.0, 5.0);
    truth.Sigma0 = arma::symmatu(arma::inv_sympd(mcd_compose(truth.L0D0)));
  }

  truth.C0 = ar1_correlation(p, 0.6);
  Rng rx = root.stream(kX);
  Rng re = root.stream(kE);
  out.data.X = mvn_rows(rx, n, truth.C0);
  arma::mat E;
  if (spec.scenario == 4) {
    // draw in the banded order, then shuffle the columns
    const arma::mat raw = mvn_rows(re, n, banded_sigma(q));
    E = raw.cols(arma::conv_to<arma::uvec>::from(truth.permutation));
  } else {
    E = mvn_rows(re, n, truth.Sigma0);
  }
  out.data.Y = out.data.X * truth.B0.B + E;
  return out;
}

}  // namespace dagreg
