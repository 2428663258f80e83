#include <doctest.h>

#include "dagreg/dag_wishart.hpp"
#include "test_support.hpp"

using namespace dagreg;

TEST_CASE("log_zeta_j closed-form examples") {
  OrderedDag one(1);
  CHECK(log_zeta_j(arma::mat(1, 1, arma::fill::ones), 10.0, one, 0) == doctest::Approx(std::log(96.0)).epsilon(1e-14));
  CHECK(log_zeta_j(arma::mat(1, 1, arma::fill::value(std::exp(1.0))), 10.0, one, 0) ==
        doctest::Approx(std::log(96.0) - 4.0).epsilon(1e-14));

  OrderedDag two(2);
  two.add_parent(0, 1);
  const double expect = std::lgamma(4.0) + 4.5 * std::log(2.0) + 0.5 * std::log(M_PI);
  CHECK(log_zeta_j(arma::eye(2, 2), 11.0, two, 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("log_zeta_j rejects phi - nu <= 2") {
  OrderedDag two(2);
  two.add_parent(0, 1);
  CHECK(testing::throws_kind(ErrorKind::InvalidShape, [&] { log_zeta_j(arma::eye(2, 2), 3.0, two, 0); }));
}

TEST_CASE("log_prior_dag examples") {
  DagWishartParams p = DagWishartParams::defaults(3);
  p.eta2 = 0.5;
  CHECK(log_prior_dag(OrderedDag(3), p) == doctest::Approx(3.0 * std::log(0.5)));
  OrderedDag full(3);
  full.set_parents(0, {1, 2});
  full.set_parents(1, {2});
  CHECK(log_prior_dag(full, p) == doctest::Approx(3.0 * std::log(0.5)));

  p.eta2 = 0.1;
  OrderedDag d(3);
  d.add_parent(0, 2);
  CHECK(log_prior_dag(d, p) == doctest::Approx(std::log(0.1) + 2.0 * std::log(0.9)));
}

TEST_CASE("log_prior_dag is a proper distribution over q = 3 DAGs") {
  DagWishartParams p = DagWishartParams::defaults(3);
  p.eta2 = 0.3;
  double total = 0.0;
  for (const auto& pa0 : testing::all_subsets(1, 2)) {
    for (const auto& pa1 : testing::all_subsets(2, 1)) {
      OrderedDag d(3, {pa0, pa1, {}});
      total += std::exp(log_prior_dag(d, p));
    }
  }
  CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("log_prior_dag caps") {
  DagWishartParams p = DagWishartParams::defaults(3);
  p.max_parents = std::vector<std::size_t>{1, 1, 0};
  OrderedDag d(3);
  d.set_parents(0, {1, 2});
  CHECK(testing::throws_kind(ErrorKind::CapExceeded, [&] { log_prior_dag(d, p); }));
  const arma::mat S = arma::eye(3, 3);
  CHECK(std::isinf(log_parent_set_posterior(S, p, d, 0, 10)));
}

TEST_CASE("parent-set posterior is the zeta ratio plus the edge term") {
  Rng rng(9);
  const arma::mat S = testing::random_spd(rng, 4) / 4.0;
  DagWishartParams p = DagWishartParams::defaults(4);
  OrderedDag d(4);
  d.set_parents(1, {2, 3});
  const std::size_t n = 30;
  const double expect = log_zeta_j(double(n) * S, p.phi(d, 1) + double(n), d, 1) -
                        log_zeta_j(p.U, p.phi(d, 1), d, 1) + 2.0 * std::log(p.eta2) +
                        0.0 * std::log1p(-p.eta2);
  CHECK(log_parent_set_posterior(S, p, d, 1, n) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("d_j conditional, mode and mean") {
  OrderedDag d(3);
  const arma::mat A = arma::eye(3, 3);
  const InverseGammaParams ig = d_j_conditional(A, d, 0, 100, 10.0);
  CHECK(ig.shape == 54.0);
  CHECK(ig.rate == 50.0);
  CHECK(posterior_mode_d_j(A, d, 0, 100, 10.0) == doctest::Approx(50.0 / 55.0));
  CHECK(posterior_mode_d_j(2.0 * A, d, 0, 100, 10.0) ==
        doctest::Approx(2.0 * posterior_mode_d_j(A, d, 0, 100, 10.0)));
  CHECK(posterior_mode_d_j(A, d, 0, 100, 10.0) < ig.rate / (ig.shape - 1.0));
  // last vertex: no parents, same form
  const InverseGammaParams last = d_j_conditional(A, d, 2, 100, 10.0);
  CHECK(last.shape == 54.0);

  // grid maximisation of the log density agrees with the analytic mode
  double best = 0.0, best_val = -INFINITY;
  for (double x = 0.5; x < 1.5; x += 1e-5) {
    const double v = -(ig.shape + 1.0) * std::log(x) - ig.rate / x;
    if (v > best_val) best_val = v, best = x;
  }
  CHECK(best == doctest::Approx(50.0 / 55.0).epsilon(1e-4));

  Rng rng(1);
  double sum = 0.0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) sum += sample_d_j(rng, A, d, 0, 100, 10.0);
  CHECK(sum / N == doctest::Approx(50.0 / 53.0).epsilon(0.01));
}

TEST_CASE("L column mean and sampling") {
  OrderedDag none(2);
  Rng rng(4);
  CHECK(sample_L_column(rng, arma::eye(2, 2), 1.0, none, 0, 5.0).n_elem == 0);
  CHECK(posterior_mean_L_column(arma::eye(2, 2), none, 0).n_elem == 0);

  OrderedDag one(2);
  one.add_parent(0, 1);
  const arma::mat A1 = {{3.0, 1.0}, {1.0, 2.0}};
  CHECK(posterior_mean_L_column(A1, one, 0)(0) == doctest::Approx(-0.5));

  OrderedDag two(3);
  two.set_parents(0, {1, 2});
  const arma::mat A2 = {{10.0, 2.0, -1.0}, {2.0, 4.0, 0.0}, {-1.0, 0.0, 2.0}};
  const arma::vec m = posterior_mean_L_column(A2, two, 0);
  CHECK(m(0) == doctest::Approx(-0.5));
  CHECK(m(1) == doctest::Approx(0.5));
  CHECK(arma::approx_equal(posterior_mean_L_column(arma::diagmat(arma::vec{1, 2, 3}), two, 0),
                           arma::zeros(2), "absdiff", 0.0));

  // A = I: mean 0, covariance d / n I
  const double n = 4.0;
  const int N = 100000;
  arma::vec sum(2, arma::fill::zeros), sq(2, arma::fill::zeros);
  for (int i = 0; i < N; ++i) {
    const arma::vec x = sample_L_column(rng, arma::eye(3, 3), 1.0, two, 0, n);
    sum += x;
    sq += x % x;
  }
  const double sd = std::sqrt(1.0 / n);
  for (int r = 0; r < 2; ++r) {
    CHECK(std::abs(sum(r) / N) < 4.0 * sd / std::sqrt(double(N)));
    CHECK(sq(r) / N == doctest::Approx(1.0 / n).epsilon(0.02));
  }
}

TEST_CASE("DagWishartParams validation") {
  DagWishartParams p = DagWishartParams::defaults(3);
  CHECK(p.eta2 == doctest::Approx(1.0 / 3.0));
  CHECK(p.shape_offset == 10.0);
  CHECK_NOTHROW(p.validate(3));
  CHECK(testing::throws_kind(ErrorKind::Validation, [&] { p.validate(4); }));
  p.shape_offset = 2.0;
  CHECK(testing::throws_kind(ErrorKind::Validation, [&] { p.validate(3); }));
  p.shape_offset = 10.0;
  p.eta2 = 1.0;
  CHECK(testing::throws_kind(ErrorKind::Validation, [&] { p.validate(3); }));
}
