#include <doctest.h>

#include "dagreg/tes_sampler.hpp"
#include "test_support.hpp"

using namespace dagreg;

namespace {

RegressionData make_data(std::uint64_t seed, arma::uword n, arma::uword p, arma::uword q,
                         double noise = 1.0) {
  Rng rng(seed);
  RegressionData d;
  d.X = testing::normal_mat(rng, n, p);
  arma::mat B(p, q, arma::fill::zeros);
  B(0, 0) = 2.0;
  if (p > 2) B(2, 0) = -1.0;
  if (q > 1) B(1, 1) = 1.5;
  d.Y = d.X * B + noise * testing::normal_mat(rng, n, q);
  return d;
}

// Oracle: sigma^2 from an explicit projector, prior from binomial coefficients.
double projector_log_post(const RegressionData& d, std::size_t j,
                          const std::vector<std::size_t>& g, const TesConfig& cfg) {
  const double n = double(d.n()), p = double(d.p()), s = double(g.size());
  const arma::vec y = d.Y.col(j);
  arma::mat P(d.n(), d.n(), arma::fill::zeros);
  if (!g.empty()) {
    const arma::mat Xg = d.X.cols(arma::conv_to<arma::uvec>::from(g));
    P = Xg * arma::inv(Xg.t() * Xg) * Xg.t();
  }
  const double sigma = arma::as_scalar(y.t() * (arma::eye(d.n(), d.n()) - P) * y) / n;
  const double log_choose = std::lgamma(p + 1) - std::lgamma(s + 1) - std::lgamma(p - s + 1);
  return -log_choose - cfg.c1 * s * std::log(p) - 0.5 * s * std::log(1.0 + cfg.alpha / cfg.kappa) -
         0.5 * (cfg.alpha * n + cfg.nu0) * std::log(sigma);
}

}  // namespace

TEST_CASE("empty model posterior") {
  const RegressionData d = make_data(1, 20, 3, 1);
  const TesConfig cfg = TesConfig::defaults(1);
  const TesGrams g(d);
  const double yty = arma::dot(d.Y, d.Y);
  const GammaEvaluation ev = evaluate_gamma(g, 0, {}, cfg, 3);
  CHECK(ev.status == GammaStatus::Ok);
  CHECK(ev.sigma_sq_hat == doctest::Approx(yty / 20.0));
  CHECK(ev.log_post == doctest::Approx(-0.5 * (cfg.alpha * 20.0) * std::log(yty / 20.0)));
}

TEST_CASE("noiseless input hits the variance floor") {
  RegressionData d;
  d.X = {{1.0, 0.5}, {2.0, -1.0}, {0.0, 3.0}, {-1.0, 1.0}};
  d.Y = d.X.col(0);
  const TesConfig cfg = TesConfig::defaults(1);
  const TesGrams g(d);
  const double yty = arma::dot(d.Y, d.Y);
  const GammaEvaluation ev = evaluate_gamma(g, 0, {0}, cfg, 2);
  CHECK(ev.status == GammaStatus::Ok);
  CHECK(ev.sigma_sq_hat == doctest::Approx(1e-12 * yty / 4.0));
  CHECK(std::isfinite(ev.log_post));
  Rng rng(1);
  CHECK(testing::throws_kind(ErrorKind::DegenerateVariance, [&] { sample_sigma_b(rng, g, 0, {0}, cfg); }));
}

TEST_CASE("log_post_gamma matches the projector oracle on every subset") {
  for (std::size_t p : {3u, 6u}) {
    const RegressionData d = make_data(7 + p, 30, p, 2);
    TesConfig cfg = TesConfig::defaults(2);
    cfg.nu0 = 1.5;
    const TesGrams g(d);
    for (std::size_t j = 0; j < 2; ++j) {
      std::vector<double> ours, oracle;
      for (const auto& s : testing::all_subsets(0, p)) {
        ours.push_back(log_post_gamma(g, j, s, cfg));
        oracle.push_back(projector_log_post(d, j, s, cfg));
        CHECK(ours.back() == doctest::Approx(oracle.back()).epsilon(1e-10));
      }
      const auto a = testing::normalise(ours), b = testing::normalise(oracle);
      double worst = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
      CHECK(worst <= 1e-10);
    }
  }
}

TEST_CASE("rank-deficient and capped models get zero mass") {
  RegressionData d = make_data(3, 20, 3, 1);
  d.X.col(2) = d.X.col(1);
  TesConfig cfg = TesConfig::defaults(1);
  const TesGrams g(d);
  const GammaEvaluation rd = evaluate_gamma(g, 0, {1, 2}, cfg, 3);
  CHECK(rd.status == GammaStatus::RankDeficient);
  CHECK(std::isinf(rd.log_post));
  const GammaEvaluation cap = evaluate_gamma(g, 0, {0, 1}, cfg, 1);
  CHECK(cap.status == GammaStatus::CapExceeded);
  CHECK(std::isinf(cap.log_post));
  CHECK(testing::throws_kind(ErrorKind::RankDeficient, [&] {
    compute_B_hat(d, arma::umat(arma::uvec{0, 1, 1}));
  }));
}

TEST_CASE("effective cap") {
  TesConfig cfg = TesConfig::defaults(2);
  CHECK(cfg.effective_cap(100, 50) == 50);
  CHECK(cfg.effective_cap(20, 50) == 19);
  cfg.cap = 5;
  CHECK(cfg.effective_cap(100, 50) == 5);
  cfg.theory_cap = true;
  cfg.c3 = 0.5;
  CHECK(cfg.effective_cap(100, 50) == std::size_t(std::floor(50.0 / std::log(50.0))));
}

TEST_CASE("gamma MH at the cap only deletes") {
  const RegressionData d = make_data(2, 30, 5, 1);
  TesConfig cfg = TesConfig::defaults(1);
  cfg.cap = 2;
  const TesGrams g(d);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    GammaChainState st = init_gamma_state(g, 0, {0, 3}, cfg);
    mh_gamma_step(st, g, 0, cfg, rng);
    CHECK(st.gamma.size() <= 2);
    CHECK(st.proposals == 1);
  }
}

TEST_CASE("gamma MH matches enumeration for p = 5") {
  const RegressionData d = make_data(12, 40, 5, 1, 2.0);
  const TesConfig cfg = TesConfig::defaults(1);
  const TesGrams g(d);
  std::vector<double> logw;
  for (const auto& s : testing::all_subsets(0, 5)) logw.push_back(log_post_gamma(g, 0, s, cfg));
  const auto exact = testing::normalise(logw);
  GammaChainState st = init_gamma_state(g, 0, {}, cfg);
  Rng rng(8);
  std::vector<double> freq(32, 0.0);
  const int N = 100000;
  for (int it = 0; it < N; ++it) {
    mh_gamma_step(st, g, 0, cfg, rng);
    freq[testing::subset_mask(st.gamma, 0)] += 1.0 / N;
  }
  CHECK(testing::total_variation(freq, exact) <= 0.05);
}

TEST_CASE("sigma and b draws") {
  const RegressionData d = make_data(5, 40, 4, 1);
  const TesConfig cfg = TesConfig::defaults(1);
  const TesGrams g(d);
  const double n = 40.0;
  Rng rng(6);

  // empty model: only sigma^2
  {
    const double yty = arma::dot(d.Y, d.Y);
    const double shape = cfg.alpha * n / 2.0, rate = cfg.alpha * yty / 2.0;
    double sum = 0.0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
      const SigmaBDraw draw = sample_sigma_b(rng, g, 0, {}, cfg);
      CHECK(draw.b.n_elem == 0);
      sum += draw.sigma_sq;
    }
    CHECK(sum / N == doctest::Approx(rate / (shape - 1.0)).epsilon(0.01));
  }

  const std::vector<std::size_t> gam{0, 2};
  const arma::mat Xg = d.X.cols(arma::uvec{0, 2});
  const arma::mat G = Xg.t() * Xg;
  const arma::vec bhat = arma::solve(G, Xg.t() * d.Y.col(0));
  const double sig_hat = arma::dot(d.Y.col(0) - Xg * bhat, d.Y.col(0) - Xg * bhat) / n;
  const double shape = (cfg.alpha * n + cfg.nu0) / 2.0, rate = cfg.alpha * n * sig_hat / 2.0;
  const arma::mat cov_expect = rate / (shape - 1.0) / (cfg.alpha + cfg.kappa) * arma::inv(G);

  const int N = 100000;
  arma::mat draws(2, N);
  for (int i = 0; i < N; ++i) draws.col(i) = sample_sigma_b(rng, g, 0, gam, cfg).b;
  const arma::vec mean = arma::mean(draws, 1);
  const arma::mat cov = arma::cov(draws.t());
  for (int r = 0; r < 2; ++r) {
    CHECK(std::abs(mean(r) - bhat(r)) <= 4.0 * std::sqrt(cov_expect(r, r) / N));
    CHECK(cov(r, r) == doctest::Approx(cov_expect(r, r)).epsilon(0.05));
  }
}

TEST_CASE("compute_B_hat") {
  const RegressionData d = make_data(9, 20, 5, 2);
  CHECK(arma::accu(arma::abs(compute_B_hat(d, arma::umat(5, 2, arma::fill::zeros)).B)) == 0.0);

  // noiseless fit recovers B0
  RegressionData exact = d;
  arma::mat B0(5, 2, arma::fill::zeros);
  B0(0, 0) = 2.0;
  B0(3, 0) = -0.7;
  B0(1, 1) = 1.1;
  exact.Y = exact.X * B0;
  const SparseCoefState fit = compute_B_hat(exact, arma::conv_to<arma::umat>::from(B0 != 0.0));
  CHECK(arma::abs(fit.B - B0).max() <= 1e-10);
  CHECK(fit.consistent());

  // normal equations oracle
  arma::umat gh(5, 2, arma::fill::zeros);
  gh(0, 0) = gh(2, 0) = gh(4, 0) = 1;
  const SparseCoefState ls = compute_B_hat(d, gh);
  const arma::mat Xg = d.X.cols(arma::uvec{0, 2, 4});
  const arma::vec ne = arma::inv(Xg.t() * Xg) * (Xg.t() * d.Y.col(0));
  CHECK(std::abs(ls.B(0, 0) - ne(0)) <= 1e-10);
  CHECK(std::abs(ls.B(2, 0) - ne(1)) <= 1e-10);
  CHECK(std::abs(ls.B(4, 0) - ne(2)) <= 1e-10);
  CHECK(ls.B(1, 0) == 0.0);
}

TEST_CASE("compute_error_estimate") {
  RegressionData d;
  d.X = arma::vec{1.0, 2.0, 3.0};
  d.Y = {{1.0, 0.0}, {0.0, 2.0}, {1.0, 1.0}};
  const ErrorEstimate e0 = compute_error_estimate(d, arma::zeros(1, 2));
  CHECK(arma::approx_equal(e0.Ehat, d.Y, "absdiff", 0.0));
  // hand computation: E^T E / 3 = [[2, 1], [1, 5]] / 3
  const arma::mat expect = arma::mat{{2.0, 1.0}, {1.0, 5.0}} / 3.0;
  CHECK(arma::approx_equal(e0.Shat, expect, "absdiff", 1e-15));

  RegressionData exact = d;
  exact.Y = d.X * arma::mat{{1.0, -2.0}};
  const ErrorEstimate e1 = compute_error_estimate(exact, arma::mat{{1.0, -2.0}});
  CHECK(arma::abs(e1.Shat).max() <= 1e-15);
}

TEST_CASE("step-2 DAG chain matches enumeration for q = 3") {
  Rng rng(31);
  ErrorEstimate est;
  est.Ehat = testing::normal_mat(rng, 30, 3);
  est.Ehat.col(0) += 0.7 * est.Ehat.col(1) - 0.4 * est.Ehat.col(2);
  est.Shat = est.Ehat.t() * est.Ehat / 30.0;
  TesConfig cfg = TesConfig::defaults(3);
  cfg.dag.eta2 = 0.5;
  cfg.iterations = 200000;
  cfg.burn_in = 0;
  const DagChainResult r = tes_dag_run(est, cfg);
  const arma::mat S = scatter_tilde(est, cfg.dag.U);
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<double> logw;
    for (const auto& pa : testing::all_subsets(j + 1, 2 - j)) {
      OrderedDag dag(3);
      dag.set_parents(j, pa);
      logw.push_back(log_parent_set_posterior(S, cfg.dag, dag, j, 30));
    }
    const auto exact = testing::normalise(logw);
    std::vector<double> freq(exact.size(), 0.0);
    for (const auto& draw : r.chain.draws) {
      freq[testing::subset_mask(draw.dag->parents(j), j + 1)] += 1.0 / r.chain.draws.size();
    }
    CHECK(testing::total_variation(freq, exact) <= 0.05);
  }
  CHECK(r.chain.kind == ChainKind::TesStep2);
}

TEST_CASE("closed-form L and D on the selected DAG") {
  Rng rng(2);
  ErrorEstimate est;
  est.Ehat = testing::normal_mat(rng, 20, 2);
  est.Shat = est.Ehat.t() * est.Ehat / 20.0;
  const TesConfig cfg = TesConfig::defaults(2);
  const CholeskyPair none = tes_estimate_LD(est, OrderedDag(2), cfg);
  CHECK(arma::approx_equal(none.L, arma::eye(2, 2), "absdiff", 0.0));

  OrderedDag dag(2);
  dag.add_parent(0, 1);
  const CholeskyPair one = tes_estimate_LD(est, dag, cfg);
  const arma::mat St = (20.0 * est.Shat + arma::eye(2, 2)) / 20.0;
  CHECK(one.L(1, 0) == doctest::Approx(-St(1, 0) / St(1, 1)).epsilon(1e-12));
  const double schur = St(0, 0) - St(1, 0) * St(1, 0) / St(1, 1);
  const double shape = (10.0 + 20.0) / 2.0 - 1.0, rate = 20.0 * schur / 2.0;
  CHECK(one.d(0) == doctest::Approx(rate / (shape + 1.0)).epsilon(1e-12));

  ErrorEstimate diag;
  diag.Ehat = arma::zeros(20, 2);
  diag.Shat = arma::diagmat(arma::vec{2.0, 3.0});
  CHECK(tes_estimate_LD(diag, dag, cfg).L(1, 0) == 0.0);
}

TEST_CASE("tes_run end to end") {
  const RegressionData d = make_data(44, 60, 8, 3);
  TesConfig cfg = TesConfig::defaults(3);
  cfg.iterations = 600;
  cfg.burn_in = 200;
  cfg.thin = 2;
  const TesResult a = tes_run(d, cfg);
  CHECK(a.gamma_chain.draws.size() == 200);
  CHECK(a.dag_chain.draws.size() == 200);
  CHECK(a.gamma_hat(0, 0) == 1);
  CHECK(a.gamma_hat(1, 1) == 1);
  CHECK(a.B_hat.consistent());
  CHECK(a.LD_hat.supported_by(a.dag_hat));
  for (const auto& draw : a.gamma_chain.draws) {
    std::vector<std::size_t> size(3, 0);
    for (const auto& c : draw.coef) ++size[c.col];
    for (auto s : size) CHECK(s <= cfg.effective_cap(60, 8));
  }

  const TesResult b = tes_run(d, cfg);
  CHECK(a.gamma_chain.draws == b.gamma_chain.draws);
  CHECK(a.dag_chain.draws == b.dag_chain.draws);
  cfg.workers = 3;
  const TesResult c = tes_run(d, cfg);
  CHECK(a.gamma_chain.draws == c.gamma_chain.draws);
  CHECK(arma::approx_equal(a.LD_hat.L, c.LD_hat.L, "absdiff", 0.0));

  cfg.sample_coefficients = true;
  const TesResult s = tes_run(d, cfg);
  CHECK(s.gamma_chain.has_coef_values);
  // coefficient draws use their own streams, so the support path is unchanged
  CHECK(arma::approx_equal(s.gamma_hat, a.gamma_hat, "absdiff", 0));
  for (std::size_t t = 0; t < s.gamma_chain.draws.size(); ++t) {
    const auto& x = s.gamma_chain.draws[t].coef;
    const auto& y = a.gamma_chain.draws[t].coef;
    REQUIRE(x.size() == y.size());
    for (std::size_t r = 0; r < x.size(); ++r) CHECK((x[r].row == y[r].row && x[r].col == y[r].col));
  }
}

TEST_CASE("tes config validation") {
  const RegressionData d = make_data(1, 20, 3, 2);
  TesConfig cfg = TesConfig::defaults(2);
  cfg.alpha = 1.0;
  CHECK(testing::throws_kind(ErrorKind::Validation, [&] { tes_run(d, cfg); }));
  cfg = TesConfig::defaults(2);
  cfg.c1 = 1.0;
  CHECK(testing::throws_kind(ErrorKind::Validation, [&] { tes_run(d, cfg); }));
  cfg = TesConfig::defaults(2);
  cfg.warm_start_gamma = arma::umat(2, 2, arma::fill::zeros);
  CHECK(testing::throws_kind(ErrorKind::Validation, [&] { tes_run(d, cfg); }));
}
