#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "ura/detector.hpp"
#include "ura/errors.hpp"

using namespace ura;

namespace {

struct Instance {
  Codebook cb;
  GammaVector gamma;
  SampleCovariance cov;
  double sigma2 = 1.0;
};

Instance make_instance(std::uint64_t seed, Index d, Index n, Index active, Index m, double power = 1.0) {
  Instance inst;
  inst.cb = generate_codebook(seed, d, n, false);
  Rng rng = make_rng(seed + 1000);
  inst.gamma = GammaVector::Zero(n);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  for (Index k = 0; k < active; ++k) inst.gamma[idx[static_cast<std::size_t>(k)]] = power;
  inst.cov = oracle::synthetic_covariance(inst.gamma, inst.cb.a, inst.sigma2, m, rng);
  return inst;
}

GammaVector random_gamma(Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  GammaVector g(n);
  for (Index i = 0; i < n; ++i) g[i] = u(rng);
  return g;
}

}  // namespace

TEST_CASE("sample covariance") {
  CHECK(sample_covariance(CMatrix::Zero(3, 4)).sigma_hat.isZero(0.0));

  Rng rng = make_rng(1);
  const CMatrix y1 = complex_normal_matrix(4, 1, rng);
  CHECK((sample_covariance(y1).sigma_hat - y1 * y1.adjoint()).norm() < 1e-14);

  const CMatrix y = complex_normal_matrix(4, 8, rng);
  const SampleCovariance cov = sample_covariance(y);
  CHECK(cov.m == 8);
  CHECK((cov.sigma_hat - oracle::loop_covariance(y)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cov.sigma_hat.isApprox(cov.sigma_hat.adjoint(), 0.0));

  CHECK_THROWS_AS(sample_covariance(CMatrix(4, 0)), InvalidParameter);
}

TEST_CASE("cost") {
  const Codebook cb = generate_codebook(3, 4, 2, false);
  Rng rng = make_rng(2);
  const SampleCovariance cov = sample_covariance(complex_normal_matrix(4, 6, rng));

  SUBCASE("gamma = 0") {
    const double sigma2 = 0.5;
    const double want = 4.0 * std::log(sigma2) + cov.sigma_hat.trace().real() / sigma2;
    CHECK(cost(GammaVector::Zero(2), cb, cov, sigma2) == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("perfect fit") {
    GammaVector g(2);
    g << 0.7, 1.3;
    const SampleCovariance fit{oracle::dense_sigma(g, cb.a, 1.0), 1};
    const double log_det = std::log(fit.sigma_hat.determinant().real());
    CHECK(cost(g, cb, fit, 1.0) == doctest::Approx(log_det + 4.0).epsilon(1e-12));
  }
  SUBCASE("matches the dense oracle") {
    for (int k = 0; k < 20; ++k) {
      const GammaVector g = random_gamma(2, rng);
      CHECK(std::abs(cost(g, cb, cov, 0.8) - oracle::dense_cost(g, cb.a, cov.sigma_hat, 0.8)) < 1e-10);
    }
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(cost(GammaVector::Zero(3), cb, cov, 1.0), InvalidParameter);
    GammaVector neg = GammaVector::Zero(2);
    neg[0] = -1.0;
    CHECK_THROWS_AS(cost(neg, cb, cov, 1.0), InvalidParameter);
  }
}

TEST_CASE("coordinate step") {
  SUBCASE("perfect fit is stationary") {
    const Codebook cb = generate_codebook(4, 6, 5, false);
    Rng rng = make_rng(3);
    const GammaVector g = random_gamma(5, rng);
    const SampleCovariance fit{oracle::dense_sigma(g, cb.a, 1.0), 1};
    const SigmaState state = SigmaState::exact(g, cb, 1.0);
    for (Index i = 0; i < 5; ++i) {
      const auto forms = coordinate_forms(i, state, fit, cb);
      CHECK(std::abs(forms.b - forms.c) < 1e-10 * forms.c);
      CHECK(std::abs(optimal_step(forms, g[i])) < 1e-9);
      CHECK(std::abs(reward(i, optimal_step(forms, g[i]), state, fit, cb)) < 1e-12);
    }
  }
  SUBCASE("clip branch") {
    const Codebook cb = generate_codebook(5, 4, 3, false);
    GammaVector g = GammaVector::Zero(3);
    g[1] = 40.0;
    const SampleCovariance noise{CMatrix::Identity(4, 4), 1};
    const SigmaState state = SigmaState::exact(g, cb, 1.0);
    const double d = cd_step(1, state, noise, cb, g);
    CHECK(g[1] + d >= 0.0);
    CHECK(d == doctest::Approx(-40.0).epsilon(1e-12));
    const SampleCovariance quiet{0.5 * CMatrix::Identity(4, 4), 1};
    CHECK(cd_step(1, state, quiet, cb, g) == -40.0);
  }
  SUBCASE("closed form beats every feasible alternative and matches a line search") {
    const Instance inst = make_instance(6, 8, 12, 3, 40);
    Rng rng = make_rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      GammaVector g = random_gamma(12, rng);
      if (trial % 3 == 0) g.setZero();
      const SigmaState state = SigmaState::exact(g, inst.cb, 1.0);
      const Index i = trial % 12;
      const double d = cd_step(i, state, inst.cov, inst.cb, g);
      auto along = [&](double step) {
        GammaVector h = g;
        h[i] += step;
        return oracle::dense_cost(h, inst.cb.a, inst.cov.sigma_hat, 1.0);
      };
      const double best = along(d);
      std::uniform_real_distribution<double> alt(-g[i], g[i] + 10.0);
      for (int k = 0; k < 100; ++k) CHECK(best <= along(alt(rng)) + 1e-12);
      const double searched = std::max(oracle::golden_section(along, -g[i], g[i] + 50.0), -g[i]);
      CHECK(std::abs(d - searched) < 1e-6 * (1.0 + std::abs(d)));
    }
  }
  SUBCASE("degenerate forms") {
    CHECK_THROWS_AS(optimal_step({0.0, 1.0}, 0.0), NumericalFailure);
    CHECK_THROWS_AS(step_reward({1.0, 1.0}, -1.0), NumericalFailure);
  }
}

TEST_CASE("rank-one update") {
  const Codebook cb = generate_codebook(8, 4, 4, false);
  Rng rng = make_rng(8);

  SUBCASE("zero step") {
    SigmaState state = SigmaState::exact(random_gamma(4, rng), cb, 1.0);
    const CMatrix before = state.sigma_inv;
    apply_rank_one_update(state, 2, 0.0, cb);
    CHECK(state.sigma_inv == before);
  }
  SUBCASE("single update matches direct inversion") {
    for (int trial = 0; trial < 20; ++trial) {
      GammaVector g = random_gamma(4, rng);
      SigmaState state = SigmaState::exact(g, cb, 0.9);
      const Index i = trial % 4;
      const double d = std::uniform_real_distribution<double>(-g[i], 3.0)(rng);
      apply_rank_one_update(state, i, d, cb);
      g[i] += d;
      CHECK((state.sigma_inv - oracle::direct_inverse(g, cb.a, 0.9)).norm() < 1e-10);
      CHECK(state.sigma_inv.isApprox(state.sigma_inv.adjoint(), 0.0));
    }
  }
  SUBCASE("long sequence stays close to direct inversion") {
    const Codebook big = generate_codebook(9, 16, 64, false);
    GammaVector g = GammaVector::Zero(64);
    SigmaState state = SigmaState::initial(16, 1.0);
    std::uniform_int_distribution<Index> pick(0, 63);
    std::uniform_real_distribution<double> step(-1.0, 2.0);
    for (int k = 0; k < 1000; ++k) {
      const Index i = pick(rng);
      const double d = std::max(step(rng), -g[i]);
      apply_rank_one_update(state, i, d, big);
      g[i] += d;
    }
    const CMatrix direct = oracle::direct_inverse(g, big.a, 1.0);
    CHECK((state.sigma_inv - direct).norm() / direct.norm() <= 1e-6);
  }
  SUBCASE("singular update is refused") {
    SigmaState state = SigmaState::initial(4, 1.0);
    const double c = cb.column(0).squaredNorm();
    CHECK_THROWS_AS(apply_rank_one_update(state, 0, -1.0 / c, cb), NumericalFailure);
  }
}

TEST_CASE("reward equals the cost decrease") {
  const Instance inst = make_instance(10, 6, 10, 2, 30);
  Rng rng = make_rng(10);
  CHECK(step_reward({2.0, 3.0}, 0.0) == 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    GammaVector g = random_gamma(10, rng);
    const SigmaState state = SigmaState::exact(g, inst.cb, 1.0);
    const Index i = trial % 10;
    const double d = cd_step(i, state, inst.cov, inst.cb, g);
    const double before = cost(g, inst.cb, inst.cov, 1.0);
    const double r = reward(i, d, state, inst.cov, inst.cb);
    g[i] += d;
    CHECK(std::abs(r - (before - cost(g, inst.cb, inst.cov, 1.0))) < 1e-8);
    CHECK(r >= -1e-12);
  }

  GammaVector g = random_gamma(10, rng);
  const SampleCovariance fit{oracle::dense_sigma(g, inst.cb.a, 1.0), 1};
  const SigmaState state = SigmaState::exact(g, inst.cb, 1.0);
  for (Index i = 0; i < 10; ++i) {
    const double d = cd_step(i, state, fit, inst.cb, g);
    CHECK(std::abs(reward(i, d, state, fit, inst.cb)) < 1e-12);
  }
}

TEST_CASE("BLA selection") {
  SUBCASE("symmetric priors pick each arm half the time") {
    Rng rng = make_rng(11);
    int first = 0;
    const int trials = 10000;
    for (int k = 0; k < trials; ++k) {
      BlaState fresh(4);
      first += bla_select(fresh, rng).arm == 1 ? 1 : 0;
    }
    CHECK(std::abs(first / static_cast<double>(trials) - 0.5) <= 0.05);
  }
  SUBCASE("greedy branch takes the lowest argmax") {
    RVector psi(5);
    psi << 0, 5, 1, 5, -2;
    CHECK(greedy_coordinate(psi) == 1);
    BlaState bla(5);
    bla.psi = psi;
    bla.alpha1 = bla.alpha2 = 1e9;
    Rng rng = make_rng(12);
    const BlaChoice c = bla_select(bla, rng);
    CHECK(c.greedy);
    CHECK(c.coordinate == 1);
  }
  SUBCASE("random branch is uniform") {
    BlaState bla(16);
    bla.beta1 = bla.beta2 = 1e12;
    Rng rng = make_rng(13);
    std::vector<int> hits(16, 0);
    const int calls = 10000;
    for (int k = 0; k < calls; ++k) {
      const BlaChoice c = bla_select(bla, rng);
      REQUIRE_FALSE(c.greedy);
      ++hits[static_cast<std::size_t>(c.coordinate)];
    }
    double chi2 = 0.0;
    const double expected = calls / 16.0;
    for (int h : hits) {
      CHECK(std::abs(h / static_cast<double>(calls) - 1.0 / 16.0) <= 0.03);
      chi2 += (h - expected) * (h - expected) / expected;
    }
    CHECK(chi2 < 37.7);  // 15 degrees of freedom, p = 0.001
  }
  SUBCASE("posterior counts the Bernoulli outcome") {
    BlaState bla(3);
    Rng rng = make_rng(14);
    for (int k = 0; k < 100; ++k) bla_select(bla, rng);
    CHECK(bla.alpha1 + bla.beta1 + bla.alpha2 + bla.beta2 == doctest::Approx(104.0));
  }
}

TEST_CASE("run_detection") {
  DetectorConfig cfg;
  cfg.q_total = 600;
  cfg.q_mod = 64;

  SUBCASE("pure noise never moves off zero") {
    const Codebook cb = generate_codebook(15, 6, 20, false);
    const SampleCovariance noise{CMatrix::Identity(6, 6), 1};
    for (Policy p : {Policy::bla, Policy::random, Policy::cyclic}) {
      cfg.policy = p;
      Rng rng = make_rng(1);
      const auto result = run_detection(noise, cb, cfg, rng);
      CHECK_FALSE(result.failure);
      CHECK(result.gamma.cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("trace shape and monotone cost") {
    const Instance inst = make_instance(16, 12, 40, 4, 64, 2.0);
    for (Policy p : {Policy::bla, Policy::random, Policy::cyclic}) {
      cfg.policy = p;
      Rng rng = make_rng(2);
      DetectionOptions opts;
      opts.truth = &inst.gamma;
      const auto result = run_detection(inst.cov, inst.cb, cfg, rng, opts);
      REQUIRE(result.trace.size() == 600);
      CHECK(result.iterations == 600);
      CHECK((result.gamma.array() >= 0.0).all());
      double prev = cost(GammaVector::Zero(40), inst.cb, inst.cov, 1.0);
      for (const auto& e : result.trace) {
        CHECK(e.cost <= prev + 1e-9 * std::abs(prev));
        prev = e.cost;
      }
      CHECK(result.final_cost == doctest::Approx(cost(result.gamma, inst.cb, inst.cov, 1.0)).epsilon(1e-12));
      CHECK(result.trace.back().e_gamma == doctest::Approx(estimation_error(result.gamma, inst.gamma)));
      if (p == Policy::cyclic)
        for (std::size_t k = 0; k < 80; ++k) CHECK(result.trace[k].coordinate == static_cast<Index>(k % 40));
    }
  }
  SUBCASE("reward matches the exact cost change on every iteration") {
    const Instance inst = make_instance(17, 8, 16, 3, 50, 1.5);
    cfg.q_total = 200;
    cfg.q_mod = 1;
    Rng rng = make_rng(3);
    double prev = cost(GammaVector::Zero(16), inst.cb, inst.cov, 1.0);
    double worst = 0.0;
    DetectionOptions opts;
    opts.observer = [&](const IterationView& v) {
      const double now = cost(v.gamma, inst.cb, inst.cov, 1.0);
      worst = std::max(worst, std::abs(v.entry.reward - (prev - now)));
      prev = now;
    };
    const auto result = run_detection(inst.cov, inst.cb, cfg, rng, opts);
    CHECK_FALSE(result.failure);
    CHECK(worst < 1e-8);
  }
  SUBCASE("deterministic in the rng state") {
    const Instance inst = make_instance(18, 8, 16, 3, 50);
    Rng a = make_rng(4);
    Rng b = make_rng(4);
    const auto ra = run_detection(inst.cov, inst.cb, cfg, a);
    const auto rb = run_detection(inst.cov, inst.cb, cfg, b);
    CHECK(ra.gamma == rb.gamma);
  }
  SUBCASE("no ground truth gives NaN e_gamma") {
    const Instance inst = make_instance(19, 4, 8, 1, 20);
    cfg.q_total = 3;
    Rng rng = make_rng(5);
    const auto result = run_detection(inst.cov, inst.cb, cfg, rng);
    CHECK(std::isnan(result.trace.front().e_gamma));
  }
  SUBCASE("config validation") {
    const Instance inst = make_instance(20, 4, 8, 1, 20);
    Rng rng = make_rng(6);
    cfg.q_mod = 0;
    CHECK_THROWS_AS(run_detection(inst.cov, inst.cb, cfg, rng), InvalidParameter);
    cfg.q_mod = 4;
    cfg.sigma2 = 0.0;
    CHECK_THROWS_AS(run_detection(inst.cov, inst.cb, cfg, rng), InvalidParameter);
  }
  SUBCASE("recovers a clean support") {
    const Instance inst = make_instance(21, 8, 8, 2, 2000, 4.0);
    cfg.q_total = 400;
    cfg.q_mod = 16;
    Rng rng = make_rng(7);
    const auto result = run_detection(inst.cov, inst.cb, cfg, rng);
    std::vector<Index> truth;
    for (Index i = 0; i < 8; ++i)
      if (inst.gamma[i] > 0.0) truth.push_back(i);
    CHECK(threshold_decide(result.gamma, 2.0) == truth);
  }
}

TEST_CASE("threshold and estimation error") {
  CHECK(threshold_decide(GammaVector::Zero(5), 0.0).empty());
  GammaVector g(5);
  g << 0.0, 1.0, 0.0, 3.0, 0.5;
  CHECK(threshold_decide(g, 0.0) == std::vector<Index>{1, 3, 4});
  CHECK_THROWS_AS(threshold_decide(g, -1.0), InvalidParameter);

  Rng rng = make_rng(30);
  const GammaVector r = random_gamma(50, rng);
  std::vector<double> sorted(r.data(), r.data() + r.size());
  std::sort(sorted.begin(), sorted.end());
  std::size_t prev = 51;
  for (double zeta = 0.0; zeta <= 2.0; zeta += 0.05) {
    const std::size_t count = threshold_decide(r, zeta).size();
    const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), zeta));
    CHECK(count == above);
    CHECK(count <= prev);
    prev = count;
  }

  CHECK(estimation_error(g, g) == 0.0);
  GammaVector e = g;
  e[2] += 1.0;
  CHECK(estimation_error(e, g) == 1.0);
  const GammaVector s = random_gamma(50, rng);
  double acc = 0.0;
  for (Index i = 0; i < 50; ++i) acc += (r[i] - s[i]) * (r[i] - s[i]);
  CHECK(std::abs(estimation_error(r, s) - std::sqrt(acc)) < 1e-12);
}
