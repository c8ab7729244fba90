#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ccf/errors.hpp"
#include "ccf/monte_carlo.hpp"
#include "ccf/numerics.hpp"
#include "ccf/reference_methods.hpp"

using namespace ccf;

namespace {

ClusteredDataset regression_data(std::uint64_t seed, std::size_t G, std::size_t k) {
  rng::CounterStream s(seed, 0);
  std::vector<ClusterBlock> blocks;
  for (std::size_t g = 0; g < G; ++g) {
    const auto n = static_cast<Eigen::Index>(2 + s.below(3));
    ClusterBlock b{std::to_string(g), Eigen::VectorXd(n), Eigen::MatrixXd(n, static_cast<Eigen::Index>(k))};
    const double shock = s.exponential() - 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      b.x(i, 0) = 1.0;
      for (Eigen::Index j = 1; j < b.x.cols(); ++j) b.x(i, j) = s.uniform(-1, 2);
      b.y(i) = 0.5 * b.x(i, 0) + shock + (s.exponential() - 1.0);
    }
    blocks.push_back(std::move(b));
  }
  return ClusteredDataset(std::move(blocks));
}

// Restricted least squares through the bordered (KKT) system.
Eigen::VectorXd kkt_restricted(const ClusteredDataset& d, const Hypothesis& h) {
  const auto k = static_cast<Eigen::Index>(d.k());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  for (const auto& c : d.clusters()) {
    a.topLeftCorner(k, k) += 2.0 * c.x.transpose() * c.x;
    rhs.head(k) += 2.0 * c.x.transpose() * c.y;
  }
  a.block(0, k, k, 1) = h.lambda;
  a.block(k, 0, 1, k) = h.lambda.transpose();
  rhs(k) = h.c0;
  return a.fullPivLu().solve(rhs).head(k);
}

}  // namespace

TEST_CASE("Student critical values") {
  const std::pair<std::size_t, double> table[] = {{10, 2.385}, {25, 2.106}, {50, 2.030},
                                                  {75, 2.006}, {100, 1.994}, {200, 1.977}};
  for (const auto& [G, expected] : table) {
    CHECK(std::abs(student_cv(G, G, 1, StudentVariant::d1, 0.05) - expected) <= 1e-3);
    CHECK(student_cv(G, G, 1, StudentVariant::d2, 0.05) == doctest::Approx(student_cv(G, G, 1, StudentVariant::d1, 0.05)));
  }
  CHECK(student_cv(10, 10, 1, StudentVariant::d1, 0.05) ==
        doctest::Approx(std::sqrt(10.0 / 9.0) * student_t_quantile(0.975, 9)).epsilon(1e-14));
  for (std::size_t N : {12, 40, 300}) {
    for (std::size_t G : {3, 11, 12}) {
      CHECK(student_adjustment(G, N, 1, StudentVariant::d1) == doctest::Approx(student_adjustment(G, N, 1, StudentVariant::d2)));
    }
  }
  CHECK(student_adjustment(10, 30, 3, StudentVariant::d3) == doctest::Approx(29.0 * 10 / (17.0 * 9)));
  CHECK_THROWS_AS(student_adjustment(10, 12, 2, StudentVariant::d3), DomainError);
  CHECK_THROWS_AS(student_adjustment(10, 2, 2, StudentVariant::d1), DomainError);

  rng::CounterStream s(1, 0);
  const auto sample = gen_design2(10, s);
  const auto f = fit(sample.data, sample.hypothesis);
  const auto r = evaluate_method(Method::student_d3, sample.data, f, {});
  CHECK_FALSE(r.applicable);
  CHECK_FALSE(r.note.empty());
}

TEST_CASE("method names") {
  CHECK(parse_methods("analytic,normal,analytic,student") ==
        std::vector<Method>{Method::analytic, Method::normal, Method::student_d1});
  CHECK_THROWS_AS(parse_methods("normal,bogus"), ConfigError);
  CHECK_THROWS_AS(parse_methods(""), ConfigError);
  CHECK(is_bootstrap(Method::wcb));
  CHECK_FALSE(is_bootstrap(Method::analytic));
}

TEST_CASE("bootstrap quantile rule") {
  CHECK(bootstrap_rank(999, 0.05) == 950);
  CHECK(bootstrap_rank(399, 0.05) == 380);
  CHECK(bootstrap_rank(1, 0.05) == 2);

  const auto d = regression_data(3, 8, 2);
  const Hypothesis h(Eigen::Vector2d(0, 1), 0.0, 0.05);
  const auto f = fit(d, h);
  const auto one = pairs_bootstrap_cv(d, f, 1, 5);
  CHECK(std::isinf(one.cv));
  CHECK(one.rank_beyond_draws);
  const auto wone = wild_cluster_bootstrap_cv(d, h, 1, 5);
  CHECK(std::isinf(wone.cv));

  const auto many = pairs_bootstrap_cv(d, f, 199, 5);
  std::vector<double> sorted = many.abs_t;
  std::sort(sorted.begin(), sorted.end());
  CHECK(many.cv == sorted[189]);
}

TEST_CASE("pairs bootstrap matches a naive refit") {
  const auto d = regression_data(17, 9, 2);
  const Hypothesis h(Eigen::Vector2d(0.2, 1), 0.1, 0.05);
  const auto f = fit(d, h);
  const PairsBootstrap boot(d, f);
  rng::CounterStream s(4, 0);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<std::size_t> picks(d.G());
    for (auto& p : picks) p = s.below(d.G());
    std::vector<ClusterBlock> blocks;
    for (std::size_t p : picks) blocks.push_back(d.cluster(p));
    const ClusteredDataset star(blocks);
    double naive;
    try {
      naive = std::abs(fit(star, Hypothesis(h.lambda, f.estimate, h.alpha)).t_stat);
    } catch (const NumericalError&) {
      continue;
    }
    const auto draw = boot.evaluate(picks);
    CHECK(draw.abs_t == doctest::Approx(naive).epsilon(1e-9));
    CHECK_FALSE(draw.used_pinv);
  }
}

TEST_CASE("pairs bootstrap degenerate paths") {
  SUBCASE("only untreated clusters drawn: pseudo-inverse") {
    rng::CounterStream s(2, 0);
    const auto sample = gen_design3(10, s);
    const auto f = fit(sample.data, sample.hypothesis);
    const PairsBootstrap boot(sample.data, f);
    const std::vector<std::size_t> picks{5, 6, 7, 8, 9, 5, 6, 7, 8, 9};
    const auto draw = boot.evaluate(picks);
    CHECK(draw.used_pinv);
    CHECK_FALSE(std::isnan(draw.abs_t));

    const auto res = pairs_bootstrap_cv(sample.data, f, 999, 11);
    CHECK(res.pinv_draws > 0);
    CHECK_FALSE(std::isnan(res.cv));
  }
  SUBCASE("identical clusters: zero variance is conservative") {
    rng::CounterStream s(3, 0);
    const auto sample = gen_design2(6, s);
    const auto f = fit(sample.data, sample.hypothesis);
    const PairsBootstrap boot(sample.data, f);
    const std::vector<std::size_t> same(6, 2);
    const auto draw = boot.evaluate(same);
    CHECK(draw.degenerate);
    CHECK(std::isinf(draw.abs_t));
  }
}

TEST_CASE("restricted least squares") {
  const auto d = regression_data(5, 12, 3);
  const Hypothesis h(Eigen::Vector3d(1.0, -2.0, 0.5), 0.7, 0.05);
  const Eigen::VectorXd rls = restricted_least_squares(d, h);
  CHECK(h.lambda.dot(rls) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK((rls - kkt_restricted(d, h)).norm() <= 1e-10);
}

TEST_CASE("wild cluster bootstrap") {
  const auto d = regression_data(23, 11, 2);
  const Hypothesis h(Eigen::Vector2d(0, 1), 0.0, 0.05);
  const WildClusterBootstrap boot(d, h);
  const Eigen::VectorXd bt = kkt_restricted(d, h);
  CHECK((boot.restricted_beta() - bt).norm() <= 1e-10);

  rng::CounterStream s(9, 0);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<int> v(d.G());
    for (auto& x : v) x = s.below(2) ? 1 : -1;
    std::vector<ClusterBlock> blocks = d.clusters();
    for (std::size_t g = 0; g < d.G(); ++g) {
      const Eigen::VectorXd fitted = d.cluster(g).x * bt;
      blocks[g].y = fitted + v[g] * (d.cluster(g).y - fitted);
    }
    const double naive = std::abs(fit(ClusteredDataset(blocks), h).t_stat);
    const auto draw = boot.evaluate(v);
    CHECK(draw.abs_t == doctest::Approx(naive).epsilon(1e-9));

    std::vector<int> flipped(v);
    for (auto& x : flipped) x = -x;
    CHECK(boot.evaluate(flipped).abs_t == doctest::Approx(draw.abs_t).epsilon(1e-12));
  }

  SUBCASE("data that satisfy the null exactly") {
    std::vector<ClusterBlock> blocks = d.clusters();
    for (auto& b : blocks) b.y = b.x * Eigen::Vector2d(1.5, 0.0);
    const ClusteredDataset exact(blocks);
    const auto r = wild_cluster_bootstrap_cv(exact, h, 99, 3);
    CHECK(r.cv == 0.0);
    CHECK(r.degenerate_draws == 99);
  }
}

TEST_CASE("bootstrap critical values do not depend on the seed beyond noise") {
  const auto d = regression_data(41, 20, 2);
  const Hypothesis h(Eigen::Vector2d(0, 1), 0.0, 0.05);
  const auto f = fit(d, h);
  const std::size_t B = 9999;

  auto check_pair = [&](const BootstrapResult& a, const BootstrapResult& b) {
    // Quantile SE from the binomial count and a difference-quotient density.
    std::vector<double> s = a.abs_t;
    std::sort(s.begin(), s.end());
    const double lo = s[static_cast<std::size_t>(0.94 * B)], hi = s[static_cast<std::size_t>(0.96 * B)];
    const double density = 0.02 / (hi - lo);
    const double se = std::sqrt(0.95 * 0.05 / B) / density;
    CHECK(std::abs(a.cv - b.cv) <= 3.0 * std::sqrt(2.0) * se);
  };
  check_pair(pairs_bootstrap_cv(d, f, B, 1), pairs_bootstrap_cv(d, f, B, 2));
  // 2^20 sign patterns, so B = 9999 draws are far from exhausting them.
  check_pair(wild_cluster_bootstrap_cv(d, h, B, 1), wild_cluster_bootstrap_cv(d, h, B, 2));
}

TEST_CASE("evaluate_method reports consistent decisions") {
  const auto d = regression_data(8, 14, 2);
  const Hypothesis h(Eigen::Vector2d(0, 1), 0.0, 0.05);
  const auto f = fit(d, h);
  MethodSettings settings;
  settings.boot = 199;
  settings.boot_key = 77;
  for (Method m : {Method::normal, Method::student_d1, Method::student_d2, Method::student_d3, Method::pairs,
                   Method::wcb, Method::analytic}) {
    const auto r = evaluate_method(m, d, f, settings);
    if (!r.applicable) continue;
    CHECK(r.cv_effective > 0.0);
    CHECK(r.reject == (std::abs(f.t_stat) > r.cv_effective));
    const auto again = evaluate_method(m, d, f, settings);
    CHECK(again.cv_effective == r.cv_effective);
  }
  CHECK(evaluate_method(Method::normal, d, f, settings).cv_effective == doctest::Approx(1.959963984540054));
}
