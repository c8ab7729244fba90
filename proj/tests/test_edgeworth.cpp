#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ccf/edgeworth.hpp"
#include "ccf/errors.hpp"
#include "ccf/numerics.hpp"
#include "ccf/rng.hpp"

using namespace ccf;

namespace {

constexpr double kZ975 = 1.959963984540054;

Eigen::Matrix2d mean_model_gamma() {
  Eigen::Matrix2d g;
  g << -1, 1, 1, 0;
  return g;
}

EdgeworthMoments exponential_population() {
  return moments_from_mu(Eigen::Vector2d(1, 1), 1.0, 2.0, 9.0, mean_model_gamma());
}

ClusteredDataset skewed_data(std::uint64_t seed, std::size_t G, std::size_t k) {
  rng::CounterStream s(seed, 0);
  std::vector<ClusterBlock> blocks;
  for (std::size_t g = 0; g < G; ++g) {
    const auto n = static_cast<Eigen::Index>(1 + s.below(3));
    ClusterBlock b{std::to_string(g), Eigen::VectorXd(n), Eigen::MatrixXd(n, static_cast<Eigen::Index>(k))};
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < b.x.cols(); ++j) b.x(i, j) = s.uniform(-1, 2);
      b.y(i) = s.exponential() * s.uniform(0.2, 3.0);
    }
    blocks.push_back(std::move(b));
  }
  return ClusteredDataset(std::move(blocks));
}

}  // namespace

TEST_CASE("Hermite polynomials") {
  CHECK(hermite(1, 0.0) == 0.0);
  CHECK(hermite(2, 1.0) == 0.0);
  CHECK(hermite(3, 2.0) == 2.0);
  CHECK(hermite(5, 1.0) == 6.0);
  CHECK(hermite(5, -1.0) == -6.0);
  CHECK_THROWS_AS(hermite(4, 1.0), ArgumentError);
}

TEST_CASE("population cumulants of the demeaned exponential") {
  const auto m = exponential_population();
  CHECK(m.nu[0] == doctest::Approx(-1));
  CHECK(m.nu[1] == doctest::Approx(11));
  CHECK(m.nu[2] == doctest::Approx(-7));
  CHECK(m.nu[3] == doctest::Approx(124));
  CHECK(m.kcum.k1 == doctest::Approx(-1));
  CHECK(m.kcum.k2 == doctest::Approx(10));
  CHECK(m.kcum.k3 == doctest::Approx(-4));
  CHECK(m.kcum.k4 == doctest::Approx(42));

  // Hand evaluation in long double: q2 = -(11/2 He1 + 58/24 He3 + 16/72 He5).
  const long double z = kZ975;
  const long double he1 = z, he3 = z * z * z - 3 * z, he5 = z * z * z * z * z - 10 * z * z * z + 15 * z;
  const long double q2_hand = -(5.5L * he1 + 58.0L / 24.0L * he3 + 16.0L / 72.0L * he5);
  CHECK(std::abs(q2(kZ975, m) - static_cast<double>(q2_hand)) < 1e-12);
  CHECK(std::abs(q2(kZ975, m) - (-10.9946)) < 5e-4);

  const auto cv = critical_value(m, 10, 0.05);
  CHECK(std::abs(cv.cv - 3.0594) < 1e-3);
  CHECK(cv.cv - cv.z0 == doctest::Approx(-cv.q2_at_z0 / 10.0).epsilon(1e-14));

  const auto cdf = edgeworth_cdf(kZ975, m, 100);
  CHECK(std::abs(cdf.two_sided - 0.9371) < 1e-3);
  CHECK_FALSE(cdf.out_of_range);
}

TEST_CASE("q1 and q2 values and symmetry") {
  Cumulants zero;
  for (double z : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
    CHECK(q2(z, zero) == 0.0);
    CHECK(q1(z, zero) == 0.0);
  }
  Cumulants k{-1, 10, -4, 42};
  // He2(0) = -1, so q1(0) = -(k1 - k3/6).
  CHECK(q1(0.0, k) == doctest::Approx(1.0 / 3.0));
  CHECK(q1(1.0, k) == doctest::Approx(1.0));
  CHECK(q1(-1.0, k) == doctest::Approx(1.0));
  Cumulants k3only{0, 0, 6, 0};
  CHECK(q2(0.0, k3only) == 0.0);
  for (double z : {0.1, 0.7, 1.959964, 2.5, 3.3}) {
    CHECK(q2(-z, k) == -q2(z, k));
    CHECK(q2(-z, k3only) == -q2(z, k3only));
  }

  const auto m = exponential_population();
  const auto g = edgeworth_cdf(1.3, moments_from_mu(Eigen::Vector2d(0, 0), 0.0, 0.0, 0.0, Eigen::Matrix2d::Zero()), 50);
  CHECK(g.two_sided == doctest::Approx(2 * normal_cdf(1.3) - 1));
  CHECK(g.one_sided == doctest::Approx(normal_cdf(1.3)));
  CHECK(edgeworth_cdf(0.0, m, 50).two_sided == doctest::Approx(0.0));
  const auto heavy = moments_from_mu(Eigen::Vector2d(1, 1), 1.0, 2.0, 100.0, mean_model_gamma());
  CHECK(edgeworth_cdf(1.0, heavy, 2).two_sided < 0.0);
  CHECK(edgeworth_cdf(1.0, heavy, 2).out_of_range);
}

TEST_CASE("critical value limits") {
  const auto zero = moments_from_mu(Eigen::Vector2d(0, 0), 0.0, 0.0, 0.0, Eigen::Matrix2d::Zero());
  CHECK(critical_value(zero, 10, 0.05).cv == doctest::Approx(kZ975).epsilon(1e-12));
  const auto m = exponential_population();
  double prev = 1e300;
  for (std::size_t G : {10, 20, 40, 80, 1000, 100000}) {
    const double cv = critical_value(m, G, 0.05).cv;
    CHECK(cv < prev);
    CHECK(cv > kZ975);
    prev = cv;
  }
}

TEST_CASE("sample moments match loop oracles") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::size_t G = 7, k = 2;
    const auto d = skewed_data(seed, G, k);
    const Hypothesis h(Eigen::Vector2d(0.3, -1.1), 0.1, 0.05);
    const auto f = fit(d, h);
    const auto sc = score_components(f, d);
    const auto m = estimate_moments(sc);

    // Recompute omegas from the residuals with scalar loops.
    std::vector<double> w1(G);
    std::vector<std::array<double, 4>> w2(G);
    for (std::size_t g = 0; g < G; ++g) {
      const auto& c = d.cluster(g);
      const Eigen::VectorXd u = c.y - c.x * f.beta_hat;
      double xu[2] = {0, 0};
      double xx[2][2] = {{0, 0}, {0, 0}};
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        for (int a = 0; a < 2; ++a) {
          xu[a] += c.x(i, a) * u(i);
          for (int b = 0; b < 2; ++b) xx[a][b] += c.x(i, a) * c.x(i, b);
        }
      }
      double pxu[2] = {0, 0}, pl[2] = {0, 0};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          pxu[a] += f.pi(a, b) * xu[b];
          pl[a] += f.pi(b, a) * h.lambda(b);
        }
      }
      const double s = h.lambda(0) * pxu[0] + h.lambda(1) * pxu[1];
      w1[g] = s / f.sigma_hat;
      for (int a = 0; a < 2; ++a) {
        w2[g][static_cast<std::size_t>(a)] = pxu[a] / f.sigma_hat;
        w2[g][static_cast<std::size_t>(2 + a)] = (xx[a][0] * pl[0] + xx[a][1] * pl[1]) * s / f.sigma_hat;
      }
    }
    double mu12[4] = {0, 0, 0, 0}, mu22 = 0, mu111 = 0, mu1111 = 0;
    for (std::size_t g = 0; g < G; ++g) {
      for (int a = 0; a < 4; ++a) mu12[a] += w1[g] * w2[g][static_cast<std::size_t>(a)] / G;
      double quad = 0;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          quad += w2[g][static_cast<std::size_t>(a)] * sc.gamma(a, b) * w2[g][static_cast<std::size_t>(b)];
        }
      }
      mu22 += quad / G;
      mu111 += w1[g] * w1[g] * w1[g] / G;
      mu1111 += w1[g] * w1[g] * w1[g] * w1[g] / G;
    }
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    for (int a = 0; a < 4; ++a) CHECK(close(m.mu12(a), mu12[a]));
    CHECK(close(m.mu22, mu22));
    CHECK(close(m.mu111, mu111));
    CHECK(close(m.mu1111, mu1111));

    // Published maps, evaluated independently.
    double quad12 = 0;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) quad12 += mu12[a] * sc.gamma(a, b) * mu12[b];
    }
    const double n1 = -mu111 / 2, n2 = 2 * mu111 * mu111 + mu22 + 2 * quad12, n3 = -3.5 * mu111,
                 n4 = -2 * mu1111 + 28 * mu111 * mu111 + 6 * mu22 + 24 * quad12;
    CHECK(close(m.kcum.k1, n1));
    CHECK(close(m.kcum.k2, n2 - n1 * n1));
    CHECK(close(m.kcum.k3, n3 - 3 * n1));
    CHECK(close(m.kcum.k4, n4 - 4 * n1 * n3 - 6 * n2 + 12 * n1 * n1));
  }
}

TEST_CASE("symmetric scores kill the odd cumulants") {
  ScoreComponents sc;
  sc.omega1 = Eigen::VectorXd(6);
  sc.omega1 << 1, -1, 1, -1, 1, -1;
  sc.omega2 = Eigen::MatrixXd::Zero(2, 6);
  sc.gamma = mean_model_gamma();
  const auto m = estimate_moments(sc);
  CHECK(m.mu111 == 0.0);
  CHECK(m.kcum.k1 == 0.0);
  CHECK(m.kcum.k3 == 0.0);
}

TEST_CASE("truncation") {
  const auto d = skewed_data(12, 15, 2);
  const Hypothesis h(Eigen::Vector2d(1, 0), 0.0, 0.05);
  const auto sc = score_components(fit(d, h), d);
  const auto plain = estimate_moments(sc);
  const auto wide = estimate_moments(sc, {1e12});
  CHECK(wide.mu111 == plain.mu111);
  CHECK(wide.mu1111 == plain.mu1111);
  CHECK(wide.mu22 == plain.mu22);
  CHECK(wide.mu12 == plain.mu12);
  CHECK(wide.truncation.has_value());
  const auto tight = estimate_moments(sc, {0.5});
  CHECK(tight.mu1111 <= 0.5);
  CHECK(std::abs(tight.mu111) <= 0.5);
  CHECK_THROWS_AS(estimate_moments(sc, {0.0}), ArgumentError);
}

TEST_CASE("outcome scale leaves the correction unchanged") {
  const auto d = skewed_data(4, 12, 2);
  const Hypothesis h(Eigen::Vector2d(0.5, 1.0), 0.2, 0.05);
  const auto f = fit(d, h);
  const auto sc = score_components(f, d);
  const auto cc = critical_value(estimate_moments(sc), f);

  const double c = 2.75;
  std::vector<ClusterBlock> scaled = d.clusters();
  for (auto& b : scaled) b.y *= c;
  const ClusteredDataset ds(scaled);
  const auto fs = fit(ds, Hypothesis(h.lambda, c * h.c0, h.alpha));
  const auto scs = score_components(fs, ds);
  const auto ccs = critical_value(estimate_moments(scs), fs);
  CHECK((sc.omega1 - scs.omega1).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((sc.omega2 - scs.omega2).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(std::abs(cc.q2_at_z0 - ccs.q2_at_z0) <= 1e-10);
  CHECK(std::abs(cc.cv - ccs.cv) <= 1e-10);
  CHECK(ccs.ci->lo == doctest::Approx(c * cc.ci->lo).epsilon(1e-10));
  CHECK(ccs.ci->hi == doctest::Approx(c * cc.ci->hi).epsilon(1e-10));
}

TEST_CASE("confidence interval") {
  const auto d = skewed_data(9, 10, 2);
  const Hypothesis h(Eigen::Vector2d(1.0, -1.0), 0.0, 0.1);
  const auto f = fit(d, h);
  const auto cc = critical_value(estimate_moments(score_components(f, d)), f);
  REQUIRE(cc.ci);
  CHECK((cc.ci->lo + cc.ci->hi) / 2 == doctest::Approx(f.estimate).epsilon(1e-14));
  CHECK((cc.ci->hi - cc.ci->lo) / 2 == doctest::Approx(cc.cv * f.sigma_hat / std::sqrt(10.0)).epsilon(1e-13));
  for (double st : {0.01, 0.5, f.sigma_hat, 7.0, 1e4}) {
    const auto alt = confidence_interval_alt_variance(f, cc.cv, st);
    CHECK(std::abs(alt.lo - cc.ci->lo) <= 1e-12 * std::max(1.0, std::abs(cc.ci->lo)));
    CHECK(std::abs(alt.hi - cc.ci->hi) <= 1e-12 * std::max(1.0, std::abs(cc.ci->hi)));
  }
}
