#include "ccf/edgeworth.hpp"

#include <cmath>

#include "ccf/errors.hpp"
#include "ccf/numerics.hpp"

namespace ccf {

double hermite(int order, double z) {
  const double z2 = z * z;
  switch (order) {
    case 1:
      return z;
    case 2:
      return z2 - 1.0;
    case 3:
      return z * (z2 - 3.0);
    case 5:
      return z * ((z2 - 10.0) * z2 + 15.0);
    default:
      throw ArgumentError("hermite: unsupported order " + std::to_string(order) + " (expected 1, 2, 3 or 5)");
  }
}

EdgeworthMoments moments_from_mu(Eigen::VectorXd mu12, double mu22, double mu111, double mu1111,
                                 const Eigen::MatrixXd& gamma, std::optional<double> truncation) {
  if (gamma.rows() != mu12.size() || gamma.cols() != mu12.size()) {
    throw ArgumentError("moments_from_mu: Gamma and mu12 dimensions disagree");
  }
  const double quad = mu12.dot(gamma * mu12);  // mu12' Gamma mu12
  const double sq = mu111 * mu111;

  EdgeworthMoments m;
  m.mu12 = std::move(mu12);
  m.mu22 = mu22;
  m.mu111 = mu111;
  m.mu1111 = mu1111;
  m.truncation = truncation;

  const double nu1 = -0.5 * mu111;
  const double nu2 = 2.0 * sq + (mu22 + 2.0 * quad);
  const double nu3 = -3.5 * mu111;
  const double nu4 = -2.0 * mu1111 + 28.0 * sq + 6.0 * mu22 + 24.0 * quad;
  m.nu = {nu1, nu2, nu3, nu4};
  m.kcum = {nu1, nu2 - nu1 * nu1, nu3 - 3.0 * nu1, nu4 - 4.0 * nu1 * nu3 - 6.0 * nu2 + 12.0 * nu1 * nu1};
  return m;
}

EdgeworthMoments estimate_moments(const ScoreComponents& sc, const MomentOptions& opts) {
  const std::size_t G = sc.G();
  if (G < 2) throw ArgumentError("estimate_moments needs at least 2 clusters");
  if (opts.truncation && !(*opts.truncation > 0.0)) throw ArgumentError("truncation threshold must be positive");

  auto clip = [&](double v) {
    if (!opts.truncation) return v;
    const double tau = *opts.truncation;
    return std::abs(v) > tau ? std::copysign(tau, v) : v;
  };

  const Eigen::Index dim = sc.omega2.rows();
  std::vector<WideSum> mu12_sum(static_cast<std::size_t>(dim));
  WideSum mu22_sum, mu111_sum, mu1111_sum;
  for (Eigen::Index g = 0; g < static_cast<Eigen::Index>(G); ++g) {
    const double w1 = sc.omega1(g);
    const auto w2 = sc.omega2.col(g);
    for (Eigen::Index i = 0; i < dim; ++i) mu12_sum[static_cast<std::size_t>(i)].add(clip(w1 * w2(i)));
    mu22_sum.add(clip(w2.dot(sc.gamma * w2)));
    const double sq = w1 * w1;
    mu111_sum.add(clip(sq * w1));
    mu1111_sum.add(clip(sq * sq));
  }
  Eigen::VectorXd mu12(dim);
  for (Eigen::Index i = 0; i < dim; ++i) mu12(i) = mu12_sum[static_cast<std::size_t>(i)].mean(G);
  return moments_from_mu(std::move(mu12), mu22_sum.mean(G), mu111_sum.mean(G), mu1111_sum.mean(G), sc.gamma,
                         opts.truncation);
}

double q1(double z, const Cumulants& k) { return -(k.k1 + k.k3 / 6.0 * hermite(2, z)); }

double q2(double z, const Cumulants& k) {
  return -(0.5 * (k.k2 + k.k1 * k.k1) * hermite(1, z) + (k.k4 + 4.0 * k.k1 * k.k3) / 24.0 * hermite(3, z) +
           k.k3 * k.k3 / 72.0 * hermite(5, z));
}

CorrectedCritical critical_value(const EdgeworthMoments& m, std::size_t G, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0,1)");
  if (G < 2) throw ArgumentError("critical_value needs G >= 2");
  CorrectedCritical out;
  out.z0 = normal_quantile(1.0 - alpha / 2.0);
  out.q2_at_z0 = q2(out.z0, m);
  out.cv = out.z0 - out.q2_at_z0 / static_cast<double>(G);
  return out;
}

CorrectedCritical critical_value(const EdgeworthMoments& m, const ClusterFit& fit) {
  CorrectedCritical out = critical_value(m, fit.G, fit.hypothesis.alpha);
  out.ci = confidence_interval(fit, out.cv);
  return out;
}

ConfidenceInterval confidence_interval(const ClusterFit& fit, double cv) {
  const double half = cv * fit.sigma_hat / std::sqrt(static_cast<double>(fit.G));
  return {fit.estimate - half, fit.estimate + half};
}

ConfidenceInterval confidence_interval_alt_variance(const ClusterFit& fit, double cv, double sigma_tilde) {
  if (!(sigma_tilde > 0.0)) throw ArgumentError("alternative standard error must be positive");
  // Accept lambda'beta = c whenever |sqrt(G)(est - c)/sigma_tilde| <= (sigma_hat/sigma_tilde) cv.
  const double cv_alt = fit.sigma_hat / sigma_tilde * cv;
  const double half = cv_alt * sigma_tilde / std::sqrt(static_cast<double>(fit.G));
  return {fit.estimate - half, fit.estimate + half};
}

ExpansionCdf edgeworth_cdf(double z, const EdgeworthMoments& m, std::size_t G) {
  if (G < 2) throw ArgumentError("edgeworth_cdf needs G >= 2");
  const double Gd = static_cast<double>(G);
  const double phi = normal_pdf(z);
  const double Phi = normal_cdf(z);
  const double q2z = q2(z, m);
  ExpansionCdf out;
  out.two_sided = 2.0 * Phi - 1.0 + 2.0 * q2z * phi / Gd;
  out.one_sided = Phi + q1(z, m) * phi / std::sqrt(Gd) + q2z * phi / Gd;
  auto outside = [](double v) { return v < 0.0 || v > 1.0; };
  out.out_of_range = outside(out.two_sided) || outside(out.one_sided);
  return out;
}

}  // namespace ccf
