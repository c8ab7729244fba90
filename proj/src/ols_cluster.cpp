#include "ccf/ols_cluster.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ccf/errors.hpp"
#include "ccf/numerics.hpp"

namespace ccf {

Eigen::MatrixXd gram_inverse(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) throw RankError("eigen-decomposition of the Gram matrix failed", {});
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double top = std::abs(ev(ev.size() - 1));
  if (!(ev(0) > kRankTolerance * top)) {
    Eigen::VectorXd dir = es.eigenvectors().col(0);
    std::ostringstream msg;
    msg << "Gram matrix is singular (min/max eigenvalue " << ev(0) / (top > 0 ? top : 1.0)
        << "); null direction [" << dir.transpose() << "]";
    throw RankError(msg.str(), std::move(dir));
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& gram, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = rel_tol * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff && ev(i) > 0.0) inv(i) = 1.0 / ev(i);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd gram_mean(const ClusteredDataset& d) {
  const auto k = static_cast<Eigen::Index>(d.k());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  for (const auto& c : d.clusters()) a.selfadjointView<Eigen::Lower>().rankUpdate(c.x.transpose());
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  return a / static_cast<double>(d.G());
}

ClusterFit fit(const ClusteredDataset& d, const Hypothesis& h) {
  h.check_dimension(d.k());
  const std::size_t G = d.G();
  const auto Gd = static_cast<double>(G);

  Eigen::MatrixXd pi = gram_inverse(gram_mean(d));
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.k()));
  for (const auto& c : d.clusters()) xty.noalias() += c.x.transpose() * c.y;
  Eigen::VectorXd beta = pi * (xty / Gd);

  const Eigen::RowVectorXd w = h.lambda.transpose() * pi;  // lambda' Pi
  std::vector<Eigen::VectorXd> resid;
  resid.reserve(G);
  Eigen::VectorXd scores(static_cast<Eigen::Index>(G));
  WideSum s2, scale2;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& c = d.cluster(g);
    resid.push_back(c.y - c.x * beta);
    const double s = w * (c.x.transpose() * resid.back());
    const double sy = w * (c.x.transpose() * c.y);
    scores(static_cast<Eigen::Index>(g)) = s;
    s2.add(static_cast<long double>(s) * s);
    scale2.add(static_cast<long double>(sy) * sy);
  }
  const double sigma2 = s2.mean(G);
  const double sigma = std::sqrt(sigma2);
  const double scale = std::sqrt(scale2.mean(G));
  if (!(sigma > 0.0) || sigma <= 1e-12 * scale) {
    throw DegenerateVarianceError("cluster-robust variance is zero: the fitted scores vanish in every cluster");
  }
  const double estimate = h.lambda.dot(beta);
  ClusterFit out{std::move(beta), std::move(pi), std::move(resid), std::move(scores), estimate, sigma2, sigma,
                 std::sqrt(Gd) * (estimate - h.c0) / sigma, G, h};
  return out;
}

Eigen::MatrixXd gamma_matrix(const ClusteredDataset& d, const Eigen::MatrixXd& pi, const Eigen::VectorXd& lambda) {
  const auto k = static_cast<Eigen::Index>(d.k());
  const Eigen::VectorXd pl = pi.transpose() * lambda;  // Pi' lambda
  Eigen::MatrixXd top_left = Eigen::MatrixXd::Zero(k, k);
  for (const auto& c : d.clusters()) {
    const Eigen::VectorXd b = c.x.transpose() * (c.x * pl);  // X_g'X_g Pi'lambda
    top_left.noalias() -= b * b.transpose();
  }
  top_left /= static_cast<double>(d.G());
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  gamma.topLeftCorner(k, k) = top_left;
  gamma.topRightCorner(k, k).setIdentity();
  gamma.bottomLeftCorner(k, k).setIdentity();
  return gamma;
}

ScoreComponents score_components(const ClusterFit& f, const ClusteredDataset& d) {
  if (!(f.sigma_hat > 0.0)) throw DegenerateVarianceError("score components need sigma_hat > 0");
  const auto k = static_cast<Eigen::Index>(d.k());
  const auto G = static_cast<Eigen::Index>(d.G());
  const Eigen::VectorXd& lambda = f.hypothesis.lambda;
  const Eigen::VectorXd pl = f.pi.transpose() * lambda;

  ScoreComponents sc;
  sc.omega1 = f.scores / f.sigma_hat;
  sc.omega2.resize(2 * k, G);
  for (Eigen::Index g = 0; g < G; ++g) {
    const auto& c = d.cluster(static_cast<std::size_t>(g));
    const Eigen::VectorXd top = f.pi * (c.x.transpose() * f.resid[static_cast<std::size_t>(g)]);
    const Eigen::VectorXd b = c.x.transpose() * (c.x * pl);
    sc.omega2.col(g).head(k) = top / f.sigma_hat;
    sc.omega2.col(g).tail(k) = b * (lambda.dot(top) / f.sigma_hat);
  }
  sc.gamma = gamma_matrix(d, f.pi, lambda);
  return sc;
}

double lemma1_residual(const ClusteredDataset& d, const Hypothesis& h, const Eigen::VectorXd& beta_true,
                       std::span<const double> sigma_g2) {
  if (sigma_g2.size() != d.G()) throw ArgumentError("sigma_g2 must have one entry per cluster");
  const std::size_t G = d.G();
  const auto k = static_cast<Eigen::Index>(d.k());

  WideSum var_sum;
  for (double v : sigma_g2) var_sum.add(v);
  const double sigma2 = var_sum.mean(G);
  if (!(sigma2 > 0.0)) throw ArgumentError("population variance must be positive");
  const double sigma = std::sqrt(sigma2);

  const ClusterFit f = fit(d, h);
  const double lhs = f.sigma_hat / sigma;

  const Eigen::VectorXd pl = f.pi.transpose() * h.lambda;
  Eigen::VectorXd w2 = Eigen::VectorXd::Zero(2 * k);
  WideSum w3;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& c = d.cluster(g);
    const Eigen::VectorXd u = c.y - c.x * beta_true;
    const Eigen::VectorXd top = f.pi * (c.x.transpose() * u);
    const double a = h.lambda.dot(top);
    const Eigen::VectorXd b = c.x.transpose() * (c.x * pl);
    w2.head(k) += top / sigma;
    w2.tail(k) += b * (a / sigma);
    w3.add((static_cast<long double>(a) * a - sigma_g2[g]) / sigma2);
  }
  w2 /= static_cast<double>(G);
  const Eigen::MatrixXd gamma = gamma_matrix(d, f.pi, h.lambda);
  const double radicand = 1.0 - w2.dot(gamma * w2) + w3.mean(G);
  if (radicand < 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(lhs - std::sqrt(radicand));
}

}  // namespace ccf
