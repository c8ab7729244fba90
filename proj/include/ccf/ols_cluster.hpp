#pragma once

// Clustered OLS, the cluster-robust variance of lambda'beta_hat, the
// t-statistic, and the per-cluster score decomposition used by the
// Edgeworth correction.
//
// Inference is conditional on the regressors: X is treated as fixed and
// nothing here resamples or models it.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ccf/data_model.hpp"

namespace ccf {

// Relative cutoff on eigenvalues of the Gram mean (= its singular values).
inline constexpr double kRankTolerance = 1e-10;

struct ClusterFit {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd pi;                // ((1/G) sum X_g'X_g)^{-1}
  std::vector<Eigen::VectorXd> resid;  // u_hat_g
  Eigen::VectorXd scores;            // s_g = lambda' Pi X_g' u_hat_g
  double estimate = 0.0;             // lambda'beta_hat
  double sigma2_hat = 0.0;           // (1/G) sum s_g^2
  double sigma_hat = 0.0;
  double t_stat = 0.0;               // sqrt(G) (lambda'beta_hat - c0) / sigma_hat
  std::size_t G = 0;
  Hypothesis hypothesis;
};

// Inverse of a symmetric positive semi-definite matrix. Throws RankError
// (carrying the eigenvector of the smallest eigenvalue) when the smallest
// eigenvalue is <= kRankTolerance times the largest.
Eigen::MatrixXd gram_inverse(const Eigen::MatrixXd& gram);

// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below
// rel_tol * max eigenvalue are treated as zero.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& gram, double rel_tol = kRankTolerance);

// (1/G) sum_g X_g'X_g.
Eigen::MatrixXd gram_mean(const ClusteredDataset& d);

// Errors: ArgumentError (lambda length != k), RankError (singular Gram),
// DegenerateVarianceError (sigma_hat = 0 relative to the score scale).
ClusterFit fit(const ClusteredDataset& d, const Hypothesis& h);

// The hatted score components: omega1_g = s_g / sigma_hat and
// omega2_g = sigma_hat^{-1} [Pi X_g'u_g ; X_g'X_g Pi'lambda lambda' Pi X_g'u_g].
// omega3_g is not stored; it is omega1_g^2 - 1.
struct ScoreComponents {
  Eigen::VectorXd omega1;  // G
  Eigen::MatrixXd omega2;  // 2k x G, column g is omega2_g
  Eigen::MatrixXd gamma;   // 2k x 2k

  std::size_t G() const { return static_cast<std::size_t>(omega1.size()); }
  std::size_t k() const { return static_cast<std::size_t>(gamma.rows() / 2); }
};

// The fixed 2k x 2k matrix [[-(1/G) sum B_g B_g', I], [I, 0]] with
// B_g = X_g'X_g Pi'lambda.
Eigen::MatrixXd gamma_matrix(const ClusteredDataset& d, const Eigen::MatrixXd& pi, const Eigen::VectorXd& lambda);

// Requires fit.sigma_hat > 0 (guaranteed by `fit`).
ScoreComponents score_components(const ClusterFit& fit, const ClusteredDataset& d);

// Evaluates both sides of the variance-ratio identity
//   sigma_hat / sigma = sqrt(1 - W2' Gamma W2 + W3)
// where sigma_hat comes from the OLS fit of `d`, and sigma, W2, W3 are
// built from the true errors u_g = Y_g - X_g beta_true and the supplied
// population per-cluster variances sigma_g2. Returns |LHS - RHS|, or +inf
// when the radicand is negative. Test-facing.
double lemma1_residual(const ClusteredDataset& d, const Hypothesis& h, const Eigen::VectorXd& beta_true,
                       std::span<const double> sigma_g2);

}  // namespace ccf
