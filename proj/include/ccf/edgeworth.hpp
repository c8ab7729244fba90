#pragma once

// Edgeworth correction of the two-sided cluster-robust t-test.
//
// From the score components we estimate four averaged moments
//   mu12   = mean(omega1_g * omega2_g)        (2k-vector)
//   mu22   = mean(omega2_g' Gamma omega2_g)
//   mu111  = mean(omega1_g^3)
//   mu1111 = mean(omega1_g^4)
// map them to the approximate moments nu_1..nu_4 of the t-statistic's
// stochastic expansion and then to cumulants k_1..k_4. The corrected
// critical value is z0 - q2(z0)/G with z0 = Phi^{-1}(1 - alpha/2) and
//   q2(z) = -( (k2 + k1^2)/2 He1(z) + (k4 + 4 k1 k3)/24 He3(z) + k3^2/72 He5(z) ).
// Hermite polynomials use the probabilists' convention.

#include <array>
#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "ccf/ols_cluster.hpp"

namespace ccf {

// He_r(z) for r in {1, 2, 3, 5}; throws ArgumentError otherwise.
double hermite(int order, double z);

struct Cumulants {
  double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
};

struct EdgeworthMoments {
  Eigen::VectorXd mu12;
  double mu22 = 0.0;
  double mu111 = 0.0;
  double mu1111 = 0.0;
  std::array<double, 4> nu{};
  Cumulants kcum;
  std::optional<double> truncation;

  bool k2_negative() const { return kcum.k2 < 0.0; }
};

struct MomentOptions {
  // Winsorize each per-cluster summand at +/- truncation before averaging.
  std::optional<double> truncation;
};

// Applies the nu and cumulant maps to given mu's (sample or population).
EdgeworthMoments moments_from_mu(Eigen::VectorXd mu12, double mu22, double mu111, double mu1111,
                                 const Eigen::MatrixXd& gamma, std::optional<double> truncation = std::nullopt);

// Sample analogs from the hatted score components. Requires G >= 2; a
// non-positive truncation threshold is an ArgumentError.
EdgeworthMoments estimate_moments(const ScoreComponents& sc, const MomentOptions& opts = {});

double q1(double z, const Cumulants& k);
double q2(double z, const Cumulants& k);
inline double q1(double z, const EdgeworthMoments& m) { return q1(z, m.kcum); }
inline double q2(double z, const EdgeworthMoments& m) { return q2(z, m.kcum); }

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct CorrectedCritical {
  double z0 = 0.0;
  double q2_at_z0 = 0.0;
  double cv = 0.0;  // z0 - q2_at_z0 / G, never clamped
  std::optional<ConfidenceInterval> ci;

  bool cv_negative() const { return cv < 0.0; }
};

// Requires 0 < alpha < 1 and G >= 2.
CorrectedCritical critical_value(const EdgeworthMoments& m, std::size_t G, double alpha);
// Same, with the confidence interval for lambda'beta filled from the fit.
CorrectedCritical critical_value(const EdgeworthMoments& m, const ClusterFit& fit);

// lambda'beta_hat -/+ cv * sigma_hat / sqrt(G).
ConfidenceInterval confidence_interval(const ClusterFit& fit, double cv);

// Interval obtained when the t-statistic is studentized by an alternative
// standard error sigma_tilde and the critical value rescaled to
// (sigma_hat / sigma_tilde) * cv. Algebraically identical to
// confidence_interval(fit, cv).
ConfidenceInterval confidence_interval_alt_variance(const ClusterFit& fit, double cv, double sigma_tilde);

struct ExpansionCdf {
  double two_sided = 0.0;  // 2 Phi(z) - 1 + 2 q2(z) phi(z) / G
  double one_sided = 0.0;  // Phi(z) + q1(z) phi(z) / sqrt(G) + q2(z) phi(z) / G
  bool out_of_range = false;  // either value outside [0, 1]
};

// Diagnostic expansion of P(|t| <= z) and P(t <= z). Not clipped.
ExpansionCdf edgeworth_cdf(double z, const EdgeworthMoments& m, std::size_t G);

}  // namespace ccf
