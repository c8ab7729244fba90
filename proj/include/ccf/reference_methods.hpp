#pragma once

// Critical values that the Edgeworth correction is compared against:
// the normal quantile, Student t_{G-1} with small-sample variance
// adjustments d1/d2/d3, the pairs percentile-t cluster bootstrap and the
// restricted wild cluster bootstrap with Rademacher weights.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ccf/data_model.hpp"
#include "ccf/edgeworth.hpp"
#include "ccf/ols_cluster.hpp"

namespace ccf {

enum class Method { normal, student_d1, student_d2, student_d3, pairs, wcb, analytic };

std::string_view method_name(Method m);
// Throws ConfigError for unknown names.
Method parse_method(std::string_view name);
std::vector<Method> parse_methods(std::string_view comma_list);
bool is_bootstrap(Method m);

enum class StudentVariant { d1, d2, d3 };

// Variance multiplier d; throws DomainError on a non-positive denominator.
double student_adjustment(std::size_t G, std::size_t N, std::size_t k, StudentVariant v);
// sqrt(d) * t_{G-1, 1-alpha/2}.
double student_cv(std::size_t G, std::size_t N, std::size_t k, StudentVariant v, double alpha);

// 1-based rank ceil((B+1)(1-alpha)) of the order statistic used as the
// bootstrap critical value.
std::size_t bootstrap_rank(std::size_t B, double alpha);

struct BootstrapResult {
  double cv = 0.0;                  // +inf when the rank exceeds B
  std::size_t draws = 0;
  std::size_t degenerate_draws = 0;  // draws with sigma* = 0
  std::size_t pinv_draws = 0;        // pairs only: singular resampled Gram
  bool rank_beyond_draws = false;
  std::uint64_t key = 0;
  std::vector<double> abs_t;         // |t*_b| in draw order
};

// Pairs percentile-t cluster bootstrap. Resamples G whole clusters with
// replacement; t*_b = sqrt(G)(lambda'beta*_b - lambda'beta_hat)/sigma*_b.
// A numerically singular resampled Gram matrix is pseudo-inverted.
class PairsBootstrap {
 public:
  PairsBootstrap(const ClusteredDataset& d, const ClusterFit& base);

  struct Draw {
    double abs_t = 0.0;
    bool degenerate = false;
    bool used_pinv = false;
  };
  // `picks` holds G cluster indices.
  Draw evaluate(std::span<const std::size_t> picks) const;

 private:
  std::size_t G_, k_;
  Eigen::VectorXd lambda_;
  double estimate_;
  std::vector<double> xtx_;  // G blocks of k*k, column-major
  std::vector<double> xty_;  // G blocks of k
};

// Restricted wild cluster bootstrap. beta_tilde minimizes the residual sum
// of squares subject to lambda'beta = c0 (solved in the null space of
// lambda); Y*_g = X_g beta_tilde + v_g u_tilde_g with Rademacher v_g, and
// each t*_b tests lambda'beta = c0 on the unrestricted refit.
class WildClusterBootstrap {
 public:
  // Throws RankError if the restricted problem is singular.
  WildClusterBootstrap(const ClusteredDataset& d, const Hypothesis& h);

  struct Draw {
    double abs_t = 0.0;
    bool degenerate = false;
  };
  // `signs` holds G entries of +1/-1.
  Draw evaluate(std::span<const int> signs) const;

  const Eigen::VectorXd& restricted_beta() const { return beta_tilde_; }

 private:
  std::size_t G_, k_;
  Eigen::VectorXd beta_tilde_;
  Eigen::MatrixXd pi_;
  Eigen::VectorXd a_;   // lambda' Pi X_g' u_tilde_g
  Eigen::MatrixXd b_;   // k x G, X_g'X_g Pi'lambda
  Eigen::MatrixXd s_;   // k x G, X_g' u_tilde_g
  double scale_ = 0.0;
};

// Null-constrained least squares: argmin sum ||Y_g - X_g beta||^2 s.t. lambda'beta = c0.
Eigen::VectorXd restricted_least_squares(const ClusteredDataset& d, const Hypothesis& h);

// Draw b uses CounterStream(key, b).
BootstrapResult pairs_bootstrap_cv(const ClusteredDataset& d, const ClusterFit& base, std::size_t B,
                                   std::uint64_t key);
BootstrapResult wild_cluster_bootstrap_cv(const ClusteredDataset& d, const Hypothesis& h, std::size_t B,
                                          std::uint64_t key);

struct MethodResult {
  Method method = Method::normal;
  bool applicable = true;
  std::string note;           // reason when not applicable
  double cv_effective = 0.0;  // on the |t| scale
  bool reject = false;        // |t| > cv_effective
  std::optional<BootstrapResult> bootstrap;
  std::optional<EdgeworthMoments> moments;     // analytic only
  std::optional<CorrectedCritical> corrected;  // analytic only
};

struct MethodSettings {
  std::size_t boot = 999;
  std::uint64_t boot_key = 0;  // bootstrap substreams derive from this
  MomentOptions moments;
  bool keep_draws = false;     // keep |t*| vectors in results
};

// Evaluates one method against an existing fit. Domain errors of the
// Student variants are reported as not applicable.
MethodResult evaluate_method(Method m, const ClusteredDataset& d, const ClusterFit& fit, const MethodSettings& s);

}  // namespace ccf
