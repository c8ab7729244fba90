#include "ccf/reference_methods.hpp"

#include <cmath>
#include <limits>

#include "ccf/errors.hpp"
#include "ccf/numerics.hpp"
#include "ccf/rng.hpp"

namespace ccf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kPairsTag = 0x5041495253ull;  // "PAIRS"
constexpr std::uint64_t kWildTag = 0x574342ull;       // "WCB"

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::normal:
      return "normal";
    case Method::student_d1:
      return "student_d1";
    case Method::student_d2:
      return "student_d2";
    case Method::student_d3:
      return "student_d3";
    case Method::pairs:
      return "pairs";
    case Method::wcb:
      return "wcb";
    case Method::analytic:
      return "analytic";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::normal, Method::student_d1, Method::student_d2, Method::student_d3, Method::pairs,
                   Method::wcb, Method::analytic}) {
    if (method_name(m) == name) return m;
  }
  if (name == "student") return Method::student_d1;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected normal, student_d1, student_d2, student_d3, pairs, wcb, analytic)");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string_view item = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
    if (!item.empty()) {
      const Method m = parse_method(item);
      bool seen = false;
      for (Method e : out) seen = seen || e == m;
      if (!seen) out.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("no methods requested");
  return out;
}

bool is_bootstrap(Method m) { return m == Method::pairs || m == Method::wcb; }

double student_adjustment(std::size_t G, std::size_t N, std::size_t k, StudentVariant v) {
  const double g = static_cast<double>(G), n = static_cast<double>(N), kk = static_cast<double>(k);
  if (G < 2) throw DomainError("Student adjustment needs G > 1");
  switch (v) {
    case StudentVariant::d1:
      if (!(n - kk > 0)) throw DomainError("d1 needs N > k");
      return (n - 1.0) * g / ((n - kk) * (g - 1.0));
    case StudentVariant::d2:
      return g / (g - 1.0);
    case StudentVariant::d3:
      if (!(n - kk - g > 0)) throw DomainError("d3 needs N > k + G");
      return (n - 1.0) * g / ((n - kk - g) * (g - 1.0));
  }
  throw DomainError("unknown Student variant");
}

double student_cv(std::size_t G, std::size_t N, std::size_t k, StudentVariant v, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0,1)");
  const double d = student_adjustment(G, N, k, v);
  return std::sqrt(d) * student_t_quantile(1.0 - alpha / 2.0, static_cast<double>(G) - 1.0);
}

std::size_t bootstrap_rank(std::size_t B, double alpha) {
  return robust_ceil(static_cast<double>(B + 1) * (1.0 - alpha));
}

namespace {

BootstrapResult finish(std::vector<double> abs_t, double alpha, std::uint64_t key, bool keep) {
  BootstrapResult r;
  r.draws = abs_t.size();
  r.key = key;
  const std::size_t rank = bootstrap_rank(r.draws, alpha);
  if (rank > r.draws || rank == 0) {
    r.rank_beyond_draws = rank > r.draws;
    r.cv = rank == 0 ? 0.0 : kInf;
  } else {
    r.cv = order_statistic(abs_t, rank);
  }
  if (keep) r.abs_t = std::move(abs_t);
  return r;
}

}  // namespace

// ---------------------------------------------------------------- pairs

PairsBootstrap::PairsBootstrap(const ClusteredDataset& d, const ClusterFit& base)
    : G_(d.G()), k_(d.k()), lambda_(base.hypothesis.lambda), estimate_(base.estimate) {
  const auto k = static_cast<Eigen::Index>(k_);
  xtx_.resize(G_ * k_ * k_);
  xty_.resize(G_ * k_);
  for (std::size_t g = 0; g < G_; ++g) {
    const auto& c = d.cluster(g);
    Eigen::Map<Eigen::MatrixXd>(xtx_.data() + g * k_ * k_, k, k) = c.x.transpose() * c.x;
    Eigen::Map<Eigen::VectorXd>(xty_.data() + g * k_, k) = c.x.transpose() * c.y;
  }
}

PairsBootstrap::Draw PairsBootstrap::evaluate(std::span<const std::size_t> picks) const {
  const auto k = static_cast<Eigen::Index>(k_);
  const double Gd = static_cast<double>(picks.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  for (std::size_t g : picks) {
    a += Eigen::Map<const Eigen::MatrixXd>(xtx_.data() + g * k_ * k_, k, k);
    c += Eigen::Map<const Eigen::VectorXd>(xty_.data() + g * k_, k);
  }
  a /= Gd;
  c /= Gd;

  Draw out;
  Eigen::MatrixXd pi;
  if (k == 1) {
    const double v = a(0, 0);
    pi = Eigen::MatrixXd::Constant(1, 1, v > 0.0 ? 1.0 / v : 0.0);
    out.used_pinv = !(v > 0.0);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double cutoff = kRankTolerance * ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (ev(i) > cutoff && ev(i) > 0.0) {
        inv(i) = 1.0 / ev(i);
      } else {
        inv(i) = 0.0;
        out.used_pinv = true;
      }
    }
    pi = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }

  const Eigen::VectorXd beta = pi * c;
  const Eigen::RowVectorXd w = lambda_.transpose() * pi;
  long double s2 = 0.0L, scale2 = 0.0L;
  for (std::size_t g : picks) {
    const Eigen::Map<const Eigen::MatrixXd> xtx(xtx_.data() + g * k_ * k_, k, k);
    const Eigen::Map<const Eigen::VectorXd> xty(xty_.data() + g * k_, k);
    const double sy = w * xty;
    const double s = sy - w * (xtx * beta);
    s2 += static_cast<long double>(s) * s;
    scale2 += static_cast<long double>(sy) * sy;
  }
  const double sigma = std::sqrt(static_cast<double>(s2 / picks.size()));
  const double scale = std::sqrt(static_cast<double>(scale2 / picks.size()));
  if (!(sigma > 0.0) || sigma <= 1e-12 * scale) {
    out.degenerate = true;
    out.abs_t = kInf;
    return out;
  }
  out.abs_t = std::abs(std::sqrt(Gd) * (lambda_.dot(beta) - estimate_) / sigma);
  return out;
}

BootstrapResult pairs_bootstrap_cv(const ClusteredDataset& d, const ClusterFit& base, std::size_t B,
                                   std::uint64_t key) {
  if (B < 1) throw ArgumentError("bootstrap needs at least one draw");
  const PairsBootstrap boot(d, base);
  const std::size_t G = d.G();
  std::vector<double> abs_t(B);
  std::vector<std::size_t> picks(G);
  std::size_t degenerate = 0, pinv = 0;
  for (std::size_t b = 0; b < B; ++b) {
    rng::CounterStream stream(key, b);
    for (auto& p : picks) p = static_cast<std::size_t>(stream.below(G));
    const auto draw = boot.evaluate(picks);
    abs_t[b] = draw.abs_t;
    degenerate += draw.degenerate ? 1 : 0;
    pinv += draw.used_pinv ? 1 : 0;
  }
  BootstrapResult r = finish(std::move(abs_t), base.hypothesis.alpha, key, true);
  r.degenerate_draws = degenerate;
  r.pinv_draws = pinv;
  return r;
}

// ----------------------------------------------------------------- wild

Eigen::VectorXd restricted_least_squares(const ClusteredDataset& d, const Hypothesis& h) {
  h.check_dimension(d.k());
  const auto k = static_cast<Eigen::Index>(d.k());
  const double ll = h.lambda.squaredNorm();
  const Eigen::VectorXd beta0 = h.lambda * (h.c0 / ll);
  if (k == 1) return beta0;

  // Orthonormal basis of lambda's orthogonal complement.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(h.lambda);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd basis = q.rightCols(k - 1);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k - 1, k - 1);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(k - 1);
  for (const auto& c : d.clusters()) {
    const Eigen::MatrixXd z = c.x * basis;
    m.noalias() += z.transpose() * z;
    r.noalias() += z.transpose() * (c.y - c.x * beta0);
  }
  const Eigen::VectorXd theta = gram_inverse(m) * r;
  return beta0 + basis * theta;
}

WildClusterBootstrap::WildClusterBootstrap(const ClusteredDataset& d, const Hypothesis& h)
    : G_(d.G()), k_(d.k()) {
  beta_tilde_ = restricted_least_squares(d, h);
  pi_ = gram_inverse(gram_mean(d));
  const auto k = static_cast<Eigen::Index>(k_);
  const auto G = static_cast<Eigen::Index>(G_);
  const Eigen::VectorXd pl = pi_.transpose() * h.lambda;
  a_.resize(G);
  b_.resize(k, G);
  s_.resize(k, G);
  long double scale2 = 0.0L;
  for (Eigen::Index g = 0; g < G; ++g) {
    const auto& c = d.cluster(static_cast<std::size_t>(g));
    const Eigen::VectorXd u = c.y - c.x * beta_tilde_;
    s_.col(g) = c.x.transpose() * u;
    b_.col(g) = c.x.transpose() * (c.x * pl);
    a_(g) = pl.dot(s_.col(g));
    scale2 += static_cast<long double>(a_(g)) * a_(g);
  }
  scale_ = std::sqrt(static_cast<double>(scale2 / G_));
}

WildClusterBootstrap::Draw WildClusterBootstrap::evaluate(std::span<const int> signs) const {
  const auto k = static_cast<Eigen::Index>(k_);
  const double Gd = static_cast<double>(G_);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(k);
  long double num = 0.0L;
  for (std::size_t g = 0; g < G_; ++g) {
    const double v = signs[g];
    m += v * s_.col(static_cast<Eigen::Index>(g));
    num += v * a_(static_cast<Eigen::Index>(g));
  }
  // beta* - beta_tilde = Pi mean(v_g X_g'u_tilde_g); lambda'beta_tilde = c0.
  const Eigen::VectorXd delta = pi_ * (m / Gd);
  const double numerator = static_cast<double>(num / G_);
  long double s2 = 0.0L;
  for (std::size_t g = 0; g < G_; ++g) {
    const auto gi = static_cast<Eigen::Index>(g);
    const double s = signs[g] * a_(gi) - b_.col(gi).dot(delta);
    s2 += static_cast<long double>(s) * s;
  }
  const double sigma = std::sqrt(static_cast<double>(s2 / G_));
  Draw out;
  if (!(sigma > 0.0) || sigma <= 1e-12 * scale_) {
    out.degenerate = true;
    out.abs_t = (scale_ == 0.0 || std::abs(numerator) <= 1e-12 * scale_) ? 0.0 : kInf;
    return out;
  }
  out.abs_t = std::abs(std::sqrt(Gd) * numerator / sigma);
  return out;
}

BootstrapResult wild_cluster_bootstrap_cv(const ClusteredDataset& d, const Hypothesis& h, std::size_t B,
                                          std::uint64_t key) {
  if (B < 1) throw ArgumentError("bootstrap needs at least one draw");
  const WildClusterBootstrap boot(d, h);
  const std::size_t G = d.G();
  std::vector<double> abs_t(B);
  std::vector<int> signs(G);
  std::size_t degenerate = 0;
  for (std::size_t b = 0; b < B; ++b) {
    rng::CounterStream stream(key, b);
    std::uint64_t bits = 0;
    for (std::size_t g = 0; g < G; ++g) {
      if (g % 64 == 0) bits = stream();
      signs[g] = (bits & 1u) ? 1 : -1;
      bits >>= 1;
    }
    const auto draw = boot.evaluate(signs);
    abs_t[b] = draw.abs_t;
    degenerate += draw.degenerate ? 1 : 0;
  }
  BootstrapResult r = finish(std::move(abs_t), h.alpha, key, true);
  r.degenerate_draws = degenerate;
  return r;
}

// ------------------------------------------------------------- dispatch

MethodResult evaluate_method(Method m, const ClusteredDataset& d, const ClusterFit& fit, const MethodSettings& s) {
  MethodResult r;
  r.method = m;
  const double alpha = fit.hypothesis.alpha;
  try {
    switch (m) {
      case Method::normal:
        r.cv_effective = normal_quantile(1.0 - alpha / 2.0);
        break;
      case Method::student_d1:
        r.cv_effective = student_cv(d.G(), d.N(), d.k(), StudentVariant::d1, alpha);
        break;
      case Method::student_d2:
        r.cv_effective = student_cv(d.G(), d.N(), d.k(), StudentVariant::d2, alpha);
        break;
      case Method::student_d3:
        r.cv_effective = student_cv(d.G(), d.N(), d.k(), StudentVariant::d3, alpha);
        break;
      case Method::pairs: {
        auto b = pairs_bootstrap_cv(d, fit, s.boot, rng::derive_key({s.boot_key, kPairsTag}));
        if (!s.keep_draws) b.abs_t = {};
        r.cv_effective = b.cv;
        r.bootstrap = std::move(b);
        break;
      }
      case Method::wcb: {
        auto b = wild_cluster_bootstrap_cv(d, fit.hypothesis, s.boot, rng::derive_key({s.boot_key, kWildTag}));
        if (!s.keep_draws) b.abs_t = {};
        r.cv_effective = b.cv;
        r.bootstrap = std::move(b);
        break;
      }
      case Method::analytic: {
        const auto sc = score_components(fit, d);
        auto mom = estimate_moments(sc, s.moments);
        r.corrected = critical_value(mom, fit);
        r.cv_effective = r.corrected->cv;
        r.moments = std::move(mom);
        break;
      }
    }
  } catch (const DomainError& e) {
    r.applicable = false;
    r.note = e.what();
    r.cv_effective = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.reject = std::abs(fit.t_stat) > r.cv_effective;
  return r;
}

}  // namespace ccf
