#include "ccf/monte_carlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "ccf/errors.hpp"
#include "ccf/numerics.hpp"
#include "ccf/ols_cluster.hpp"

namespace ccf {

std::uint64_t replication_key(std::uint64_t seed, DesignId design, std::size_t G, std::size_t rep) {
  return rng::derive_key({seed, static_cast<std::uint64_t>(design), G, rep});
}

GeneratedSample generate(DesignId design, std::size_t G, std::uint64_t key, const GridConfig& cfg) {
  rng::CounterStream stream(key, 0);
  switch (design) {
    case DesignId::bdm1:
      if (cfg.panel == nullptr) throw ConfigError("design bdm1 needs a state-year panel (--panel)");
      return gen_design1(*cfg.panel, G, stream, cfg.alpha);
    case DesignId::exp2:
      return gen_design2(G, stream, cfg.alpha);
    case DesignId::binary3:
      return gen_design3(G, stream, cfg.alpha);
    case DesignId::fe4:
      return gen_design4(G, stream, cfg.alpha, cfg.cluster_size_rule);
  }
  throw ConfigError("unknown design");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate(const GridConfig& cfg) {
  if (cfg.designs.empty()) throw ConfigError("no designs requested");
  if (cfg.G_list.empty()) throw ConfigError("no cluster counts requested");
  if (cfg.methods.empty()) throw ConfigError("no methods requested");
  if (cfg.reps < 1) throw ConfigError("reps must be at least 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  for (Method m : cfg.methods) {
    if (is_bootstrap(m) && cfg.boot < 1) throw ConfigError("boot must be at least 1 for bootstrap methods");
  }
  for (DesignId d : cfg.designs) {
    if (d == DesignId::bdm1 && cfg.panel == nullptr) {
      throw ConfigError("design bdm1 needs a state-year panel (--panel)");
    }
    for (std::size_t G : cfg.G_list) {
      if (G < 2) throw ConfigError("every G must be at least 2");
      if (d == DesignId::bdm1 && G % 2 != 0) {
        throw ConfigError("design " + std::string(design_name(d)) + " needs even G, got " + std::to_string(G));
      }
    }
  }
}

// Per-replication record; one slot per replication so the reduction is
// independent of scheduling.
struct RepRecord {
  bool fit_ok = false;
  double abs_t = kNaN;
  double q2 = kNaN;
  std::vector<double> cv;        // per method; NaN if not applicable
  std::vector<signed char> rej;  // 1 / 0, -1 if not applicable
  std::vector<std::size_t> degenerate;
  std::vector<std::size_t> pinv;
};

void run_cell(const GridConfig& cfg, DesignId design, std::size_t G, std::vector<RepRecord>& records) {
  const std::size_t M = cfg.methods.size();
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= cfg.reps) return;
      try {
        RepRecord& r = records[rep];
        r.cv.assign(M, kNaN);
        r.rej.assign(M, -1);
        r.degenerate.assign(M, 0);
        r.pinv.assign(M, 0);
        const std::uint64_t key = replication_key(cfg.seed, design, G, rep);
        const GeneratedSample sample = generate(design, G, key, cfg);
        std::optional<ClusterFit> f;
        try {
          f.emplace(fit(sample.data, sample.hypothesis));
        } catch (const NumericalError&) {
          continue;  // counted as a failed fit
        }
        r.fit_ok = true;
        r.abs_t = std::abs(f->t_stat);
        MethodSettings settings;
        settings.boot = cfg.boot;
        settings.boot_key = rng::derive_key({key, 0xB007ull});
        settings.moments = cfg.moments;
        for (std::size_t m = 0; m < M; ++m) {
          const MethodResult res = evaluate_method(cfg.methods[m], sample.data, *f, settings);
          if (!res.applicable) continue;
          r.cv[m] = res.cv_effective;
          r.rej[m] = res.reject ? 1 : 0;
          if (res.bootstrap) {
            r.degenerate[m] = res.bootstrap->degenerate_draws;
            r.pinv[m] = res.bootstrap->pinv_draws;
          }
          if (res.corrected) r.q2 = res.corrected->q2_at_z0;
        }
        if (std::isnan(r.q2)) {
          // Track the estimated correction even when analytic is not requested.
          const auto mom = estimate_moments(score_components(*f, sample.data), cfg.moments);
          r.q2 = critical_value(mom, G, cfg.alpha).q2_at_z0;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cfg.reps);
        return;
      }
    }
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.reps));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

GridOutput run_grid(const GridConfig& cfg) {
  validate(cfg);
  GridOutput out;
  const std::size_t M = cfg.methods.size();
  for (DesignId design : cfg.designs) {
    for (std::size_t G : cfg.G_list) {
      const auto start = std::chrono::steady_clock::now();
      std::vector<RepRecord> records(cfg.reps);
      run_cell(cfg, design, G, records);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      CellSummary cell;
      cell.design = design;
      cell.G = G;
      cell.reps = cfg.reps;
      cell.wall_time = elapsed;
      std::vector<double> abs_t, q2s;
      for (const auto& r : records) {
        if (!r.fit_ok) {
          ++cell.failed_fits;
          continue;
        }
        abs_t.push_back(r.abs_t);
        q2s.push_back(r.q2);
      }
      cell.simulated_cv =
          abs_t.empty() ? kNaN
                        : order_statistic(abs_t, std::min(abs_t.size(),
                                                          std::max<std::size_t>(1, robust_ceil(static_cast<double>(
                                                                                       abs_t.size()) *
                                                                                   (1.0 - cfg.alpha)))));
      cell.median_q2 = median(q2s);
      out.cells.push_back(cell);

      for (std::size_t m = 0; m < M; ++m) {
        McResult res;
        res.design = design;
        res.G = G;
        res.method = cfg.methods[m];
        res.alpha = cfg.alpha;
        res.boot = is_bootstrap(res.method) ? cfg.boot : 0;
        res.wall_time = elapsed;
        std::size_t rejections = 0;
        std::vector<double> cvs;
        for (const auto& r : records) {
          if (!r.fit_ok || r.rej[m] < 0) continue;
          ++res.reps;
          rejections += static_cast<std::size_t>(r.rej[m]);
          cvs.push_back(r.cv[m]);
          res.degenerate_count += r.degenerate[m];
          res.pinv_count += r.pinv[m];
        }
        if (res.reps == 0) {
          res.reject_rate = res.reject_se = res.median_cv = kNaN;
        } else {
          const double p = static_cast<double>(rejections) / static_cast<double>(res.reps);
          res.reject_rate = p;
          res.reject_se = std::sqrt(p * (1.0 - p) / static_cast<double>(res.reps));
          res.median_cv = median(cvs);
        }
        out.results.push_back(res);
      }
    }
  }
  return out;
}

}  // namespace ccf
