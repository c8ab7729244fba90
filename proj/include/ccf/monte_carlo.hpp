#pragma once

// Simulation designs and the Monte Carlo grid runner.
//
//   bdm1    placebo policy on a state-year outcome panel (needs a panel file)
//   exp2    N_g = 1, X = 1, demeaned unit exponential outcome
//   binary3 N_g = 1, X_g = (1,1) for the first half else (1,0), sign-flipped
//           exponential errors, test on the second coefficient
//   fe4     unequal cluster sizes, binary within-cluster regressor, cluster
//           fixed effects removed by the within transformation

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ccf/data_model.hpp"
#include "ccf/edgeworth.hpp"
#include "ccf/reference_methods.hpp"
#include "ccf/rng.hpp"

namespace ccf {

enum class DesignId { bdm1 = 1, exp2 = 2, binary3 = 3, fe4 = 4 };

std::string_view design_name(DesignId id);
// Accepts bdm1/exp2/binary3/fe4 and the bare numbers 1-4; ConfigError otherwise.
DesignId parse_design(std::string_view name);

// Rounding of the design-4 cluster-size weights 2G exp(g/G) / sum_l exp(l/G).
enum class ClusterSizeRule { round, floor };
ClusterSizeRule parse_cluster_size_rule(std::string_view name);

struct GeneratedSample {
  ClusteredDataset data;
  Hypothesis hypothesis;
};

// Balanced state-by-year outcome panel.
struct StatePanel {
  std::vector<std::string> states;  // first-appearance order
  int first_year = 1979;
  int last_year = 1999;
  Eigen::MatrixXd outcome;  // states x years

  std::size_t years() const { return static_cast<std::size_t>(last_year - first_year + 1); }

  // Requires every state to have exactly one row per year in
  // [first_year, last_year]; rows outside the window are ignored.
  // Throws SchemaError/ParseError/ValidationError.
  static StatePanel read(std::istream& in, const std::string& state_col, const std::string& year_col,
                         const std::string& outcome_col, int first_year = 1979, int last_year = 1999);
  static StatePanel load(const std::filesystem::path& path, const std::string& state_col,
                         const std::string& year_col, const std::string& outcome_col, int first_year = 1979,
                         int last_year = 1999);
};

GeneratedSample gen_design2(std::size_t G, rng::CounterStream& rng, double alpha = 0.05);
// X_g2 = 1 for the first floor(G/2) clusters.
GeneratedSample gen_design3(std::size_t G, rng::CounterStream& rng, double alpha = 0.05);
// Returns the within-transformed sample. Throws DesignIntegrityError if the
// regressor loses its within-cluster variation where it should have it.
GeneratedSample gen_design4(std::size_t G, rng::CounterStream& rng, double alpha = 0.05,
                            ClusterSizeRule rule = ClusterSizeRule::round);
// Throws ArgumentError for odd G, ValidationError if the panel has fewer
// than 50 states.
GeneratedSample gen_design1(const StatePanel& panel, std::size_t G, rng::CounterStream& rng, double alpha = 0.05);

// N_1..N_G for design 4.
std::vector<std::size_t> design4_cluster_sizes(std::size_t G, ClusterSizeRule rule);

struct GridConfig {
  std::vector<DesignId> designs;
  std::vector<std::size_t> G_list;
  std::vector<Method> methods;
  std::size_t reps = 1000;
  std::size_t boot = 399;
  double alpha = 0.05;
  std::uint64_t seed = 20240917;
  unsigned threads = 1;
  const StatePanel* panel = nullptr;
  ClusterSizeRule cluster_size_rule = ClusterSizeRule::round;
  MomentOptions moments;
};

struct McResult {
  DesignId design = DesignId::exp2;
  std::size_t G = 0;
  Method method = Method::normal;
  double alpha = 0.05;
  double reject_rate = 0.0;  // over applicable replications; NaN if none
  double reject_se = 0.0;    // sqrt(p(1-p)/reps)
  double median_cv = 0.0;
  std::size_t reps = 0;             // applicable replications
  std::size_t boot = 0;
  std::size_t degenerate_count = 0;  // degenerate bootstrap draws, summed
  std::size_t pinv_count = 0;        // pairs draws with a pseudo-inverted Gram, summed
  double wall_time = 0.0;            // seconds for the whole (design, G) cell
};

// Per-(design, G) quantities that are not tied to a method.
struct CellSummary {
  DesignId design = DesignId::exp2;
  std::size_t G = 0;
  std::size_t reps = 0;             // replications requested
  std::size_t failed_fits = 0;      // singular / zero-variance samples skipped
  double simulated_cv = 0.0;        // ceil(reps (1-alpha))-th order statistic of |t|
  double median_q2 = 0.0;           // median of q2_hat(z0) across replications
  double wall_time = 0.0;
};

struct GridOutput {
  std::vector<McResult> results;  // design-major, then G, then method order
  std::vector<CellSummary> cells;
};

// Stream key for replication `rep` of (design, G).
std::uint64_t replication_key(std::uint64_t seed, DesignId design, std::size_t G, std::size_t rep);

// Generates one replication's sample.
GeneratedSample generate(DesignId design, std::size_t G, std::uint64_t key, const GridConfig& cfg);

// Throws ConfigError for invalid grids (bdm1 without a panel, empty lists,
// reps = 0, boot = 0 with a bootstrap method, odd G for design 1).
GridOutput run_grid(const GridConfig& cfg);

}  // namespace ccf
