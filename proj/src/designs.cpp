#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ccf/errors.hpp"
#include "ccf/monte_carlo.hpp"

namespace ccf {

std::string_view design_name(DesignId id) {
  switch (id) {
    case DesignId::bdm1:
      return "bdm1";
    case DesignId::exp2:
      return "exp2";
    case DesignId::binary3:
      return "binary3";
    case DesignId::fe4:
      return "fe4";
  }
  return "?";
}

DesignId parse_design(std::string_view name) {
  if (name == "bdm1" || name == "1") return DesignId::bdm1;
  if (name == "exp2" || name == "2") return DesignId::exp2;
  if (name == "binary3" || name == "3") return DesignId::binary3;
  if (name == "fe4" || name == "4") return DesignId::fe4;
  throw ConfigError("unknown design '" + std::string(name) + "' (expected bdm1, exp2, binary3, fe4)");
}

ClusterSizeRule parse_cluster_size_rule(std::string_view name) {
  if (name == "round") return ClusterSizeRule::round;
  if (name == "floor") return ClusterSizeRule::floor;
  throw ConfigError("unknown cluster size rule '" + std::string(name) + "' (expected round or floor)");
}

GeneratedSample gen_design2(std::size_t G, rng::CounterStream& rng, double alpha) {
  if (G < 2) throw ArgumentError("design exp2 needs G >= 2");
  std::vector<ClusterBlock> blocks;
  blocks.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    ClusterBlock b{std::to_string(g + 1), Eigen::VectorXd::Constant(1, rng.exponential() - 1.0),
                   Eigen::MatrixXd::Ones(1, 1)};
    blocks.push_back(std::move(b));
  }
  return {ClusteredDataset(std::move(blocks), {"(intercept)"}), Hypothesis(Eigen::VectorXd::Ones(1), 0.0, alpha)};
}

GeneratedSample gen_design3(std::size_t G, rng::CounterStream& rng, double alpha) {
  if (G < 2) throw ArgumentError("design binary3 needs G >= 2");
  const std::size_t treated = G / 2;  // clusters g <= G/2, 1-based
  std::vector<ClusterBlock> blocks;
  blocks.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    const double x2 = g < treated ? 1.0 : 0.0;
    const double u = rng.exponential() - 1.0;
    Eigen::MatrixXd x(1, 2);
    x << 1.0, x2;
    blocks.push_back(ClusterBlock{std::to_string(g + 1), Eigen::VectorXd::Constant(1, (2.0 * x2 - 1.0) * u), x});
  }
  Eigen::VectorXd lambda(2);
  lambda << 0.0, 1.0;
  return {ClusteredDataset(std::move(blocks), {"(intercept)", "x"}), Hypothesis(lambda, 0.0, alpha)};
}

std::vector<std::size_t> design4_cluster_sizes(std::size_t G, ClusterSizeRule rule) {
  if (G < 2) throw ArgumentError("design fe4 needs G >= 2");
  const double Gd = static_cast<double>(G);
  double total = 0.0;
  for (std::size_t l = 1; l <= G; ++l) total += std::exp(static_cast<double>(l) / Gd);
  std::vector<std::size_t> sizes(G);
  for (std::size_t g = 1; g <= G; ++g) {
    const double w = 2.0 * Gd * std::exp(static_cast<double>(g) / Gd) / total;
    const double extra = rule == ClusterSizeRule::round ? std::round(w) : std::floor(w);
    sizes[g - 1] = 2 + static_cast<std::size_t>(extra);
  }
  return sizes;
}

GeneratedSample gen_design4(std::size_t G, rng::CounterStream& rng, double alpha, ClusterSizeRule rule) {
  const auto sizes = design4_cluster_sizes(G, rule);
  const std::size_t N = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const double half = static_cast<double>(N) / 2.0;

  std::vector<ClusterBlock> blocks;
  blocks.reserve(G);
  std::size_t j = 0;  // stacked index, 1-based after increment
  for (std::size_t g = 0; g < G; ++g) {
    const auto n = static_cast<Eigen::Index>(sizes[g]);
    ClusterBlock b{std::to_string(g + 1), Eigen::VectorXd(n), Eigen::MatrixXd(n, 1)};
    const double fixed_effect = rng.uniform(0.5, 1.0);
    bool any_one = false, any_zero = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      ++j;
      const double x = (static_cast<double>(j) < half && j % 2 == 1) ? 1.0 : 0.0;
      const double xi = rng.exponential() - 1.0;
      b.x(i, 0) = x;
      b.y(i) = fixed_effect + (2.0 * x - 1.0) * xi;  // beta = 0
      (x == 1.0 ? any_one : any_zero) = true;
    }
    if (any_one && !any_zero) {
      throw DesignIntegrityError("design fe4: cluster " + b.label + " has no within variation in the regressor");
    }
    blocks.push_back(std::move(b));
  }
  ClusteredDataset raw(std::move(blocks), {"x"});
  ClusteredDataset within = within_transform(raw);
  bool any_variation = false;
  for (const auto& c : within.clusters()) any_variation = any_variation || !c.x.isZero(0.0);
  if (!any_variation) throw DesignIntegrityError("design fe4: transformed regressor is identically zero");
  return {std::move(within), Hypothesis(Eigen::VectorXd::Ones(1), 0.0, alpha)};
}

GeneratedSample gen_design1(const StatePanel& panel, std::size_t G, rng::CounterStream& rng, double alpha) {
  if (G < 2 || G % 2 != 0) throw ArgumentError("design bdm1 needs an even G >= 2");
  if (panel.states.size() < 50) {
    throw ValidationError("design bdm1 needs a panel with at least 50 states, got " +
                          std::to_string(panel.states.size()));
  }
  const std::size_t S = panel.states.size();
  const std::size_t T = panel.years();

  std::vector<std::size_t> draws(G);
  for (auto& s : draws) s = static_cast<std::size_t>(rng.below(S));
  const int policy_year = 1984 + static_cast<int>(rng.below(10));
  std::vector<std::size_t> order(G);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = G - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);
  std::vector<bool> treated(G, false);
  for (std::size_t i = 0; i < G / 2; ++i) treated[order[i]] = true;

  std::vector<ClusterBlock> blocks;
  blocks.reserve(G);
  Factor years(G);
  for (std::size_t g = 0; g < G; ++g) {
    const auto n = static_cast<Eigen::Index>(T);
    ClusterBlock b{"draw" + std::to_string(g + 1) + ":" + panel.states[draws[g]], Eigen::VectorXd(n),
                   Eigen::MatrixXd(n, 2)};
    for (Eigen::Index t = 0; t < n; ++t) {
      const int year = panel.first_year + static_cast<int>(t);
      b.y(t) = panel.outcome(static_cast<Eigen::Index>(draws[g]), t);
      b.x(t, 0) = 1.0;
      b.x(t, 1) = (treated[g] && year > policy_year) ? 1.0 : 0.0;
      years[g].push_back(std::to_string(year));
    }
    blocks.push_back(std::move(b));
  }
  ClusteredDataset base(std::move(blocks), {"(intercept)", "policy"});
  auto with_years = add_dummies(base, years, "year");
  auto with_states = add_dummies(with_years.data, cluster_factor(with_years.data), "state");
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(with_states.data.k()));
  lambda(1) = 1.0;
  return {std::move(with_states.data), Hypothesis(lambda, 0.0, alpha)};
}

StatePanel StatePanel::read(std::istream& in, const std::string& state_col, const std::string& year_col,
                            const std::string& outcome_col, int first_year, int last_year) {
  if (last_year < first_year) throw ArgumentError("panel year window is empty");
  PanelSchema schema;
  schema.cluster_col = state_col;
  schema.y_col = outcome_col;
  schema.x_cols = {year_col};
  const LoadedPanel loaded = read_panel(in, schema);

  StatePanel p;
  p.first_year = first_year;
  p.last_year = last_year;
  const auto T = static_cast<Eigen::Index>(p.years());
  p.outcome.resize(static_cast<Eigen::Index>(loaded.data.G()), T);
  for (std::size_t s = 0; s < loaded.data.G(); ++s) {
    const auto& c = loaded.data.cluster(s);
    std::vector<bool> seen(static_cast<std::size_t>(T), false);
    for (Eigen::Index i = 0; i < c.y.size(); ++i) {
      const double yr = c.x(i, 0);
      if (yr != std::floor(yr)) throw ValidationError("state " + c.label + ": non-integer year");
      const int year = static_cast<int>(yr);
      if (year < first_year || year > last_year) continue;
      const auto t = static_cast<std::size_t>(year - first_year);
      if (seen[t]) throw ValidationError("state " + c.label + ": duplicate year " + std::to_string(year));
      seen[t] = true;
      p.outcome(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = c.y(i);
    }
    for (std::size_t t = 0; t < seen.size(); ++t) {
      if (!seen[t]) {
        throw ValidationError("state " + c.label + ": missing year " + std::to_string(first_year + static_cast<int>(t)));
      }
    }
    p.states.push_back(c.label);
  }
  return p;
}

StatePanel StatePanel::load(const std::filesystem::path& path, const std::string& state_col,
                            const std::string& year_col, const std::string& outcome_col, int first_year,
                            int last_year) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open panel file '" + path.string() + "'");
  return read(in, state_col, year_col, outcome_col, first_year, last_year);
}

}  // namespace ccf
