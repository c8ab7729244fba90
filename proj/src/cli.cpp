#include "ccf/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ccf/data_model.hpp"
#include "ccf/edgeworth.hpp"
#include "ccf/errors.hpp"
#include "ccf/monte_carlo.hpp"
#include "ccf/ols_cluster.hpp"
#include "ccf/reference_methods.hpp"
#include "ccf/report.hpp"

namespace ccf::cli {

namespace {

char parse_delimiter(const std::string& d) {
  if (d == "\\t" || d == "tab") return '\t';
  if (d.size() != 1) throw ConfigError("delimiter must be a single character (or 'tab')");
  return d[0];
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  return f;
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

nlohmann::ordered_json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

void cmd_infer(const RunConfig& cfg, std::ostream& out) {
  if (cfg.data.empty()) throw ConfigError("--data is required");
  if (cfg.cluster_col.empty()) throw ConfigError("--cluster-col is required");
  if (cfg.y_col.empty()) throw ConfigError("--y-col is required");
  if (cfg.x_cols.empty() && !cfg.intercept) throw ConfigError("--x-cols (or --intercept) is required");

  PanelSchema schema;
  schema.cluster_col = cfg.cluster_col;
  schema.y_col = cfg.y_col;
  schema.x_cols = cfg.x_cols;
  schema.intercept = cfg.intercept;
  schema.delimiter = parse_delimiter(cfg.delimiter);
  for (const auto& f : cfg.dummies) {
    if (f != cfg.cluster_col) schema.factor_cols.push_back(f);
  }
  LoadedPanel loaded = load_panel(cfg.data, schema);
  ClusteredDataset data = loaded.data;
  const std::size_t base_k = data.k();
  for (const auto& f : cfg.dummies) {
    const Factor factor = f == cfg.cluster_col ? cluster_factor(data) : loaded.factors.at(f);
    auto expanded = add_dummies(data, factor, f);
    if (expanded.single_level) out << "warning: factor '" << f << "' has a single level; no dummies added\n";
    data = std::move(expanded.data);
  }
  if (cfg.within) data = within_transform(data);

  const std::size_t k = data.k();
  Eigen::VectorXd lambda;
  if (cfg.lambda.empty()) {
    if (k != 1) throw ArgumentError("--lambda is required when the model has more than one regressor");
    lambda = Eigen::VectorXd::Ones(1);
  } else if (cfg.lambda.size() == k) {
    lambda = Eigen::Map<const Eigen::VectorXd>(cfg.lambda.data(), static_cast<Eigen::Index>(k));
  } else if (cfg.lambda.size() == base_k && k > base_k) {
    // Weights given for the loaded columns only; appended dummies get 0.
    lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < base_k; ++j) lambda(static_cast<Eigen::Index>(j)) = cfg.lambda[j];
  } else {
    throw ArgumentError("--lambda has " + std::to_string(cfg.lambda.size()) + " weights but the model has k=" +
                        std::to_string(k) + " regressors");
  }
  const Hypothesis h(lambda, cfg.null_value, cfg.alpha);
  const auto methods = parse_methods(cfg.methods.empty() ? "analytic,normal,student_d1" : cfg.methods);

  const ClusterFit f = fit(data, h);
  MethodSettings settings;
  settings.boot = cfg.boot;
  settings.boot_key = rng::derive_key({cfg.seed, 0x494E464552ull});  // "INFER"
  settings.moments.truncation = cfg.truncation;

  std::vector<MethodResult> results;
  for (Method m : methods) results.push_back(evaluate_method(m, data, f, settings));

  const auto prec = out.precision(6);
  out << "clusters G=" << data.G() << "  observations N=" << data.N() << "  regressors k=" << k << '\n';
  out << "coefficients:\n";
  for (std::size_t j = 0; j < k; ++j) {
    out << "  " << std::left << std::setw(24) << data.x_names()[j] << std::right << std::setw(14)
        << f.beta_hat(static_cast<Eigen::Index>(j)) << '\n';
  }
  out << "lambda'beta_hat = " << f.estimate << "   c0 = " << h.c0 << "   sigma_hat = " << f.sigma_hat
      << "   t = " << f.t_stat << "   alpha = " << h.alpha << '\n';
  out << std::left << std::setw(12) << "method" << std::right << std::setw(12) << "cv" << std::setw(18)
      << "decision" << std::setw(16) << "ci_lo" << std::setw(16) << "ci_hi" << '\n';
  for (const auto& r : results) {
    out << std::left << std::setw(12) << method_name(r.method) << std::right;
    if (!r.applicable) {
      out << std::setw(12) << "NA" << "   (" << r.note << ")\n";
      continue;
    }
    const auto ci = confidence_interval(f, r.cv_effective);
    out << std::setw(12) << format_number(r.cv_effective, 6) << std::setw(18)
        << (r.reject ? "reject" : "fail-to-reject") << std::setw(16) << format_number(ci.lo, 6) << std::setw(16)
        << format_number(ci.hi, 6) << '\n';
  }
  for (const auto& r : results) {
    if (r.moments) {
      const auto& kc = r.moments->kcum;
      out << "analytic: k1=" << kc.k1 << " k2=" << kc.k2 << " k3=" << kc.k3 << " k4=" << kc.k4
          << "  q2_hat(z0)=" << r.corrected->q2_at_z0 << "  z0=" << r.corrected->z0 << "  G=" << f.G << '\n';
      if (r.corrected->cv_negative()) out << "warning: analytic critical value is negative\n";
      if (r.moments->k2_negative()) out << "warning: estimated k2 is negative\n";
    }
    if (r.bootstrap && (r.bootstrap->degenerate_draws > 0 || r.bootstrap->pinv_draws > 0)) {
      out << method_name(r.method) << ": " << r.bootstrap->draws << " draws, " << r.bootstrap->degenerate_draws
          << " degenerate, " << r.bootstrap->pinv_draws << " pseudo-inverse\n";
    }
  }
  out.precision(prec);

  if (!cfg.out.empty()) {
    auto csv = open_output(cfg.out);
    csv << "method,cv,reject,ci_lo,ci_hi\n";
    for (const auto& r : results) {
      if (!r.applicable) {
        csv << method_name(r.method) << ",NA,NA,NA,NA\n";
        continue;
      }
      const auto ci = confidence_interval(f, r.cv_effective);
      csv << method_name(r.method) << ',' << format_number(r.cv_effective, 10) << ',' << (r.reject ? 1 : 0) << ','
          << format_number(ci.lo, 10) << ',' << format_number(ci.hi, 10) << '\n';
    }
  }
  if (!cfg.report.empty()) {
    nlohmann::ordered_json j;
    j["format_version"] = kReportFormatVersion;
    j["command"] = "infer";
    j["G"] = data.G();
    j["N"] = data.N();
    j["k"] = k;
    j["x_names"] = data.x_names();
    j["beta_hat"] = std::vector<double>(f.beta_hat.data(), f.beta_hat.data() + f.beta_hat.size());
    j["lambda"] = std::vector<double>(lambda.data(), lambda.data() + lambda.size());
    j["c0"] = h.c0;
    j["alpha"] = h.alpha;
    j["estimate"] = f.estimate;
    j["sigma_hat"] = f.sigma_hat;
    j["t_stat"] = f.t_stat;
    j["seed"] = cfg.seed;
    auto& arr = j["methods"];
    arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
      nlohmann::ordered_json e;
      e["method"] = method_name(r.method);
      e["applicable"] = r.applicable;
      if (r.applicable) {
        const auto ci = confidence_interval(f, r.cv_effective);
        e["cv"] = json_number(r.cv_effective);
        e["reject"] = r.reject;
        e["ci"] = {json_number(ci.lo), json_number(ci.hi)};
      }
      if (r.bootstrap) {
        e["boot"] = r.bootstrap->draws;
        e["degenerate_draws"] = r.bootstrap->degenerate_draws;
        e["pinv_draws"] = r.bootstrap->pinv_draws;
      }
      if (r.moments) {
        const auto& kc = r.moments->kcum;
        e["cumulants"] = {kc.k1, kc.k2, kc.k3, kc.k4};
        e["q2_at_z0"] = r.corrected->q2_at_z0;
        e["z0"] = r.corrected->z0;
      }
      arr.push_back(std::move(e));
    }
    auto f_out = open_output(cfg.report);
    f_out << j.dump(2) << '\n';
  }
}

void cmd_mc(const RunConfig& cfg, std::ostream& out) {
  if (cfg.designs.empty()) throw ConfigError("--design is required");
  GridConfig grid;
  for (const auto& d : cfg.designs) grid.designs.push_back(parse_design(d));
  grid.G_list = cfg.G_list.empty() ? std::vector<std::size_t>{10, 25, 50, 75, 100, 200} : cfg.G_list;
  grid.methods = parse_methods(cfg.methods.empty() ? "normal,student_d1,pairs,wcb,analytic" : cfg.methods);
  grid.reps = cfg.reps;
  grid.boot = cfg.boot;
  grid.alpha = cfg.alpha;
  grid.seed = cfg.seed;
  grid.threads = cfg.threads;
  grid.cluster_size_rule = parse_cluster_size_rule(cfg.cluster_size_rule);
  grid.moments.truncation = cfg.truncation;

  std::optional<StatePanel> panel;
  const bool needs_panel =
      std::find(grid.designs.begin(), grid.designs.end(), DesignId::bdm1) != grid.designs.end();
  if (needs_panel) {
    if (cfg.panel.empty()) throw ConfigError("design bdm1 needs --panel <state-year csv>");
    panel = StatePanel::load(cfg.panel, cfg.cluster_col.empty() ? "state" : cfg.cluster_col, cfg.year_col,
                             cfg.y_col.empty() ? "lnwage" : cfg.y_col);
    grid.panel = &*panel;
  }

  const GridOutput res = run_grid(grid);
  print_grid(out, grid, res);
  if (!cfg.out.empty()) {
    auto rates = open_output(cfg.out);
    write_rate_table_csv(rates, grid, res);
    auto cvs = open_output(sibling_path(cfg.out, "_cv"));
    write_cv_table_csv(cvs, grid, res);
  }
  if (!cfg.report.empty()) {
    auto f = open_output(cfg.report);
    f << grid_report(grid, res).dump(2) << '\n';
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Edgeworth-corrected cluster-robust inference for linear regression"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags override it");
  app.require_subcommand(1);

  double truncation = 0.0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--alpha", cfg.alpha, "Significance level in (0,1)")->capture_default_str();
    sub->add_option("--methods", cfg.methods,
                    "Comma list of normal,student_d1,student_d2,student_d3,pairs,wcb,analytic");
    sub->add_option("--boot", cfg.boot, "Bootstrap draws per bootstrap method")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Seed for all randomness")->capture_default_str();
    sub->add_option("--truncation", truncation, "Winsorize per-cluster moment summands at +/- this value");
    sub->add_option("--out", cfg.out, "Write delimited results to this file");
    sub->add_option("--report", cfg.report, "Write a structured JSON report to this file");
  };

  auto* infer = app.add_subcommand("infer", "Test lambda'beta = c0 on a clustered dataset");
  infer->add_option("--data", cfg.data, "Delimited text file with a header row");
  infer->add_option("--cluster-col", cfg.cluster_col, "Cluster identifier column");
  infer->add_option("--y-col", cfg.y_col, "Outcome column");
  infer->add_option("--x-cols", cfg.x_cols, "Regressor columns (comma list)")->delimiter(',');
  infer->add_flag("--intercept", cfg.intercept, "Append a constant regressor");
  infer->add_option("--delimiter", cfg.delimiter, "Field delimiter (single character or 'tab')")
      ->capture_default_str();
  infer->add_flag("--within", cfg.within, "Demean all variables within clusters (cluster fixed effects)");
  infer->add_option("--dummies", cfg.dummies, "Add 0/1 dummies for a categorical column (repeatable)")
      ->delimiter(',');
  infer->add_option("--lambda", cfg.lambda, "Weights lambda (comma list; length k or number of loaded columns)")
      ->delimiter(',');
  infer->add_option("--null", cfg.null_value, "Hypothesized value c0 of lambda'beta")->capture_default_str();
  add_common(infer);

  std::string designs;
  auto* mc = app.add_subcommand("mc", "Monte Carlo size study over simulation designs");
  mc->add_option("--design", cfg.designs, "Designs: bdm1, exp2, binary3, fe4 (comma list)")->delimiter(',');
  mc->add_option("--G", cfg.G_list, "Cluster counts (comma list, default 10,25,50,75,100,200)")->delimiter(',');
  mc->add_option("--reps", cfg.reps, "Monte Carlo replications per (design, G)")->capture_default_str();
  mc->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")
      ->envname("CE_THREADS")
      ->capture_default_str();
  mc->add_option("--panel", cfg.panel, "State-year panel for design bdm1");
  mc->add_option("--cluster-col", cfg.cluster_col, "Panel state column (default state)");
  mc->add_option("--y-col", cfg.y_col, "Panel outcome column (default lnwage)");
  mc->add_option("--year-col", cfg.year_col, "Panel year column")->capture_default_str();
  mc->add_option("--cluster-size-rule", cfg.cluster_size_rule, "Design fe4 cluster sizes: round or floor")
      ->capture_default_str();
  add_common(mc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (app.get_subcommand("infer")->parsed() ? infer->count("--truncation") > 0 : mc->count("--truncation") > 0) {
    cfg.truncation = truncation;
  }

  try {
    if (infer->parsed()) {
      cfg.command = "infer";
      cmd_infer(cfg, out);
    } else {
      cfg.command = "mc";
      cmd_mc(cfg, out);
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}

}  // namespace ccf::cli
