#include "ccf/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>

namespace ccf {

std::string format_number(double v, int decimals) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

namespace {

const McResult* find(const GridOutput& res, DesignId d, std::size_t G, Method m) {
  for (const auto& r : res.results) {
    if (r.design == d && r.G == G && r.method == m) return &r;
  }
  return nullptr;
}

const CellSummary* find_cell(const GridOutput& res, DesignId d, std::size_t G) {
  for (const auto& c : res.cells) {
    if (c.design == d && c.G == G) return &c;
  }
  return nullptr;
}

nlohmann::ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

void write_rate_table_csv(std::ostream& out, const GridConfig& cfg, const GridOutput& res) {
  out << "design,G";
  for (Method m : cfg.methods) out << ',' << method_name(m);
  out << '\n';
  for (DesignId d : cfg.designs) {
    for (std::size_t G : cfg.G_list) {
      out << design_name(d) << ',' << G;
      for (Method m : cfg.methods) {
        const McResult* r = find(res, d, G, m);
        out << ',' << format_number(r ? r->reject_rate : NAN);
      }
      out << '\n';
    }
  }
}

void write_cv_table_csv(std::ostream& out, const GridConfig& cfg, const GridOutput& res) {
  out << "design,G";
  for (Method m : cfg.methods) out << ',' << method_name(m);
  out << ",simulated,median_q2\n";
  for (DesignId d : cfg.designs) {
    for (std::size_t G : cfg.G_list) {
      out << design_name(d) << ',' << G;
      for (Method m : cfg.methods) {
        const McResult* r = find(res, d, G, m);
        out << ',' << format_number(r ? r->median_cv : NAN);
      }
      const CellSummary* c = find_cell(res, d, G);
      out << ',' << format_number(c ? c->simulated_cv : NAN) << ',' << format_number(c ? c->median_q2 : NAN)
          << '\n';
    }
  }
}

void print_grid(std::ostream& out, const GridConfig& cfg, const GridOutput& res) {
  auto header = [&](const char* title, bool extra) {
    out << title << '\n' << std::setw(8) << "design" << std::setw(6) << "G";
    for (Method m : cfg.methods) out << std::setw(12) << method_name(m);
    if (extra) out << std::setw(12) << "simulated" << std::setw(12) << "median_q2";
    out << '\n';
  };
  header("Rejection probabilities (MC standard error in brackets below)", false);
  for (DesignId d : cfg.designs) {
    for (std::size_t G : cfg.G_list) {
      out << std::setw(8) << design_name(d) << std::setw(6) << G;
      for (Method m : cfg.methods) {
        const McResult* r = find(res, d, G, m);
        out << std::setw(12) << format_number(r ? r->reject_rate : NAN, 3);
      }
      out << '\n' << std::setw(14) << "";
      for (Method m : cfg.methods) {
        const McResult* r = find(res, d, G, m);
        out << std::setw(12) << ("[" + format_number(r ? r->reject_se : NAN, 3) + "]");
      }
      out << '\n';
    }
  }
  out << '\n';
  header("Median critical values", true);
  for (DesignId d : cfg.designs) {
    for (std::size_t G : cfg.G_list) {
      out << std::setw(8) << design_name(d) << std::setw(6) << G;
      for (Method m : cfg.methods) {
        const McResult* r = find(res, d, G, m);
        out << std::setw(12) << format_number(r ? r->median_cv : NAN, 3);
      }
      const CellSummary* c = find_cell(res, d, G);
      out << std::setw(12) << format_number(c ? c->simulated_cv : NAN, 3) << std::setw(12)
          << format_number(c ? c->median_q2 : NAN, 3) << '\n';
    }
  }
  out << '\n' << "reps=" << cfg.reps << " boot=" << cfg.boot << " alpha=" << cfg.alpha << " seed=" << cfg.seed
      << '\n';
  for (const auto& c : res.cells) {
    out << "  " << design_name(c.design) << " G=" << c.G << ": " << format_number(c.wall_time, 2) << " s";
    if (c.failed_fits > 0) out << ", " << c.failed_fits << " singular/degenerate samples skipped";
    out << '\n';
  }
}

nlohmann::ordered_json grid_report(const GridConfig& cfg, const GridOutput& res) {
  nlohmann::ordered_json j;
  j["format_version"] = kReportFormatVersion;
  auto& c = j["config"];
  c["designs"] = nlohmann::ordered_json::array();
  for (DesignId d : cfg.designs) c["designs"].push_back(design_name(d));
  c["G"] = cfg.G_list;
  c["methods"] = nlohmann::ordered_json::array();
  for (Method m : cfg.methods) c["methods"].push_back(method_name(m));
  c["reps"] = cfg.reps;
  c["boot"] = cfg.boot;
  c["alpha"] = cfg.alpha;
  c["seed"] = cfg.seed;
  c["cluster_size_rule"] = cfg.cluster_size_rule == ClusterSizeRule::round ? "round" : "floor";
  c["truncation"] = cfg.moments.truncation ? nlohmann::ordered_json(*cfg.moments.truncation) : nullptr;

  auto& records = j["records"];
  records = nlohmann::ordered_json::array();
  for (const auto& r : res.results) {
    nlohmann::ordered_json e;
    e["design"] = design_name(r.design);
    e["G"] = r.G;
    e["method"] = method_name(r.method);
    e["alpha"] = r.alpha;
    e["reps"] = r.reps;
    e["boot"] = r.boot;
    e["seed"] = cfg.seed;
    e["reject_rate"] = number_or_null(r.reject_rate);
    e["reject_se"] = number_or_null(r.reject_se);
    e["median_cv"] = number_or_null(r.median_cv);
    e["degenerate_count"] = r.degenerate_count;
    e["pinv_count"] = r.pinv_count;
    records.push_back(std::move(e));
  }
  auto& cells = j["cells"];
  cells = nlohmann::ordered_json::array();
  for (const auto& cs : res.cells) {
    nlohmann::ordered_json e;
    e["design"] = design_name(cs.design);
    e["G"] = cs.G;
    e["reps"] = cs.reps;
    e["failed_fits"] = cs.failed_fits;
    e["simulated_cv"] = number_or_null(cs.simulated_cv);
    e["median_q2"] = number_or_null(cs.median_q2);
    cells.push_back(std::move(e));
  }
  return j;
}

}  // namespace ccf
