#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "ccf/monte_carlo.hpp"

namespace ccf {

inline constexpr int kReportFormatVersion = 1;

// Fixed-precision formatting; "inf" / "NA" for non-finite values.
std::string format_number(double v, int decimals = 4);

// Appendix-style tables: one row per (design, G), one column per method.
void write_rate_table_csv(std::ostream& out, const GridConfig& cfg, const GridOutput& res);
void write_cv_table_csv(std::ostream& out, const GridConfig& cfg, const GridOutput& res);

// Human-readable tables for stdout (includes timing).
void print_grid(std::ostream& out, const GridConfig& cfg, const GridOutput& res);

// Structured report; excludes timing and thread count so that identical
// configurations produce identical bytes.
nlohmann::ordered_json grid_report(const GridConfig& cfg, const GridOutput& res);

}  // namespace ccf
