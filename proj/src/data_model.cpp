#include "ccf/data_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "ccf/errors.hpp"

namespace ccf {

ClusteredDataset::ClusteredDataset(std::vector<ClusterBlock> clusters, std::vector<std::string> x_names)
    : clusters_(std::move(clusters)), x_names_(std::move(x_names)) {
  if (clusters_.size() < 2) {
    throw ValidationError("dataset needs at least 2 clusters, got " + std::to_string(clusters_.size()));
  }
  k_ = static_cast<std::size_t>(clusters_.front().x.cols());
  if (k_ == 0) throw ValidationError("dataset needs at least one regressor");
  for (const auto& c : clusters_) {
    const auto rows = static_cast<std::size_t>(c.y.size());
    if (rows == 0) throw ValidationError("cluster '" + c.label + "' has no observations");
    if (static_cast<std::size_t>(c.x.rows()) != rows) {
      throw ValidationError("cluster '" + c.label + "': x has " + std::to_string(c.x.rows()) +
                            " rows but y has " + std::to_string(rows));
    }
    if (static_cast<std::size_t>(c.x.cols()) != k_) {
      throw ValidationError("cluster '" + c.label + "' has " + std::to_string(c.x.cols()) +
                            " regressor columns, expected " + std::to_string(k_));
    }
    if (!c.y.allFinite() || !c.x.allFinite()) {
      throw ValidationError("cluster '" + c.label + "' contains a non-finite value");
    }
    n_ += rows;
  }
  if (x_names_.empty()) {
    for (std::size_t j = 0; j < k_; ++j) x_names_.push_back("x" + std::to_string(j + 1));
  } else if (x_names_.size() != k_) {
    throw ValidationError("expected " + std::to_string(k_) + " regressor names, got " +
                          std::to_string(x_names_.size()));
  }
}

Hypothesis::Hypothesis(Eigen::VectorXd lambda_in, double c0_in, double alpha_in)
    : lambda(std::move(lambda_in)), c0(c0_in), alpha(alpha_in) {
  if (lambda.size() == 0 || !lambda.allFinite() || lambda.isZero(0.0)) {
    throw ArgumentError("hypothesis weights lambda must be a finite, nonzero vector");
  }
  if (!std::isfinite(c0)) throw ArgumentError("hypothesized value c0 must be finite");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0,1)");
}

void Hypothesis::check_dimension(std::size_t k) const {
  if (static_cast<std::size_t>(lambda.size()) != k) {
    throw ArgumentError("lambda has length " + std::to_string(lambda.size()) + " but the model has k=" +
                        std::to_string(k) + " regressors");
  }
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_number(const std::string& cell, const std::string& column, std::size_t line) {
  std::string_view v = cell;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("column '" + column + "': non-numeric value '" + cell + "'", line);
  }
  if (!std::isfinite(out)) throw ParseError("column '" + column + "': non-finite value '" + cell + "'", line);
  return out;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError("column '" + name + "' not found in header");
}

struct RowAccumulator {
  std::string label;
  std::vector<double> y;
  std::vector<double> x;  // row-major
  std::vector<std::vector<std::string>> factors;
};

}  // namespace

LoadedPanel read_panel(std::istream& in, const PanelSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  // Skip a UTF-8 BOM and leading blank lines before the header.
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw SchemaError("input has no header row");
  const auto header = split_row(line, schema.delimiter);

  if (schema.cluster_col.empty() || schema.y_col.empty()) throw SchemaError("cluster and y columns are required");
  if (schema.x_cols.empty() && !schema.intercept) throw SchemaError("at least one regressor column is required");
  const std::size_t cluster_idx = find_column(header, schema.cluster_col);
  const std::size_t y_idx = find_column(header, schema.y_col);
  std::vector<std::size_t> x_idx;
  for (const auto& c : schema.x_cols) x_idx.push_back(find_column(header, c));
  std::vector<std::size_t> f_idx;
  for (const auto& c : schema.factor_cols) f_idx.push_back(find_column(header, c));

  const std::size_t k = x_idx.size() + (schema.intercept ? 1 : 0);
  std::vector<RowAccumulator> groups;
  std::unordered_map<std::string, std::size_t> index;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line, schema.delimiter);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    const std::string& label = cells[cluster_idx];
    if (label.empty()) throw ParseError("blank cluster identifier in column '" + schema.cluster_col + "'", line_no);

    auto [it, inserted] = index.try_emplace(label, groups.size());
    if (inserted) {
      groups.push_back(RowAccumulator{label, {}, {}, std::vector<std::vector<std::string>>(f_idx.size())});
    }
    auto& g = groups[it->second];
    g.y.push_back(parse_number(cells[y_idx], schema.y_col, line_no));
    for (std::size_t j = 0; j < x_idx.size(); ++j) {
      g.x.push_back(parse_number(cells[x_idx[j]], schema.x_cols[j], line_no));
    }
    if (schema.intercept) g.x.push_back(1.0);
    for (std::size_t f = 0; f < f_idx.size(); ++f) {
      const std::string& level = cells[f_idx[f]];
      if (level.empty()) throw ParseError("blank value in factor column '" + schema.factor_cols[f] + "'", line_no);
      g.factors[f].push_back(level);
    }
  }

  std::vector<ClusterBlock> blocks;
  blocks.reserve(groups.size());
  std::map<std::string, Factor> factors;
  for (auto& g : groups) {
    const auto rows = static_cast<Eigen::Index>(g.y.size());
    ClusterBlock b;
    b.label = g.label;
    b.y = Eigen::Map<const Eigen::VectorXd>(g.y.data(), rows);
    b.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        g.x.data(), rows, static_cast<Eigen::Index>(k));
    blocks.push_back(std::move(b));
    for (std::size_t f = 0; f < f_idx.size(); ++f) factors[schema.factor_cols[f]].push_back(std::move(g.factors[f]));
  }
  std::vector<std::string> names = schema.x_cols;
  if (schema.intercept) names.emplace_back("(intercept)");
  if (blocks.size() < 2) {
    throw ValidationError("need at least 2 clusters, found " + std::to_string(blocks.size()));
  }
  return LoadedPanel{ClusteredDataset(std::move(blocks), std::move(names)), std::move(factors)};
}

LoadedPanel load_panel(const std::filesystem::path& path, const PanelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open data file '" + path.string() + "'");
  return read_panel(in, schema);
}

namespace {

std::string quote_if_needed(const std::string& s, char delim) {
  if (s.find(delim) == std::string::npos && s.find('"') == std::string::npos &&
      s.find('\n') == std::string::npos && trim(s) == s) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_panel(std::ostream& out, const ClusteredDataset& d, char delimiter) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "cluster" << delimiter << "y";
  for (const auto& n : d.x_names()) out << delimiter << quote_if_needed(n, delimiter);
  out << '\n';
  for (const auto& c : d.clusters()) {
    const std::string label = quote_if_needed(c.label, delimiter);
    for (Eigen::Index i = 0; i < c.y.size(); ++i) {
      out << label << delimiter << c.y(i);
      for (Eigen::Index j = 0; j < c.x.cols(); ++j) out << delimiter << c.x(i, j);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

ClusteredDataset within_transform(const ClusteredDataset& d) {
  std::vector<ClusterBlock> blocks;
  blocks.reserve(d.G());
  for (const auto& c : d.clusters()) {
    const Eigen::Index n = c.y.size();
    if (n < 2) {
      throw ValidationError("within transformation needs at least 2 observations per cluster; cluster '" +
                            c.label + "' has 1");
    }
    ClusterBlock b{c.label, c.y, c.x};
    auto demean = [n](auto&& col) {
      long double s = 0.0L;
      for (Eigen::Index i = 0; i < n; ++i) s += col(i);
      const auto m = static_cast<double>(s / n);
      for (Eigen::Index i = 0; i < n; ++i) col(i) -= m;
    };
    demean(b.y);
    for (Eigen::Index j = 0; j < b.x.cols(); ++j) demean(b.x.col(j));
    blocks.push_back(std::move(b));
  }
  return ClusteredDataset(std::move(blocks), d.x_names());
}

DummyExpansion add_dummies(const ClusteredDataset& d, const Factor& factor, const std::string& name) {
  if (factor.size() != d.G()) throw ArgumentError("factor '" + name + "' does not match the dataset's clusters");
  std::vector<std::string> levels;
  std::unordered_map<std::string, std::size_t> level_index;
  for (std::size_t g = 0; g < d.G(); ++g) {
    if (factor[g].size() != static_cast<std::size_t>(d.cluster(g).y.size())) {
      throw ArgumentError("factor '" + name + "' does not match cluster '" + d.cluster(g).label + "' row count");
    }
    for (const auto& level : factor[g]) {
      if (level_index.try_emplace(level, levels.size()).second) levels.push_back(level);
    }
  }
  if (levels.size() < 2) return DummyExpansion{d, {}, true};

  const std::size_t k = d.k();
  const std::size_t extra = levels.size() - 1;
  std::vector<ClusterBlock> blocks;
  blocks.reserve(d.G());
  for (std::size_t g = 0; g < d.G(); ++g) {
    const auto& c = d.cluster(g);
    ClusterBlock b{c.label, c.y, Eigen::MatrixXd::Zero(c.x.rows(), static_cast<Eigen::Index>(k + extra))};
    b.x.leftCols(static_cast<Eigen::Index>(k)) = c.x;
    for (Eigen::Index i = 0; i < c.x.rows(); ++i) {
      const std::size_t level = level_index.at(factor[g][static_cast<std::size_t>(i)]);
      if (level > 0) b.x(i, static_cast<Eigen::Index>(k + level - 1)) = 1.0;
    }
    blocks.push_back(std::move(b));
  }
  std::vector<std::string> names = d.x_names();
  std::vector<std::string> added;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    added.push_back(name + "=" + levels[l]);
    names.push_back(added.back());
  }
  return DummyExpansion{ClusteredDataset(std::move(blocks), std::move(names)), std::move(added), false};
}

Factor cluster_factor(const ClusteredDataset& d) {
  Factor f;
  f.reserve(d.G());
  for (const auto& c : d.clusters()) f.emplace_back(static_cast<std::size_t>(c.y.size()), c.label);
  return f;
}

}  // namespace ccf
