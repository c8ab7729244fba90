#pragma once

// Clustered regression data: the immutable dataset, the tested hypothesis,
// delimited-text ingestion and the fixed-effect helpers (within
// transformation and dummy expansion).

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccf {

struct ClusterBlock {
  std::string label;
  Eigen::VectorXd y;  // N_g
  Eigen::MatrixXd x;  // N_g x k
};

// G >= 2 clusters, each with N_g >= 1 rows and the same k >= 1 columns, all
// entries finite. Immutable once constructed; cluster order is the order the
// blocks were supplied in.
class ClusteredDataset {
 public:
  // Throws ValidationError when any invariant fails. Empty `x_names` gets
  // the default names x1..xk.
  explicit ClusteredDataset(std::vector<ClusterBlock> clusters, std::vector<std::string> x_names = {});

  std::size_t G() const { return clusters_.size(); }
  std::size_t k() const { return k_; }
  std::size_t N() const { return n_; }

  const ClusterBlock& cluster(std::size_t g) const { return clusters_[g]; }
  const std::vector<ClusterBlock>& clusters() const { return clusters_; }
  const std::vector<std::string>& x_names() const { return x_names_; }

 private:
  std::vector<ClusterBlock> clusters_;
  std::vector<std::string> x_names_;
  std::size_t k_ = 0;
  std::size_t n_ = 0;
};

// H0: lambda'beta = c0 against the two-sided alternative at level alpha.
struct Hypothesis {
  Eigen::VectorXd lambda;
  double c0 = 0.0;
  double alpha = 0.05;

  // Throws ArgumentError if lambda is zero/non-finite or alpha is outside (0,1).
  Hypothesis(Eigen::VectorXd lambda, double c0, double alpha);

  // Throws ArgumentError unless lambda has length k.
  void check_dimension(std::size_t k) const;
};

// Per-cluster, per-row categorical values aligned with a dataset.
using Factor = std::vector<std::vector<std::string>>;

struct PanelSchema {
  std::string cluster_col;
  std::string y_col;
  std::vector<std::string> x_cols;
  // Extra categorical columns to keep (e.g. for add_dummies).
  std::vector<std::string> factor_cols;
  char delimiter = ',';
  // Appends a column of ones named "(intercept)" after the x columns.
  bool intercept = false;
};

struct LoadedPanel {
  ClusteredDataset data;
  std::map<std::string, Factor> factors;
};

// Reads delimited text with a header row. Rows are grouped by cluster label
// in first-appearance order.
// Errors: SchemaError (missing column), ParseError (blank cluster cell,
// non-numeric or non-finite value, ragged row), ValidationError (G < 2).
LoadedPanel read_panel(std::istream& in, const PanelSchema& schema);
LoadedPanel load_panel(const std::filesystem::path& path, const PanelSchema& schema);

// Writes header `cluster,y,<x names>` and one row per observation with
// round-trip precision. read_panel with the matching schema recovers `d`.
void write_panel(std::ostream& out, const ClusteredDataset& d, char delimiter = ',');

// Demeans y and every column of x within each cluster.
// Throws ValidationError if any cluster has a single observation.
ClusteredDataset within_transform(const ClusteredDataset& d);

struct DummyExpansion {
  ClusteredDataset data;
  std::vector<std::string> added_columns;
  // Set when the factor had one level; data is then returned unchanged.
  bool single_level = false;
};

// Appends a 0/1 column for every level of `factor` except the first level
// to appear. Columns are named "<name>=<level>".
DummyExpansion add_dummies(const ClusteredDataset& d, const Factor& factor, const std::string& name);

// The cluster label repeated over each cluster's rows, for use as a factor.
Factor cluster_factor(const ClusteredDataset& d);

}  // namespace ccf
