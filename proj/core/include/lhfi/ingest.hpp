#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lhfi/csv.hpp"

namespace lhfi {

// Column roles a schema file can declare.
enum class ColumnRole {
  kId,
  kName,
  kYear,
  kIncomeGroup,
  kCapitalLat,
  kCapitalLon,
  kMetric,
  kCovariate,
  kTreatment,
};

struct SchemaColumn {
  std::string name;
  ColumnRole role;
};

struct Schema {
  std::vector<SchemaColumn> columns;

  std::vector<std::string> metric_names() const;
  std::vector<std::string> covariate_names() const;
  std::string treatment_name() const;
  std::string column_with_role(ColumnRole role) const;  // "" when absent
  void validate() const;

  static Schema from_json(const std::string& text);
};

struct RawCell {
  double value = 0.0;
  bool missing = true;
};

struct RawRow {
  std::string country_id;
  long year = 0;
  std::string name;
  std::string income_group;
  std::vector<RawCell> cells;  // indexed as in RawTable::numeric_columns
};

struct RawTable {
  std::vector<std::string> numeric_columns;
  std::vector<RawRow> rows;

  int column_index(const std::string& name) const;  // throws when absent
  // Values of one column over all rows; missing entries excluded.
  std::vector<double> complete_column(const std::string& name) const;
};

struct TransformSpec {
  std::set<std::string> reverse_columns;
  std::string treatment_column;  // must match the schema's treatment role
  bool strictly_above_median = true;

  static TransformSpec from_json(const std::string& text);
};

struct CountryInfo {
  std::string id;
  std::string name;
  std::string income_group;
  double capital_lat_deg = 0.0;
  double capital_lon_deg = 0.0;
};

// Model-ready aligned arrays. Y and X carry standardized columns in schema
// declaration order; D holds great-circle distances in megameters.
struct Dataset {
  std::vector<CountryInfo> countries;
  long year = 0;
  Eigen::MatrixXd Y;  // N x P
  Eigen::MatrixXd X;  // N x K
  Eigen::VectorXd T;  // N, entries 0/1
  Eigen::MatrixXd D;  // N x N, Mm
  std::vector<std::string> metric_names;
  std::vector<std::string> covariate_names;
  int anchor_index = 0;

  int n() const { return static_cast<int>(Y.rows()); }
  int p() const { return static_cast<int>(Y.cols()); }
  int k() const { return static_cast<int>(X.cols()); }

  int country_index(const std::string& id) const;  // -1 when absent

  // Enforces the construction invariants (standardized columns, distance
  // matrix geometry, binary treatment, anchor in range).
  void validate() const;

  std::string to_json() const;
  static Dataset from_json(const std::string& text);
  static Dataset load(const std::string& path);
  void save(const std::string& path) const;

  std::uint64_t hash() const;
};

// --- pipeline operations ---

RawTable load_csv(const std::string& path, const Schema& schema);
RawTable load_csv_text(const std::string& text, const Schema& schema);

RawTable filter_year(const RawTable& table, long year);

// Complete-case filtering on the modeled columns. Errors on zero survivors.
RawTable drop_incomplete(const RawTable& table,
                         const std::set<std::string>& modeled_columns);

// Negation; any affine reversal is equivalent after standardization.
std::vector<double> reverse_direction(const std::vector<double>& column);

// Mean 0, sd 1 with the n-1 denominator. Errors on constant columns.
std::vector<double> standardize(const std::vector<double>& column);

double sample_median(std::vector<double> values);

// 1 iff strictly above the sample median; ties go to control.
std::vector<int> dichotomize_treatment(const std::vector<double>& values);

// Haversine on a sphere of radius 6.371 Mm.
double great_circle_distance_mm(double lat1_deg, double lon1_deg,
                                double lat2_deg, double lon2_deg);
Eigen::MatrixXd great_circle_matrix(
    const std::vector<std::pair<double, double>>& coords_deg);

// drop -> reverse -> dichotomize -> standardize, then distances and anchor.
Dataset build_dataset(const RawTable& table, const Schema& schema,
                      const TransformSpec& spec, const std::string& anchor_id);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace lhfi
