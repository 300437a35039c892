#include "lhfi/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lhfi/stochastics.hpp"

namespace lhfi {

using nlohmann::json;

namespace {

const std::map<std::string, ColumnRole>& role_names() {
  static const std::map<std::string, ColumnRole> m = {
      {"id", ColumnRole::kId},
      {"name", ColumnRole::kName},
      {"year", ColumnRole::kYear},
      {"income_group", ColumnRole::kIncomeGroup},
      {"capital_lat", ColumnRole::kCapitalLat},
      {"capital_lon", ColumnRole::kCapitalLon},
      {"metric", ColumnRole::kMetric},
      {"covariate", ColumnRole::kCovariate},
      {"treatment", ColumnRole::kTreatment},
  };
  return m;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0' && std::isfinite(out);
}

json read_json_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(std::string("invalid JSON in ") + what);
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<std::string> Schema::metric_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.role == ColumnRole::kMetric) out.push_back(c.name);
  return out;
}

std::vector<std::string> Schema::covariate_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.role == ColumnRole::kCovariate) out.push_back(c.name);
  return out;
}

std::string Schema::treatment_name() const {
  return column_with_role(ColumnRole::kTreatment);
}

std::string Schema::column_with_role(ColumnRole role) const {
  for (const auto& c : columns)
    if (c.role == role) return c.name;
  return "";
}

void Schema::validate() const {
  auto count = [this](ColumnRole r) {
    return std::count_if(columns.begin(), columns.end(),
                         [r](const SchemaColumn& c) { return c.role == r; });
  };
  if (count(ColumnRole::kId) != 1) throw Error("schema: exactly one id column required");
  if (count(ColumnRole::kCapitalLat) != 1 || count(ColumnRole::kCapitalLon) != 1)
    throw Error("schema: exactly one capital_lat and capital_lon column required");
  if (count(ColumnRole::kMetric) < 1) throw Error("schema: at least one metric column required");
  if (count(ColumnRole::kTreatment) != 1)
    throw Error("schema: exactly one treatment column required");
  if (count(ColumnRole::kName) > 1 || count(ColumnRole::kYear) > 1 ||
      count(ColumnRole::kIncomeGroup) > 1)
    throw Error("schema: name, year and income_group may appear at most once");
  std::set<std::string> seen;
  for (const auto& c : columns)
    if (!seen.insert(c.name).second)
      throw Error("schema: duplicate column name " + c.name);
}

Schema Schema::from_json(const std::string& text) {
  json j = read_json_text(text, "schema");
  if (!j.contains("columns") || !j["columns"].is_array())
    throw Error("schema: missing columns array");
  Schema s;
  for (const auto& c : j["columns"]) {
    SchemaColumn col;
    col.name = c.at("name").get<std::string>();
    const std::string role = c.at("role").get<std::string>();
    auto it = role_names().find(role);
    if (it == role_names().end()) throw Error("schema: unknown role " + role);
    col.role = it->second;
    s.columns.push_back(col);
  }
  s.validate();
  return s;
}

int RawTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < numeric_columns.size(); ++i)
    if (numeric_columns[i] == name) return static_cast<int>(i);
  throw Error("no such column: " + name);
}

std::vector<double> RawTable::complete_column(const std::string& name) const {
  const int c = column_index(name);
  std::vector<double> out;
  for (const auto& r : rows)
    if (!r.cells[c].missing) out.push_back(r.cells[c].value);
  return out;
}

TransformSpec TransformSpec::from_json(const std::string& text) {
  json j = read_json_text(text, "transform spec");
  TransformSpec t;
  if (j.contains("reverse_columns"))
    for (const auto& c : j["reverse_columns"]) t.reverse_columns.insert(c.get<std::string>());
  if (j.contains("treatment_column"))
    t.treatment_column = j["treatment_column"].get<std::string>();
  if (j.contains("strictly_above_median"))
    t.strictly_above_median = j["strictly_above_median"].get<bool>();
  if (!t.strictly_above_median)
    throw Error("transform spec: only the strictly-above-median rule is supported");
  return t;
}

RawTable load_csv(const std::string& path, const Schema& schema) {
  return load_csv_text(read_file(path), schema);
}

RawTable load_csv_text(const std::string& text, const Schema& schema) {
  schema.validate();
  const CsvTable csv = parse_csv(text);

  std::map<std::string, int> csv_col;
  for (const auto& col : schema.columns) {
    const int idx = csv.column_index(col.name);
    if (idx < 0) throw Error("CSV header missing declared column: " + col.name);
    csv_col[col.name] = idx;
  }

  RawTable table;
  for (const auto& col : schema.columns) {
    switch (col.role) {
      case ColumnRole::kCapitalLat:
      case ColumnRole::kCapitalLon:
      case ColumnRole::kMetric:
      case ColumnRole::kCovariate:
      case ColumnRole::kTreatment:
        table.numeric_columns.push_back(col.name);
        break;
      default:
        break;
    }
  }

  const std::string id_col = schema.column_with_role(ColumnRole::kId);
  const std::string name_col = schema.column_with_role(ColumnRole::kName);
  const std::string year_col = schema.column_with_role(ColumnRole::kYear);
  const std::string income_col = schema.column_with_role(ColumnRole::kIncomeGroup);

  std::set<std::pair<std::string, long>> keys;
  for (const auto& row : csv.rows) {
    RawRow r;
    r.country_id = row[csv_col.at(id_col)];
    if (r.country_id.empty()) throw Error("CSV row with empty country id");
    if (!name_col.empty()) r.name = row[csv_col.at(name_col)];
    if (!income_col.empty()) r.income_group = row[csv_col.at(income_col)];
    if (!year_col.empty()) {
      const std::string& cell = row[csv_col.at(year_col)];
      double y;
      if (csv_cell_missing(cell) || !parse_double(cell, y))
        throw Error("unparseable year for country " + r.country_id);
      r.year = static_cast<long>(y);
    }
    if (!keys.insert({r.country_id, r.year}).second)
      throw Error("duplicate (country, year) row: " + r.country_id + ", " +
                  std::to_string(r.year));
    for (const auto& col : table.numeric_columns) {
      const std::string& cell = row[csv_col.at(col)];
      RawCell c;
      if (!csv_cell_missing(cell) && parse_double(cell, c.value)) c.missing = false;
      r.cells.push_back(c);
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

RawTable filter_year(const RawTable& table, long year) {
  RawTable out;
  out.numeric_columns = table.numeric_columns;
  for (const auto& r : table.rows)
    if (r.year == year) out.rows.push_back(r);
  if (out.rows.empty())
    throw Error("no rows for year " + std::to_string(year));
  return out;
}

RawTable drop_incomplete(const RawTable& table,
                         const std::set<std::string>& modeled_columns) {
  std::vector<int> idx;
  for (const auto& name : modeled_columns) idx.push_back(table.column_index(name));
  RawTable out;
  out.numeric_columns = table.numeric_columns;
  for (const auto& r : table.rows) {
    const bool complete = std::none_of(
        idx.begin(), idx.end(), [&r](int c) { return r.cells[c].missing; });
    if (complete) out.rows.push_back(r);
  }
  if (out.rows.empty()) throw Error("complete-case filtering removed every row");
  return out;
}

std::vector<double> reverse_direction(const std::vector<double>& column) {
  if (column.empty()) throw Error("reverse_direction: empty column");
  std::vector<double> out(column.size());
  std::transform(column.begin(), column.end(), out.begin(),
                 [](double v) { return -v; });
  return out;
}

std::vector<double> standardize(const std::vector<double>& column) {
  const size_t n = column.size();
  if (n < 2) throw Error("standardize: need at least 2 values");
  double mean = 0.0;
  for (double v : column) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : column) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error("standardize: constant column");
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = (column[i] - mean) / sd;
  return out;
}

double sample_median(std::vector<double> values) {
  if (values.empty()) throw Error("sample_median: empty input");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<int> dichotomize_treatment(const std::vector<double>& values) {
  const double med = sample_median(values);
  std::vector<int> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = values[i] > med ? 1 : 0;
  return out;
}

double great_circle_distance_mm(double lat1_deg, double lon1_deg,
                                double lat2_deg, double lon2_deg) {
  constexpr double kEarthRadiusMm = 6.371;
  constexpr double kDegToRad = M_PI / 180.0;
  auto check = [](double lat, double lon) {
    if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0)
      throw Error("coordinates out of range");
  };
  check(lat1_deg, lon1_deg);
  check(lat2_deg, lon2_deg);
  const double lat1 = lat1_deg * kDegToRad;
  const double lat2 = lat2_deg * kDegToRad;
  const double dlat = (lat2_deg - lat1_deg) * kDegToRad;
  const double dlon = (lon2_deg - lon1_deg) * kDegToRad;
  const double s1 = std::sin(0.5 * dlat);
  const double s2 = std::sin(0.5 * dlon);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusMm * std::asin(std::min(1.0, std::sqrt(h)));
}

Eigen::MatrixXd great_circle_matrix(
    const std::vector<std::pair<double, double>>& coords_deg) {
  const int n = static_cast<int>(coords_deg.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = great_circle_distance_mm(
          coords_deg[i].first, coords_deg[i].second, coords_deg[j].first,
          coords_deg[j].second);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

Dataset build_dataset(const RawTable& table, const Schema& schema,
                      const TransformSpec& spec, const std::string& anchor_id) {
  schema.validate();
  const auto metrics = schema.metric_names();
  const auto covariates = schema.covariate_names();
  const std::string treatment = schema.treatment_name();
  if (!spec.treatment_column.empty() && spec.treatment_column != treatment)
    throw Error("transform spec treatment column '" + spec.treatment_column +
                "' does not match schema treatment '" + treatment + "'");
  for (const auto& rc : spec.reverse_columns)
    if (std::find(metrics.begin(), metrics.end(), rc) == metrics.end())
      throw Error("reverse column is not a declared metric: " + rc);

  std::set<std::string> modeled(metrics.begin(), metrics.end());
  modeled.insert(covariates.begin(), covariates.end());
  modeled.insert(treatment);
  modeled.insert(schema.column_with_role(ColumnRole::kCapitalLat));
  modeled.insert(schema.column_with_role(ColumnRole::kCapitalLon));

  const RawTable kept = drop_incomplete(table, modeled);
  const int n = static_cast<int>(kept.rows.size());

  std::set<long> years;
  for (const auto& r : kept.rows) years.insert(r.year);
  if (years.size() > 1)
    throw Error("multiple years present; filter to a single year first");

  const int p = static_cast<int>(metrics.size());
  const int k = static_cast<int>(covariates.size());
  if (n < p + 2)
    throw Error("need at least P+2 countries (" + std::to_string(p + 2) +
                "), have " + std::to_string(n));

  Dataset ds;
  ds.year = *years.begin();
  ds.metric_names = metrics;
  ds.covariate_names = covariates;

  const int lat_c = kept.column_index(schema.column_with_role(ColumnRole::kCapitalLat));
  const int lon_c = kept.column_index(schema.column_with_role(ColumnRole::kCapitalLon));
  std::vector<std::pair<double, double>> coords;
  for (const auto& r : kept.rows) {
    CountryInfo info;
    info.id = r.country_id;
    info.name = r.name.empty() ? r.country_id : r.name;
    info.income_group = r.income_group;
    info.capital_lat_deg = r.cells[lat_c].value;
    info.capital_lon_deg = r.cells[lon_c].value;
    ds.countries.push_back(info);
    coords.emplace_back(info.capital_lat_deg, info.capital_lon_deg);
  }

  ds.anchor_index = -1;
  for (int i = 0; i < n; ++i)
    if (ds.countries[i].id == anchor_id) ds.anchor_index = i;
  if (ds.anchor_index < 0)
    throw Error("anchor country '" + anchor_id +
                "' absent after complete-case filtering");

  ds.Y.resize(n, p);
  for (int j = 0; j < p; ++j) {
    const int c = kept.column_index(metrics[j]);
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = kept.rows[i].cells[c].value;
    if (spec.reverse_columns.count(metrics[j])) col = reverse_direction(col);
    col = standardize(col);
    for (int i = 0; i < n; ++i) ds.Y(i, j) = col[i];
  }

  ds.X.resize(n, k);
  for (int j = 0; j < k; ++j) {
    const int c = kept.column_index(covariates[j]);
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = kept.rows[i].cells[c].value;
    col = standardize(col);
    for (int i = 0; i < n; ++i) ds.X(i, j) = col[i];
  }

  {
    const int c = kept.column_index(treatment);
    std::vector<double> raw(n);
    for (int i = 0; i < n; ++i) raw[i] = kept.rows[i].cells[c].value;
    const std::vector<int> t = dichotomize_treatment(raw);
    ds.T.resize(n);
    for (int i = 0; i < n; ++i) ds.T(i) = t[i];
  }

  ds.D = great_circle_matrix(coords);
  ds.validate();
  return ds;
}

int Dataset::country_index(const std::string& id) const {
  for (size_t i = 0; i < countries.size(); ++i)
    if (countries[i].id == id) return static_cast<int>(i);
  return -1;
}

void Dataset::validate() const {
  const int nn = n();
  if (nn < 1 || static_cast<int>(countries.size()) != nn)
    throw Error("dataset: country list does not match Y rows");
  if (X.rows() != nn || T.size() != nn || D.rows() != nn || D.cols() != nn)
    throw Error("dataset: array dimensions disagree");
  auto check_std = [nn](const Eigen::MatrixXd& m, const char* label) {
    for (int j = 0; j < m.cols(); ++j) {
      const double mean = m.col(j).mean();
      const double sd =
          std::sqrt((m.col(j).array() - mean).square().sum() / (nn - 1));
      if (std::abs(mean) > 1e-10 || std::abs(sd - 1.0) > 1e-10)
        throw Error(std::string("dataset: ") + label + " column " +
                    std::to_string(j) + " is not standardized");
    }
  };
  check_std(Y, "Y");
  check_std(X, "X");
  for (int i = 0; i < nn; ++i) {
    if (T(i) != 0.0 && T(i) != 1.0) throw Error("dataset: T is not binary");
    if (D(i, i) != 0.0) throw Error("dataset: D diagonal must be zero");
    for (int j = 0; j < nn; ++j) {
      if (D(i, j) < 0.0 || D(i, j) > 20.038)
        throw Error("dataset: distance out of range");
      if (std::abs(D(i, j) - D(j, i)) > 1e-12)
        throw Error("dataset: D must be symmetric");
    }
  }
  if (anchor_index < 0 || anchor_index >= nn)
    throw Error("dataset: anchor index out of range");
}

std::string Dataset::to_json() const {
  json j;
  j["year"] = year;
  j["anchor_index"] = anchor_index;
  j["metric_names"] = metric_names;
  j["covariate_names"] = covariate_names;
  j["distance_unit"] = "Mm";
  json cs = json::array();
  for (const auto& c : countries) {
    cs.push_back({{"id", c.id},
                  {"name", c.name},
                  {"income_group", c.income_group},
                  {"capital_lat_deg", c.capital_lat_deg},
                  {"capital_lon_deg", c.capital_lon_deg}});
  }
  j["countries"] = cs;
  auto mat = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index jj = 0; jj < m.cols(); ++jj) row.push_back(m(i, jj));
      rows.push_back(row);
    }
    return rows;
  };
  j["Y"] = mat(Y);
  j["X"] = mat(X);
  json t = json::array();
  for (Eigen::Index i = 0; i < T.size(); ++i) t.push_back(T(i));
  j["T"] = t;
  j["D"] = mat(D);
  return j.dump(2);
}

Dataset Dataset::from_json(const std::string& text) {
  json j = read_json_text(text, "dataset");
  Dataset ds;
  ds.year = j.at("year").get<long>();
  ds.anchor_index = j.at("anchor_index").get<int>();
  ds.metric_names = j.at("metric_names").get<std::vector<std::string>>();
  ds.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  for (const auto& c : j.at("countries")) {
    CountryInfo info;
    info.id = c.at("id").get<std::string>();
    info.name = c.at("name").get<std::string>();
    info.income_group = c.at("income_group").get<std::string>();
    info.capital_lat_deg = c.at("capital_lat_deg").get<double>();
    info.capital_lon_deg = c.at("capital_lon_deg").get<double>();
    ds.countries.push_back(info);
  }
  auto mat = [](const json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? 0 : static_cast<int>(rows[0].size());
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int jj = 0; jj < c; ++jj) m(i, jj) = rows[i][jj].get<double>();
    return m;
  };
  ds.Y = mat(j.at("Y"));
  ds.X = mat(j.at("X"));
  ds.D = mat(j.at("D"));
  const auto& t = j.at("T");
  ds.T.resize(static_cast<Eigen::Index>(t.size()));
  for (Eigen::Index i = 0; i < ds.T.size(); ++i) ds.T(i) = t[i].get<double>();
  return ds;
}

Dataset Dataset::load(const std::string& path) {
  return from_json(read_file(path));
}

void Dataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file: " + path);
  out << to_json() << "\n";
}

std::uint64_t Dataset::hash() const { return fnv1a64(to_json()); }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace lhfi
