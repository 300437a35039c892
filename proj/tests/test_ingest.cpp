#include <doctest.h>

#include <cmath>

#include "lhfi/ingest.hpp"
#include "lhfi/stochastics.hpp"

using namespace lhfi;

namespace {

const char* kSchemaJson = R"({
  "columns": [
    {"name": "iso", "role": "id"},
    {"name": "country", "role": "name"},
    {"name": "year", "role": "year"},
    {"name": "income", "role": "income_group"},
    {"name": "lat", "role": "capital_lat"},
    {"name": "lon", "role": "capital_lon"},
    {"name": "gni", "role": "metric"},
    {"name": "life_exp", "role": "metric"},
    {"name": "infant_mort", "role": "metric"},
    {"name": "schooling", "role": "covariate"},
    {"name": "mml_days", "role": "treatment"}
  ]
})";

Schema test_schema() { return Schema::from_json(kSchemaJson); }

std::string header() {
  return "iso,country,year,income,lat,lon,gni,life_exp,infant_mort,schooling,mml_days\n";
}

}  // namespace

TEST_CASE("csv parser handles quotes and missing markers") {
  const CsvTable t = parse_csv(
      "id,name,v\n"
      "A,\"Congo, Rep.\",1.5\n"
      "B,\"say \"\"hi\"\"\",NA\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "Congo, Rep.");
  CHECK(t.rows[1][1] == "say \"hi\"");
  CHECK(csv_cell_missing(t.rows[1][2]));
  CHECK(!csv_cell_missing(t.rows[0][2]));
}

TEST_CASE("load_csv marks unparseable and empty cells missing") {
  const std::string csv = header() +
                          "AAA,Alpha,2015,high,10,20,,70,5,9,120\n"
                          "BBB,Beta,2015,low,-5,30,9000,65,20,4,30\n"
                          "CCC,Gamma,2015,low,15,40,bad,60,30,3,98\n";
  const RawTable t = load_csv_text(csv, test_schema());
  REQUIRE(t.rows.size() == 3);
  const int gni = t.column_index("gni");
  CHECK(t.rows[0].cells[gni].missing);
  CHECK(!t.rows[1].cells[gni].missing);
  CHECK(t.rows[2].cells[gni].missing);  // unparseable
  CHECK(t.rows[1].cells[gni].value == 9000);
}

TEST_CASE("load_csv rejects duplicates and missing columns") {
  const std::string dup = header() +
                          "AAA,Alpha,2015,high,10,20,1,70,5,9,120\n"
                          "AAA,Alpha,2015,high,10,20,2,70,5,9,120\n";
  CHECK_THROWS_AS(load_csv_text(dup, test_schema()), Error);

  // same id in different years is allowed
  const std::string two_years = header() +
                                "AAA,Alpha,2014,high,10,20,1,70,5,9,120\n"
                                "AAA,Alpha,2015,high,10,20,2,70,5,9,120\n";
  CHECK(load_csv_text(two_years, test_schema()).rows.size() == 2);

  const std::string missing_col =
      "iso,country,year,income,lat,lon,gni,life_exp,infant_mort,schooling\n"
      "AAA,Alpha,2015,high,10,20,1,70,5,9\n";
  CHECK_THROWS_AS(load_csv_text(missing_col, test_schema()), Error);
}

TEST_CASE("drop_incomplete keeps complete cases only") {
  const std::string csv = header() +
                          "A,A,2015,h,10,20,1,70,5,9,120\n"
                          "B,B,2015,h,10,20,,70,5,9,120\n"
                          "C,C,2015,h,10,20,3,70,5,9,120\n"
                          "D,D,2015,h,10,20,4,,5,9,120\n"
                          "E,E,2015,h,10,20,5,70,5,9,120\n";
  const RawTable t = load_csv_text(csv, test_schema());
  const std::set<std::string> modeled{"gni", "life_exp"};
  const RawTable kept = drop_incomplete(t, modeled);
  CHECK(kept.rows.size() == 3);

  const RawTable again = drop_incomplete(kept, modeled);
  CHECK(again.rows.size() == 3);  // identity on complete tables

  const std::string all_missing = header() +
                                  "A,A,2015,h,10,20,,70,5,9,120\n"
                                  "B,B,2015,h,10,20,,70,5,9,120\n";
  const RawTable t2 = load_csv_text(all_missing, test_schema());
  CHECK_THROWS_AS(drop_incomplete(t2, {"gni"}), Error);
}

TEST_CASE("reverse_direction is negation and involutive") {
  CHECK(reverse_direction({2, 4, 6}) == std::vector<double>{-2, -4, -6});
  CHECK(reverse_direction({0}) == std::vector<double>{0});
  CHECK(reverse_direction(reverse_direction({1.5, -3})) ==
        std::vector<double>{1.5, -3});
  CHECK_THROWS_AS(reverse_direction({}), Error);
}

TEST_CASE("standardize") {
  const auto s = standardize({1, 2, 3});
  CHECK(std::abs(s[0] + 1) < 1e-12);
  CHECK(std::abs(s[1]) < 1e-12);
  CHECK(std::abs(s[2] - 1) < 1e-12);

  CHECK_THROWS_AS(standardize({10, 10, 10}), Error);
  CHECK_THROWS_AS(standardize({5}), Error);

  const auto two = standardize({0, 2});
  CHECK(two[0] == doctest::Approx(-1.0 / std::sqrt(2)).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(1.0 / std::sqrt(2)).epsilon(1e-12));
}

TEST_CASE("standardize is idempotent") {
  RngStream rng(3, 1);
  std::vector<double> v(40);
  for (auto& x : v) x = 5 + 3 * rng.normal();
  const auto once = standardize(v);
  const auto twice = standardize(once);
  for (size_t i = 0; i < v.size(); ++i) CHECK(std::abs(once[i] - twice[i]) < 1e-10);
}

TEST_CASE("dichotomize_treatment strict-above-median") {
  CHECK(dichotomize_treatment({0, 98, 410}) == std::vector<int>{0, 0, 1});
  CHECK(dichotomize_treatment({7, 7, 7}) == std::vector<int>{0, 0, 0});
  // even count: median averages the middle pair
  CHECK(dichotomize_treatment({1, 2, 3, 4}) == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("dichotomization invariant to monotone transforms") {
  RngStream rng(17, 1);
  std::vector<double> v(31);
  for (auto& x : v) x = 400 * rng.uniform();
  std::vector<double> w(v.size());
  for (size_t i = 0; i < v.size(); ++i) w[i] = std::exp(0.01 * v[i]) + 3;
  CHECK(dichotomize_treatment(v) == dichotomize_treatment(w));
}

TEST_CASE("great circle distances") {
  CHECK(great_circle_distance_mm(0, 0, 0, 0) == 0.0);
  // quarter and half circumference of the 6.371 Mm sphere
  CHECK(great_circle_distance_mm(0, 0, 0, 90) ==
        doctest::Approx(M_PI * 6.371 / 2).epsilon(1e-9));
  CHECK(great_circle_distance_mm(0, 0, 0, 180) ==
        doctest::Approx(M_PI * 6.371).epsilon(1e-9));
  CHECK_THROWS_AS(great_circle_distance_mm(91, 0, 0, 0), Error);
  CHECK_THROWS_AS(great_circle_distance_mm(0, 200, 0, 0), Error);
}

TEST_CASE("great circle triangle inequality") {
  RngStream rng(29, 4);
  for (int trial = 0; trial < 200; ++trial) {
    double lat[3], lon[3];
    for (int i = 0; i < 3; ++i) {
      lat[i] = -90 + 180 * rng.uniform();
      lon[i] = -180 + 360 * rng.uniform();
    }
    const double ab = great_circle_distance_mm(lat[0], lon[0], lat[1], lon[1]);
    const double bc = great_circle_distance_mm(lat[1], lon[1], lat[2], lon[2]);
    const double ac = great_circle_distance_mm(lat[0], lon[0], lat[2], lon[2]);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("build_dataset pipeline") {
  // 6 rows, one incomplete; infant_mort direction-reversed.
  const std::string csv = header() +
                          "A,Alpha,2015,high,10,20,100,70,5,9,120\n"
                          "B,Beta,2015,low,-5,30,90,65,20,4,30\n"
                          "C,Gamma,2015,low,15,40,50,60,30,3,98\n"
                          "D,Delta,2015,mid,25,50,70,62,25,5,200\n"
                          "E,Eps,2015,mid,35,60,,61,22,6,150\n"
                          "F,Zeta,2015,high,45,70,120,72,4,10,0\n";
  TransformSpec spec;
  spec.reverse_columns = {"infant_mort"};
  spec.treatment_column = "mml_days";

  const RawTable table = load_csv_text(csv, test_schema());
  const Dataset ds = build_dataset(table, test_schema(), spec, "C");

  CHECK(ds.n() == 5);  // E dropped
  CHECK(ds.p() == 3);
  CHECK(ds.k() == 1);
  CHECK(ds.anchor_index == 2);
  CHECK(ds.metric_names ==
        std::vector<std::string>{"gni", "life_exp", "infant_mort"});
  ds.validate();

  // treatment dichotomized from raw days: kept {120,30,98,200,0}, median 98
  Eigen::VectorXd expected_t(5);
  expected_t << 1, 0, 0, 1, 0;
  CHECK((ds.T - expected_t).cwiseAbs().maxCoeff() == 0.0);

  // reversal before standardization flips the column's sign
  std::vector<double> mort{5, 20, 30, 25, 4};
  const auto std_plain = standardize(mort);
  for (int i = 0; i < 5; ++i)
    CHECK(ds.Y(i, 2) == doctest::Approx(-std_plain[i]).epsilon(1e-12));

  // anchor dropped by filtering
  CHECK_THROWS_AS(build_dataset(table, test_schema(), spec, "E"), Error);
  CHECK_THROWS_AS(build_dataset(table, test_schema(), spec, "ZZ"), Error);

  // deterministic construction
  const Dataset again = build_dataset(table, test_schema(), spec, "C");
  CHECK(ds.to_json() == again.to_json());

  // JSON round trip
  const Dataset back = Dataset::from_json(ds.to_json());
  CHECK(back.to_json() == ds.to_json());
  back.validate();
}

TEST_CASE("build_dataset requires at least P+2 countries") {
  // P=3 metrics requires N >= 5; give 4 complete rows
  const std::string csv = header() +
                          "A,Alpha,2015,high,10,20,100,70,5,9,120\n"
                          "B,Beta,2015,low,-5,30,90,65,20,4,30\n"
                          "C,Gamma,2015,low,15,40,50,60,30,3,98\n"
                          "D,Delta,2015,mid,25,50,70,62,25,5,200\n";
  const RawTable table = load_csv_text(csv, test_schema());
  CHECK_THROWS_AS(build_dataset(table, test_schema(), {}, "C"), Error);
}

TEST_CASE("filter_year selects a single year") {
  const std::string csv = header() +
                          "A,Alpha,2014,high,10,20,100,70,5,9,120\n"
                          "A,Alpha,2015,high,10,20,100,70,5,9,120\n"
                          "B,Beta,2015,low,-5,30,90,65,20,4,30\n";
  const RawTable t = load_csv_text(csv, test_schema());
  CHECK(filter_year(t, 2015).rows.size() == 2);
  CHECK_THROWS_AS(filter_year(t, 1999), Error);
  CHECK_THROWS_AS(build_dataset(t, test_schema(), {}, "A"),
                  Error);  // mixed years rejected
}
