#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "tlpred/pipeline.hpp"

using namespace tlpred;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tlpred_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

const ModelDocument& small_model() {
  static const ModelDocument doc = [] {
    SimulateConfig sc;
    sc.p = 3;
    sc.q = 20;
    sc.n = 6000;
    sc.seed = 3;
    const auto sim = run_simulate(sc);
    FitConfig fc;
    fc.target = "x3";
    fc.marginal = MarginalMode::Identity;
    fc.n_decomp = 11;
    fc.seed = 5;
    return run_fit(CsvTable::from_matrix(sim.x, "x"), fc);
  }();
  return doc;
}

}  // namespace

TEST_CASE("number formatting round-trips", "[io]") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.93520838727625124})
    CHECK(*parse_double(format_double(v)) == v);
  CHECK(format_double(std::nan("")) == "NA");
  CHECK_FALSE(parse_double("NA"));
  CHECK_FALSE(parse_double(""));
  CHECK_FALSE(parse_double("abc"));
  CHECK_FALSE(parse_double("1.5x"));
  CHECK(*parse_double(" +2.5 ") == 2.5);
}

TEST_CASE("CSV parsing", "[io]") {
  std::istringstream in("\xEF\xBB\xBF" "date,a,b\r\n2020-01-01,1.5,NA\r\n\r\n2020-01-02,,3\n");
  const auto t = CsvTable::parse(in);
  REQUIRE(t.cols() == 3);
  REQUIRE(t.rows() == 2);
  CHECK(t.header()[0] == "date");
  CHECK(t.index_of("b") == 2);
  CHECK_FALSE(t.find("c"));
  CHECK_THROWS_AS(t.index_of("c"), ArgumentError);
  const auto a = t.numeric_column(1);
  CHECK(a[0] == 1.5);
  CHECK(std::isnan(a[1]));
  CHECK(std::isnan(t.numeric_column(2)[0]));
  CHECK(t.text_column(0)[1] == "2020-01-02");
  CHECK_THROWS_AS(t.numeric_column(0), IoError);

  std::istringstream ragged("a,b\n1,2,3\n");
  CHECK_THROWS_WITH(CsvTable::parse(ragged, "f.csv"), ContainsSubstring("f.csv:2"));
  std::istringstream empty("");
  CHECK_THROWS_AS(CsvTable::parse(empty), IoError);
  CHECK_THROWS_AS(CsvTable::read("/nonexistent/dir/file.csv"), IoError);
}

TEST_CASE("CSV write and read back", "[io]") {
  Eigen::MatrixXd m(3, 2);
  m << 1.0 / 3.0, 2.0, 1e-12, 4e10, std::nan(""), 7.0;
  const auto t = CsvTable::from_matrix(m, "x");
  CHECK(t.header() == std::vector<std::string>{"x1", "x2"});
  const auto path = scratch("m.csv").string();
  t.write(path);
  const auto back = CsvTable::read(path);
  const auto c0 = back.numeric_column(0);
  CHECK(c0[0] == 1.0 / 3.0);
  CHECK(c0[1] == 1e-12);
  CHECK(std::isnan(c0[2]));
  CHECK(back.numeric_column(1)[1] == 4e10);
  CsvTable w({"a", "b"});
  CHECK_THROWS_AS(w.add_row({"1"}), ArgumentError);
  CHECK_THROWS_AS(t.write("/nonexistent/dir/out.csv"), IoError);
}

TEST_CASE("TPDM table round-trip", "[io]") {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.3, 0.3, 2.0 / 3.0;
  const auto t = tpdm_table(s, {"a", "b"});
  CHECK(tpdm_from_table(t) == s);
  CHECK_THROWS_AS(tpdm_table(s, {"a"}), ArgumentError);
  CsvTable bad({"a", "b"});
  bad.add_row({"1", "2"});
  CHECK_THROWS_AS(tpdm_from_table(bad), IoError);
}

TEST_CASE("TimeIndex", "[io]") {
  const TimeIndex num({"10", "2", "30", "7"});
  CHECK(num.nearest("7") == 3);
  CHECK(num.nearest("8") == 3);
  CHECK(num.nearest("9") == 0);
  CHECK(num.nearest("1") == 1);
  CHECK(num.nearest("100") == 2);

  const TimeIndex dates({"2020-01-03", "2020-01-01", "2020-01-05"});
  CHECK(dates.nearest("2020-01-01") == 1);
  CHECK(dates.nearest("2020-01-04") == 0);
  CHECK(dates.nearest("2019-12-31") == 1);
  CHECK(dates.nearest("2021-01-01") == 2);
  CHECK_THROWS_AS(TimeIndex().nearest("x"), ArgumentError);
}

TEST_CASE("model document round-trip", "[io]") {
  const auto& doc = small_model();
  const auto path = scratch("model.json").string();
  write_document(doc, path);
  const auto back = read_document(path);
  CHECK(back.columns == doc.columns);
  CHECK(back.target == doc.target);
  CHECK(back.weights.b == doc.weights.b);
  CHECK(back.tpdm.entries == doc.tpdm.entries);
  CHECK(back.tpdm.exceedances == doc.tpdm.exceedances);
  CHECK(back.k == doc.k);
  CHECK(back.gamma == doc.gamma);
  CHECK(back.factors.size() == doc.factors.size());
  CHECK(back.factors[3].b == doc.factors[3].b);
  CHECK(back.measure.atoms.size() == doc.measure.atoms.size());
  CHECK(back.bandwidth == doc.bandwidth);
  CHECK(back.unit_interval.lo == doc.unit_interval.lo);
  CHECK(back.unit_interval.hi == doc.unit_interval.hi);
  CHECK(to_json(back).dump() == to_json(doc).dump());
}

TEST_CASE("model documents are verified on load", "[io]") {
  const auto& doc = small_model();
  auto j = to_json(doc);
  CHECK_NOTHROW(document_from_json(j));

  auto bad_w = j;
  bad_w["weights"]["b"][0] = bad_w["weights"]["b"][0].get<double>() + 0.1;
  CHECK_THROWS_WITH(document_from_json(bad_w), ContainsSubstring("normal equations"));

  auto bad_k = j;
  bad_k["K"] = doc.k + 0.01;
  CHECK_THROWS_AS(document_from_json(bad_k), NumericError);

  auto bad_mass = j;
  bad_mass["angular"]["total_mass"] = doc.measure.total_mass * 1.5;
  CHECK_THROWS_WITH(document_from_json(bad_mass), ContainsSubstring("trace"));

  auto missing = j;
  missing.erase("gamma");
  CHECK_THROWS_AS(document_from_json(missing), IoError);

  auto fmt = j;
  fmt["format"] = "something-else";
  CHECK_THROWS_AS(document_from_json(fmt), IoError);

  const auto path = scratch("broken.json").string();
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(read_document(path), IoError);
  CHECK_THROWS_AS(read_document("/nonexistent/model.json"), IoError);
}
