#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "binsreg/csv.hpp"
#include "binsreg/dataset.hpp"
#include "binsreg/errors.hpp"
#include "support.hpp"

using namespace binsreg;
using Eigen::VectorXd;

TEST_CASE("csv: quoting, BOM and missing cells") {
  const auto t = csv::parse("\xEF\xBB\xBF" "a,\"b,c\",d\r\n1,\"x \"\"q\"\"\",\n");
  CHECK(t.header == std::vector<std::string>{"a", "b,c", "d"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][1] == "x \"q\"");
  CHECK(t.rows[0][2].empty());
  CHECK(t.column("d") == 2);
  CHECK(t.column("zz") == -1);
  CHECK_THROWS_AS(csv::parse("a,b\n1\n"), DataError);
}

TEST_CASE("csv: numeric cells") {
  CHECK(csv::parse_double("NA") == std::nullopt);
  CHECK(csv::parse_double("") == std::nullopt);
  CHECK(csv::parse_double("abc") == std::nullopt);
  CHECK(csv::parse_double("1e3").value() == 1000.0);
  CHECK(csv::parse_double(" -2.5 ").value() == -2.5);
  for (double v : {0.1, 1.0 / 3.0, -1e-300, 123456789.123456789, 5e-324}) {
    CHECK(csv::parse_double(csv::format_double(v)).value() == v);
  }
  CHECK(csv::format_double(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("plain") == "plain");
}

TEST_CASE("load_csv drops rows with missing values") {
  const auto path = support::write_file("na.csv", "y,x\n1,0.1\nNA,0.2\n3,0.3\n4,0.4\n");
  const LoadResult r = load_csv(path, {"y", "x", {}, {}, {}, {}});
  CHECK(r.data.size() == 3);
  CHECK(r.dropped_rows == 1);
  CHECK(r.data.y(1) == 3.0);
}

TEST_CASE("load_csv reports a missing column by name") {
  const auto path = support::write_file("cols.csv", "y,x\n1,2\n");
  try {
    load_csv(path, {"y", "z", {}, {}, {}, {}});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("column not found: z") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv(support::temp_dir() / "absent.csv", {"y", "x", {}, {}, {}, {}}), DataError);
  const auto empty = support::write_file("empty_rows.csv", "y,x\nNA,1\n");
  CHECK_THROWS_AS(load_csv(empty, {"y", "x", {}, {}, {}, {}}), DataError);
}

TEST_CASE("frequency weights expand the sample") {
  const auto path = support::write_file("fw.csv", "y,x,f\n1,0.1,1\n2,0.2,2\n3,0.3,1\n");
  const LoadResult r = load_csv(path, {"y", "x", {}, {}, std::string("f"), {}});
  CHECK(effective_sample(r.data).n == 4);
  const Dataset e = expand_frequency_weights(r.data);
  CHECK(e.size() == 4);
  CHECK(e.x(1) == 0.2);
  CHECK(e.x(2) == 0.2);
  CHECK_FALSE(e.weighted());
  const auto bad = support::write_file("fw_bad.csv", "y,x,f\n1,0.1,1.5\n");
  CHECK_THROWS_AS(load_csv(bad, {"y", "x", {}, {}, std::string("f"), {}}), DataError);
}

TEST_CASE("cluster and group columns") {
  const auto path = support::write_file("cl.csv", "y,x,g,t\n1,1,b,0\n2,2,a,1\n3,3,b,10\n4,4,c,1\n");
  const LoadResult r = load_csv(path, {"y", "x", {}, std::string("g"), {}, std::string("t")});
  CHECK(r.data.cluster == std::vector<std::int64_t>{0, 1, 0, 2});
  CHECK(effective_sample(r.data).G == 3);
  const auto groups = split_groups(r.data);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].label == "0");
  CHECK(groups[1].label == "1");
  CHECK(groups[2].label == "10");  // numeric, not lexicographic-by-accident
  CHECK(groups[1].rows == std::vector<Eigen::Index>{1, 3});
}

TEST_CASE("mass points") {
  VectorXd x(6);
  x << 1, 1, 2, 3, 3, 3;
  const auto m = analyze_mass_points(x);
  CHECK(m.distinct == 3);
  CHECK(m.multiplicity == std::vector<std::int64_t>{2, 1, 3});
  CHECK(analyze_mass_points(VectorXd::LinSpaced(10, 0, 1)).distinct == 10);
  CHECK(analyze_mass_points(VectorXd::Constant(5, 2.0)).distinct == 1);
}

TEST_CASE("effective sample size") {
  std::mt19937_64 gen(3);
  Dataset d = support::make_data(support::uniform(gen, 1000), support::normal(gen, 1000));
  CHECK(effective_sample(d).n_eff == 1000);
  d.cluster.resize(1000);
  for (int i = 0; i < 1000; ++i) d.cluster[static_cast<std::size_t>(i)] = i % 40;
  CHECK(effective_sample(d).n_eff == 40);
  d.cluster.clear();
  for (int i = 0; i < 1000; ++i) d.x(i) = i % 15;
  const auto es = effective_sample(d);
  CHECK(es.N == 15);
  CHECK(es.n_eff == 15);
  CHECK(effective_sample(d, false).n_eff == 1000);
}

TEST_CASE("degrees of freedom checks") {
  CHECK(df_check_nonparametric(100, 0, 0, 26, 30));
  CHECK_FALSE(df_check_nonparametric(56, 0, 0, 26, 30));
  CHECK(df_check_nonparametric(200, 3, 3, 40, 30));
  CHECK_FALSE(df_check_nonparametric(73, 3, 3, 40, 30));
  CHECK(df_check_rot(100, 0, 20));
  CHECK_FALSE(df_check_rot(21, 0, 20));
  CHECK(df_check_rot(25, 3, 20));
  CHECK(kDefaultN1 == 30);
  CHECK(kDefaultN2 == 20);
}

TEST_CASE("property: nonparametric check is monotone in J and p") {
  for (std::int64_t n = 1; n < 400; n += 7) {
    for (int s = 0; s <= 3; ++s) {
      for (int p = s; p <= 4; ++p) {
        for (std::int64_t J = 1; J < 60; ++J) {
          if (!df_check_nonparametric(n, p, s, J)) {
            CHECK_FALSE(df_check_nonparametric(n, p, s, J + 1));
            CHECK_FALSE(df_check_nonparametric(n, p + 1, s, J));
          }
        }
      }
    }
  }
}

TEST_CASE("property: mass points and effective sample are permutation invariant") {
  std::mt19937_64 gen(11);
  VectorXd x(300);
  for (int i = 0; i < 300; ++i) x(i) = std::floor(support::uniform(gen, 1)(0) * 40);
  Dataset d = support::make_data(x, support::normal(gen, 300));
  std::vector<Eigen::Index> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(perm.begin(), perm.end(), gen);
    const Dataset p = subset(d, perm);
    const auto a = analyze_mass_points(d.x), b = analyze_mass_points(p.x);
    CHECK(a.unique_values == b.unique_values);
    CHECK(a.multiplicity == b.multiplicity);
    CHECK(effective_sample(p).n_eff == effective_sample(d).n_eff);
  }
}
