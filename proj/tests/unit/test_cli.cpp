#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>

#include "binsreg/cli.hpp"
#include "binsreg/csv.hpp"
#include "binsreg/errors.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace binsreg;
using namespace binsreg::cli;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "binsreg");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path gated_data() { return support::write_file("gated.csv", fixtures::gated_csv()); }

std::filesystem::path sine_data(int n = 1000) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> z(0, 0.5);
  std::ostringstream s;
  s << "y,x,g\n";
  for (int i = 0; i < n; ++i) {
    const double x = u(gen);
    s << csv::format_double(std::sin(2 * M_PI * x) + z(gen)) << ',' << csv::format_double(x) << ','
      << (i % 2 ? "b" : "a") << '\n';
  }
  return support::write_file("sine.csv", s.str());
}

int reported(const std::string& report, const std::string& label) {
  const std::regex re(label + R"(\s*:\s*(\d+))");
  std::smatch m;
  REQUIRE(std::regex_search(report, m, re));
  return std::stoi(m[1]);
}

void check_golden(const std::string& name, const std::string& actual) {
  const std::filesystem::path path = std::filesystem::path(BINSREG_GOLDEN_DIR) / name;
  if (std::getenv("BINSREG_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << actual;
  }
  CHECK(support::read_file(path) == actual);
}

}  // namespace

TEST_CASE("parse: defaults per command") {
  const auto fit = parse_args({"binsreg", "fit", "--data", "a.csv", "--y", "y", "--x", "x"});
  REQUIRE(fit.config);
  CHECK(fit.config->command == Command::fit);
  CHECK(fit.config->dots == DegreePair{0, 0});
  CHECK(fit.config->testmodel == DegreePair{3, 3});
  CHECK(fit.config->testshape == DegreePair{3, 3});
  CHECK(fit.config->nsims == 500);
  CHECK(fit.config->simsngrid == 20);
  CHECK(fit.config->level == 95.0);
  CHECK(fit.config->N1 == 30);
  CHECK(fit.config->N2 == 20);
  CHECK(fit.config->binsmethod == SelectMethod::dpi);
  CHECK(fit.config->selection_pair() == DegreePair{0, 0});
  CHECK_FALSE(fit.config->tests_requested());

  const auto test = parse_args({"binsreg", "test", "--data", "a.csv", "--y", "y", "--x", "x", "--testmodelpoly", "1",
                                "--bins", "2,1", "--dfcheck", "40,25", "--cluster", "c"});
  REQUIRE(test.config);
  CHECK(test.config->tests_requested());
  CHECK(test.config->testmodelpoly == 1);
  CHECK(test.config->selection_pair() == DegreePair{2, 1});
  CHECK(test.config->N1 == 40);
  CHECK(test.config->N2 == 25);
  CHECK(test.config->vce == VceType::cluster);

  CHECK(parse_pair("3,2", "--x") == DegreePair{3, 2});
  CHECK_THROWS_AS(parse_pair("3", "--x"), ConfigError);
}

TEST_CASE("config errors map to exit code 2") {
  const auto data = gated_data().string();
  CHECK(invoke({"fit", "--data", data, "--y", "y", "--x", "x", "--bogus"}).code == kExitConfig);
  CHECK(invoke({"fit", "--y", "y", "--x", "x"}).code == kExitConfig);
  CHECK(invoke({"fit", "--data", data, "--y", "y", "--x", "x", "--line", "1"}).code == kExitConfig);
  CHECK(invoke({"fit", "--data", data, "--y", "y", "--x", "x", "--line", "1,2"}).code == kExitConfig);
  CHECK(invoke({"fit", "--data", data, "--y", "y", "--x", "x", "--deriv", "1"}).code == kExitConfig);
  CHECK(invoke({"fit", "--data", data, "--y", "y", "--x", "x", "--vce", "cluster"}).code == kExitConfig);
  CHECK(invoke({"select", "--data", data, "--y", "y", "--x", "x", "--binspos", "es", "--binsmethod", "rot",
                "--nbins", "0"})
            .code == kExitConfig);
  CHECK(invoke({"--help"}).code == kExitOk);
}

TEST_CASE("data errors map to exit code 3") {
  const auto data = gated_data().string();
  CHECK(invoke({"fit", "--data", "/nonexistent/file.csv", "--y", "y", "--x", "x"}).code == kExitData);
  const Outcome missing = invoke({"fit", "--data", data, "--y", "y", "--x", "nope", "--noplot"});
  CHECK(missing.code == kExitData);
  CHECK(missing.err.find("nope") != std::string::npos);
}

TEST_CASE("golden reports for a dataset with too few distinct values") {
  const auto data = gated_data().string();
  std::vector<std::string> fit_args = {"fit", "--data", data};
  fit_args.insert(fit_args.end(), std::begin(fixtures::kGatedFitArgs), std::end(fixtures::kGatedFitArgs));
  const Outcome fit = invoke(fit_args);
  CHECK(fit.code == kExitOk);
  check_golden("gated_fit.out", fit.out);
  check_golden("gated_fit.err", fit.err);

  std::vector<std::string> test_args = {"test", "--data", data};
  test_args.insert(test_args.end(), std::begin(fixtures::kGatedTestArgs), std::end(fixtures::kGatedTestArgs));
  const Outcome test = invoke(test_args);
  CHECK(test.code == kExitGated);
  check_golden("gated_test.out", test.out);
  check_golden("gated_test.err", test.err);
}

TEST_CASE("fit and select agree on J; tests report on real data") {
  const auto data = sine_data().string();
  const Outcome fit = invoke({"fit", "--data", data, "--y", "y", "--x", "x", "--noplot"});
  REQUIRE(fit.code == kExitOk);
  const Outcome sel = invoke({"select", "--data", data, "--y", "y", "--x", "x"});
  REQUIRE(sel.code == kExitOk);
  CHECK(reported(fit.out, "Bins \\(J\\)") == reported(sel.out, "Selected J"));
  CHECK(reported(fit.out, "DPI") == reported(sel.out, "DPI"));

  const Outcome test = invoke({"test", "--data", data, "--y", "y", "--x", "x", "--testmodelpoly", "0",
                               "--testshapel", "5", "--threads", "1"});
  REQUIRE(test.code == kExitOk);
  const std::regex line(R"(statistic = (-?[0-9.]+)\s+p-value = ([0-9.]+))");
  std::vector<double> p;
  for (auto it = std::sregex_iterator(test.out.begin(), test.out.end(), line); it != std::sregex_iterator(); ++it) {
    p.push_back(std::stod((*it)[2]));
  }
  REQUIRE(p.size() == 2);
  CHECK(p[0] < 0.01);   // sine is not constant
  CHECK(p[1] > 0.5);    // sup of the sine is well below 5

  const Outcome again = invoke({"test", "--data", data, "--y", "y", "--x", "x", "--testmodelpoly", "0",
                                "--testshapel", "5", "--threads", "3"});
  CHECK(again.out == test.out);
}

TEST_CASE("fit writes savedata and svg; by-groups in sorted order") {
  const auto data = sine_data(600).string();
  const auto save = support::temp_dir() / "cli_save.csv";
  const auto svg = support::temp_dir() / "cli_plot.svg";
  std::filesystem::remove(save);
  const std::vector<std::string> args = {"fit", "--data", data, "--y", "y", "--x", "x", "--by", "g", "--nbins", "8",
                                         "--line", "2,2", "--cb", "2,2", "--savedata", save.string(), "--svg",
                                         svg.string()};
  const Outcome first = invoke(args);
  REQUIRE(first.code == kExitOk);
  CHECK(first.out.find("Group: a") < first.out.find("Group: b"));
  const PlotBundle b = read_savedata(save);
  REQUIRE(b.groups.size() == 2);
  CHECK(b.groups[0].label == "a");
  REQUIRE(b.groups[0].find(SeriesKind::dots) != nullptr);
  CHECK(b.groups[0].find(SeriesKind::dots)->points.size() == 8);
  CHECK(b.groups[1].find(SeriesKind::cb) != nullptr);
  const std::string plot = support::read_file(svg);
  std::size_t markers = 0;
  for (auto pos = plot.find("class=\"marker\""); pos != std::string::npos; pos = plot.find("class=\"marker\"", pos + 1))
    ++markers;
  CHECK(markers == 16);

  CHECK(invoke(args).code == kExitConfig);
  auto replace = args;
  replace.push_back("--replace");
  CHECK(invoke(replace).code == kExitOk);
}

TEST_CASE("select writes the evaluation grid") {
  const auto data = sine_data(500).string();
  const auto grid = support::temp_dir() / "cli_grid.csv";
  std::filesystem::remove(grid);
  const Outcome sel = invoke({"select", "--data", data, "--y", "y", "--x", "x", "--nbins", "6", "--savegrid",
                              grid.string(), "--simsngrid", "4"});
  REQUIRE(sel.code == kExitOk);
  const csv::Table t = csv::read(grid);
  CHECK(t.header == std::vector<std::string>{"x", "binsreg_isknot", "binsreg_bin"});
  CHECK(t.rows.size() == 6 * 4 + 5);
  CHECK(invoke({"select", "--data", data, "--y", "y", "--x", "x", "--by", "g", "--savegrid",
                (support::temp_dir() / "cli_grid2.csv").string()})
            .code == kExitConfig);
}
