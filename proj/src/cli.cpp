#include "binsreg/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "binsreg/basis.hpp"
#include "binsreg/csv.hpp"
#include "binsreg/errors.hpp"

namespace binsreg::cli {

namespace {

std::string pair_label(const std::string& name, DegreePair ps) {
  return name + "(" + std::to_string(ps.p) + "," + std::to_string(ps.s) + ")";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void warn(std::ostream& err, const std::string& message) { err << "warning: " << message << '\n'; }

void check_pair(DegreePair ps, int v, const std::string& name) {
  if (ps.p < 0 || ps.s < 0 || ps.s > ps.p) {
    throw ConfigError(pair_label(name, ps) + ": need 0 <= s <= p");
  }
  if (v > ps.p) {
    throw ConfigError(pair_label(name, ps) + ": deriv " + std::to_string(v) + " exceeds the degree p");
  }
}

void check_positive(int value, const std::string& name) {
  if (value < 1) throw ConfigError(name + " must be at least 1");
}

SimulationOptions simulation(const RunConfig& c) {
  SimulationOptions sim;
  sim.draws = c.nsims;
  sim.seed = c.seed;
  sim.threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  return sim;
}

double alpha(const RunConfig& c) { return 1.0 - c.level / 100.0; }

// ---------------------------------------------------------------------------
// Binning

struct BinPlan {
  std::optional<Partition> partition;
  std::string source;  // user | manual | dpi | rot | fallback
  std::optional<BinSelectResult> selection;
  bool fallback = false;
};

SelectOptions select_options(const RunConfig& c) {
  SelectOptions o;
  const DegreePair ps = c.selection_pair();
  o.p = ps.p;
  o.s = ps.s;
  o.v = c.deriv;
  o.placement = c.binspos;
  o.method = c.binsmethod;
  o.nbinsrot = c.nbinsrot;
  o.vce = c.vce;
  o.mass_adjust = !c.nomassadj;
  o.N1 = c.N1;
  o.N2 = c.N2;
  return o;
}

BinPlan plan_bins(const Dataset& data, const RunConfig& c, std::ostream& err) {
  BinPlan plan;
  if (c.binspos == Placement::manual) {
    plan.partition = manual_partition(data.x, c.manual_knots);
    plan.source = "manual";
    return plan;
  }
  if (c.nbins) {
    plan.partition = make_partition(data.x, *c.nbins, c.binspos);
    plan.source = "user";
    if (plan.partition->collapsed()) {
      warn(err, "duplicate knots: " + std::to_string(*c.nbins) + " bins requested, " +
                    std::to_string(plan.partition->bins()) + " unique bins used");
    }
    return plan;
  }
  BinSelectResult sel = select_bins(data, select_options(c));
  for (const auto& w : sel.warnings) warn(err, w);
  if (sel.fallback) {
    plan.partition = unique_value_partition(analyze_mass_points(data.x));
    plan.source = "fallback";
    plan.fallback = true;
  } else {
    plan.partition = make_partition(data.x, sel.selected(), c.binspos);
    plan.source = sel.J_dpi && c.binsmethod == SelectMethod::dpi ? "dpi" : "rot";
  }
  plan.selection = std::move(sel);
  return plan;
}

// ---------------------------------------------------------------------------
// Report pieces

void print_header(std::ostream& out, const RunConfig& c, std::size_t dropped) {
  out << "binsreg " << to_string(c.command) << " (report v" << kReportVersion << ")\n";
  out << "Outcome: " << c.columns.y << "   Regressor: " << c.columns.x;
  if (!c.columns.covariates.empty()) {
    out << "   Covariates:";
    for (const auto& w : c.columns.covariates) out << ' ' << w;
  }
  out << '\n';
  out << "Rows dropped (missing values): " << dropped << '\n';
  out << "Derivative: " << c.deriv << "   VCE: " << (c.vce == VceType::cluster ? "cluster" : "robust")
      << "   Level: " << compact(c.level) << '\n';
}

void print_sample(std::ostream& out, const std::string& label, const EffectiveSample& es, bool clustered) {
  out << "\nGroup: " << label << '\n';
  out << "  Observations (n)       : " << es.n << '\n';
  out << "  Distinct values (N)    : " << es.N << '\n';
  out << "  Clusters (G)           : " << (clustered ? std::to_string(es.G) : std::string("-")) << '\n';
  out << "  Effective sample size  : " << es.n_eff << '\n';
}

void print_bins(std::ostream& out, const BinPlan& plan) {
  out << "  Bins (J)               : " << plan.partition->bins() << "   [" << plan.source << ", "
      << to_string(plan.partition->placement()) << "]\n";
}

void print_selection(std::ostream& out, const BinSelectResult& sel) {
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("-"); };
  out << "  Selection method       : " << to_string(sel.method) << (sel.fallback ? " (fallback: J = N)" : "")
      << '\n';
  out << "  ROT-POLY               : " << sel.J_rot_poly << '\n';
  out << "  ROT-REGUL              : " << sel.J_rot_regul << '\n';
  out << "  ROT-UKNOT              : " << sel.J_rot_uknot << '\n';
  out << "  DPI                    : " << opt(sel.J_dpi) << '\n';
  out << "  DPI-UKNOT              : " << opt(sel.J_dpi_uknot) << '\n';
}

// ---------------------------------------------------------------------------
// Tests

struct TestModel {
  std::unique_ptr<ConstrainedBasis> basis;
  FitResult fit;
  GridEstimate estimate;
  ExtremaDraws draws;
};

struct GroupTestOutcome {
  int reported = 0;
  int skipped = 0;
};

GroupTestOutcome run_group_tests(const Dataset& data, const Partition& partition, const EffectiveSample& es,
                                 bool gated, const RunConfig& c, std::ostream& out, std::ostream& err) {
  GroupTestOutcome result;
  const int requested = static_cast<int>(c.testmodelpoly.has_value()) + static_cast<int>(c.testmodelparfit.has_value()) +
                        static_cast<int>(c.testshapel.size() + c.testshaper.size() + c.testshape2.size());
  if (requested == 0) return result;
  if (gated) {
    warn(err, "too little variation in x: hypothesis tests are not computed");
    out << "  Tests                  : not computed (too little variation in x)\n";
    result.skipped = requested;
    return result;
  }
  const SimulationOptions sim = simulation(c);
  const int J = partition.bins();
  std::map<std::pair<int, int>, std::unique_ptr<TestModel>> models;

  auto model_for = [&](DegreePair ps, const std::string& name) -> TestModel* {
    const auto key = std::make_pair(ps.p, ps.s);
    if (auto it = models.find(key); it != models.end()) return it->second.get();
    if (!df_check_nonparametric(es.n_eff, ps.p, ps.s, J, c.N1)) {
      warn(err, pair_label(name, ps) + " fails the degrees of freedom check at J = " + std::to_string(J));
      models[key] = nullptr;
      return nullptr;
    }
    auto m = std::make_unique<TestModel>();
    try {
      m->basis = std::make_unique<ConstrainedBasis>(partition, ps.p, ps.s);
      m->fit = fit(data, *m->basis, c.vce);
      const EvalGrid grid = build_grid(partition, c.simsngrid, true);
      m->estimate = evaluate_on_grid(m->fit, *m->basis, grid, c.deriv);
      m->draws = sup_process_draws(m->fit, *m->basis, grid, c.deriv, sim);
    } catch (const DataError& e) {
      warn(err, pair_label(name, ps) + " unavailable: " + e.what());
      models[key] = nullptr;
      return nullptr;
    }
    return (models[key] = std::move(m)).get();
  };

  auto report = [&](const std::string& label, DegreePair ps, const std::string& name, const TestResult& t) {
    out << "  " << label << " [" << pair_label(name, ps) << "]  H0: " << t.null_hypothesis
        << "  statistic = " << fixed(t.statistic, 4) << "  p-value = " << fixed(t.p_value, 4) << '\n';
    ++result.reported;
  };

  if (c.testmodelpoly || c.testmodelparfit) {
    TestModel* m = model_for(c.testmodel, "testmodel");
    if (!m) {
      result.skipped += static_cast<int>(c.testmodelpoly.has_value()) + static_cast<int>(c.testmodelparfit.has_value());
    } else {
      if (c.testmodelpoly) {
        try {
          const TestResult t = spec_test_poly(data, *c.testmodelpoly, m->fit, *m->basis, m->estimate.grid, c.deriv,
                                              m->draws);
          report("testmodelpoly(" + std::to_string(*c.testmodelpoly) + ")", c.testmodel, "testmodel", t);
        } catch (const DataError& e) {
          warn(err, std::string("testmodelpoly skipped: ") + e.what());
          ++result.skipped;
        }
      }
      if (c.testmodelparfit) {
        for (const auto& r : spec_test_file(*c.testmodelparfit, data.x_name, m->fit, *m->basis, c.deriv, sim)) {
          report("testmodelparfit " + r.column, c.testmodel, "testmodel", r.result);
        }
      }
    }
  }

  const std::size_t shapes = c.testshapel.size() + c.testshaper.size() + c.testshape2.size();
  if (shapes > 0) {
    TestModel* m = model_for(c.testshape, "testshape");
    if (!m) {
      result.skipped += static_cast<int>(shapes);
    } else {
      for (double a : c.testshapel) {
        report("testshapel(" + compact(a) + ")", c.testshape, "testshape", shape_test(m->estimate, a, Side::left, m->draws));
      }
      for (double a : c.testshaper) {
        report("testshaper(" + compact(a) + ")", c.testshape, "testshape",
               shape_test(m->estimate, a, Side::right, m->draws));
      }
      for (double a : c.testshape2) {
        report("testshape2(" + compact(a) + ")", c.testshape, "testshape", shape_test(m->estimate, a, Side::two, m->draws));
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Shared driver

struct Loaded {
  Dataset data;  // frequency weights expanded
  std::size_t dropped = 0;
  std::vector<Group> groups;
};

Loaded load(const RunConfig& c) {
  LoadResult raw = load_csv(c.input, c.columns);
  Loaded l;
  l.data = expand_frequency_weights(raw.data);
  l.dropped = raw.dropped_rows;
  l.groups = split_groups(l.data);
  return l;
}

struct GroupData {
  std::string label;
  Dataset data;
  EffectiveSample sample;
};

std::vector<GroupData> group_data(const Loaded& l, const RunConfig& c) {
  std::vector<GroupData> out;
  for (const auto& g : l.groups) {
    GroupData gd{g.label, l.groups.size() == 1 ? l.data : subset(l.data, g.rows), {}};
    gd.sample = effective_sample(gd.data, !c.nomassadj);
    out.push_back(std::move(gd));
  }
  return out;
}

std::optional<BinPlan> pooled_plan(const Loaded& l, const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (!c.samebinsby || l.groups.size() < 2) return std::nullopt;
  BinPlan plan = plan_bins(l.data, c, err);
  out << "\nCommon binning (samebinsby, full sample)\n";
  print_bins(out, plan);
  if (plan.selection) print_selection(out, *plan.selection);
  return plan;
}

GridEstimate estimate_series(const Dataset& data, const Partition& partition, DegreePair ps, int ngrid,
                             const RunConfig& c, FitResult* keep_fit = nullptr,
                             std::unique_ptr<ConstrainedBasis>* keep_basis = nullptr) {
  auto basis = std::make_unique<ConstrainedBasis>(partition, ps.p, ps.s);
  FitResult f = fit(data, *basis, c.vce);
  GridEstimate est = evaluate_on_grid(f, *basis, build_grid(partition, ngrid, false), c.deriv);
  if (keep_fit) *keep_fit = std::move(f);
  if (keep_basis) *keep_basis = std::move(basis);
  return est;
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::fit: return "fit";
    case Command::test: return "test";
    case Command::select: return "select";
  }
  return "fit";
}

DegreePair parse_pair(const std::string& text, const std::string& option) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError(option + " expects p,s (got '" + text + "')");
  try {
    std::size_t used_p = 0, used_s = 0;
    const std::string a = text.substr(0, comma), b = text.substr(comma + 1);
    DegreePair ps{std::stoi(a, &used_p), std::stoi(b, &used_s)};
    if (used_p != a.size() || used_s != b.size()) throw std::invalid_argument("trailing");
    return ps;
  } catch (const std::logic_error&) {
    throw ConfigError(option + " expects p,s (got '" + text + "')");
  }
}

bool RunConfig::tests_requested() const {
  return testmodelpoly || testmodelparfit || !testshapel.empty() || !testshaper.empty() || !testshape2.empty();
}

DegreePair RunConfig::selection_pair() const { return command == Command::fit ? dots : bins; }

void RunConfig::validate() const {
  if (deriv < 0) throw ConfigError("deriv must be non-negative");
  check_pair(selection_pair(), deriv, command == Command::fit ? "dots" : "bins");
  if (command == Command::fit) {
    if (line) check_pair(*line, deriv, "line");
    if (ci) check_pair(*ci, deriv, "ci");
    if (cb) check_pair(*cb, deriv, "cb");
    check_positive(dotsngrid, "dotsngrid");
    check_positive(linengrid, "linengrid");
    check_positive(cingrid, "cingrid");
    check_positive(cbngrid, "cbngrid");
    check_positive(polyregngrid, "polyregngrid");
    if (polyregcingrid < 0) throw ConfigError("polyregcingrid must be non-negative");
    if (polyreg && *polyreg < 0) throw ConfigError("polyreg degree must be non-negative");
    binsreg::validate(style);
    if (svg_width < 100 || svg_height < 100) throw ConfigError("SVG size must be at least 100x100");
  }
  if (command != Command::select) {
    if (testmodelpoly || testmodelparfit) check_pair(testmodel, deriv, "testmodel");
    if (!testshapel.empty() || !testshaper.empty() || !testshape2.empty()) check_pair(testshape, deriv, "testshape");
    if (testmodelpoly && *testmodelpoly < 0) throw ConfigError("testmodelpoly degree must be non-negative");
    for (const auto* list : {&testshapel, &testshaper, &testshape2}) {
      for (double a : *list) {
        if (!std::isfinite(a)) throw ConfigError("shape test boundaries must be finite");
      }
    }
    check_positive(nsims, "nsims");
  }
  if (command == Command::test && !tests_requested()) {
    throw ConfigError("no test requested: give testmodelpoly, testmodelparfit, testshapel, testshaper or testshape2");
  }
  check_positive(simsngrid, "simsngrid");
  if (nbins) check_positive(*nbins, "nbins");
  if (nbinsrot) check_positive(*nbinsrot, "nbinsrot");
  if (binspos == Placement::manual) {
    if (command == Command::select) throw ConfigError("select needs binspos qs or es");
    if (nbins && *nbins != static_cast<int>(manual_knots.size()) + 1) {
      throw ConfigError("nbins disagrees with the number of manual knots");
    }
  }
  if (!(level > 0.0 && level < 100.0)) throw ConfigError("level must be in (0, 100)");
  if (vce == VceType::cluster && !columns.cluster) throw ConfigError("vce cluster needs a cluster column");
  if (N1 < 0 || N2 < 0) throw ConfigError("dfcheck cutoffs must be non-negative");
  if (samebinsby && !columns.by) throw ConfigError("samebinsby needs a by column");
}

ParseResult parse_args(const std::vector<std::string>& args) {
  ParseResult result;
  RunConfig c;
  CLI::App app{"Binned scatter plots, binscatter inference and bin selection", "binsreg"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  CLI::App* fit_cmd = app.add_subcommand("fit", "Binned scatter plot with optional lines, intervals and bands");
  CLI::App* test_cmd = app.add_subcommand("test", "Specification and shape restriction tests");
  CLI::App* select_cmd = app.add_subcommand("select", "Data-driven choice of the number of bins");

  std::string dots_s, line_s, ci_s, cb_s, testmodel_s, testshape_s, bins_s, binspos_s = "qs", method_s = "dpi",
                                                                         vce_s = "robust", dfcheck_s;
  std::string parfit_s, savedata_s, savegrid_s, svg_s;
  std::vector<std::string> colors, symbols, patterns;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--data", c.input, "Input CSV file")->required();
    sub->add_option("--y", c.columns.y, "Outcome column")->required();
    sub->add_option("--x", c.columns.x, "Regressor column")->required();
    sub->add_option("--w", c.columns.covariates, "Covariate columns (comma separated)")->delimiter(',');
    sub->add_option("--cluster", c.columns.cluster, "Cluster identifier column");
    sub->add_option("--fweight", c.columns.fweight, "Frequency weight column (positive integers)");
    sub->add_option("--deriv", c.deriv, "Derivative order v");
    sub->add_option("--nbins", c.nbins, "Number of bins J");
    sub->add_option("--binspos", binspos_s, "qs, es, or inner knot positions k1,k2,...");
    sub->add_option("--binsmethod", method_s, "dpi or rot");
    sub->add_option("--nbinsrot", c.nbinsrot, "Initial J for the DPI selector");
    sub->add_option("--simsngrid", c.simsngrid, "Evaluation points per bin for sup/inf approximations");
    sub->add_option("--vce", vce_s, "robust or cluster");
    sub->add_flag("--nomassadj", c.nomassadj, "Ignore mass points in x");
    sub->add_option("--dfcheck", dfcheck_s, "n1,n2 cutoffs for the degrees of freedom checks");
    sub->add_option("--threads", c.threads, "Worker threads for simulations (0 = all cores)");
  };
  auto simulation_opts = [&](CLI::App* sub) {
    sub->add_option("--nsims", c.nsims, "Simulation draws");
    sub->add_option("--seed,--simsseed", c.seed, "Simulation seed");
  };
  auto test_opts = [&](CLI::App* sub) {
    sub->add_option("--testmodel", testmodel_s, "p,s for specification tests");
    sub->add_option("--testmodelpoly", c.testmodelpoly, "Global polynomial degree under the null");
    sub->add_option("--testmodelparfit", parfit_s, "CSV with evaluation grid and binsreg_fit* columns");
    sub->add_option("--testshape", testshape_s, "p,s for shape tests");
    sub->add_option("--testshapel", c.testshapel, "Boundaries a for H0: sup mu^(v) <= a")->delimiter(',');
    sub->add_option("--testshaper", c.testshaper, "Boundaries a for H0: inf mu^(v) >= a")->delimiter(',');
    sub->add_option("--testshape2", c.testshape2, "Values a for H0: mu^(v) = a")->delimiter(',');
  };

  common(fit_cmd);
  simulation_opts(fit_cmd);
  test_opts(fit_cmd);
  fit_cmd->add_option("--by", c.columns.by, "Group column");
  fit_cmd->add_option("--dots", dots_s, "p,s for dots (default 0,0)");
  fit_cmd->add_option("--line", line_s, "p,s for the line");
  fit_cmd->add_option("--ci", ci_s, "p,s for confidence intervals");
  fit_cmd->add_option("--cb", cb_s, "p,s for the confidence band");
  fit_cmd->add_option("--dotsngrid", c.dotsngrid, "Dots per bin");
  fit_cmd->add_option("--linengrid", c.linengrid, "Line points per bin");
  fit_cmd->add_option("--cingrid", c.cingrid, "Confidence intervals per bin");
  fit_cmd->add_option("--cbngrid", c.cbngrid, "Band points per bin");
  fit_cmd->add_option("--polyreg", c.polyreg, "Degree of a global polynomial overlay");
  fit_cmd->add_option("--polyregngrid", c.polyregngrid, "Polynomial points per bin");
  fit_cmd->add_option("--polyregcingrid", c.polyregcingrid, "Polynomial confidence intervals per bin (0 = none)");
  fit_cmd->add_flag("--samebinsby", c.samebinsby, "Common binning across groups, chosen on the full sample");
  fit_cmd->add_option("--level", c.level, "Confidence level in percent");
  fit_cmd->add_option("--savedata", savedata_s, "Write the plotted series to this CSV");
  fit_cmd->add_flag("--replace", c.replace, "Overwrite existing output files");
  fit_cmd->add_flag("--noplot", c.noplot, "Do not write the SVG plot");
  fit_cmd->add_option("--svg", svg_s, "SVG output path (default binsreg.svg)");
  fit_cmd->add_option("--width", c.svg_width, "SVG width in pixels");
  fit_cmd->add_option("--height", c.svg_height, "SVG height in pixels");
  fit_cmd->add_option("--title", c.title, "Plot title");
  fit_cmd->add_option("--bycolors", colors, "Group colors")->delimiter(',');
  fit_cmd->add_option("--bysymbols", symbols, "Group symbols: circle square triangle diamond cross")->delimiter(',');
  fit_cmd->add_option("--bylpatterns", patterns, "Group line patterns: solid dash dot dashdot")->delimiter(',');

  common(test_cmd);
  simulation_opts(test_cmd);
  test_opts(test_cmd);
  test_cmd->add_option("--by", c.columns.by, "Group column");
  test_cmd->add_option("--bins", bins_s, "p,s used to select J (default 0,0)");

  common(select_cmd);
  select_cmd->add_option("--by", c.columns.by, "Group column");
  select_cmd->add_option("--bins", bins_s, "p,s used to select J (default 0,0)");
  select_cmd->add_option("--savegrid", savegrid_s, "Write the evaluation grid to this CSV");
  select_cmd->add_flag("--replace", c.replace, "Overwrite existing output files");

  std::vector<const char*> argv;
  argv.push_back(args.empty() ? "binsreg" : args.front().c_str());
  for (std::size_t i = 1; i < args.size(); ++i) argv.push_back(args[i].c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    result.exit_code = app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    result.message = out.str() + err.str();
    if (result.exit_code != kExitOk) result.message += "\n" + app.help();
    return result;
  }

  try {
    c.command = fit_cmd->parsed() ? Command::fit : test_cmd->parsed() ? Command::test : Command::select;
    if (!dots_s.empty()) c.dots = parse_pair(dots_s, "--dots");
    if (!line_s.empty()) c.line = parse_pair(line_s, "--line");
    if (!ci_s.empty()) c.ci = parse_pair(ci_s, "--ci");
    if (!cb_s.empty()) c.cb = parse_pair(cb_s, "--cb");
    if (!testmodel_s.empty()) c.testmodel = parse_pair(testmodel_s, "--testmodel");
    if (!testshape_s.empty()) c.testshape = parse_pair(testshape_s, "--testshape");
    if (!bins_s.empty()) c.bins = parse_pair(bins_s, "--bins");
    if (!parfit_s.empty()) c.testmodelparfit = parfit_s;
    if (!savedata_s.empty()) c.savedata = savedata_s;
    if (!savegrid_s.empty()) c.savegrid = savegrid_s;
    if (!svg_s.empty()) c.svg = svg_s;
    if (!colors.empty()) c.style.colors = colors;
    if (!symbols.empty()) c.style.symbols = symbols;
    if (!patterns.empty()) c.style.patterns = patterns;

    if (binspos_s == "qs") {
      c.binspos = Placement::quantile;
    } else if (binspos_s == "es") {
      c.binspos = Placement::even;
    } else {
      c.binspos = Placement::manual;
      std::stringstream ss(binspos_s);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto v = csv::parse_double(item);
        if (!v) throw ConfigError("--binspos expects qs, es or a list of numbers (got '" + binspos_s + "')");
        c.manual_knots.push_back(*v);
      }
    }
    if (method_s == "dpi") {
      c.binsmethod = SelectMethod::dpi;
    } else if (method_s == "rot") {
      c.binsmethod = SelectMethod::rot;
    } else {
      throw ConfigError("--binsmethod expects dpi or rot");
    }

    const CLI::App* active = fit_cmd->parsed() ? fit_cmd : test_cmd->parsed() ? test_cmd : select_cmd;
    if (vce_s == "robust") {
      c.vce = (active->count("--vce") == 0 && c.columns.cluster) ? VceType::cluster : VceType::robust;
    } else if (vce_s == "cluster") {
      c.vce = VceType::cluster;
    } else {
      throw ConfigError("--vce expects robust or cluster");
    }
    if (!dfcheck_s.empty()) {
      const DegreePair d = parse_pair(dfcheck_s, "--dfcheck");
      c.N1 = d.p;
      c.N2 = d.s;
    }
    c.validate();
  } catch (const ConfigError& e) {
    result.exit_code = kExitConfig;
    result.message = std::string("error: ") + e.what() + "\n";
    return result;
  }
  result.config = std::move(c);
  return result;
}

int run_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Loaded l = load(c);
  print_header(out, c, l.dropped);
  const std::optional<BinPlan> pooled = pooled_plan(l, c, out, err);
  const SimulationOptions sim = simulation(c);
  const double a = alpha(c);
  const int v = c.deriv;
  std::vector<GroupResults> plotted;

  for (const GroupData& g : group_data(l, c)) {
    print_sample(out, g.label, g.sample, g.data.clustered());
    const BinPlan plan = pooled ? *pooled : plan_bins(g.data, c, err);
    const Partition& partition = *plan.partition;
    const int J = partition.bins();
    print_bins(out, plan);
    if (!pooled && plan.selection) print_selection(out, *plan.selection);

    const std::int64_t n_eff = g.sample.n_eff;
    auto passes = [&](DegreePair ps) { return df_check_nonparametric(n_eff, ps.p, ps.s, J, c.N1); };
    const bool gated = plan.fallback || !passes(c.dots);
    if (gated) {
      warn(err, "group " + g.label + ": too little variation in x for " + pair_label("dots", c.dots) + " at J = " +
                    std::to_string(J) + "; only dots(0,0), ci(0,0) and polyreg are computed");
      out << "  Regime                 : too little variation in x, nonparametric inference off\n";
    }

    GroupResults gr;
    gr.label = g.label;
    gr.support_lower = partition.lower();
    gr.support_upper = partition.upper();
    auto line_status = [&](const std::string& name, const std::string& status) {
      out << "  " << name << std::string(name.size() < 23 ? 23 - name.size() : 0, ' ') << ": " << status << '\n';
    };
    auto df_text = [&](DegreePair ps) { return "df " + std::to_string(basis_dimension(ps.p, ps.s, J)); };
    auto off = [&](const std::string& name, const std::string& why) {
      line_status(name, "off (" + why + ")");
      warn(err, "group " + g.label + ": " + name + " off (" + why + ")");
    };

    // Dots
    {
      DegreePair ps = gated ? DegreePair{0, 0} : c.dots;
      const std::string name = pair_label("dots", ps);
      if (gated && v > 0) {
        off(name, "derivative not available");
      } else {
        try {
          const GridEstimate est = estimate_series(g.data, partition, ps, c.dotsngrid, c);
          gr.series.push_back(make_series(SeriesKind::dots, est));
          line_status(name, df_text(ps));
        } catch (const DataError& e) {
          off(name, e.what());
        }
      }
    }
    // Line
    if (c.line) {
      const std::string name = pair_label("line", *c.line);
      if (gated || !passes(*c.line)) {
        off(name, "degrees of freedom check failed");
      } else {
        try {
          gr.series.push_back(make_series(SeriesKind::line, estimate_series(g.data, partition, *c.line, c.linengrid, c)));
          line_status(name, df_text(*c.line));
        } catch (const DataError& e) {
          off(name, e.what());
        }
      }
    }
    // Confidence intervals
    if (c.ci) {
      const std::string name = pair_label("ci", *c.ci);
      const bool allowed = gated ? (*c.ci == DegreePair{0, 0}) : passes(*c.ci);
      if (!allowed) {
        off(name, "degrees of freedom check failed");
      } else {
        try {
          const ConstrainedBasis basis(partition, c.ci->p, c.ci->s);
          const FitResult f = fit(g.data, basis, c.vce);
          const IntervalSeries ci = confidence_intervals(f, basis, build_grid(partition, c.cingrid, false), v, a);
          gr.series.push_back(make_series(SeriesKind::ci, ci));
          line_status(name, df_text(*c.ci));
        } catch (const DataError& e) {
          off(name, e.what());
        }
      }
    }
    // Confidence band: critical value from the simulation grid, envelope on the plotting grid.
    if (c.cb) {
      const std::string name = pair_label("cb", *c.cb);
      if (gated || !passes(*c.cb)) {
        off(name, "degrees of freedom check failed");
      } else {
        try {
          const ConstrainedBasis basis(partition, c.cb->p, c.cb->s);
          const FitResult f = fit(g.data, basis, c.vce);
          const ExtremaDraws draws = sup_process_draws(f, basis, build_grid(partition, c.simsngrid, true), v, sim);
          BandResult band;
          band.estimate = evaluate_on_grid(f, basis, build_grid(partition, c.cbngrid, false), v);
          band.critical_value = empirical_quantile(draws.sup_abs, 1.0 - a);
          band.level = 1.0 - a;
          band.draws = draws.draws();
          band.seed = draws.seed;
          for (std::size_t i = 0; i < band.estimate.grid.size(); ++i) {
            const double half = band.critical_value * band.estimate.se[i];
            band.lower.push_back(band.estimate.estimate[i] - half);
            band.upper.push_back(band.estimate.estimate[i] + half);
          }
          gr.series.push_back(make_series(SeriesKind::cb, band));
          line_status(name, df_text(*c.cb) + ", critical value " + fixed(band.critical_value, 4));
        } catch (const DataError& e) {
          off(name, e.what());
        }
      }
    }
    // Global polynomial
    if (c.polyreg) {
      const std::string name = "polyreg(" + std::to_string(*c.polyreg) + ")";
      try {
        const PolynomialFit poly = fit_polynomial(g.data, *c.polyreg, c.vce);
        const EvalGrid grid = build_grid(partition, c.polyregngrid, false);
        Series s{SeriesKind::polyreg, {}};
        for (double x0 : grid.points) s.points.push_back({x0, poly.value(x0, v)});
        gr.series.push_back(std::move(s));
        if (c.polyregcingrid > 0) {
          const double z = normal_quantile(1.0 - a / 2.0);
          const EvalGrid cig = build_grid(partition, c.polyregcingrid, false);
          Series sc{SeriesKind::polyregci, {}};
          for (double x0 : cig.points) {
            const double y0 = poly.value(x0, v), half = z * poly.standard_error(x0, v);
            sc.points.push_back({x0, y0, y0 - half, y0 + half});
          }
          gr.series.push_back(std::move(sc));
        }
        line_status(name, "df " + std::to_string(*c.polyreg + 1));
      } catch (const DataError& e) {
        off(name, e.what());
      }
    }

    if (c.tests_requested()) run_group_tests(g.data, partition, g.sample, gated, c, out, err);
    plotted.push_back(std::move(gr));
  }

  const std::string y_label = v == 0 ? c.columns.y : c.columns.y + " (derivative " + std::to_string(v) + ")";
  const PlotBundle bundle = assemble(std::move(plotted), c.style, c.columns.x, y_label, c.title);
  if (c.savedata) {
    write_savedata(bundle, *c.savedata, c.replace);
    out << "\nSaved data: " << c.savedata->string() << '\n';
  }
  if (!c.noplot) {
    render_svg(bundle, c.svg, c.svg_width, c.svg_height);
    out << "\nPlot: " << c.svg.string() << '\n';
  }
  return kExitOk;
}

int run_test(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Loaded l = load(c);
  print_header(out, c, l.dropped);
  const std::optional<BinPlan> pooled = pooled_plan(l, c, out, err);
  int reported = 0;
  for (const GroupData& g : group_data(l, c)) {
    print_sample(out, g.label, g.sample, g.data.clustered());
    const BinPlan plan = pooled ? *pooled : plan_bins(g.data, c, err);
    print_bins(out, plan);
    if (!pooled && plan.selection) print_selection(out, *plan.selection);
    const bool gated = plan.fallback || !df_check_nonparametric(g.sample.n_eff, c.bins.p, c.bins.s,
                                                                plan.partition->bins(), c.N1);
    reported += run_group_tests(g.data, *plan.partition, g.sample, gated, c, out, err).reported;
  }
  if (reported == 0) {
    warn(err, "no test results: every requested test was gated by the degrees of freedom checks");
    return kExitGated;
  }
  return kExitOk;
}

int run_select(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Loaded l = load(c);
  print_header(out, c, l.dropped);
  const SelectOptions opts = select_options(c);
  out << "Selection: " << pair_label("bins", c.bins) << ", binspos " << to_string(c.binspos) << ", method "
      << to_string(c.binsmethod) << '\n';
  const auto groups = group_data(l, c);
  if (c.savegrid && groups.size() > 1) throw ConfigError("savegrid needs a single group (drop --by)");
  for (const GroupData& g : groups) {
    print_sample(out, g.label, g.sample, g.data.clustered());
    const BinSelectResult sel = select_bins(g.data, opts);
    for (const auto& w : sel.warnings) warn(err, w);
    print_selection(out, sel);
    // A user J overrides the selectors, which are still reported.
    const Partition partition = c.nbins         ? make_partition(g.data.x, *c.nbins, c.binspos)
                                : sel.fallback ? unique_value_partition(analyze_mass_points(g.data.x))
                                               : make_partition(g.data.x, sel.selected(), c.binspos);
    out << "  Selected J             : " << partition.bins() << (c.nbins ? "   [user]" : "") << '\n';
    if (c.savegrid) {
      write_savegrid(build_grid(partition, c.simsngrid, true), g.data.covariate_names, g.data.x_name, *c.savegrid,
                     c.replace);
      out << "\nSaved grid: " << c.savegrid->string() << '\n';
    }
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const ParseResult parsed = parse_args(args);
  if (!parsed.config) {
    (parsed.exit_code == kExitOk ? out : err) << parsed.message;
    return parsed.exit_code;
  }
  const RunConfig& c = *parsed.config;
  try {
    switch (c.command) {
      case Command::fit: return run_fit(c, out, err);
      case Command::test: return run_test(c, out, err);
      case Command::select: return run_select(c, out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace binsreg::cli
