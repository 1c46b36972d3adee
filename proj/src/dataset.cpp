#include "binsreg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "binsreg/csv.hpp"
#include "binsreg/errors.hpp"

namespace binsreg {

void Dataset::validate() const {
  const Eigen::Index n = size();
  if (n < 1) throw DataError("dataset has no rows");
  if (y.size() != n) throw DataError("y and x have different lengths");
  if (w.rows() != n && w.cols() > 0) throw DataError("covariate matrix has wrong row count");
  if (static_cast<Eigen::Index>(covariate_names.size()) != w.cols()) {
    throw DataError("covariate names do not match covariate columns");
  }
  if (!cluster.empty() && static_cast<Eigen::Index>(cluster.size()) != n) {
    throw DataError("cluster column has wrong length");
  }
  if (!fweight.empty() && static_cast<Eigen::Index>(fweight.size()) != n) {
    throw DataError("weight column has wrong length");
  }
  if (!by.empty() && static_cast<Eigen::Index>(by.size()) != n) {
    throw DataError("by column has wrong length");
  }
  for (auto wt : fweight) {
    if (wt < 1) throw DataError("frequency weights must be integers >= 1");
  }
  if (!y.allFinite() || !x.allFinite() || (w.size() > 0 && !w.allFinite())) {
    throw DataError("dataset contains non-finite values");
  }
}

namespace {

int require_column(const csv::Table& table, const std::string& name) {
  const int idx = table.column(name);
  if (idx < 0) throw DataError("column not found: " + name);
  return idx;
}

std::string_view trimmed(const std::string& s) {
  std::string_view v(s);
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
  return v;
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "NA"; }

}  // namespace

LoadResult load_csv(const std::filesystem::path& path, const ColumnSpec& columns) {
  if (!std::filesystem::exists(path)) throw DataError("file not found: " + path.string());
  const csv::Table table = csv::read(path);

  const int iy = require_column(table, columns.y);
  const int ix = require_column(table, columns.x);
  std::vector<int> iw;
  for (const auto& c : columns.covariates) iw.push_back(require_column(table, c));
  const int icl = columns.cluster ? require_column(table, *columns.cluster) : -1;
  const int ifw = columns.fweight ? require_column(table, *columns.fweight) : -1;
  const int iby = columns.by ? require_column(table, *columns.by) : -1;

  std::vector<double> ys, xs, ws;
  std::vector<std::int64_t> fw, cl;
  std::vector<std::string> by;
  std::unordered_map<std::string, std::int64_t> cluster_ids;
  std::size_t dropped = 0;

  for (const auto& row : table.rows) {
    auto yv = csv::parse_double(row[iy]);
    auto xv = csv::parse_double(row[ix]);
    bool ok = yv && xv && std::isfinite(*yv) && std::isfinite(*xv);
    std::vector<double> wrow;
    for (int c : iw) {
      auto v = csv::parse_double(row[c]);
      ok = ok && v && std::isfinite(*v);
      wrow.push_back(v.value_or(0.0));
    }
    std::int64_t weight = 1;
    if (ifw >= 0) {
      auto v = csv::parse_double(row[ifw]);
      ok = ok && v && std::isfinite(*v);
      if (ok) {
        if (*v < 1.0 || std::floor(*v) != *v) {
          throw DataError("frequency weight must be a positive integer, got " + row[ifw]);
        }
        weight = static_cast<std::int64_t>(*v);
      }
    }
    if (icl >= 0) ok = ok && !is_missing(trimmed(row[icl]));
    if (iby >= 0) ok = ok && !is_missing(trimmed(row[iby]));
    if (!ok) {
      ++dropped;
      continue;
    }
    ys.push_back(*yv);
    xs.push_back(*xv);
    ws.insert(ws.end(), wrow.begin(), wrow.end());
    if (ifw >= 0) fw.push_back(weight);
    if (icl >= 0) {
      const std::string key(trimmed(row[icl]));
      auto [it, inserted] = cluster_ids.try_emplace(key, static_cast<std::int64_t>(cluster_ids.size()));
      cl.push_back(it->second);
    }
    if (iby >= 0) by.emplace_back(trimmed(row[iby]));
  }

  if (ys.empty()) throw DataError("no usable rows in " + path.string());

  LoadResult out;
  Dataset& d = out.data;
  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto k = static_cast<Eigen::Index>(iw.size());
  d.y_name = columns.y;
  d.x_name = columns.x;
  d.covariate_names = columns.covariates;
  d.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
  d.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), n);
  d.w.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) d.w(i, j) = ws[static_cast<std::size_t>(i * k + j)];
  d.cluster = std::move(cl);
  d.fweight = std::move(fw);
  d.by = std::move(by);
  out.dropped_rows = dropped;
  return out;
}

MassPointInfo analyze_mass_points(const Eigen::VectorXd& x) {
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  MassPointInfo info;
  for (double v : sorted) {
    if (info.unique_values.empty() || info.unique_values.back() != v) {
      info.unique_values.push_back(v);
      info.multiplicity.push_back(1);
    } else {
      ++info.multiplicity.back();
    }
  }
  info.distinct = static_cast<Eigen::Index>(info.unique_values.size());
  return info;
}

EffectiveSample effective_sample(const Dataset& data, bool mass_adjust) {
  EffectiveSample es;
  if (data.weighted()) {
    es.n = std::accumulate(data.fweight.begin(), data.fweight.end(), std::int64_t{0});
  } else {
    es.n = data.size();
  }
  es.N = mass_adjust ? analyze_mass_points(data.x).distinct : es.n;
  if (data.clustered()) {
    std::vector<std::int64_t> ids = data.cluster;
    std::sort(ids.begin(), ids.end());
    es.G = std::unique(ids.begin(), ids.end()) - ids.begin();
  } else {
    es.G = es.n;
  }
  es.n_eff = std::min({es.n, es.N, es.G});
  return es;
}

bool df_check_nonparametric(std::int64_t n_eff, int p, int s, std::int64_t J, std::int64_t N1) {
  return n_eff > N1 + static_cast<std::int64_t>(p + 1) * J - (J - 1) * s;
}

bool df_check_rot(std::int64_t n_eff, int p, std::int64_t N2) { return n_eff > N2 + p + 1; }

Dataset subset(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.y_name = data.y_name;
  out.x_name = data.x_name;
  out.covariate_names = data.covariate_names;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y.resize(m);
  out.x.resize(m);
  out.w.resize(m, data.w.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    out.y(i) = data.y(r);
    out.x(i) = data.x(r);
    if (data.w.cols() > 0) out.w.row(i) = data.w.row(r);
    if (data.clustered()) out.cluster.push_back(data.cluster[static_cast<std::size_t>(r)]);
    if (data.weighted()) out.fweight.push_back(data.fweight[static_cast<std::size_t>(r)]);
    if (!data.by.empty()) out.by.push_back(data.by[static_cast<std::size_t>(r)]);
  }
  return out;
}

Dataset expand_frequency_weights(const Dataset& data) {
  if (!data.weighted()) return data;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (std::int64_t k = 0; k < data.fweight[static_cast<std::size_t>(i)]; ++k) rows.push_back(i);
  }
  Dataset out = subset(data, rows);
  out.fweight.clear();
  return out;
}

std::vector<Group> split_groups(const Dataset& data) {
  if (data.by.empty()) {
    Group g{"all", {}};
    g.rows.resize(static_cast<std::size_t>(data.size()));
    std::iota(g.rows.begin(), g.rows.end(), Eigen::Index{0});
    return {g};
  }
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < data.size(); ++i) groups[data.by[static_cast<std::size_t>(i)]].push_back(i);

  std::vector<Group> out;
  bool numeric = true;
  for (auto& [label, rows] : groups) {
    numeric = numeric && csv::parse_double(label).has_value();
    out.push_back({label, std::move(rows)});
  }
  if (numeric) {
    std::stable_sort(out.begin(), out.end(), [](const Group& a, const Group& b) {
      return *csv::parse_double(a.label) < *csv::parse_double(b.label);
    });
  }
  return out;
}

}  // namespace binsreg
