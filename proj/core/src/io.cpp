#include "rfslln/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#ifndef RFSLLN_VERSION_STRING
#define RFSLLN_VERSION_STRING "0.0.0"
#endif

namespace rfslln {

namespace {

using nlohmann::ordered_json;

ordered_json index_json(const MultiIndex& n) {
  auto a = ordered_json::array();
  for (auto c : n.coords()) a.push_back(c);
  return a;
}

ordered_json block_json(const BlockIndex& i) {
  auto a = ordered_json::array();
  for (int c : i) a.push_back(c);
  return a;
}

// Non-finite doubles become strings so the JSON stays valid and lossless.
ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

ordered_json rows_json(const std::vector<InequalityRow>& rows) {
  auto out = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json j;
    j["n"] = index_json(row.n);
    j["eps"] = row.eps ? number(*row.eps) : ordered_json(nullptr);
    j["lhs"] = number(row.lhs);
    j["lhs_lo"] = number(row.lhs_lo);
    j["lhs_hi"] = number(row.lhs_hi);
    j["rhs"] = number(row.rhs);
    j["pass"] = row.pass;
    out.push_back(std::move(j));
  }
  return out;
}

void csv_rows(std::ostringstream& os, std::string_view side, const std::vector<InequalityRow>& rows) {
  for (const auto& row : rows) {
    os << side << ',' << format_index(row.n) << ',' << (row.eps ? format_double(*row.eps) : "") << ','
       << format_double(row.lhs) << ',' << format_double(row.lhs_lo) << ','
       << format_double(row.lhs_hi) << ',' << format_double(row.rhs) << ','
       << (row.pass ? "pass" : "violation") << '\n';
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string_view version() { return RFSLLN_VERSION_STRING; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_index(const MultiIndex& n) {
  std::string out;
  for (std::size_t i = 0; i < n.dim(); ++i) {
    if (i) out += 'x';
    out += std::to_string(n[i]);
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string report_csv(const InequalityReport& report) {
  std::ostringstream os;
  os << "side,n,eps,lhs,lhs_lo,lhs_hi,rhs,verdict\n";
  csv_rows(os, "hypothesis", report.hypothesis);
  csv_rows(os, "conclusion", report.rows);
  return os.str();
}

std::string report_json(const InequalityReport& report) {
  ordered_json j;
  j["kind"] = std::string(to_string(report.kind));
  j["verdict"] = std::string(to_string(report.verdict()));
  j["mode"] = std::string(to_string(report.mode));
  j["dim"] = report.dim;
  j["r"] = number(report.r);
  j["fitted_c"] = number(report.fitted_c);
  j["transfer_constant"] = number(report.transfer_constant);
  j["hypothesis_holds"] = report.hypothesis_holds;
  j["max_ratio"] = number(report.max_ratio());
  j["seed"] = report.seed;
  j["reps"] = report.reps;
  j["confidence"] = number(report.confidence);
  j["model"] = report.model;
  j["a"] = report.a_name;
  j["b"] = report.b_name;
  j["notes"] = report.notes;
  j["hypothesis"] = rows_json(report.hypothesis);
  j["rows"] = rows_json(report.rows);
  return dump(j);
}

std::string chain_json(const ChainReport& report) {
  ordered_json j;
  j["passed"] = report.passed();
  j["c"] = number(report.c);
  j["r"] = number(report.r);
  j["constant_factor"] = number(report.constant_factor);
  j["b1"] = number(report.b1);
  j["middle_bound"] = number(report.middle_bound);
  j["final_bound"] = number(report.final_bound);
  j["final_ratio"] = number(report.final_ratio);
  j["nonempty_blocks"] = report.nonempty_blocks;
  j["k_n"] = block_json(report.k_n);
  auto steps = ordered_json::array();
  for (const auto& s : report.steps) {
    ordered_json e;
    e["name"] = s.name;
    e["holds"] = s.holds;
    e["lhs"] = number(s.lhs);
    e["rhs"] = number(s.rhs);
    e["slack"] = number(s.slack);
    e["witness"] = s.witness;
    steps.push_back(std::move(e));
  }
  j["steps"] = std::move(steps);
  return dump(j);
}

std::string partition_csv(const BlockPartition& partition) {
  std::ostringstream os;
  os << "s,block\n";
  for (const auto& s : iter_rectangle(partition.shape)) {
    const auto i = partition.block_of(s);
    os << format_index(s) << ',';
    for (std::size_t k = 0; k < i.size(); ++k) os << (k ? "x" : "") << i[k];
    os << '\n';
  }
  return os.str();
}

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
  std::ostringstream os;
  os << "replicate,n,statistic\n";
  for (const auto& r : records) {
    os << r.replicate << ',' << format_index(r.n) << ',' << format_double(r.value) << '\n';
  }
  return os.str();
}

std::string trend_json(const TrendSummary& summary, std::string_view statistic) {
  ordered_json j;
  j["statistic"] = std::string(statistic);
  j["consistent"] = summary.consistent;
  j["statement"] = summary.statement;
  j["decreasing_fraction"] = number(summary.decreasing_fraction);
  j["final_median"] = number(summary.final_median);
  auto pts = ordered_json::array();
  for (std::size_t k = 0; k < summary.points.size(); ++k) {
    ordered_json p;
    p["n"] = index_json(summary.points[k]);
    p["median_abs"] = number(summary.median_abs[k]);
    p["q90_abs"] = number(summary.q90_abs[k]);
    pts.push_back(std::move(p));
  }
  j["points"] = std::move(pts);
  return dump(j);
}

std::string sup_ratio_csv(const SupRatioSummary& summary) {
  std::ostringstream os;
  os << "replicate,sup_ratio\n";
  for (std::size_t i = 0; i < summary.values.size(); ++i) {
    os << i << ',' << format_double(summary.values[i]) << '\n';
  }
  return os.str();
}

std::string sup_ratio_json(const SupRatioSummary& summary) {
  ordered_json j;
  j["horizon"] = index_json(summary.horizon);
  j["replicates"] = summary.values.size();
  j["q50"] = number(summary.q50);
  j["q90"] = number(summary.q90);
  j["q99"] = number(summary.q99);
  return dump(j);
}

std::string series_csv(const SeriesVerdict& verdict, const RectangleSchedule& chain) {
  std::ostringstream os;
  os << "n,partial_sum,increment\n";
  for (std::size_t k = 0; k < verdict.partial_sums.size() && k < chain.size(); ++k) {
    os << format_index(chain[k]) << ',' << format_double(verdict.partial_sums[k]) << ',';
    if (k > 0 && k - 1 < verdict.increments.size()) os << format_double(verdict.increments[k - 1]);
    os << '\n';
  }
  return os.str();
}

std::string series_json(const SeriesVerdict& verdict) {
  ordered_json j;
  j["verdict"] = std::string(to_string(verdict.verdict));
  j["partial_sum"] = number(verdict.partial_sum);
  j["horizon"] = index_json(verdict.horizon);
  j["tail_increment"] = number(verdict.tail_increment);
  j["tolerance"] = number(verdict.tolerance);
  auto ps = ordered_json::array();
  for (double v : verdict.partial_sums) ps.push_back(number(v));
  j["partial_sums"] = std::move(ps);
  return dump(j);
}

std::string beta_csv(const BetaConstruction& construction, const DSequence& b) {
  const auto& d = construction.diagnostics;
  std::ostringstream os;
  os << "n,beta,b,ratio\n";
  for (std::size_t k = 0; k < d.chain.size(); ++k) {
    const auto& n = d.chain[k];
    os << format_index(n) << ',' << format_double(construction.beta(n)) << ',' << format_double(b(n))
       << ',' << format_double(k < d.ratio.size() ? d.ratio[k] : construction.beta(n) / b(n)) << '\n';
  }
  return os.str();
}

std::string beta_json(const BetaConstruction& construction) {
  const auto& d = construction.diagnostics;
  ordered_json j;
  j["beta"] = construction.beta.name();
  j["input_series"] = ordered_json::parse(series_json(d.input_series));
  j["knee"] = d.knee;
  j["nonincreasing_after_knee"] = d.nonincreasing_after_knee;
  j["first_quarter_mean"] = number(d.first_quarter_mean);
  j["last_quarter_mean"] = number(d.last_quarter_mean);
  j["beta_final_increment"] = number(d.beta_final_increment);
  j["positive"] = d.positive;
  j["nondecreasing"] = d.nondecreasing;
  j["unbounded_on_sample"] = d.unbounded_on_sample;
  j["guarantees_hold"] = d.guarantees_hold(d.input_series.tolerance);
  auto ps = ordered_json::array();
  for (double v : d.beta_partial_sums) ps.push_back(number(v));
  j["beta_partial_sums"] = std::move(ps);
  return dump(j);
}

std::string field_csv(const std::vector<LatticeTable>& fields) {
  std::ostringstream os;
  os << "replicate,n,value\n";
  for (std::size_t rep = 0; rep < fields.size(); ++rep) {
    const auto& field = fields[rep];
    for_each_cell(field.shape(), [&](std::size_t i, std::span<const std::int64_t> c) {
      os << rep << ',';
      for (std::size_t k = 0; k < c.size(); ++k) os << (k ? "x" : "") << c[k];
      os << ',' << format_double(field.at_linear(i)) << '\n';
    });
  }
  return os.str();
}

std::string provenance_json(const ProvenanceInput& p) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(p.config_hash));
  ordered_json j;
  j["command"] = p.command;
  j["config_hash"] = std::string("fnv1a64:") + hash;
  j["seed"] = p.seed;
  j["version"] = std::string(version());
  j["files"] = p.files;
  return dump(j);
}

}  // namespace rfslln
