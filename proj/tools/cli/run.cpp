#include "run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "rfslln/blockdecomp.hpp"
#include "rfslln/dsequence.hpp"
#include "rfslln/error.hpp"
#include "rfslln/fieldgen.hpp"
#include "rfslln/io.hpp"
#include "rfslln/maximal.hpp"
#include "rfslln/slln.hpp"

namespace rfslln::cli {

namespace {

using nlohmann::ordered_json;

struct Outcome {
  int code = kExitOk;
  std::string line;
  std::string csv;
  std::string json;
  std::uint64_t seed = 0;
};

std::uint64_t require_seed(const ExperimentConfig& cfg) {
  if (!cfg.seed) {
    throw ConfigError("config: missing required field 'seed' (set it in the config or pass --seed)");
  }
  return *cfg.seed;
}

FieldModel require_model(const ExperimentConfig& cfg) {
  if (!cfg.model) throw ConfigError("config: missing required field 'model'");
  FieldModel m = *cfg.model;
  m.seed = require_seed(cfg);
  return m;
}

DSequence family(const std::optional<std::string>& spec, const char* field, std::size_t dim) {
  if (!spec) throw ConfigError(std::string("config: missing required field '") + field + "'");
  return parse_family(*spec, dim);
}

double require_r(const ExperimentConfig& cfg) {
  if (!cfg.r) throw ConfigError("config: missing required field 'r'");
  return *cfg.r;
}

MultiIndex require_index(const std::optional<MultiIndex>& m, const char* field) {
  if (!m) throw ConfigError(std::string("config: missing required field '") + field + "'");
  return *m;
}

std::vector<MultiIndex> require_grid(const ExperimentConfig& cfg) {
  if (!cfg.grid.empty()) return cfg.grid;
  if (cfg.shape) {
    std::vector<MultiIndex> out;
    for (const auto& m : iter_rectangle(*cfg.shape)) out.push_back(m);
    return out;
  }
  throw ConfigError("config: missing required field 'grid' (or 'shape')");
}

EvalSettings settings_of(const ExperimentConfig& cfg, std::uint64_t default_reps) {
  EvalSettings s;
  s.mode = cfg.mode;
  s.reps = cfg.reps.value_or(default_reps);
  s.seed = require_seed(cfg);
  s.threads = cfg.threads;
  s.confidence = cfg.confidence;
  s.enumeration_budget = cfg.budget;
  return s;
}

MultiIndex join_all(const std::vector<MultiIndex>& grid) {
  MultiIndex top = grid.front();
  for (const auto& m : grid) top = join(top, m);
  return top;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

Outcome cmd_simulate(const ExperimentConfig& cfg) {
  const auto model = require_model(cfg);
  const auto shape = require_index(cfg.shape, "shape");
  const auto reps = cfg.reps.value_or(1);
  std::vector<LatticeTable> fields;
  ordered_json j;
  j["shape"] = format_index(shape);
  j["replicates"] = reps;
  auto sums = ordered_json::array();
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    fields.push_back(generate(model, shape, rep));
    sums.push_back(prefix_sums(fields.back()).at(shape));
  }
  j["total_sums"] = std::move(sums);
  Outcome o;
  o.seed = model.seed;
  o.csv = field_csv(fields);
  o.json = j.dump(2) + "\n";
  o.line = "simulate: complete (" + std::to_string(reps) + " replicate(s) over " + format_index(shape) + ")";
  return o;
}

Outcome cmd_transfer(const ExperimentConfig& cfg, bool bridge) {
  const auto model = require_model(cfg);
  const double r = require_r(cfg);
  const auto grid = require_grid(cfg);
  const auto settings = settings_of(cfg, 10000);
  auto a = family(cfg.a, "a", cfg.dim);
  std::string fit_note;
  if (cfg.fit_a) {
    const double lambda = fit_moment_scale(model, a, r, grid, settings);
    a = lambda > 0.0 ? a.scaled(lambda) : families::constant(cfg.dim, 0.0);
    fit_note = "a scaled by " + format_double(lambda) + " to meet the moment hypothesis";
  }
  std::vector<double> eps;
  std::string eps_note;
  if (cfg.eps) {
    eps = *cfg.eps;
  } else if (bridge || cfg.variant == "prob") {
    auto g = default_eps_grid(model, join_all(grid), settings);
    eps = g.values;
    eps_note = g.note;
  }

  InequalityReport rep;
  if (bridge) {
    rep = markov_bridge(model, a, r, grid, eps, settings);
  } else {
    const auto b = family(cfg.b, "b", cfg.dim);
    rep = cfg.variant == "moment" ? check_transfer_moment(model, a, b, r, grid, settings)
                                  : check_transfer_prob(model, a, b, r, grid, eps, settings);
  }
  for (const auto* note : {&fit_note, &eps_note}) {
    if (note->empty()) continue;
    rep.notes += (rep.notes.empty() ? "" : "; ") + *note;
  }
  Outcome o;
  o.seed = rep.seed;
  o.csv = report_csv(rep);
  o.json = report_json(rep);
  const auto verdict = rep.verdict();
  o.code = verdict == Verdict::Violation ? kExitViolation : kExitOk;
  o.line = cfg.command + ": " + std::string(to_string(verdict)) + " (" + std::to_string(rep.rows.size()) +
           " rows, C=" + fmt(rep.fitted_c) + ", constant " + fmt(rep.transfer_constant) +
           ", max lhs/rhs " + fmt(rep.max_ratio()) + ")";
  return o;
}

Outcome cmd_blockdecomp(const ExperimentConfig& cfg) {
  const auto n = require_index(cfg.shape, "shape");
  const double r = require_r(cfg);
  const double c = cfg.c.value_or(optimal_c(r).c_star);
  const auto a = family(cfg.a, "a", cfg.dim);
  const auto b = family(cfg.b, "b", cfg.dim);
  if (!b.product_type()) throw ConfigError("config: field 'b' must name a product-type family");
  const auto report = verify_chain(a, b, n, c, r);
  Outcome o;
  o.seed = cfg.seed.value_or(0);
  o.csv = partition_csv(build_partition(b.normalized(), n, c));
  o.json = chain_json(report);
  o.code = report.passed() ? kExitOk : kExitViolation;
  o.line = "blockdecomp-check: " + std::string(report.passed() ? "pass" : "violation") + " (" +
           std::to_string(report.nonempty_blocks) + " block(s), constant " + fmt(report.constant_factor) +
           ", ratio " + fmt(report.final_ratio) + ")";
  if (const auto* f = report.first_failure()) o.line += " first failing step: " + f->name + " at " + f->witness;
  return o;
}

Outcome cmd_optimal_c(const ExperimentConfig& cfg) {
  const double r = require_r(cfg);
  const auto best = optimal_c(r);
  Outcome o;
  o.seed = cfg.seed.value_or(0);
  o.csv = "r,c_star,min_value\n" + format_double(r) + "," + format_double(best.c_star) + "," +
          format_double(best.min_value) + "\n";
  ordered_json j;
  j["r"] = r;
  j["c_star"] = best.c_star;
  j["min_value"] = best.min_value;
  j["analytic_c_star"] = std::pow(2.0, 1.0 / r);
  j["analytic_min_value"] = 4.0;
  o.json = j.dump(2) + "\n";
  o.line = "c*=" + fmt(best.c_star) + " min=" + fmt(best.min_value);
  return o;
}

Outcome cmd_construct_beta(const ExperimentConfig& cfg) {
  const auto a = family(cfg.a, "a", cfg.dim);
  const auto b = family(cfg.b, "b", cfg.dim);
  const double r = require_r(cfg);
  const auto horizon = require_index(cfg.horizon, "horizon");
  const double tol = cfg.tolerance.value_or(kDefaultSeriesTolerance);
  const auto beta = construct_beta(a, b, r, horizon, tol);
  const auto& d = beta.diagnostics;
  const bool ok = d.guarantees_hold(tol);
  Outcome o;
  o.seed = cfg.seed.value_or(0);
  o.csv = beta_csv(beta, b);
  o.json = beta_json(beta);
  o.code = ok ? kExitOk : kExitViolation;
  o.line = "construct-beta: " + std::string(ok ? "pass" : "violation") + " (beta/b quarter means " +
           fmt(d.first_quarter_mean) + " -> " + fmt(d.last_quarter_mean) + ", final increment " +
           fmt(d.beta_final_increment) + ")";
  return o;
}

Outcome cmd_series_sum(const ExperimentConfig& cfg) {
  const auto a = family(cfg.a, "a", cfg.dim);
  const auto b = family(cfg.b, "b", cfg.dim);
  const double r = require_r(cfg);
  const auto chain = cfg.schedule ? *cfg.schedule
                                  : RectangleSchedule::halving_chain(require_index(cfg.horizon, "horizon"));
  const auto v = series_sum(a, b, r, chain, cfg.tolerance.value_or(kDefaultSeriesTolerance));
  Outcome o;
  o.seed = cfg.seed.value_or(0);
  o.csv = series_csv(v, chain);
  o.json = series_json(v);
  o.line = "series-sum: " + std::string(to_string(v.verdict)) + " (partial sum " + fmt(v.partial_sum) +
           " at " + format_index(v.horizon) + ", tail increment " + fmt(v.tail_increment) + ")";
  return o;
}

Outcome cmd_trajectory(const ExperimentConfig& cfg) {
  const auto model = require_model(cfg);
  const auto b = family(cfg.b, "b", cfg.dim);
  const auto schedule = cfg.schedule.value_or(default_schedule(cfg.dim));
  const auto records = trajectory(model, b, schedule, cfg.reps.value_or(100), model.seed, cfg.threads);
  const auto trend = summarize_trend(records);
  Outcome o;
  o.seed = model.seed;
  o.csv = trajectory_csv(records);
  o.json = trend_json(trend, "S_n/b_n");
  o.line = "slln-trajectory: " + trend.statement;
  return o;
}

Outcome cmd_logweighted(const ExperimentConfig& cfg) {
  const auto model = require_model(cfg);
  const auto schedule = cfg.schedule.value_or(default_schedule(cfg.dim));
  const auto records = logweighted_demo(model, schedule, cfg.reps.value_or(100), model.seed, cfg.threads);
  const auto trend = summarize_trend(records);
  auto j = ordered_json::parse(trend_json(trend, "(1/|log n|) sum_{k<=n} X_k/<k>"));
  std::string fit_line;
  if (cfg.fit) {
    auto grid = cfg.fit->grid;
    if (grid.empty()) {
      for (const auto& n : schedule.points()) {
        if (n.volume() <= 256) grid.push_back(n);
      }
    }
    EvalSettings s;
    s.mode = EvalMode::MonteCarlo;
    s.reps = cfg.fit->reps;
    s.seed = model.seed;
    s.threads = cfg.threads;
    s.confidence = cfg.confidence;
    const auto fit = logweighted_constant(model, cfg.fit->r, grid, s);
    ordered_json f;
    f["r"] = cfg.fit->r;
    f["fitted_c"] = fit.fit.c;
    f["eps"] = fit.eps.values;
    f["eps_note"] = fit.eps.note;
    f["reps"] = s.reps;
    f["note"] = "empirical constant on a finite grid; the maximal bound is assumed, not proven, for this model";
    j["hypothesis_fit"] = std::move(f);
    fit_line = ", fitted C=" + fmt(fit.fit.c);
  }
  Outcome o;
  o.seed = model.seed;
  o.csv = trajectory_csv(records);
  o.json = j.dump(2) + "\n";
  o.line = "logweighted-demo: " + trend.statement + fit_line;
  return o;
}

Outcome dispatch(const ExperimentConfig& cfg) {
  const auto& c = cfg.command;
  if (c == "simulate") return cmd_simulate(cfg);
  if (c == "verify-transfer") return cmd_transfer(cfg, false);
  if (c == "markov-bridge") return cmd_transfer(cfg, true);
  if (c == "blockdecomp-check") return cmd_blockdecomp(cfg);
  if (c == "optimal-c") return cmd_optimal_c(cfg);
  if (c == "construct-beta") return cmd_construct_beta(cfg);
  if (c == "series-sum") return cmd_series_sum(cfg);
  if (c == "slln-trajectory") return cmd_trajectory(cfg);
  if (c == "logweighted-demo") return cmd_logweighted(cfg);
  throw ConfigError("unknown command '" + c + "'");
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << bytes;
  if (!f) throw Error("cannot write '" + path.string() + "'");
}

void emit(const ExperimentConfig& cfg, const Outcome& o) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  ProvenanceInput p;
  p.command = cfg.command;
  p.config_hash = fnv1a64(cfg.source);
  p.seed = o.seed;
  if (cfg.format != OutputFormat::Json) {
    write_file(dir / (cfg.command + ".csv"), o.csv);
    p.files.push_back(cfg.command + ".csv");
  }
  if (cfg.format != OutputFormat::Csv) {
    write_file(dir / (cfg.command + ".json"), o.json);
    p.files.push_back(cfg.command + ".json");
  }
  write_file(dir / (cfg.command + ".provenance.json"), provenance_json(p));
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {
      "simulate", "verify-transfer", "markov-bridge", "blockdecomp-check", "optimal-c",
      "construct-beta", "series-sum", "slln-trajectory", "logweighted-demo"};
  return names;
}

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const auto o = dispatch(cfg);
    emit(cfg, o);
    out << o.line << '\n';
    return o.code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const BudgetExceeded& e) {
    err << "error: budget exceeded: " << e.what() << '\n';
  } catch (const HypothesisError& e) {
    err << "error: hypothesis not met: " << e.what() << '\n';
  } catch (const InvalidArgument& e) {
    err << "error: invalid argument: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace rfslln::cli
