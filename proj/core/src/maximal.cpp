#include "rfslln/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "numeric.hpp"
#include "parallel.hpp"
#include "rfslln/error.hpp"

namespace rfslln {

namespace {

// Hypothesis checks (not verdicts) allow this much relative rounding, so a
// sequence fitted to equality is not reported as failing by one ulp.
constexpr double kHypothesisSlack = 1e-12;

bool within(double lhs, double rhs, double slack) {
  return lhs <= rhs + slack * std::max(std::abs(lhs), std::abs(rhs));
}

MultiIndex bounding_shape(std::span<const MultiIndex> grid) {
  if (grid.empty()) throw InvalidArgument("index grid must not be empty");
  MultiIndex out = grid.front();
  for (const auto& n : grid) {
    require_valid(n);
    out = join(out, n);
  }
  return out;
}

void require_eps_grid(std::span<const double> eps_grid) {
  if (eps_grid.empty()) throw InvalidArgument("eps grid must not be empty");
  for (double e : eps_grid) {
    if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("eps grid values must be positive");
  }
}

void require_normalizer(const DSequence& b) {
  const auto& f = b.flags();
  if (!b.product_type() || !f.positive || !f.nondecreasing) {
    throw InvalidArgument("normalizer '" + b.name() +
                          "' must be a positive nondecreasing product-type sequence");
  }
}

std::uint64_t effective_seed(const FieldModel& model, const EvalSettings& settings) {
  return settings.seed.value_or(model.seed);
}

InequalityRow make_row(const MultiIndex& n, std::optional<double> eps, const EstimateCI& ci,
                       bool exact, double rhs, double slack) {
  InequalityRow row{n, eps, ci.estimate, ci.lower, ci.upper, rhs, true};
  row.pass = within(exact ? ci.estimate : ci.upper, rhs, slack);
  return row;
}

InequalityReport base_report(ReportKind kind, const FieldModel& model, std::size_t dim, double r,
                             const EvalSettings& settings) {
  InequalityReport rep;
  rep.kind = kind;
  rep.mode = settings.mode;
  rep.dim = dim;
  rep.r = r;
  rep.seed = effective_seed(model, settings);
  rep.reps = settings.mode == EvalMode::MonteCarlo ? settings.reps : 0;
  rep.confidence = settings.mode == EvalMode::MonteCarlo ? settings.confidence : 1.0;
  rep.model = std::string(to_string(model.kind)) + " " + describe(model.margin);
  if (model.kind == FieldKind::MovingAverage && model.window) {
    rep.model += " window " + model.window->to_string();
  }
  if (model.cell_scale) rep.model += " scaled by " + model.cell_scale->name();
  return rep;
}

// Moment hypothesis E max|S|^r <= sum a on the grid.
std::vector<InequalityRow> moment_hypothesis(const FieldModel& model, const DSequence& a, double r,
                                             std::span<const MultiIndex> n_grid,
                                             const EvalSettings& settings, bool& holds) {
  const auto laws = max_laws(model, n_grid, nullptr, settings);
  std::vector<InequalityRow> rows;
  holds = true;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const auto ci = laws[g].moment(r, settings.confidence);
    rows.push_back(make_row(n_grid[g], std::nullopt, ci, laws[g].is_exact(),
                            weighted_mass(a, n_grid[g]), kHypothesisSlack));
    holds = holds && rows.back().pass;
  }
  return rows;
}

}  // namespace

std::string_view to_string(EvalMode mode) {
  return mode == EvalMode::Exact ? "exact" : "monte_carlo";
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "exact") return EvalMode::Exact;
  if (name == "monte_carlo" || name == "mc") return EvalMode::MonteCarlo;
  throw InvalidArgument("unknown evaluation mode '" + std::string(name) + "'");
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

EstimateCI wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence) {
  if (trials == 0) throw InvalidArgument("Wilson interval needs at least one trial");
  if (successes > trials) throw InvalidArgument("more successes than trials");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z = normal_quantile(0.5 + confidence / 2.0);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  EstimateCI ci;
  ci.estimate = p;
  ci.lower = std::clamp(center - half, 0.0, p);
  ci.upper = std::clamp(center + half, p, 1.0);
  ci.replications = trials;
  return ci;
}

// ---- MaxLaw -----------------------------------------------------------------

MaxLaw MaxLaw::exact(std::vector<double> values, std::vector<double> probs) {
  if (values.size() != probs.size() || values.empty()) {
    throw InvalidArgument("exact law needs matching, nonempty atoms and probabilities");
  }
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  MaxLaw law;
  law.exact_ = true;
  for (auto i : order) {
    if (!law.values_.empty() && law.values_.back() == values[i]) {
      law.probs_.back() += probs[i];
    } else {
      law.values_.push_back(values[i]);
      law.probs_.push_back(probs[i]);
    }
  }
  return law;
}

MaxLaw MaxLaw::sampled(std::vector<double> samples) {
  if (samples.empty()) throw InvalidArgument("sampled law needs at least one sample");
  MaxLaw law;
  law.exact_ = false;
  std::sort(samples.begin(), samples.end());
  law.values_ = std::move(samples);
  return law;
}

EstimateCI MaxLaw::tail(double eps, double confidence) const {
  const auto first = std::lower_bound(values_.begin(), values_.end(), eps);
  if (exact_) {
    detail::CompensatedSum s;
    for (auto it = first; it != values_.end(); ++it) {
      s.add(probs_[static_cast<std::size_t>(it - values_.begin())]);
    }
    const double p = std::clamp(s.value(), 0.0, 1.0);
    return EstimateCI{p, p, p, 0, true};
  }
  const auto hits = static_cast<std::uint64_t>(values_.end() - first);
  return wilson_interval(hits, values_.size(), confidence);
}

EstimateCI MaxLaw::moment(double r, double confidence) const {
  if (!(r > 0.0)) throw InvalidArgument("moment order r must be positive");
  if (exact_) {
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < values_.size(); ++i) s.add(probs_[i] * std::pow(values_[i], r));
    const double m = s.value();
    return EstimateCI{m, m, m, 0, true};
  }
  const double n = static_cast<double>(values_.size());
  detail::CompensatedSum s, s2;
  for (double v : values_) {
    const double x = std::pow(v, r);
    s.add(x);
    s2.add(x * x);
  }
  const double mean = s.value() / n;
  const double var = values_.size() > 1 ? std::max(0.0, (s2.value() - n * mean * mean) / (n - 1.0)) : 0.0;
  const double half = normal_quantile(0.5 + confidence / 2.0) * std::sqrt(var / n);
  EstimateCI ci{mean, std::max(0.0, mean - half), mean + half, values_.size(), true};
  if (!std::isfinite(ci.upper)) ci.reliable = false;
  return ci;
}

double MaxLaw::median() const {
  if (exact_) {
    double cum = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      cum += probs_[i];
      if (cum >= 0.5 - 1e-12) return values_[i];
    }
    return values_.back();
  }
  return values_[(values_.size() + 1) / 2 - 1];
}

// ---- laws over grids --------------------------------------------------------

std::vector<MaxLaw> max_laws(const FieldModel& model, std::span<const MultiIndex> grid,
                             const DSequence* normalizer, const EvalSettings& settings) {
  const auto bound = bounding_shape(grid);
  std::optional<LatticeTable> weights;
  if (normalizer) {
    const auto b = normalizer->tabulate(bound);
    std::vector<double> w(b.cell_count());
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(b.at_linear(i) > 0.0)) {
        throw InvalidArgument("normalizer '" + normalizer->name() + "' is not positive at " +
                              b.index_of(i).to_string());
      }
      w[i] = 1.0 / b.at_linear(i);
    }
    weights.emplace(bound, std::move(w));
  }
  std::vector<std::size_t> slots;
  {
    const LatticeTable probe = LatticeTable::filled(bound, 0.0);
    for (const auto& n : grid) slots.push_back(probe.linear_index(n));
  }
  auto evaluate = [&](const LatticeTable& x, double* out) {
    const auto sums = prefix_sums(x);
    const auto m = weights ? running_weighted_max(sums, *weights) : running_weighted_max(sums);
    for (std::size_t g = 0; g < slots.size(); ++g) out[g] = m.at_linear(slots[g]);
  };

  std::vector<MaxLaw> laws;
  laws.reserve(grid.size());
  if (settings.mode == EvalMode::Exact) {
    const auto space = enumerate_outcomes(model, bound, settings.enumeration_budget);
    std::vector<std::vector<double>> values(grid.size()), probs(grid.size());
    std::vector<double> buf(grid.size());
    space.for_each([&](const LatticeTable& x, double p) {
      evaluate(x, buf.data());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        values[g].push_back(buf[g]);
        probs[g].push_back(p);
      }
    });
    for (std::size_t g = 0; g < grid.size(); ++g) {
      laws.push_back(MaxLaw::exact(std::move(values[g]), std::move(probs[g])));
    }
    return laws;
  }

  if (settings.reps == 0) throw InvalidArgument("Monte Carlo needs reps >= 1");
  FieldModel seeded = model;
  seeded.seed = effective_seed(model, settings);
  validate(seeded);
  const std::size_t width = grid.size();
  std::vector<double> matrix(static_cast<std::size_t>(settings.reps) * width);
  detail::parallel_for(settings.reps, settings.threads, [&](std::uint64_t rep) {
    evaluate(generate(seeded, bound, rep), matrix.data() + rep * width);
  });
  for (std::size_t g = 0; g < width; ++g) {
    std::vector<double> samples(static_cast<std::size_t>(settings.reps));
    for (std::size_t rep = 0; rep < samples.size(); ++rep) samples[rep] = matrix[rep * width + g];
    laws.push_back(MaxLaw::sampled(std::move(samples)));
  }
  return laws;
}

EstimateCI estimate_tail_prob(const FieldModel& model, const MultiIndex& n, double eps,
                              const DSequence* normalizer, const EvalSettings& settings) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  EvalSettings mc = settings;
  mc.mode = EvalMode::MonteCarlo;
  const MultiIndex grid[] = {n};
  return max_laws(model, grid, normalizer, mc).front().tail(eps, mc.confidence);
}

double exact_tail_prob(const FieldModel& model, const MultiIndex& n, double eps,
                       const DSequence* normalizer, std::uint64_t budget) {
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be nonnegative");
  EvalSettings ex;
  ex.mode = EvalMode::Exact;
  ex.enumeration_budget = budget;
  const MultiIndex grid[] = {n};
  return max_laws(model, grid, normalizer, ex).front().tail(eps, 0.5).estimate;
}

EstimateCI estimate_max_moment(const FieldModel& model, const MultiIndex& n, double r,
                               const EvalSettings& settings) {
  if (!(r > 0.0)) throw InvalidArgument("moment order r must be positive");
  EvalSettings mc = settings;
  mc.mode = EvalMode::MonteCarlo;
  const MultiIndex grid[] = {n};
  auto ci = max_laws(model, grid, nullptr, mc).front().moment(r, mc.confidence);
  if (!has_moment(model.margin, 2.0 * r)) ci.reliable = false;
  return ci;
}

double exact_max_moment(const FieldModel& model, const MultiIndex& n, double r, std::uint64_t budget) {
  if (!(r > 0.0)) throw InvalidArgument("moment order r must be positive");
  EvalSettings ex;
  ex.mode = EvalMode::Exact;
  ex.enumeration_budget = budget;
  const MultiIndex grid[] = {n};
  return max_laws(model, grid, nullptr, ex).front().moment(r, 0.5).estimate;
}

double weighted_mass(const DSequence& a, const MultiIndex& n, double r, const DSequence* b) {
  const auto at = a.tabulate(n);
  std::optional<LatticeTable> bt;
  if (b) bt = b->tabulate(n);
  detail::CompensatedSum s;
  for (std::size_t i = 0; i < at.cell_count(); ++i) {
    const double av = at.at_linear(i);
    if (av < 0.0) throw InvalidArgument("sequence '" + a.name() + "' is negative at " + at.index_of(i).to_string());
    s.add(bt ? av / std::pow(bt->at_linear(i), r) : av);
  }
  return s.value();
}

EpsGrid default_eps_grid(const FieldModel& model, const MultiIndex& n, const EvalSettings& settings) {
  const MultiIndex grid[] = {n};
  const double median = max_laws(model, grid, nullptr, settings).front().median();
  EpsGrid out;
  out.scale = median > 0.0 ? median : 1.0;
  for (int k = -3; k <= 3; ++k) out.values.push_back(std::ldexp(out.scale, k));
  out.note = median > 0.0 ? "eps grid 2^-3..2^3 times the median of max|S| at " + n.to_string()
                          : "eps grid 2^-3..2^3 (median of max|S| at " + n.to_string() + " is 0, scale 1)";
  return out;
}

// ---- reports ----------------------------------------------------------------

std::string_view to_string(ReportKind kind) {
  switch (kind) {
    case ReportKind::TailTransfer: return "tail_transfer";
    case ReportKind::MomentTransfer: return "moment_transfer";
    case ReportKind::MarkovBridge: return "markov_bridge";
    case ReportKind::TailFit: return "tail_fit";
  }
  return "tail_transfer";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::Violation: return "violation";
    case Verdict::Inapplicable: return "inapplicable";
  }
  return "pass";
}

Verdict InequalityReport::verdict() const {
  if (!hypothesis_holds) return Verdict::Inapplicable;
  for (const auto& row : rows) {
    if (!row.pass) return Verdict::Violation;
  }
  return Verdict::Pass;
}

double InequalityReport::max_ratio() const {
  double best = 0.0;
  for (const auto& row : rows) {
    if (row.rhs > 0.0) best = std::max(best, row.lhs_hi / row.rhs);
  }
  return best;
}

FitResult fit_constant(const FieldModel& model, const DSequence& a, double r,
                       std::span<const MultiIndex> n_grid, std::span<const double> eps_grid,
                       const EvalSettings& settings) {
  if (!(r > 0.0)) throw InvalidArgument("r must be positive");
  require_eps_grid(eps_grid);
  const auto laws = max_laws(model, n_grid, nullptr, settings);
  const bool exact = settings.mode == EvalMode::Exact;

  struct Cell {
    EstimateCI ci;
    double mass;
  };
  std::vector<Cell> cells;
  FitResult fit;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const double mass = weighted_mass(a, n_grid[g]);
    for (double eps : eps_grid) {
      const auto ci = laws[g].tail(eps, settings.confidence);
      const double bound = exact ? ci.estimate : ci.upper;
      if (mass == 0.0) {
        if (ci.estimate > 0.0) {
          throw HypothesisError("hypothesis unsatisfiable on grid: sum of a is 0 at " +
                                n_grid[g].to_string() + " but the tail probability is positive");
        }
      } else {
        fit.c = std::max(fit.c, bound * std::pow(eps, r) / mass);
      }
      cells.push_back({ci, mass});
    }
  }
  std::size_t k = 0;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    for (double eps : eps_grid) {
      const auto& cell = cells[k++];
      fit.rows.push_back(make_row(n_grid[g], eps, cell.ci, exact,
                                  fit.c * std::pow(eps, -r) * cell.mass, kHypothesisSlack));
    }
  }
  return fit;
}

double fit_moment_scale(const FieldModel& model, const DSequence& a, double r,
                        std::span<const MultiIndex> n_grid, const EvalSettings& settings) {
  if (!(r > 0.0)) throw InvalidArgument("r must be positive");
  const auto laws = max_laws(model, n_grid, nullptr, settings);
  double lambda = 0.0;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const auto ci = laws[g].moment(r, settings.confidence);
    const double bound = laws[g].is_exact() ? ci.estimate : ci.upper;
    const double mass = weighted_mass(a, n_grid[g]);
    if (mass == 0.0) {
      if (bound > 0.0) {
        throw HypothesisError("moment hypothesis unsatisfiable: sum of a is 0 at " +
                              n_grid[g].to_string());
      }
      continue;
    }
    lambda = std::max(lambda, bound / mass);
  }
  return lambda;
}

InequalityReport check_transfer_prob(const FieldModel& model, const DSequence& a,
                                     const DSequence& b, double r,
                                     std::span<const MultiIndex> n_grid,
                                     std::span<const double> eps_grid,
                                     const EvalSettings& settings) {
  require_normalizer(b);
  const std::size_t dim = bounding_shape(n_grid).dim();
  auto rep = base_report(ReportKind::TailTransfer, model, dim, r, settings);
  rep.a_name = a.name();
  rep.b_name = b.name();

  auto fit = fit_constant(model, a, r, n_grid, eps_grid, settings);
  rep.fitted_c = fit.c;
  rep.hypothesis = std::move(fit.rows);
  rep.transfer_constant = std::pow(4.0, static_cast<double>(dim));

  const auto laws = max_laws(model, n_grid, &b, settings);
  const bool exact = settings.mode == EvalMode::Exact;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const double mass = weighted_mass(a, n_grid[g], r, &b);
    for (double eps : eps_grid) {
      const auto ci = laws[g].tail(eps, settings.confidence);
      const double rhs = rep.transfer_constant * rep.fitted_c * std::pow(eps, -r) * mass;
      rep.rows.push_back(make_row(n_grid[g], eps, ci, exact, rhs, 0.0));
    }
  }
  return rep;
}

InequalityReport check_transfer_moment(const FieldModel& model, const DSequence& a,
                                       const DSequence& b, double r,
                                       std::span<const MultiIndex> n_grid,
                                       const EvalSettings& settings) {
  if (!(r > 0.0)) throw InvalidArgument("r must be positive");
  require_normalizer(b);
  const std::size_t dim = bounding_shape(n_grid).dim();
  auto rep = base_report(ReportKind::MomentTransfer, model, dim, r, settings);
  rep.a_name = a.name();
  rep.b_name = b.name();
  rep.transfer_constant = std::pow(4.0, static_cast<double>(dim));
  rep.fitted_c = 1.0;

  rep.hypothesis = moment_hypothesis(model, a, r, n_grid, settings, rep.hypothesis_holds);
  if (!rep.hypothesis_holds) {
    rep.notes = "moment hypothesis E max|S|^r <= sum a fails on the grid";
    return rep;
  }
  const auto laws = max_laws(model, n_grid, &b, settings);
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const auto ci = laws[g].moment(r, settings.confidence);
    const double rhs = rep.transfer_constant * weighted_mass(a, n_grid[g], r, &b);
    rep.rows.push_back(make_row(n_grid[g], std::nullopt, ci, laws[g].is_exact(), rhs, 0.0));
  }
  if (settings.mode == EvalMode::MonteCarlo && !has_moment(model.margin, 2.0 * r)) {
    rep.notes = "margin lacks a finite moment of order 2r; intervals unreliable";
  }
  return rep;
}

InequalityReport markov_bridge(const FieldModel& model, const DSequence& a, double r,
                               std::span<const MultiIndex> n_grid,
                               std::span<const double> eps_grid, const EvalSettings& settings) {
  if (!(r > 0.0)) throw InvalidArgument("r must be positive");
  require_eps_grid(eps_grid);
  const std::size_t dim = bounding_shape(n_grid).dim();
  auto rep = base_report(ReportKind::MarkovBridge, model, dim, r, settings);
  rep.a_name = a.name();
  rep.transfer_constant = 1.0;
  rep.fitted_c = 1.0;

  rep.hypothesis = moment_hypothesis(model, a, r, n_grid, settings, rep.hypothesis_holds);
  if (!rep.hypothesis_holds) {
    rep.notes = "bridge inapplicable: moment hypothesis E max|S|^r <= sum a fails on the grid";
    return rep;
  }
  const auto laws = max_laws(model, n_grid, nullptr, settings);
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const double mass = weighted_mass(a, n_grid[g]);
    for (double eps : eps_grid) {
      const auto ci = laws[g].tail(eps, settings.confidence);
      rep.rows.push_back(make_row(n_grid[g], eps, ci, laws[g].is_exact(), std::pow(eps, -r) * mass, 0.0));
    }
  }
  return rep;
}

}  // namespace rfslln
