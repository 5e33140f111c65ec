#include "rfslln/slln.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parallel.hpp"
#include "rfslln/error.hpp"

namespace rfslln {

namespace {

std::vector<TrajectoryRecord> read_schedule(const FieldModel& model, const DSequence& b,
                                            const RectangleSchedule& schedule, std::uint64_t reps,
                                            std::uint64_t seed, unsigned threads) {
  if (reps == 0) throw InvalidArgument("reps must be >= 1");
  const auto& horizon = schedule.back();
  if (b.dim() != horizon.dim()) throw InvalidArgument("normalizer dimension does not match the schedule");
  std::vector<double> bn;
  for (const auto& n : schedule.points()) {
    const double v = b(n);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("normalizer '" + b.name() + "' is not positive at " + n.to_string());
    }
    bn.push_back(v);
  }
  FieldModel seeded = model;
  seeded.seed = seed;
  validate(seeded);

  const std::size_t width = schedule.size();
  std::vector<TrajectoryRecord> out(static_cast<std::size_t>(reps) * width);
  detail::parallel_for(reps, threads, [&](std::uint64_t rep) {
    const auto sums = prefix_sums(generate(seeded, horizon, rep));
    for (std::size_t k = 0; k < width; ++k) {
      const auto& n = schedule[k];
      out[rep * width + k] = TrajectoryRecord{rep, k, n, sums.at(n) / bn[k], seed};
    }
  });
  return out;
}

}  // namespace

std::vector<TrajectoryRecord> trajectory(const FieldModel& model, const DSequence& b,
                                         const RectangleSchedule& schedule, std::uint64_t reps,
                                         std::uint64_t seed, unsigned threads) {
  return read_schedule(model, b, schedule, reps, seed, threads);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SupRatioSummary sup_ratio(const FieldModel& model, const DSequence& beta, const MultiIndex& horizon,
                          std::uint64_t reps, std::uint64_t seed, unsigned threads) {
  require_valid(horizon);
  if (reps == 0) throw InvalidArgument("reps must be >= 1");
  const auto bt = beta.tabulate(horizon);
  std::vector<double> w(bt.cell_count());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(bt.at_linear(i) > 0.0)) {
      throw InvalidArgument("beta '" + beta.name() + "' is not positive at " + bt.index_of(i).to_string());
    }
    w[i] = 1.0 / bt.at_linear(i);
  }
  const LatticeTable weights(horizon, std::move(w));
  FieldModel seeded = model;
  seeded.seed = seed;
  validate(seeded);

  SupRatioSummary out;
  out.horizon = horizon;
  out.values.resize(static_cast<std::size_t>(reps));
  const auto last = weights.linear_index(horizon);
  detail::parallel_for(reps, threads, [&](std::uint64_t rep) {
    const auto m = running_weighted_max(prefix_sums(generate(seeded, horizon, rep)), weights);
    out.values[rep] = m.at_linear(last);
  });
  out.q50 = quantile(out.values, 0.5);
  out.q90 = quantile(out.values, 0.9);
  out.q99 = quantile(out.values, 0.99);
  return out;
}

FieldModel inverse_size_weighted(const FieldModel& model, std::size_t dim) {
  FieldModel out = model;
  out.cell_scale = families::power(dim, -1.0);
  return out;
}

std::vector<TrajectoryRecord> logweighted_demo(const FieldModel& model,
                                               const RectangleSchedule& schedule,
                                               std::uint64_t reps, std::uint64_t seed,
                                               unsigned threads) {
  const std::size_t dim = schedule.dim();
  return read_schedule(inverse_size_weighted(model, dim), families::logplus(dim), schedule, reps,
                       seed, threads);
}

LogWeightedFit logweighted_constant(const FieldModel& model, double r,
                                    std::vector<MultiIndex> n_grid, const EvalSettings& settings) {
  if (!(r > 1.0)) throw InvalidArgument("the log-weighted hypothesis needs r > 1");
  if (n_grid.empty()) throw InvalidArgument("index grid must not be empty");
  const std::size_t dim = n_grid.front().dim();
  const auto weighted = inverse_size_weighted(model, dim);
  MultiIndex top = n_grid.front();
  for (const auto& n : n_grid) top = join(top, n);
  LogWeightedFit out;
  out.eps = default_eps_grid(weighted, top, settings);
  out.fit = fit_constant(weighted, families::power(dim, -1.0), r, n_grid, out.eps.values, settings);
  out.n_grid = std::move(n_grid);
  return out;
}

TrendSummary summarize_trend(const std::vector<TrajectoryRecord>& records, double min_fraction,
                             double final_threshold) {
  if (records.empty()) throw InvalidArgument("no trajectory records to summarize");
  std::size_t width = 0;
  for (const auto& rec : records) width = std::max(width, rec.point + 1);
  TrendSummary out;
  out.points.resize(width);
  std::vector<std::vector<double>> per(width);
  for (const auto& rec : records) {
    out.points[rec.point] = rec.n;
    per[rec.point].push_back(std::abs(rec.value));
  }
  std::size_t down = 0;
  for (std::size_t k = 0; k < width; ++k) {
    if (per[k].empty()) throw InvalidArgument("schedule point without records");
    out.median_abs.push_back(quantile(per[k], 0.5));
    out.q90_abs.push_back(quantile(per[k], 0.9));
    if (k > 0 && out.median_abs[k] < out.median_abs[k - 1]) ++down;
  }
  out.decreasing_fraction = width > 1 ? static_cast<double>(down) / static_cast<double>(width - 1) : 0.0;
  out.final_median = out.median_abs.back();
  out.consistent = width > 1 && out.decreasing_fraction >= min_fraction && out.final_median < final_threshold;
  std::ostringstream os;
  os << (out.consistent ? "consistent" : "not consistent") << " with convergence to 0 at horizon "
     << out.points.back().to_string() << ": median |statistic| decreased in " << down << " of "
     << (width > 1 ? width - 1 : 0) << " steps, final median " << out.final_median;
  out.statement = os.str();
  return out;
}

}  // namespace rfslln
