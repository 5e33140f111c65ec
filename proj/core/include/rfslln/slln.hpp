#pragma once

// Finite-horizon strong-law diagnostics: trajectories of S_n / b_n along a
// schedule, sup-ratio statistics against an intermediate normalizer, and the
// logarithmically weighted average (1/|log n|) sum_{k<=n} X_k / <k>.
//
// Nothing here proves almost-sure behaviour; summaries only state whether a
// finite sample is consistent with convergence to 0 at a given horizon.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfslln/dsequence.hpp"
#include "rfslln/fieldgen.hpp"
#include "rfslln/lattice.hpp"
#include "rfslln/maximal.hpp"

namespace rfslln {

struct TrajectoryRecord {
  std::uint64_t replicate = 0;
  std::size_t point = 0;  ///< position in the schedule
  MultiIndex n;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// S_n / b_n at every schedule point for each replicate, all points of a
/// replicate read from one field over [1, schedule.back()]. Records are
/// ordered by replicate, then schedule point. `seed` replaces the model seed.
std::vector<TrajectoryRecord> trajectory(const FieldModel& model, const DSequence& b,
                                         const RectangleSchedule& schedule, std::uint64_t reps,
                                         std::uint64_t seed, unsigned threads = 1);

/// Type-7 (linear interpolation) sample quantile, p in [0, 1].
double quantile(std::vector<double> values, double p);

struct SupRatioSummary {
  MultiIndex horizon;
  std::vector<double> values;  ///< per replicate sup_{l<=horizon} |S_l| / beta_l
  double q50 = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
};

SupRatioSummary sup_ratio(const FieldModel& model, const DSequence& beta, const MultiIndex& horizon,
                          std::uint64_t reps, std::uint64_t seed, unsigned threads = 1);

/// The model with X_k replaced by X_k / <k>.
FieldModel inverse_size_weighted(const FieldModel& model, std::size_t dim);

/// (1/|log n|) sum_{k<=n} X_k / <k> along the schedule.
std::vector<TrajectoryRecord> logweighted_demo(const FieldModel& model,
                                               const RectangleSchedule& schedule,
                                               std::uint64_t reps, std::uint64_t seed,
                                               unsigned threads = 1);

struct LogWeightedFit {
  FitResult fit;
  EpsGrid eps;
  std::vector<MultiIndex> n_grid;
};

/// Empirical constant C in P(max_{l<=n} |sum_{k<=l} X_k/<k>| >= eps)
/// <= C eps^-r sum_{l<=n} 1/<l>, fitted on `n_grid` with the default eps grid
/// at the largest grid point. Requires r > 1.
LogWeightedFit logweighted_constant(const FieldModel& model, double r,
                                    std::vector<MultiIndex> n_grid, const EvalSettings& settings);

struct TrendSummary {
  std::vector<MultiIndex> points;
  std::vector<double> median_abs;  ///< median |statistic| per schedule point
  std::vector<double> q90_abs;
  /// Share of consecutive points where the median strictly decreases.
  double decreasing_fraction = 0.0;
  double final_median = 0.0;
  bool consistent = false;
  std::string statement;
};

/// Consistent with convergence to 0 when the median decreases in at least
/// `min_fraction` of the steps and ends below `final_threshold`.
TrendSummary summarize_trend(const std::vector<TrajectoryRecord>& records,
                             double min_fraction = 0.9, double final_threshold = 0.05);

}  // namespace rfslln
