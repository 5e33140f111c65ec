#pragma once

// Both sides of Hajek-Renyi type maximal inequalities for random fields,
// computed exactly by outcome enumeration or estimated by Monte Carlo:
//
//   (i)  P(max_{l<=n} |S_l| >= eps)        <= C eps^-r sum_{l<=n} a_l
//   (ii) P(max_{l<=n} |S_l| / b_l >= eps)  <= 4^d C eps^-r sum_{l<=n} a_l b_l^-r
//
// plus the moment analogue and the Markov step from moments to
// probabilities. Events use the inclusive convention ">= eps".

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfslln/dsequence.hpp"
#include "rfslln/fieldgen.hpp"
#include "rfslln/lattice.hpp"

namespace rfslln {

enum class EvalMode { Exact, MonteCarlo };
std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view name);

/// Point estimate with an interval. Exact values have lower == upper.
struct EstimateCI {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t replications = 0;
  /// False when the interval rests on moments the margin may not have.
  bool reliable = true;
};

/// Wilson score interval for a binomial proportion.
EstimateCI wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence);
/// Standard normal quantile.
double normal_quantile(double p);

struct EvalSettings {
  EvalMode mode = EvalMode::Exact;
  std::uint64_t reps = 10000;
  /// Overrides the model seed when set.
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  double confidence = 0.99;
  std::uint64_t enumeration_budget = kDefaultOutcomeBudget;
};

/// Distribution of the weighted running maximum M_n = max_{l<=n} |S_l| w_l
/// at a single n, either exactly (atoms with probabilities) or as a sample.
class MaxLaw {
 public:
  static MaxLaw exact(std::vector<double> values, std::vector<double> probs);
  static MaxLaw sampled(std::vector<double> samples);

  bool is_exact() const noexcept { return exact_; }
  /// P(M >= eps). Wilson interval for samples.
  EstimateCI tail(double eps, double confidence) const;
  /// E M^r. Normal-approximation interval for samples, clipped at 0.
  EstimateCI moment(double r, double confidence) const;
  /// Smallest atom/sample value at which the CDF reaches 1/2.
  double median() const;
  /// Sorted distinct atoms (exact) or sorted samples.
  std::span<const double> support() const noexcept { return values_; }
  std::span<const double> weights() const noexcept { return probs_; }

 private:
  bool exact_ = true;
  std::vector<double> values_;
  std::vector<double> probs_;
};

/// Laws of M_n for every n in `grid`, with w = 1/b when `normalizer` is given
/// and w = 1 otherwise. All grid points share one realization per replicate
/// (or per outcome).
std::vector<MaxLaw> max_laws(const FieldModel& model, std::span<const MultiIndex> grid,
                             const DSequence* normalizer, const EvalSettings& settings);

/// Monte Carlo estimate of P(max_{l<=n} |S_l| w_l >= eps) with a Wilson
/// interval; w = 1/b when `normalizer` is given. Throws for eps <= 0.
EstimateCI estimate_tail_prob(const FieldModel& model, const MultiIndex& n, double eps,
                              const DSequence* normalizer, const EvalSettings& settings);
/// Same probability by enumeration. eps >= 0; eps = 0 gives 1.
double exact_tail_prob(const FieldModel& model, const MultiIndex& n, double eps,
                       const DSequence* normalizer = nullptr,
                       std::uint64_t budget = kDefaultOutcomeBudget);
/// Monte Carlo estimate of E max_{l<=n} |S_l|^r; flagged unreliable when the
/// margin lacks a finite moment of order 2r.
EstimateCI estimate_max_moment(const FieldModel& model, const MultiIndex& n, double r,
                               const EvalSettings& settings);
double exact_max_moment(const FieldModel& model, const MultiIndex& n, double r,
                        std::uint64_t budget = kDefaultOutcomeBudget);

/// sum_{l<=n} a_l, or sum_{l<=n} a_l b_l^-r when `b` is given.
double weighted_mass(const DSequence& a, const MultiIndex& n, double r = 1.0,
                     const DSequence* b = nullptr);

/// Seven-point geometric grid 2^-3..2^3 times the median of max_{l<=n}|S_l|
/// (1 when the median is 0).
struct EpsGrid {
  std::vector<double> values;
  double scale = 1.0;
  std::string note;
};
EpsGrid default_eps_grid(const FieldModel& model, const MultiIndex& n, const EvalSettings& settings);

enum class ReportKind { TailTransfer, MomentTransfer, MarkovBridge, TailFit };
std::string_view to_string(ReportKind kind);

enum class Verdict { Pass, Violation, Inapplicable };
std::string_view to_string(Verdict verdict);

struct InequalityRow {
  MultiIndex n;
  std::optional<double> eps;  ///< absent for moment rows
  double lhs = 0.0;
  double lhs_lo = 0.0;
  double lhs_hi = 0.0;
  double rhs = 0.0;
  bool pass = true;
};

struct InequalityReport {
  ReportKind kind = ReportKind::TailTransfer;
  EvalMode mode = EvalMode::Exact;
  std::size_t dim = 1;
  double r = 1.0;
  double fitted_c = 0.0;
  /// 4^d for the transfers, 1 for the Markov bridge.
  double transfer_constant = 1.0;
  bool hypothesis_holds = true;
  std::vector<InequalityRow> hypothesis;  ///< side (i) or the moment hypothesis
  std::vector<InequalityRow> rows;        ///< the conclusion being verified
  std::uint64_t seed = 0;
  std::uint64_t reps = 0;
  double confidence = 0.0;
  std::string model;
  std::string a_name;
  std::string b_name;
  std::string notes;

  Verdict verdict() const;
  /// Largest lhs_hi / rhs over conclusion rows with rhs > 0.
  double max_ratio() const;
};

struct FitResult {
  double c = 0.0;
  std::vector<InequalityRow> rows;  ///< lhs per grid point, rhs = C eps^-r sum a
};

/// Smallest C with lhs(n, eps) <= C eps^-r sum_{l<=n} a_l on the grid, using
/// exact values or upper confidence bounds. Throws HypothesisError when
/// sum a = 0 at a point with positive lhs.
FitResult fit_constant(const FieldModel& model, const DSequence& a, double r,
                       std::span<const MultiIndex> n_grid, std::span<const double> eps_grid,
                       const EvalSettings& settings);

/// Smallest lambda with E max|S|^r <= lambda sum a on the grid, so that
/// lambda * a satisfies the moment hypothesis there.
double fit_moment_scale(const FieldModel& model, const DSequence& a, double r,
                        std::span<const MultiIndex> n_grid, const EvalSettings& settings);

/// Fits C on side (i), then checks side (ii) with constant 4^d C at every
/// grid point. `b` must be a positive nondecreasing product-type sequence.
InequalityReport check_transfer_prob(const FieldModel& model, const DSequence& a,
                                     const DSequence& b, double r,
                                     std::span<const MultiIndex> n_grid,
                                     std::span<const double> eps_grid,
                                     const EvalSettings& settings);

/// Checks E max (|S_l| / b_l)^r <= 4^d sum a_l b_l^-r given the hypothesis
/// E max |S_l|^r <= sum a_l on the grid; Inapplicable when it fails.
InequalityReport check_transfer_moment(const FieldModel& model, const DSequence& a,
                                       const DSequence& b, double r,
                                       std::span<const MultiIndex> n_grid,
                                       const EvalSettings& settings);

/// From E max |S_m|^r <= sum a_m to P(max |S_m| >= eps) <= eps^-r sum a_m
/// (C = 1). Inapplicable when the moment hypothesis fails on the grid.
InequalityReport markov_bridge(const FieldModel& model, const DSequence& a, double r,
                               std::span<const MultiIndex> n_grid,
                               std::span<const double> eps_grid, const EvalSettings& settings);

}  // namespace rfslln
