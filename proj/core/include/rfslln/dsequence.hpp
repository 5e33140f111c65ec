#pragma once

// Real-valued families indexed by the lattice ("d-sequences"): closed-form
// families, product-type constructors, horizon-based series diagnostics and
// the construction of an intermediate normalizer beta between the series
// and the normalizer b.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfslln/lattice.hpp"

namespace rfslln {

/// Declared properties of a sequence. Declarations are spot-checked by
/// `check_flags`, never assumed proven.
struct SequenceFlags {
  bool nonnegative = false;
  bool positive = false;
  bool nondecreasing = false;
  bool unbounded = false;
};

/// A one-dimensional sequence k -> f(k), k >= 1; the factors of product-type
/// d-sequences.
class Sequence1D {
 public:
  using Fn = std::function<double(std::int64_t)>;

  Sequence1D(std::string name, Fn fn, SequenceFlags flags)
      : name_(std::move(name)), fn_(std::move(fn)), flags_(flags) {}

  double operator()(std::int64_t k) const { return fn_(k); }
  const std::string& name() const noexcept { return name_; }
  const SequenceFlags& flags() const noexcept { return flags_; }

  static Sequence1D identity();
  static Sequence1D logplus();
  static Sequence1D constant(double value);
  static Sequence1D power(double exponent);
  static Sequence1D geometric(double ratio);
  /// f(k) / f(1); ratios f(k)/f(m) are unchanged.
  Sequence1D normalized() const;

 private:
  std::string name_;
  Fn fn_;
  SequenceFlags flags_;
};

/// log+(x) = max(1, ln x) for x > 0.
double logplus(double x);
/// <n> = n_1 * ... * n_d.
std::uint64_t size(const MultiIndex& n);
/// |log n| = prod_i log+(n_i); always >= 1.
double logplus_weight(const MultiIndex& n);

class DSequence {
 public:
  using Fn = std::function<double(const MultiIndex&)>;

  /// A general (not product-type) sequence of fixed dimension.
  DSequence(std::string name, std::size_t dim, Fn fn, SequenceFlags flags);

  double operator()(const MultiIndex& n) const;

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return dim_; }
  const SequenceFlags& flags() const noexcept { return flags_; }
  bool product_type() const noexcept { return !factors_.empty(); }
  /// Factor sequences b^(1), ..., b^(d); empty unless product type.
  std::span<const Sequence1D> factors() const noexcept { return factors_; }

  /// Product of the factors evaluated at 1 (b at the all-ones index).
  double first_value() const;
  /// Each factor divided by its value at 1, so the result is 1 at (1,...,1).
  /// Only for product-type sequences.
  DSequence normalized() const;
  /// lambda * b; product type is kept by scaling the first factor.
  DSequence scaled(double lambda) const;

  LatticeTable tabulate(const MultiIndex& shape,
                        std::uint64_t cell_budget = kDefaultCellBudget) const;

  friend DSequence make_product(std::vector<Sequence1D> factors);

 private:
  DSequence() = default;

  std::string name_;
  std::size_t dim_ = 0;
  Fn fn_;
  SequenceFlags flags_;
  std::vector<Sequence1D> factors_;
};

/// Product-type sequence b_n = prod_i f_i(n_i). Flags are the conjunction of
/// the factor flags. Throws InvalidArgument when a factor is not positive on
/// its sampled range 1..64.
DSequence make_product(std::vector<Sequence1D> factors);

/// Named families. `spec` is one of: "size", "logplus", "constant" or
/// "constant:v", "power:p", "geometric:q", or "product:[f1,...,fd]" where the
/// fi are 1-d names from {"id", "logplus", "constant:v", "power:p",
/// "geometric:q"}.
DSequence parse_family(std::string_view spec, std::size_t dim);
Sequence1D parse_factor(std::string_view spec);

namespace families {
DSequence size(std::size_t dim);
DSequence logplus(std::size_t dim);
/// Product type for value > 0, otherwise a plain constant.
DSequence constant(std::size_t dim, double value);
DSequence power(std::size_t dim, double exponent);
DSequence geometric(std::size_t dim, double ratio);
}  // namespace families

/// Spot-checks declared flags over [1, shape]: sign flags at every cell and
/// monotonicity along each unit step. Returns one message per violated flag.
std::vector<std::string> check_flags(const DSequence& seq, const MultiIndex& shape);

enum class SeriesVerdictKind { ConvergedAtTolerance, Diverging, Inconclusive };
std::string_view to_string(SeriesVerdictKind kind);

/// Horizon-based convergence diagnosis of sum a_n / b_n^r. Heuristic.
struct SeriesVerdict {
  double partial_sum = 0.0;        ///< at the last horizon
  MultiIndex horizon;              ///< last horizon
  double tail_increment = 0.0;     ///< relative mass of the unit shell [1,h] \ [1,h-1]
  SeriesVerdictKind verdict = SeriesVerdictKind::Inconclusive;
  std::vector<double> partial_sums;  ///< one per schedule point
  std::vector<double> increments;    ///< partial_sums[k] - partial_sums[k-1]
  double tolerance = 0.0;
};

inline constexpr double kDefaultSeriesTolerance = 1e-6;
inline constexpr double kDivergenceGuard = 1e12;

/// Partial sums of a_n / b_n^r over a growing chain of rectangles.
///
/// converged-at-tolerance: the unit shell at the last horizon carries a
/// relative share of the partial sum below `tol`, and inter-horizon
/// increments are not growing. diverging: the last increment is at least the
/// previous one, or the partial sum passes `kDivergenceGuard`.
/// Otherwise inconclusive.
SeriesVerdict series_sum(const DSequence& a, const DSequence& b, double r,
                         const RectangleSchedule& horizons, double tol = kDefaultSeriesTolerance);

struct BetaDiagnostics {
  SeriesVerdict input_series;
  RectangleSchedule chain{std::vector<MultiIndex>{MultiIndex{1}}};
  std::vector<double> ratio;         ///< beta_n / b_n along the chain
  std::size_t knee = 0;              ///< argmax of ratio along the chain
  bool nonincreasing_after_knee = false;
  double first_quarter_mean = 0.0;
  double last_quarter_mean = 0.0;
  std::vector<double> beta_partial_sums;   ///< sum a / beta^r along the chain
  double beta_final_increment = 0.0;       ///< relative unit-shell mass at the horizon
  bool positive = false;
  bool nondecreasing = false;
  bool unbounded_on_sample = false;

  /// All reported properties hold at the horizon within `tol`.
  bool guarantees_hold(double tol) const;
};

struct BetaConstruction {
  DSequence beta;
  BetaDiagnostics diagnostics;
};

/// Product-type normalizer beta with beta/b decreasing and sum a/beta^r
/// bounded at the horizon. Factors:
///   beta^(i)_k = max_{j<=k} b^(i)_j * max(t_i(j), (b^(i)_j)^-r)^(1/(2rd))
/// with t_i(j) the coordinate tail of a/b^r inside [1, horizon]; beyond the
/// horizon only the floor term is used.
///
/// Throws HypothesisError when the series over `b` is diverging or cannot be
/// shown converged at `tol` on the halving chain of `horizon`.
BetaConstruction construct_beta(const DSequence& a, const DSequence& b, double r,
                                const MultiIndex& horizon, double tol = kDefaultSeriesTolerance);

}  // namespace rfslln
