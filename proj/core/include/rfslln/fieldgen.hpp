#pragma once

// Seeded random fields over [1, n]: independent margins, finite-range
// moving averages, and exact enumeration of fields with finite support.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfslln/dsequence.hpp"
#include "rfslln/lattice.hpp"

namespace rfslln {

namespace margins {
struct Normal {
  double mean = 0.0;
  double sd = 1.0;
};
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct Rademacher {};
/// Pareto with scale 1 and tail index alpha: P(X > x) = x^-alpha, x >= 1.
struct Pareto {
  double alpha = 1.0;
};
/// Standard Cauchy.
struct Cauchy {};
struct PointMass {
  double value = 0.0;
};
struct Finite {
  std::vector<double> values;
  std::vector<double> probs;
};
}  // namespace margins

using Margin = std::variant<margins::Normal, margins::Uniform, margins::Rademacher,
                            margins::Pareto, margins::Cauchy, margins::PointMass, margins::Finite>;

/// Support points and probabilities of a margin with finite support.
struct FiniteLaw {
  std::vector<double> values;
  std::vector<double> probs;
};

/// Throws InvalidArgument for bad parameters (sd < 0, alpha <= 0, finite
/// probabilities negative or not summing to 1 within 1e-12, ...).
void validate(const Margin& margin);
/// Inverse-transform style draw from two uniforms in (0, 1).
double sample(const Margin& margin, double u1, double u2);
/// The finite law, if the margin has finite support.
std::optional<FiniteLaw> finite_law(const Margin& margin);
/// Whether E|X|^p is finite.
bool has_moment(const Margin& margin, double p);
std::string describe(const Margin& margin);

/// "normal:mu,sd", "uniform:a,b", "rademacher", "pareto:alpha", "cauchy",
/// "point_mass:v", "finite:v1,v2,...|p1,p2,...".
Margin parse_margin(std::string_view spec);

enum class FieldKind { Iid, MovingAverage, FiniteSupport };
std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view name);

/// Joint law of a random field plus its seed.
struct FieldModel {
  FieldKind kind = FieldKind::Iid;
  Margin margin = margins::Rademacher{};
  /// Window of the moving average; ignored for other kinds.
  std::optional<MultiIndex> window;
  std::uint64_t seed = 0;
  /// Optional deterministic multiplier: the generated field is
  /// X_m * cell_scale(m). Used for weighted fields such as X_k / <k>.
  std::optional<DSequence> cell_scale;
};

void validate(const FieldModel& model);

/// X over [1, n] for one replicate.
///
/// Values are a pure function of (seed, replicate, cell coordinates): the same
/// cell receives the same value whatever n is, so growing a rectangle never
/// resamples existing cells. Moving averages use innovations on the extended
/// box [2 - w, n] and X_m = <w>^{-1/2} * sum of innovations over [m - w + 1, m].
LatticeTable generate(const FieldModel& model, const MultiIndex& n, std::uint64_t replicate,
                      std::uint64_t cell_budget = kDefaultCellBudget);

inline constexpr std::uint64_t kDefaultOutcomeBudget = std::uint64_t{1} << 24;

/// Every joint outcome of a finite-support field over [1, n].
///
/// The enumerated cells are the field cells themselves for Iid and
/// FiniteSupport models and the innovation cells for moving averages.
/// Outcomes are ordered as base-K numerals over the enumerated cells in
/// row-major order, first cell most significant.
class OutcomeSpace {
 public:
  OutcomeSpace(const FieldModel& model, MultiIndex shape, std::uint64_t budget);

  const MultiIndex& shape() const noexcept { return shape_; }
  const FiniteLaw& cell_law() const noexcept { return law_; }
  std::size_t enumerated_cells() const noexcept { return cells_; }
  std::uint64_t size() const noexcept { return count_; }

  /// Calls visit(x, probability) for every outcome.
  void for_each(const std::function<void(const LatticeTable&, double)>& visit) const;

 private:
  FieldModel model_;
  MultiIndex shape_;
  FiniteLaw law_;
  std::size_t cells_ = 0;
  std::uint64_t count_ = 0;
};

/// Throws BudgetExceeded when (support size)^cells exceeds `budget` and
/// InvalidArgument when the margin is not finite.
OutcomeSpace enumerate_outcomes(const FieldModel& model, const MultiIndex& n,
                                std::uint64_t budget = kDefaultOutcomeBudget);

}  // namespace rfslln
