#pragma once

// Multi-index arithmetic over the positive integer lattice and the dense
// rectangle engine (partial sums and running maxima) that every statistic
// in the library is computed with.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <iterator>
#include <span>
#include <string>
#include <vector>

namespace rfslln {

/// Default cap on the number of cells a dense table may hold (2^26).
inline constexpr std::uint64_t kDefaultCellBudget = std::uint64_t{1} << 26;

/// A point of the d-dimensional lattice {1, 2, ...}^d.
///
/// Every coordinate is at least 1. Comparison operators below implement the
/// coordinate-wise partial order, not a total order; use `lex_less` where a
/// strict weak ordering is needed.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<std::int64_t> coords);
  MultiIndex(std::initializer_list<std::int64_t> coords);

  /// The all-ones index of dimension `dim`.
  static MultiIndex ones(std::size_t dim);
  /// The diagonal index (k, ..., k).
  static MultiIndex diagonal(std::size_t dim, std::int64_t k);

  std::size_t dim() const noexcept { return coords_.size(); }
  std::int64_t operator[](std::size_t i) const { return coords_[i]; }
  std::span<const std::int64_t> coords() const noexcept { return coords_; }

  /// Product of the coordinates, the number of points in [1, n].
  std::uint64_t volume() const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

  std::string to_string() const;

 private:
  std::vector<std::int64_t> coords_;
};

/// m <= n in the partial order: m_i <= n_i for every i. Dimensions must match.
bool leq(const MultiIndex& m, const MultiIndex& n);
/// m <= n and m != n.
bool less(const MultiIndex& m, const MultiIndex& n);
/// Lexicographic order, for use as a map key.
bool lex_less(const MultiIndex& m, const MultiIndex& n);
/// Coordinate-wise maximum.
MultiIndex join(const MultiIndex& m, const MultiIndex& n);

struct LexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const { return lex_less(a, b); }
};

std::ostream& operator<<(std::ostream& os, const MultiIndex& m);

/// Throws InvalidArgument unless `n` is a valid index (d >= 1, coords >= 1).
void require_valid(const MultiIndex& n);

/// Number of cells of [1, n]; throws BudgetExceeded above `budget`.
std::uint64_t checked_volume(const MultiIndex& n, std::uint64_t budget = kDefaultCellBudget);

/// Lexicographic walk over every m with 1 <= m <= n.
class RectangleRange {
 public:
  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = MultiIndex;
    using difference_type = std::ptrdiff_t;
    using pointer = const MultiIndex*;
    using reference = const MultiIndex&;

    iterator() = default;
    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    iterator& operator++();
    iterator operator++(int) {
      iterator tmp = *this;
      ++*this;
      return tmp;
    }
    friend bool operator==(const iterator& a, const iterator& b) {
      return a.done_ == b.done_ && (a.done_ || a.current_ == b.current_);
    }

   private:
    friend class RectangleRange;
    iterator(const MultiIndex* upper, bool done);

    const MultiIndex* upper_ = nullptr;
    std::vector<std::int64_t> coords_;
    MultiIndex current_;
    bool done_ = true;
  };

  explicit RectangleRange(MultiIndex upper);

  iterator begin() const { return iterator(&upper_, false); }
  iterator end() const { return iterator(&upper_, true); }
  std::uint64_t size() const { return upper_.volume(); }

 private:
  MultiIndex upper_;
};

/// Every m with 1 <= m <= n, in lexicographic order.
RectangleRange iter_rectangle(const MultiIndex& n);

/// Calls `f(linear_index, coords)` for every cell of [1, shape] in row-major
/// order without materializing MultiIndex objects.
template <class F>
void for_each_cell(const MultiIndex& shape, F&& f) {
  const auto count = shape.volume();
  std::vector<std::int64_t> coords(shape.dim(), 1);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    f(static_cast<std::size_t>(idx), std::span<const std::int64_t>(coords));
    for (std::size_t i = coords.size(); i-- > 0;) {
      if (coords[i] < shape[i]) {
        ++coords[i];
        break;
      }
      coords[i] = 1;
    }
  }
}

/// Dense real values over [1, shape] in row-major order (last axis fastest).
///
/// Immutable once built; every entry is finite.
class LatticeTable {
 public:
  LatticeTable() = default;
  LatticeTable(MultiIndex shape, std::vector<double> values,
               std::uint64_t cell_budget = kDefaultCellBudget);

  static LatticeTable filled(const MultiIndex& shape, double value,
                             std::uint64_t cell_budget = kDefaultCellBudget);

  /// Evaluates `f(m)` at every cell.
  template <class F>
  static LatticeTable tabulate(const MultiIndex& shape, F&& f,
                               std::uint64_t cell_budget = kDefaultCellBudget) {
    const auto count = checked_volume(shape, cell_budget);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(count));
    for (const auto& m : iter_rectangle(shape)) values.push_back(f(m));
    return LatticeTable(shape, std::move(values), cell_budget);
  }

  const MultiIndex& shape() const noexcept { return shape_; }
  std::size_t dim() const noexcept { return shape_.dim(); }
  std::size_t cell_count() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::size_t> strides() const noexcept { return strides_; }

  /// Value at m; throws InvalidArgument when m is outside [1, shape].
  double at(const MultiIndex& m) const;
  double operator()(const MultiIndex& m) const { return at(m); }
  double at_linear(std::size_t idx) const { return values_[idx]; }

  std::size_t linear_index(const MultiIndex& m) const;
  MultiIndex index_of(std::size_t linear) const;
  bool contains(const MultiIndex& m) const;

 private:
  MultiIndex shape_;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
};

/// S_m = sum over k <= m of X_k.
///
/// Single pass of the d-dimensional inclusion-exclusion recurrence
/// S_m = X_m + sum over nonempty E of (-1)^{|E|+1} S_{m - 1_E}, out-of-range
/// terms zero. Each cell carries a double-double accumulator so the error
/// does not grow with the number of cells. Throws NumericError naming the
/// first cell whose partial sum is not finite.
LatticeTable prefix_sums(const LatticeTable& values);

/// Sum of X over the box [lo, hi] read from a prefix table (lo <= hi <= shape).
double rectangle_sum(const LatticeTable& prefix, const MultiIndex& lo, const MultiIndex& hi);

/// Prefix value at m where coordinates equal to 0 denote the empty sum.
double prefix_or_zero(const LatticeTable& prefix, std::span<const std::int64_t> m);

/// M_l = max over m <= l of |S_m| * w_m, via the max-recurrence over the d
/// unit predecessors (the other inclusion-exclusion terms are dominated by
/// them under max). `weights` must share the shape of `sums`, entries > 0.
LatticeTable running_weighted_max(const LatticeTable& sums, const LatticeTable& weights);
/// Unweighted variant, w == 1.
LatticeTable running_weighted_max(const LatticeTable& sums);

/// A finite chain of indices, strictly increasing in the partial order.
class RectangleSchedule {
 public:
  explicit RectangleSchedule(std::vector<MultiIndex> points);

  /// (2^0, ..., 2^0), (2^1, ...), ..., (2^max_exponent, ...).
  static RectangleSchedule dyadic_diagonal(std::size_t dim, int max_exponent);
  /// n_j = (2^{m_1 j}, ..., 2^{m_d j}) for j = 0..max_step. Probes limits
  /// where coordinates grow at different rates.
  static RectangleSchedule dyadic(std::vector<int> axis_rates, int max_step);
  /// Repeated halving of `horizon` (coordinates floor-divided by 2^k, clipped
  /// to 1), deduplicated, ending at `horizon`.
  static RectangleSchedule halving_chain(const MultiIndex& horizon);

  std::span<const MultiIndex> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const MultiIndex& back() const { return points_.back(); }
  const MultiIndex& operator[](std::size_t i) const { return points_[i]; }
  std::size_t dim() const { return points_.front().dim(); }

 private:
  std::vector<MultiIndex> points_;
};

}  // namespace rfslln
