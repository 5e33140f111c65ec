#include "rfslln/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "rfslln/error.hpp"

namespace rfslln {

namespace {

// Error-free transformation of a + b.
inline void two_sum(double a, double b, double& s, double& err) {
  s = a + b;
  const double bp = s - a;
  err = (a - (s - bp)) + (b - bp);
}

struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  void add(double v) {
    double s, e;
    two_sum(hi, v, s, e);
    hi = s;
    lo += e;
  }
  void normalize() {
    const double s = hi + lo;
    lo = lo - (s - hi);
    hi = s;
  }
};

std::vector<std::size_t> row_major_strides(const MultiIndex& shape) {
  std::vector<std::size_t> strides(shape.dim());
  std::size_t stride = 1;
  for (std::size_t i = shape.dim(); i-- > 0;) {
    strides[i] = stride;
    stride *= static_cast<std::size_t>(shape[i]);
  }
  return strides;
}

// Walks the cells of a table in row-major order, tracking which axes have a
// predecessor (coordinate > 1) as a bitmask.
class Odometer {
 public:
  explicit Odometer(const MultiIndex& shape)
      : shape_(shape), coords_(shape.dim(), 1) {}

  std::uint32_t axes_with_predecessor() const { return mask_; }
  std::span<const std::int64_t> coords() const { return coords_; }

  void advance() {
    for (std::size_t i = coords_.size(); i-- > 0;) {
      const auto bit = std::uint32_t{1} << (coords_.size() - 1 - i);
      if (coords_[i] < shape_[i]) {
        ++coords_[i];
        mask_ |= bit;
        return;
      }
      coords_[i] = 1;
      mask_ &= ~bit;
    }
  }

 private:
  const MultiIndex& shape_;
  std::vector<std::int64_t> coords_;
  std::uint32_t mask_ = 0;
};

std::string cell_name(std::span<const std::int64_t> coords) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (i) os << ',';
    os << coords[i];
  }
  os << ')';
  return os.str();
}

constexpr std::size_t kMaxDim = 24;

}  // namespace

MultiIndex::MultiIndex(std::vector<std::int64_t> coords) : coords_(std::move(coords)) {
  require_valid(*this);
}

MultiIndex::MultiIndex(std::initializer_list<std::int64_t> coords)
    : MultiIndex(std::vector<std::int64_t>(coords)) {}

MultiIndex MultiIndex::ones(std::size_t dim) {
  return MultiIndex(std::vector<std::int64_t>(dim, 1));
}

MultiIndex MultiIndex::diagonal(std::size_t dim, std::int64_t k) {
  return MultiIndex(std::vector<std::int64_t>(dim, k));
}

std::uint64_t MultiIndex::volume() const {
  std::uint64_t v = 1;
  for (auto c : coords_) {
    const auto uc = static_cast<std::uint64_t>(c);
    if (uc != 0 && v > std::numeric_limits<std::uint64_t>::max() / uc) {
      throw BudgetExceeded("lattice volume overflows 64 bits for " + to_string());
    }
    v *= uc;
  }
  return v;
}

std::string MultiIndex::to_string() const { return cell_name(coords_); }

std::ostream& operator<<(std::ostream& os, const MultiIndex& m) { return os << m.to_string(); }

void require_valid(const MultiIndex& n) {
  if (n.dim() == 0) throw InvalidArgument("multi-index must have at least one coordinate");
  if (n.dim() > kMaxDim) {
    throw InvalidArgument("multi-index dimension " + std::to_string(n.dim()) + " exceeds " +
                          std::to_string(kMaxDim));
  }
  for (std::size_t i = 0; i < n.dim(); ++i) {
    if (n[i] < 1) {
      throw InvalidArgument("coordinate " + std::to_string(i) + " of " + n.to_string() +
                            " is below 1");
    }
  }
}

bool leq(const MultiIndex& m, const MultiIndex& n) {
  if (m.dim() != n.dim()) throw InvalidArgument("comparing multi-indices of different dimension");
  for (std::size_t i = 0; i < m.dim(); ++i) {
    if (m[i] > n[i]) return false;
  }
  return true;
}

bool less(const MultiIndex& m, const MultiIndex& n) { return leq(m, n) && !(m == n); }

bool lex_less(const MultiIndex& m, const MultiIndex& n) {
  return std::lexicographical_compare(m.coords().begin(), m.coords().end(), n.coords().begin(),
                                      n.coords().end());
}

MultiIndex join(const MultiIndex& m, const MultiIndex& n) {
  if (m.dim() != n.dim()) throw InvalidArgument("joining multi-indices of different dimension");
  std::vector<std::int64_t> out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) out[i] = std::max(m[i], n[i]);
  return MultiIndex(std::move(out));
}

std::uint64_t checked_volume(const MultiIndex& n, std::uint64_t budget) {
  require_valid(n);
  const auto v = n.volume();
  if (v > budget) {
    throw BudgetExceeded("rectangle " + n.to_string() + " has " + std::to_string(v) +
                         " cells, above the budget of " + std::to_string(budget));
  }
  return v;
}

// ---- RectangleRange ---------------------------------------------------------

RectangleRange::RectangleRange(MultiIndex upper) : upper_(std::move(upper)) {
  require_valid(upper_);
}

RectangleRange::iterator::iterator(const MultiIndex* upper, bool done)
    : upper_(upper), done_(done) {
  if (!done_) {
    coords_.assign(upper_->dim(), 1);
    current_ = MultiIndex(coords_);
  }
}

RectangleRange::iterator& RectangleRange::iterator::operator++() {
  for (std::size_t i = coords_.size(); i-- > 0;) {
    if (coords_[i] < (*upper_)[i]) {
      ++coords_[i];
      current_ = MultiIndex(coords_);
      return *this;
    }
    coords_[i] = 1;
  }
  done_ = true;
  return *this;
}

RectangleRange iter_rectangle(const MultiIndex& n) { return RectangleRange(n); }

// ---- LatticeTable -----------------------------------------------------------

LatticeTable::LatticeTable(MultiIndex shape, std::vector<double> values, std::uint64_t cell_budget)
    : shape_(std::move(shape)), values_(std::move(values)) {
  const auto count = checked_volume(shape_, cell_budget);
  if (values_.size() != count) {
    throw InvalidArgument("table for " + shape_.to_string() + " needs " + std::to_string(count) +
                          " values, got " + std::to_string(values_.size()));
  }
  strides_ = row_major_strides(shape_);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericError("non-finite value at cell " + index_of(i).to_string());
    }
  }
}

LatticeTable LatticeTable::filled(const MultiIndex& shape, double value, std::uint64_t cell_budget) {
  const auto count = checked_volume(shape, cell_budget);
  return LatticeTable(shape, std::vector<double>(static_cast<std::size_t>(count), value),
                      cell_budget);
}

bool LatticeTable::contains(const MultiIndex& m) const {
  if (m.dim() != shape_.dim()) return false;
  return leq(m, shape_);
}

std::size_t LatticeTable::linear_index(const MultiIndex& m) const {
  if (!contains(m)) {
    throw InvalidArgument("index " + m.to_string() + " outside table " + shape_.to_string());
  }
  std::size_t idx = 0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    idx += static_cast<std::size_t>(m[i] - 1) * strides_[i];
  }
  return idx;
}

MultiIndex LatticeTable::index_of(std::size_t linear) const {
  std::vector<std::int64_t> coords(shape_.dim());
  for (std::size_t i = 0; i < shape_.dim(); ++i) {
    coords[i] = static_cast<std::int64_t>(linear / strides_[i]) + 1;
    linear %= strides_[i];
  }
  return MultiIndex(std::move(coords));
}

double LatticeTable::at(const MultiIndex& m) const { return values_[linear_index(m)]; }

// ---- kernels ----------------------------------------------------------------

LatticeTable prefix_sums(const LatticeTable& values) {
  const auto& shape = values.shape();
  const auto dim = shape.dim();
  const auto strides = values.strides();
  const std::size_t count = values.cell_count();

  // Offsets and signs of the 2^d - 1 inclusion-exclusion terms. Bit k of a
  // subset refers to axis dim-1-k so that the odometer mask lines up.
  const std::uint32_t subsets = std::uint32_t{1} << dim;
  std::vector<std::size_t> offset(subsets, 0);
  std::vector<double> sign(subsets, 0.0);
  for (std::uint32_t e = 1; e < subsets; ++e) {
    int bits = 0;
    for (std::size_t k = 0; k < dim; ++k) {
      if (e & (std::uint32_t{1} << k)) {
        offset[e] += strides[dim - 1 - k];
        ++bits;
      }
    }
    sign[e] = (bits % 2 == 1) ? 1.0 : -1.0;
  }

  std::vector<double> hi(count), lo(count);
  Odometer odo(shape);
  for (std::size_t idx = 0; idx < count; ++idx, odo.advance()) {
    DoubleDouble acc{values.at_linear(idx), 0.0};
    double lo_terms = 0.0;
    const auto valid = odo.axes_with_predecessor();
    for (std::uint32_t e = valid; e != 0; e = (e - 1) & valid) {
      const std::size_t src = idx - offset[e];
      acc.add(sign[e] * hi[src]);
      lo_terms += sign[e] * lo[src];
    }
    acc.lo += lo_terms;
    acc.normalize();
    if (!std::isfinite(acc.hi) || !std::isfinite(acc.lo)) {
      throw NumericError("partial sum overflows at cell " + cell_name(odo.coords()));
    }
    hi[idx] = acc.hi;
    lo[idx] = acc.lo;
  }
  return LatticeTable(shape, std::move(hi), std::numeric_limits<std::uint64_t>::max());
}

double prefix_or_zero(const LatticeTable& prefix, std::span<const std::int64_t> m) {
  if (m.size() != prefix.dim()) throw InvalidArgument("prefix lookup with wrong dimension");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) return 0.0;
    if (m[i] < 0 || m[i] > prefix.shape()[i]) {
      throw InvalidArgument("prefix lookup outside table at " + cell_name(m));
    }
    idx += static_cast<std::size_t>(m[i] - 1) * prefix.strides()[i];
  }
  return prefix.at_linear(idx);
}

double rectangle_sum(const LatticeTable& prefix, const MultiIndex& lo, const MultiIndex& hi) {
  const auto dim = prefix.dim();
  if (lo.dim() != dim || hi.dim() != dim || !leq(lo, hi) || !prefix.contains(hi)) {
    throw InvalidArgument("box " + lo.to_string() + ".." + hi.to_string() + " not inside table " +
                          prefix.shape().to_string());
  }
  double total = 0.0;
  std::vector<std::int64_t> corner(dim);
  for (std::uint32_t e = 0; e < (std::uint32_t{1} << dim); ++e) {
    int bits = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      if (e & (std::uint32_t{1} << i)) {
        corner[i] = lo[i] - 1;
        ++bits;
      } else {
        corner[i] = hi[i];
      }
    }
    const double v = prefix_or_zero(prefix, corner);
    total += (bits % 2 == 0) ? v : -v;
  }
  return total;
}

LatticeTable running_weighted_max(const LatticeTable& sums, const LatticeTable& weights) {
  if (!(sums.shape() == weights.shape())) {
    throw InvalidArgument("weight table shape " + weights.shape().to_string() +
                          " differs from sums " + sums.shape().to_string());
  }
  const auto dim = sums.dim();
  const auto strides = sums.strides();
  const std::size_t count = sums.cell_count();
  std::vector<double> out(count);
  Odometer odo(sums.shape());
  for (std::size_t idx = 0; idx < count; ++idx, odo.advance()) {
    const double w = weights.at_linear(idx);
    if (!(w > 0.0)) {
      throw InvalidArgument("weight at cell " + cell_name(odo.coords()) + " is not positive");
    }
    double best = std::abs(sums.at_linear(idx)) * w;
    const auto valid = odo.axes_with_predecessor();
    for (std::size_t k = 0; k < dim; ++k) {
      if (valid & (std::uint32_t{1} << k)) best = std::max(best, out[idx - strides[dim - 1 - k]]);
    }
    out[idx] = best;
  }
  return LatticeTable(sums.shape(), std::move(out), std::numeric_limits<std::uint64_t>::max());
}

LatticeTable running_weighted_max(const LatticeTable& sums) {
  const auto dim = sums.dim();
  const auto strides = sums.strides();
  const std::size_t count = sums.cell_count();
  std::vector<double> out(count);
  Odometer odo(sums.shape());
  for (std::size_t idx = 0; idx < count; ++idx, odo.advance()) {
    double best = std::abs(sums.at_linear(idx));
    const auto valid = odo.axes_with_predecessor();
    for (std::size_t k = 0; k < dim; ++k) {
      if (valid & (std::uint32_t{1} << k)) best = std::max(best, out[idx - strides[dim - 1 - k]]);
    }
    out[idx] = best;
  }
  return LatticeTable(sums.shape(), std::move(out), std::numeric_limits<std::uint64_t>::max());
}

// ---- RectangleSchedule ------------------------------------------------------

RectangleSchedule::RectangleSchedule(std::vector<MultiIndex> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidArgument("schedule must contain at least one index");
  for (const auto& p : points_) require_valid(p);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].dim() != points_[0].dim() || !less(points_[i - 1], points_[i])) {
      throw InvalidArgument("schedule is not strictly increasing at position " +
                            std::to_string(i) + ": " + points_[i - 1].to_string() + " then " +
                            points_[i].to_string());
    }
  }
}

RectangleSchedule RectangleSchedule::dyadic_diagonal(std::size_t dim, int max_exponent) {
  return dyadic(std::vector<int>(dim, 1), max_exponent);
}

RectangleSchedule RectangleSchedule::dyadic(std::vector<int> axis_rates, int max_step) {
  if (axis_rates.empty()) throw InvalidArgument("dyadic schedule needs at least one axis");
  if (max_step < 0) throw InvalidArgument("dyadic schedule needs max_step >= 0");
  bool any_growth = false;
  for (int rate : axis_rates) {
    if (rate < 0) throw InvalidArgument("dyadic axis rates must be nonnegative");
    if (rate > 0) any_growth = true;
    if (rate * max_step > 40) throw InvalidArgument("dyadic schedule exponent above 40");
  }
  if (!any_growth && max_step > 0) {
    throw InvalidArgument("dyadic schedule with all rates zero is not increasing");
  }
  std::vector<MultiIndex> pts;
  for (int j = 0; j <= max_step; ++j) {
    std::vector<std::int64_t> c(axis_rates.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::int64_t{1} << (axis_rates[i] * j);
    pts.emplace_back(std::move(c));
  }
  return RectangleSchedule(std::move(pts));
}

RectangleSchedule RectangleSchedule::halving_chain(const MultiIndex& horizon) {
  require_valid(horizon);
  std::vector<MultiIndex> pts;
  for (int k = 62; k >= 0; --k) {
    std::vector<std::int64_t> c(horizon.dim());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::max<std::int64_t>(1, horizon[i] >> k);
    MultiIndex p(std::move(c));
    if (pts.empty() || !(pts.back() == p)) pts.push_back(std::move(p));
  }
  return RectangleSchedule(std::move(pts));
}

}  // namespace rfslln
