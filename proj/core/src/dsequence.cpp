#include "rfslln/dsequence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numeric>

#include "numeric.hpp"
#include "rfslln/error.hpp"

namespace rfslln {

namespace {

constexpr std::int64_t kFactorSampleRange = 64;

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw InvalidArgument("cannot parse " + std::string(what) + " from '" + std::string(text) +
                          "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

MultiIndex index_from(std::span<const std::int64_t> c) {
  return MultiIndex(std::vector<std::int64_t>(c.begin(), c.end()));
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

SequenceFlags conjunction(std::span<const Sequence1D> factors) {
  SequenceFlags f{true, true, true, true};
  for (const auto& s : factors) {
    f.nonnegative = f.nonnegative && s.flags().nonnegative;
    f.positive = f.positive && s.flags().positive;
    f.nondecreasing = f.nondecreasing && s.flags().nondecreasing;
    f.unbounded = f.unbounded && s.flags().unbounded;
  }
  return f;
}

// Relative mass of the unit shell [1,h] \ [1,h-1] in a prefix table.
double unit_shell_share(const LatticeTable& prefix, const MultiIndex& h) {
  const double total = prefix.at(h);
  std::vector<std::int64_t> inner(h.coords().begin(), h.coords().end());
  for (auto& c : inner) --c;
  const double shell = total - prefix_or_zero(prefix, inner);
  if (total == 0.0) return 0.0;
  return std::abs(shell) / std::abs(total);
}

}  // namespace

// ---- Sequence1D -------------------------------------------------------------

Sequence1D Sequence1D::identity() {
  return Sequence1D("id", [](std::int64_t k) { return static_cast<double>(k); },
                    SequenceFlags{true, true, true, true});
}

Sequence1D Sequence1D::logplus() {
  return Sequence1D("logplus", [](std::int64_t k) { return rfslln::logplus(static_cast<double>(k)); },
                    SequenceFlags{true, true, true, true});
}

Sequence1D Sequence1D::constant(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("constant sequence value must be finite");
  return Sequence1D("constant:" + format_number(value), [value](std::int64_t) { return value; },
                    SequenceFlags{value >= 0.0, value > 0.0, true, false});
}

Sequence1D Sequence1D::power(double exponent) {
  if (!std::isfinite(exponent)) throw InvalidArgument("power exponent must be finite");
  return Sequence1D("power:" + format_number(exponent),
                    [exponent](std::int64_t k) { return std::pow(static_cast<double>(k), exponent); },
                    SequenceFlags{true, true, exponent >= 0.0, exponent > 0.0});
}

Sequence1D Sequence1D::geometric(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw InvalidArgument("geometric ratio must be positive, got " + format_number(ratio));
  }
  return Sequence1D("geometric:" + format_number(ratio),
                    [ratio](std::int64_t k) { return std::pow(ratio, static_cast<double>(k)); },
                    SequenceFlags{true, true, ratio >= 1.0, ratio > 1.0});
}

Sequence1D Sequence1D::normalized() const {
  const double first = fn_(1);
  if (!(first > 0.0)) throw InvalidArgument("cannot normalize '" + name_ + "': value at 1 is not positive");
  auto fn = fn_;
  return Sequence1D(name_ + "/first", [fn, first](std::int64_t k) { return fn(k) / first; }, flags_);
}

// ---- scalar helpers ---------------------------------------------------------

double logplus(double x) {
  if (!(x > 0.0)) throw InvalidArgument("log+ needs a positive argument");
  return std::max(1.0, std::log(x));
}

std::uint64_t size(const MultiIndex& n) {
  require_valid(n);
  return n.volume();
}

double logplus_weight(const MultiIndex& n) {
  require_valid(n);
  double w = 1.0;
  for (auto c : n.coords()) w *= logplus(static_cast<double>(c));
  return w;
}

// ---- DSequence --------------------------------------------------------------

DSequence::DSequence(std::string name, std::size_t dim, Fn fn, SequenceFlags flags)
    : name_(std::move(name)), dim_(dim), fn_(std::move(fn)), flags_(flags) {
  if (dim_ == 0) throw InvalidArgument("d-sequence dimension must be at least 1");
}

double DSequence::operator()(const MultiIndex& n) const {
  if (n.dim() != dim_) {
    throw InvalidArgument("d-sequence '" + name_ + "' of dimension " + std::to_string(dim_) +
                          " evaluated at " + n.to_string());
  }
  return fn_(n);
}

double DSequence::first_value() const { return (*this)(MultiIndex::ones(dim_)); }

DSequence DSequence::normalized() const {
  if (!product_type()) throw InvalidArgument("only product-type sequences can be normalized");
  std::vector<Sequence1D> f;
  f.reserve(factors_.size());
  for (const auto& s : factors_) f.push_back(s.normalized());
  return make_product(std::move(f));
}

DSequence DSequence::scaled(double lambda) const {
  if (!std::isfinite(lambda)) throw InvalidArgument("scale factor must be finite");
  if (product_type() && lambda > 0.0) {
    std::vector<Sequence1D> f(factors_.begin(), factors_.end());
    auto first = f.front();
    f.front() = Sequence1D(format_number(lambda) + "*" + first.name(),
                           [first, lambda](std::int64_t k) { return lambda * first(k); },
                           first.flags());
    return make_product(std::move(f));
  }
  auto fn = fn_;
  SequenceFlags flags = flags_;
  if (lambda < 0.0) flags = SequenceFlags{};
  if (lambda == 0.0) flags = SequenceFlags{true, false, true, false};
  return DSequence(format_number(lambda) + "*" + name_, dim_,
                   [fn, lambda](const MultiIndex& n) { return lambda * fn(n); }, flags);
}

LatticeTable DSequence::tabulate(const MultiIndex& shape, std::uint64_t cell_budget) const {
  if (shape.dim() != dim_) throw InvalidArgument("tabulating '" + name_ + "' on wrong dimension");
  if (product_type()) {
    // Separable: evaluate each factor once per coordinate value.
    std::vector<std::vector<double>> fv(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      fv[i].resize(static_cast<std::size_t>(shape[i]));
      for (std::int64_t k = 1; k <= shape[i]; ++k) fv[i][static_cast<std::size_t>(k - 1)] = factors_[i](k);
    }
    const auto count = checked_volume(shape, cell_budget);
    std::vector<double> values(static_cast<std::size_t>(count));
    for_each_cell(shape, [&](std::size_t idx, std::span<const std::int64_t> c) {
      double v = 1.0;
      for (std::size_t i = 0; i < dim_; ++i) v *= fv[i][static_cast<std::size_t>(c[i] - 1)];
      values[idx] = v;
    });
    return LatticeTable(shape, std::move(values), cell_budget);
  }
  return LatticeTable::tabulate(shape, [this](const MultiIndex& m) { return fn_(m); }, cell_budget);
}

DSequence make_product(std::vector<Sequence1D> factors) {
  if (factors.empty()) throw InvalidArgument("product-type sequence needs at least one factor");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    for (std::int64_t k = 1; k <= kFactorSampleRange; ++k) {
      const double v = factors[i](k);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("factor " + std::to_string(i) + " ('" + factors[i].name() +
                              "') is not positive at k=" + std::to_string(k));
      }
    }
  }
  DSequence seq;
  seq.dim_ = factors.size();
  seq.flags_ = conjunction(factors);
  std::string name = "product:[";
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) name += ",";
    name += factors[i].name();
  }
  seq.name_ = name + "]";
  auto shared = std::make_shared<const std::vector<Sequence1D>>(factors);
  seq.fn_ = [shared](const MultiIndex& n) {
    double v = 1.0;
    for (std::size_t i = 0; i < shared->size(); ++i) v *= (*shared)[i](n[i]);
    return v;
  };
  seq.factors_ = std::move(factors);
  return seq;
}

namespace families {


DSequence size(std::size_t dim) {
  return make_product(std::vector<Sequence1D>(dim, Sequence1D::identity()));
}

DSequence logplus(std::size_t dim) {
  return make_product(std::vector<Sequence1D>(dim, Sequence1D::logplus()));
}

DSequence constant(std::size_t dim, double value) {
  if (value > 0.0) {
    std::vector<Sequence1D> f(dim, Sequence1D::constant(1.0));
    f.front() = Sequence1D::constant(value);
    return make_product(std::move(f));
  }
  return DSequence("constant:" + format_number(value), dim, [value](const MultiIndex&) { return value; },
                   SequenceFlags{value >= 0.0, false, true, false});
}

DSequence power(std::size_t dim, double exponent) {
  return make_product(std::vector<Sequence1D>(dim, Sequence1D::power(exponent)));
}

DSequence geometric(std::size_t dim, double ratio) {
  return make_product(std::vector<Sequence1D>(dim, Sequence1D::geometric(ratio)));
}

}  // namespace families

Sequence1D parse_factor(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  const auto head = spec.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (head == "id" || head == "size") return Sequence1D::identity();
  if (head == "logplus") return Sequence1D::logplus();
  if (head == "constant") return Sequence1D::constant(arg.empty() ? 1.0 : parse_number(arg, "constant"));
  if (head == "power") return Sequence1D::power(parse_number(arg, "power exponent"));
  if (head == "geometric") return Sequence1D::geometric(parse_number(arg, "geometric ratio"));
  throw InvalidArgument("unknown sequence factor '" + std::string(spec) + "'");
}

DSequence parse_family(std::string_view spec, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("family dimension must be at least 1");
  spec = trim(spec);
  const auto colon = spec.find(':');
  const auto head = spec.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (head == "size") return families::size(dim);
  if (head == "logplus") return families::logplus(dim);
  if (head == "constant") return families::constant(dim, arg.empty() ? 1.0 : parse_number(arg, "constant"));
  if (head == "power") return families::power(dim, parse_number(arg, "power exponent"));
  if (head == "geometric") return families::geometric(dim, parse_number(arg, "geometric ratio"));
  if (head == "product") {
    auto body = trim(arg);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
      throw InvalidArgument("product family must look like product:[f1,...,fd], got '" +
                            std::string(spec) + "'");
    }
    body = body.substr(1, body.size() - 2);
    std::vector<Sequence1D> factors;
    while (!body.empty()) {
      const auto comma = body.find(',');
      factors.push_back(parse_factor(body.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
    if (factors.size() != dim) {
      throw InvalidArgument("product family has " + std::to_string(factors.size()) +
                            " factors but dimension is " + std::to_string(dim));
    }
    return make_product(std::move(factors));
  }
  throw InvalidArgument("unknown sequence family '" + std::string(spec) + "'");
}

std::vector<std::string> check_flags(const DSequence& seq, const MultiIndex& shape) {
  const auto table = seq.tabulate(shape);
  const auto& f = seq.flags();
  std::vector<std::string> problems;
  bool bad_nonneg = false, bad_pos = false, bad_mono = false;
  const auto dim = shape.dim();
  for_each_cell(shape, [&](std::size_t idx, std::span<const std::int64_t> c) {
    const double v = table.at_linear(idx);
    if (f.nonnegative && v < 0.0 && !bad_nonneg) {
      bad_nonneg = true;
      problems.push_back("declared nonnegative but negative at " + index_from(c).to_string());
    }
    if (f.positive && !(v > 0.0) && !bad_pos) {
      bad_pos = true;
      problems.push_back("declared positive but not positive at " + index_from(c).to_string());
    }
    if (f.nondecreasing && !bad_mono) {
      for (std::size_t i = 0; i < dim; ++i) {
        if (c[i] > 1 && table.at_linear(idx - table.strides()[i]) > v) {
          bad_mono = true;
          problems.push_back("declared nondecreasing but decreases into " +
                             index_from(c).to_string());
          break;
        }
      }
    }
  });
  return problems;
}

// ---- series diagnostics -----------------------------------------------------

std::string_view to_string(SeriesVerdictKind kind) {
  switch (kind) {
    case SeriesVerdictKind::ConvergedAtTolerance: return "converged-at-tolerance";
    case SeriesVerdictKind::Diverging: return "diverging";
    case SeriesVerdictKind::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

LatticeTable ratio_terms(const DSequence& a, const DSequence& b, double r, const MultiIndex& shape) {
  const auto at = a.tabulate(shape);
  const auto bt = b.tabulate(shape);
  std::vector<double> terms(at.cell_count());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double av = at.at_linear(i);
    const double bv = bt.at_linear(i);
    if (av < 0.0) throw InvalidArgument("series numerator '" + a.name() + "' is negative at " + at.index_of(i).to_string());
    if (!(bv > 0.0)) throw InvalidArgument("series normalizer '" + b.name() + "' is not positive at " + bt.index_of(i).to_string());
    terms[i] = av / std::pow(bv, r);
  }
  return LatticeTable(shape, std::move(terms));
}

}  // namespace

SeriesVerdict series_sum(const DSequence& a, const DSequence& b, double r,
                         const RectangleSchedule& horizons, double tol) {
  if (!(r > 0.0)) throw InvalidArgument("series exponent r must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("series tolerance must be positive");
  if (a.dim() != horizons.dim() || b.dim() != horizons.dim()) {
    throw InvalidArgument("series sequences and horizons differ in dimension");
  }
  const auto& last = horizons.back();
  const auto prefix = prefix_sums(ratio_terms(a, b, r, last));

  SeriesVerdict out;
  out.horizon = last;
  out.tolerance = tol;
  for (const auto& h : horizons.points()) out.partial_sums.push_back(prefix.at(h));
  for (std::size_t k = 1; k < out.partial_sums.size(); ++k) {
    out.increments.push_back(out.partial_sums[k] - out.partial_sums[k - 1]);
  }
  out.partial_sum = out.partial_sums.back();
  out.tail_increment = unit_shell_share(prefix, last);

  bool growing = false;
  if (out.increments.size() >= 2) {
    const double now = out.increments.back();
    const double before = out.increments[out.increments.size() - 2];
    growing = now > 0.0 && now >= before;
  }
  if (growing || out.partial_sum > kDivergenceGuard) {
    out.verdict = SeriesVerdictKind::Diverging;
  } else if (out.tail_increment < tol) {
    out.verdict = SeriesVerdictKind::ConvergedAtTolerance;
  } else {
    out.verdict = SeriesVerdictKind::Inconclusive;
  }
  return out;
}

// ---- normalizer construction ------------------------------------------------

bool BetaDiagnostics::guarantees_hold(double tol) const {
  return positive && nondecreasing && unbounded_on_sample && nonincreasing_after_knee &&
         last_quarter_mean < first_quarter_mean && beta_final_increment < tol;
}

BetaConstruction construct_beta(const DSequence& a, const DSequence& b, double r,
                                const MultiIndex& horizon, double tol) {
  if (!(r > 0.0)) throw InvalidArgument("construct_beta needs r > 0");
  if (!b.product_type()) throw InvalidArgument("construct_beta needs a product-type b");
  const auto& bf = b.flags();
  if (!bf.positive || !bf.nondecreasing || !bf.unbounded) {
    throw InvalidArgument("construct_beta needs b positive, nondecreasing and unbounded; '" +
                          b.name() + "' does not declare all three");
  }
  if (horizon.dim() != b.dim() || a.dim() != b.dim()) {
    throw InvalidArgument("construct_beta: dimensions of a, b and horizon differ");
  }

  const auto chain = RectangleSchedule::halving_chain(horizon);
  auto verdict = series_sum(a, b, r, chain, tol);
  if (verdict.verdict == SeriesVerdictKind::Diverging) {
    throw HypothesisError("series of a/b^r is diverging at horizon " + horizon.to_string());
  }
  if (verdict.verdict != SeriesVerdictKind::ConvergedAtTolerance) {
    throw HypothesisError("horizon " + horizon.to_string() +
                          " too small to estimate tails: unit-shell share " +
                          format_number(verdict.tail_increment) + " is not below tolerance " +
                          format_number(tol));
  }

  const std::size_t dim = b.dim();
  const auto terms = ratio_terms(a, b, r, horizon);

  // Coordinate marginals of the terms, then suffix sums t_i(j).
  std::vector<std::vector<detail::CompensatedSum>> marginal(dim);
  for (std::size_t i = 0; i < dim; ++i) marginal[i].resize(static_cast<std::size_t>(horizon[i]));
  for_each_cell(horizon, [&](std::size_t idx, std::span<const std::int64_t> c) {
    const double v = terms.at_linear(idx);
    for (std::size_t i = 0; i < dim; ++i) marginal[i][static_cast<std::size_t>(c[i] - 1)].add(v);
  });

  const double exponent = 1.0 / (2.0 * r * static_cast<double>(dim));
  std::vector<Sequence1D> factors;
  factors.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const auto len = static_cast<std::size_t>(horizon[i]);
    std::vector<double> tail(len);
    double acc = 0.0;
    for (std::size_t j = len; j-- > 0;) {
      acc += marginal[i][j].value();
      tail[j] = acc;
    }
    auto values = std::make_shared<std::vector<double>>(len);
    const auto& bi = b.factors()[i];
    double running = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double bj = bi(static_cast<std::int64_t>(j + 1));
      const double candidate = bj * std::pow(std::max(tail[j], std::pow(bj, -r)), exponent);
      running = std::max(running, candidate);
      (*values)[j] = running;
    }
    const double floor_power = 1.0 - 1.0 / (2.0 * static_cast<double>(dim));
    auto fn = [values, bi, floor_power](std::int64_t k) {
      const auto uk = static_cast<std::size_t>(k);
      if (uk >= 1 && uk <= values->size()) return (*values)[uk - 1];
      // Past the horizon the tail is unknown; the floor term b^(1-1/(2d)) is
      // nondecreasing, so the running max is the larger of the two.
      return std::max(values->back(), std::pow(bi(k), floor_power));
    };
    factors.emplace_back("beta[" + bi.name() + "]", std::move(fn),
                         SequenceFlags{true, true, true, bi.flags().unbounded});
  }
  auto beta = make_product(std::move(factors));

  BetaDiagnostics diag;
  diag.input_series = std::move(verdict);
  diag.chain = chain;
  for (const auto& p : chain.points()) diag.ratio.push_back(beta(p) / b(p));
  diag.knee = static_cast<std::size_t>(
      std::distance(diag.ratio.begin(), std::max_element(diag.ratio.begin(), diag.ratio.end())));
  diag.nonincreasing_after_knee = true;
  for (std::size_t k = diag.knee + 1; k < diag.ratio.size(); ++k) {
    if (diag.ratio[k] > diag.ratio[k - 1]) diag.nonincreasing_after_knee = false;
  }
  const std::size_t quarter = std::max<std::size_t>(1, diag.ratio.size() / 4);
  diag.first_quarter_mean =
      std::accumulate(diag.ratio.begin(), diag.ratio.begin() + static_cast<std::ptrdiff_t>(quarter), 0.0) /
      static_cast<double>(quarter);
  diag.last_quarter_mean =
      std::accumulate(diag.ratio.end() - static_cast<std::ptrdiff_t>(quarter), diag.ratio.end(), 0.0) /
      static_cast<double>(quarter);

  const auto beta_prefix = prefix_sums(ratio_terms(a, beta, r, horizon));
  for (const auto& p : chain.points()) diag.beta_partial_sums.push_back(beta_prefix.at(p));
  diag.beta_final_increment = unit_shell_share(beta_prefix, horizon);

  diag.positive = true;
  diag.nondecreasing = true;
  diag.unbounded_on_sample = true;
  for (std::size_t i = 0; i < dim; ++i) {
    const auto& f = beta.factors()[i];
    double prev = 0.0;
    for (std::int64_t k = 1; k <= horizon[i]; ++k) {
      const double v = f(k);
      if (!(v > 0.0)) diag.positive = false;
      if (v < prev) diag.nondecreasing = false;
      prev = v;
    }
    const double far = f(horizon[i] * (std::int64_t{1} << 20));
    if (!(far > f(horizon[i]))) diag.unbounded_on_sample = false;
  }
  return BetaConstruction{std::move(beta), std::move(diag)};
}

}  // namespace rfslln
