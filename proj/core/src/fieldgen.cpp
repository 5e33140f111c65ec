#include "rfslln/fieldgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rfslln/error.hpp"
#include "rfslln/philox.hpp"

namespace rfslln {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> parse_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    auto item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || item.empty()) {
      throw InvalidArgument("cannot parse " + std::string(what) + " entry '" + std::string(item) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<double> require_params(std::string_view arg, std::size_t count, std::string_view name) {
  auto p = parse_list(arg, name);
  if (p.size() != count) {
    throw InvalidArgument("margin '" + std::string(name) + "' takes " + std::to_string(count) +
                          " parameter(s), got " + std::to_string(p.size()));
  }
  return p;
}

double scale_of(const FieldModel& model, std::span<const std::int64_t> coords) {
  if (!model.cell_scale) return 1.0;
  return (*model.cell_scale)(MultiIndex(std::vector<std::int64_t>(coords.begin(), coords.end())));
}

// Turns raw per-cell draws (field cells or innovations) into the field X.
LatticeTable assemble_field(const FieldModel& model, const MultiIndex& n,
                            std::vector<double> raw, std::uint64_t cell_budget) {
  if (model.kind != FieldKind::MovingAverage) {
    if (model.cell_scale) {
      const auto scale = model.cell_scale->tabulate(n, cell_budget);
      for (std::size_t i = 0; i < raw.size(); ++i) raw[i] *= scale.at_linear(i);
    }
    return LatticeTable(n, std::move(raw), cell_budget);
  }
  const auto& w = *model.window;
  std::vector<std::int64_t> ext(n.dim());
  for (std::size_t i = 0; i < n.dim(); ++i) ext[i] = n[i] + w[i] - 1;
  const MultiIndex ext_shape(ext);
  const auto prefix = prefix_sums(LatticeTable(ext_shape, std::move(raw), cell_budget));
  const double norm = 1.0 / std::sqrt(static_cast<double>(w.volume()));
  std::vector<double> x(static_cast<std::size_t>(n.volume()));
  std::vector<std::int64_t> lo(n.dim()), hi(n.dim());
  for_each_cell(n, [&](std::size_t idx, std::span<const std::int64_t> c) {
    // Lattice cell m covers innovations [m - w + 1, m], which sit at
    // extended coordinates [m, m + w - 1].
    for (std::size_t i = 0; i < c.size(); ++i) {
      lo[i] = c[i];
      hi[i] = c[i] + w[i] - 1;
    }
    x[idx] = norm * rectangle_sum(prefix, MultiIndex(lo), MultiIndex(hi));
    if (model.cell_scale) x[idx] *= scale_of(model, c);
  });
  return LatticeTable(n, std::move(x), cell_budget);
}

MultiIndex enumerated_shape(const FieldModel& model, const MultiIndex& n) {
  if (model.kind != FieldKind::MovingAverage) return n;
  if (model.window->dim() != n.dim()) {
    throw InvalidArgument("moving_average window " + model.window->to_string() +
                          " does not match field dimension " + std::to_string(n.dim()));
  }
  std::vector<std::int64_t> ext(n.dim());
  for (std::size_t i = 0; i < n.dim(); ++i) ext[i] = n[i] + (*model.window)[i] - 1;
  return MultiIndex(std::move(ext));
}

}  // namespace

// ---- margins ----------------------------------------------------------------

void validate(const Margin& margin) {
  std::visit(
      overloaded{
          [](const margins::Normal& m) {
            if (!(m.sd >= 0.0) || !std::isfinite(m.mean) || !std::isfinite(m.sd)) {
              throw InvalidArgument("normal margin needs finite mean and sd >= 0");
            }
          },
          [](const margins::Uniform& m) {
            if (!(m.lo < m.hi) || !std::isfinite(m.lo) || !std::isfinite(m.hi)) {
              throw InvalidArgument("uniform margin needs finite a < b");
            }
          },
          [](const margins::Rademacher&) {},
          [](const margins::Pareto& m) {
            if (!(m.alpha > 0.0)) throw InvalidArgument("pareto margin needs alpha > 0");
          },
          [](const margins::Cauchy&) {},
          [](const margins::PointMass& m) {
            if (!std::isfinite(m.value)) throw InvalidArgument("point mass value must be finite");
          },
          [](const margins::Finite& m) {
            if (m.values.empty() || m.values.size() != m.probs.size()) {
              throw InvalidArgument("finite margin needs matching, nonempty values and probs");
            }
            double total = 0.0;
            for (std::size_t i = 0; i < m.probs.size(); ++i) {
              if (!(m.probs[i] >= 0.0)) throw InvalidArgument("finite margin has a negative probability");
              if (!std::isfinite(m.values[i])) throw InvalidArgument("finite margin value must be finite");
              total += m.probs[i];
            }
            if (std::abs(total - 1.0) > 1e-12) {
              std::ostringstream os;
              os.precision(17);
              os << "finite margin probabilities sum to " << total << ", not 1";
              throw InvalidArgument(os.str());
            }
          },
      },
      margin);
}

double sample(const Margin& margin, double u1, double u2) {
  return std::visit(
      overloaded{
          [&](const margins::Normal& m) {
            return m.mean + m.sd * std::sqrt(-2.0 * std::log(u1)) *
                                std::cos(2.0 * std::numbers::pi * u2);
          },
          [&](const margins::Uniform& m) { return m.lo + (m.hi - m.lo) * u1; },
          [&](const margins::Rademacher&) { return u1 < 0.5 ? -1.0 : 1.0; },
          [&](const margins::Pareto& m) { return std::pow(u1, -1.0 / m.alpha); },
          [&](const margins::Cauchy&) { return std::tan(std::numbers::pi * (u1 - 0.5)); },
          [&](const margins::PointMass& m) { return m.value; },
          [&](const margins::Finite& m) {
            double cum = 0.0;
            for (std::size_t i = 0; i + 1 < m.values.size(); ++i) {
              cum += m.probs[i];
              if (u1 < cum) return m.values[i];
            }
            return m.values.back();
          },
      },
      margin);
}

std::optional<FiniteLaw> finite_law(const Margin& margin) {
  if (std::holds_alternative<margins::Rademacher>(margin)) return FiniteLaw{{-1.0, 1.0}, {0.5, 0.5}};
  if (const auto* p = std::get_if<margins::PointMass>(&margin)) return FiniteLaw{{p->value}, {1.0}};
  if (const auto* f = std::get_if<margins::Finite>(&margin)) return FiniteLaw{f->values, f->probs};
  return std::nullopt;
}

bool has_moment(const Margin& margin, double p) {
  if (const auto* m = std::get_if<margins::Pareto>(&margin)) return p < m->alpha;
  if (std::holds_alternative<margins::Cauchy>(margin)) return p < 1.0;
  return true;
}

std::string describe(const Margin& margin) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const margins::Normal& m) { os << "normal:" << m.mean << ',' << m.sd; },
                 [&](const margins::Uniform& m) { os << "uniform:" << m.lo << ',' << m.hi; },
                 [&](const margins::Rademacher&) { os << "rademacher"; },
                 [&](const margins::Pareto& m) { os << "pareto:" << m.alpha; },
                 [&](const margins::Cauchy&) { os << "cauchy"; },
                 [&](const margins::PointMass& m) { os << "point_mass:" << m.value; },
                 [&](const margins::Finite& m) {
                   os << "finite:";
                   for (std::size_t i = 0; i < m.values.size(); ++i) os << (i ? "," : "") << m.values[i];
                   os << '|';
                   for (std::size_t i = 0; i < m.probs.size(); ++i) os << (i ? "," : "") << m.probs[i];
                 },
             },
             margin);
  return os.str();
}

Margin parse_margin(std::string_view spec) {
  while (!spec.empty() && spec.front() == ' ') spec.remove_prefix(1);
  while (!spec.empty() && spec.back() == ' ') spec.remove_suffix(1);
  const auto colon = spec.find(':');
  const auto head = spec.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  Margin m;
  if (head == "normal") {
    const auto p = require_params(arg, 2, "normal");
    m = margins::Normal{p[0], p[1]};
  } else if (head == "uniform") {
    const auto p = require_params(arg, 2, "uniform");
    m = margins::Uniform{p[0], p[1]};
  } else if (head == "rademacher") {
    m = margins::Rademacher{};
  } else if (head == "pareto") {
    m = margins::Pareto{require_params(arg, 1, "pareto")[0]};
  } else if (head == "cauchy") {
    m = margins::Cauchy{};
  } else if (head == "point_mass") {
    m = margins::PointMass{require_params(arg, 1, "point_mass")[0]};
  } else if (head == "finite") {
    const auto bar = arg.find('|');
    if (bar == std::string_view::npos) {
      throw InvalidArgument("finite margin must look like finite:v1,v2|p1,p2");
    }
    m = margins::Finite{parse_list(arg.substr(0, bar), "finite value"),
                        parse_list(arg.substr(bar + 1), "finite probability")};
  } else {
    throw InvalidArgument("unknown distribution '" + std::string(spec) + "'");
  }
  validate(m);
  return m;
}

// ---- field models -----------------------------------------------------------

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Iid: return "iid";
    case FieldKind::MovingAverage: return "moving_average";
    case FieldKind::FiniteSupport: return "finite_support";
  }
  return "iid";
}

FieldKind parse_field_kind(std::string_view name) {
  if (name == "iid") return FieldKind::Iid;
  if (name == "moving_average") return FieldKind::MovingAverage;
  if (name == "finite_support") return FieldKind::FiniteSupport;
  throw InvalidArgument("unknown field kind '" + std::string(name) + "'");
}

void validate(const FieldModel& model) {
  validate(model.margin);
  if (model.kind == FieldKind::MovingAverage) {
    if (!model.window) throw InvalidArgument("moving_average model needs a window");
    require_valid(*model.window);
  }
  if (model.kind == FieldKind::FiniteSupport && !finite_law(model.margin)) {
    throw InvalidArgument("finite_support model needs a finite margin, got " + describe(model.margin));
  }
}

LatticeTable generate(const FieldModel& model, const MultiIndex& n, std::uint64_t replicate,
                      std::uint64_t cell_budget) {
  validate(model);
  require_valid(n);
  if (model.cell_scale && model.cell_scale->dim() != n.dim()) {
    throw InvalidArgument("cell scale dimension does not match the field");
  }
  const MultiIndex draw_shape = enumerated_shape(model, n);
  const auto count = checked_volume(draw_shape, cell_budget);
  std::vector<double> raw(static_cast<std::size_t>(count));

  std::vector<std::int64_t> offset(n.dim(), 0);
  if (model.kind == FieldKind::MovingAverage) {
    for (std::size_t i = 0; i < n.dim(); ++i) offset[i] = (*model.window)[i] - 1;
  }
  std::vector<std::int64_t> key(n.dim());
  for_each_cell(draw_shape, [&](std::size_t idx, std::span<const std::int64_t> c) {
    for (std::size_t i = 0; i < c.size(); ++i) key[i] = c[i] - offset[i];
    const auto u = cell_uniforms(model.seed, replicate, key);
    raw[idx] = sample(model.margin, u.u1, u.u2);
  });
  return assemble_field(model, n, std::move(raw), cell_budget);
}

// ---- enumeration ------------------------------------------------------------

OutcomeSpace::OutcomeSpace(const FieldModel& model, MultiIndex shape, std::uint64_t budget)
    : model_(model), shape_(std::move(shape)) {
  validate(model_);
  require_valid(shape_);
  auto law = finite_law(model_.margin);
  if (!law) {
    throw InvalidArgument("enumeration needs a finite margin, got " + describe(model_.margin));
  }
  law_ = std::move(*law);
  const auto cells = enumerated_shape(model_, shape_).volume();
  const std::uint64_t k = law_.values.size();
  std::uint64_t total = 1;
  for (std::uint64_t c = 0; c < cells; ++c) {
    if (total > budget / k) {
      throw BudgetExceeded("enumerating " + std::to_string(k) + "^" + std::to_string(cells) +
                           " outcomes exceeds the budget of " + std::to_string(budget));
    }
    total *= k;
  }
  if (total > budget) {
    throw BudgetExceeded("enumerating " + std::to_string(total) +
                         " outcomes exceeds the budget of " + std::to_string(budget));
  }
  cells_ = static_cast<std::size_t>(cells);
  count_ = total;
}

void OutcomeSpace::for_each(const std::function<void(const LatticeTable&, double)>& visit) const {
  const std::size_t k = law_.values.size();
  std::vector<std::size_t> digits(cells_, 0);
  std::vector<double> raw(cells_);
  for (std::uint64_t outcome = 0; outcome < count_; ++outcome) {
    double prob = 1.0;
    for (std::size_t c = 0; c < cells_; ++c) {
      raw[c] = law_.values[digits[c]];
      prob *= law_.probs[digits[c]];
    }
    visit(assemble_field(model_, shape_, raw, kDefaultCellBudget), prob);
    for (std::size_t c = cells_; c-- > 0;) {
      if (++digits[c] < k) break;
      digits[c] = 0;
    }
  }
}

OutcomeSpace enumerate_outcomes(const FieldModel& model, const MultiIndex& n, std::uint64_t budget) {
  return OutcomeSpace(model, n, budget);
}

}  // namespace rfslln
