#include "rfslln/blockdecomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "numeric.hpp"
#include "rfslln/error.hpp"

namespace rfslln {

namespace {

bool within(double lhs, double rhs, double tol) {
  return lhs <= rhs + tol * std::max(std::abs(lhs), std::abs(rhs));
}

bool close(double lhs, double rhs, double tol) {
  return std::abs(lhs - rhs) <= tol * std::max(std::abs(lhs), std::abs(rhs));
}

// Collects a pointwise family of inequalities lhs <= rhs and keeps the point
// with the smallest relative margin.
class Tightest {
 public:
  Tightest(std::string name, double tol) : tol_(tol) { step_.name = std::move(name); }

  template <class W>
  void add(double lhs, double rhs, W&& witness) {
    const bool ok = within(lhs, rhs, tol_);
    const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
    const double margin = (rhs - lhs) / scale;
    if (!seen_ || margin < margin_) {
      seen_ = true;
      margin_ = margin;
      step_.lhs = lhs;
      step_.rhs = rhs;
      step_.slack = rhs - lhs;
      step_.witness = witness();
    }
    step_.holds = step_.holds && ok;
  }

  ChainStep finish() { return std::move(step_); }

 private:
  double tol_;
  bool seen_ = false;
  double margin_ = 0.0;
  ChainStep step_;
};

ChainStep inequality(std::string name, double lhs, double rhs, double tol) {
  return ChainStep{std::move(name), within(lhs, rhs, tol), lhs, rhs, rhs - lhs, {}};
}

ChainStep equality(std::string name, double lhs, double rhs, double tol) {
  return ChainStep{std::move(name), close(lhs, rhs, tol), lhs, rhs, rhs - lhs, {}};
}

MultiIndex index_from(std::span<const std::int64_t> coords) {
  return MultiIndex(std::vector<std::int64_t>(coords.begin(), coords.end()));
}

MultiIndex shifted(const BlockIndex& i) {
  std::vector<std::int64_t> c(i.size());
  for (std::size_t j = 0; j < i.size(); ++j) c[j] = i[j] + 1;
  return MultiIndex(std::move(c));
}

}  // namespace

std::string to_string(const BlockIndex& i) {
  std::ostringstream os;
  os << '(';
  for (std::size_t j = 0; j < i.size(); ++j) os << (j ? "," : "") << i[j];
  os << ')';
  return os.str();
}

BlockIndex BlockPartition::block_of(const MultiIndex& s) const {
  if (s.dim() != shape.dim() || !leq(s, shape)) {
    throw InvalidArgument("index " + s.to_string() + " is outside [1, " + shape.to_string() + "]");
  }
  BlockIndex i(s.dim());
  for (std::size_t j = 0; j < s.dim(); ++j) i[j] = exponents[j][static_cast<std::size_t>(s[j] - 1)];
  return i;
}

int block_exponent(double value, double c) {
  if (!(c > 1.0) || !std::isfinite(c)) throw InvalidArgument("block base c must be > 1");
  if (!(value >= 1.0) || !std::isfinite(value)) {
    throw InvalidArgument("block exponent needs a finite value >= 1");
  }
  int i = static_cast<int>(std::floor(std::log(value) / std::log(c)));
  i = std::max(i, 0);
  while (i > 0 && std::pow(c, i) > value) --i;
  while (std::pow(c, i + 1) <= value) ++i;
  return i;
}

BlockPartition build_partition(const DSequence& b, const MultiIndex& n, double c,
                               std::uint64_t cell_budget) {
  require_valid(n);
  if (!(c > 1.0) || !std::isfinite(c)) throw InvalidArgument("block base c must be > 1");
  if (!b.product_type()) throw InvalidArgument("normalizer '" + b.name() + "' is not of product type");
  if (b.dim() != n.dim()) throw InvalidArgument("normalizer dimension does not match n");
  checked_volume(n, cell_budget);

  BlockPartition p;
  p.c = c;
  p.shape = n;
  p.exponents.resize(n.dim());
  for (std::size_t j = 0; j < n.dim(); ++j) {
    const auto& f = b.factors()[j];
    for (std::int64_t k = 1; k <= n[j]; ++k) {
      const double v = f(k);
      if (!(v >= 1.0)) {
        std::ostringstream os;
        os << "factor " << j + 1 << " of '" << b.name() << "' is " << v << " < 1 at " << k
           << "; normalize b first";
        throw InvalidArgument(os.str());
      }
      p.exponents[j].push_back(block_exponent(v, c));
    }
  }
  p.k_n.assign(n.dim(), 0);
  for_each_cell(n, [&](std::size_t, std::span<const std::int64_t> s) {
    BlockIndex i(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) i[j] = p.exponents[j][static_cast<std::size_t>(s[j] - 1)];
    auto [it, fresh] = p.blocks.try_emplace(i);
    auto& block = it->second;
    const auto m = index_from(s);
    if (fresh) {
      block.index = i;
      block.max_member = m;
      for (std::size_t j = 0; j < i.size(); ++j) p.k_n[j] = std::max(p.k_n[j], i[j]);
    } else {
      block.max_member = join(block.max_member, m);
    }
    block.members.push_back(m);
  });
  return p;
}

std::map<BlockIndex, double> block_sums(const DSequence& a, const BlockPartition& p) {
  const auto at = a.tabulate(p.shape);
  for (std::size_t idx = 0; idx < at.cell_count(); ++idx) {
    if (at.at_linear(idx) < 0.0) {
      throw InvalidArgument("sequence '" + a.name() + "' is negative at " + at.index_of(idx).to_string());
    }
  }
  std::map<BlockIndex, double> out;
  for (const auto& [i, block] : p.blocks) {
    detail::CompensatedSum s;
    for (const auto& m : block.members) s.add(at.at(m));
    out.emplace(i, s.value());
  }
  return out;
}

bool ChainReport::passed() const {
  return std::all_of(steps.begin(), steps.end(), [](const ChainStep& s) { return s.holds; });
}

const ChainStep* ChainReport::first_failure() const {
  for (const auto& s : steps) {
    if (!s.holds) return &s;
  }
  return nullptr;
}

double geometric_constant(double c, double r) {
  if (!(c > 1.0)) throw InvalidArgument("c must be > 1");
  if (!(r > 0.0)) throw InvalidArgument("r must be positive");
  return std::pow(c, r) / (1.0 - std::pow(c, -r));
}

ChainReport verify_chain(const DSequence& a, const DSequence& b, const MultiIndex& n, double c,
                         double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("r must be positive");
  if (!b.product_type()) throw InvalidArgument("normalizer '" + b.name() + "' is not of product type");
  const std::size_t d = n.dim();

  ChainReport rep;
  rep.c = c;
  rep.r = r;
  rep.b1 = b.first_value();
  if (!(rep.b1 > 0.0)) throw InvalidArgument("normalizer must be positive at (1, ..., 1)");
  const DSequence bn = b.normalized();
  const auto p = build_partition(bn, n, c);
  rep.k_n = p.k_n;
  rep.nonempty_blocks = p.blocks.size();
  const double kfac = geometric_constant(c, r);
  rep.constant_factor = std::pow(kfac, static_cast<double>(d));

  const auto at = a.tabulate(n);
  const auto bt = bn.tabulate(n);
  bool integral = true;
  for (double v : at.values()) {
    if (v < 0.0) throw InvalidArgument("sequence '" + a.name() + "' must be nonnegative");
    integral = integral && v == std::floor(v) && v < 1e15;
  }
  const auto pa = prefix_sums(at);
  const double total_a = pa.at(n);
  integral = integral && total_a < 9e15;
  const double tol_sum = integral ? 0.0 : kChainSlack;

  // Partition validity: membership predicate, disjoint cover, blocks <= k_n.
  {
    std::uint64_t members = 0;
    bool ok = true;
    std::string bad;
    for (const auto& [i, block] : p.blocks) {
      for (std::size_t j = 0; j < d; ++j) ok = ok && i[j] <= p.k_n[j];
      for (const auto& s : block.members) {
        ++members;
        if (p.block_of(s) != i) {
          ok = false;
          if (bad.empty()) bad = s.to_string() + " listed in block " + to_string(i);
        }
        for (std::size_t j = 0; j < d; ++j) {
          const double v = bn.factors()[j](s[j]);
          if (!(std::pow(c, i[j]) <= v && v < std::pow(c, i[j] + 1))) {
            ok = false;
            if (bad.empty()) bad = s.to_string() + " violates membership of " + to_string(i);
          }
        }
      }
    }
    ChainStep s = equality("partition", static_cast<double>(members), static_cast<double>(n.volume()), 0.0);
    s.holds = s.holds && ok;
    s.witness = bad.empty() ? "blocks " + std::to_string(p.blocks.size()) + ", k_n " + to_string(p.k_n) : bad;
    rep.steps.push_back(std::move(s));
  }

  // Block-index coherence: m <= s implies block(m) <= block(s). With product
  // blocks this is monotonicity of each exponent sequence.
  {
    Tightest step("block_coherence", 0.0);
    bool any = false;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 1; k < p.exponents[j].size(); ++k) {
        any = true;
        step.add(p.exponents[j][k - 1], p.exponents[j][k], [&] {
          return "axis " + std::to_string(j + 1) + " at " + std::to_string(k + 1);
        });
      }
    }
    rep.steps.push_back(any ? step.finish() : ChainStep{"block_coherence", true, 0, 0, 0, "single cell"});
  }

  const auto sums = block_sums(a, p);
  {
    detail::CompensatedSum s;
    for (const auto& [i, v] : sums) s.add(v);
    rep.steps.push_back(equality("block_sums_total", s.value(), total_a, tol_sum));
  }

  // Dense D over the box [0, k_n], stored shifted by one.
  const MultiIndex kbox = shifted(p.k_n);
  std::vector<double> dense(static_cast<std::size_t>(checked_volume(kbox)), 0.0);
  LatticeTable dshape = LatticeTable::filled(kbox, 0.0);
  for (const auto& [i, v] : sums) dense[dshape.linear_index(shifted(i))] = v;
  const LatticeTable dt(kbox, std::move(dense));
  const auto pd = prefix_sums(dt);

  int kmax = 0;
  for (int k : p.k_n) kmax = std::max(kmax, k);
  std::vector<double> q(static_cast<std::size_t>(kmax) + 2);
  for (std::size_t e = 0; e < q.size(); ++e) q[e] = std::pow(c, -r * static_cast<double>(e));
  auto weight = [&](auto&& idx, std::int64_t shift) {
    double w = 1.0;
    for (std::size_t j = 0; j < d; ++j) w *= q[static_cast<std::size_t>(idx[j] + shift)];
    return w;
  };

  // Dominance per nonempty block and B1.
  detail::CompensatedSum b1;
  {
    Tightest step("dominance", tol_sum);
    for (const auto& [i, block] : p.blocks) {
      const double lhs = pa.at(block.max_member);
      const double rhs = pd.at(shifted(i));
      step.add(lhs, rhs, [&] { return "block " + to_string(i); });
      b1.add(weight(i, 0) * lhs);
    }
    rep.steps.push_back(step.finish());
  }
  rep.middle_bound = b1.value();

  // B2: dense sum over i <= k_n.
  detail::CompensatedSum b2;
  for_each_cell(kbox, [&](std::size_t lin, std::span<const std::int64_t> ic) {
    b2.add(weight(ic, -1) * pd.at_linear(lin));
  });
  rep.steps.push_back(inequality("dominance_sum", rep.middle_bound, b2.value(), kChainSlack));

  // B3: ranges exchanged, tails T_j(m) = sum_{m <= i <= k_n(j)} c^{-r i}.
  std::vector<std::vector<double>> tails(d);
  for (std::size_t j = 0; j < d; ++j) {
    tails[j].assign(static_cast<std::size_t>(p.k_n[j]) + 1, 0.0);
    double acc = 0.0;
    for (int m = p.k_n[j]; m >= 0; --m) {
      acc += q[static_cast<std::size_t>(m)];
      tails[j][static_cast<std::size_t>(m)] = acc;
    }
  }
  detail::CompensatedSum b3, b4, b5;
  const double geo = 1.0 / (1.0 - q[1]);
  for (const auto& [i, v] : sums) {
    double t = 1.0, g = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      t *= tails[j][static_cast<std::size_t>(i[j])];
      g *= q[static_cast<std::size_t>(i[j])] * geo;
    }
    b3.add(v * t);
    b4.add(v * g);
    b5.add(v * weight(i, 1));
  }
  rep.steps.push_back(equality("range_exchange", b2.value(), b3.value(), kChainSlack));

  {
    Tightest step("geometric_tail", kChainSlack);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t m = 0; m < tails[j].size(); ++m) {
        step.add(tails[j][m], q[m] * geo, [&] {
          return "axis " + std::to_string(j + 1) + " m_j=" + std::to_string(m);
        });
      }
    }
    rep.steps.push_back(step.finish());
  }
  rep.steps.push_back(inequality("tail_sum", b3.value(), b4.value(), kChainSlack));
  const double b5v = rep.constant_factor * b5.value();
  rep.steps.push_back(equality("rescale", b4.value(), b5v, kChainSlack));

  // Closing bound per cell and B6, B7.
  detail::CompensatedSum b6, b7;
  {
    Tightest step("closing_bound", kChainSlack);
    for (const auto& [i, block] : p.blocks) {
      double top = 1.0;
      for (std::size_t j = 0; j < d; ++j) top *= std::pow(c, r * (i[j] + 1));
      detail::CompensatedSum inner;
      for (const auto& s : block.members) {
        const double bs = std::pow(bt.at(s), r);
        step.add(bs, top, [&] { return s.to_string() + " in block " + to_string(i); });
        inner.add(at.at(s) / bs);
      }
      b6.add(inner.value());
    }
    rep.steps.push_back(step.finish());
  }
  for (std::size_t idx = 0; idx < at.cell_count(); ++idx) {
    b7.add(at.at_linear(idx) / std::pow(bt.at_linear(idx), r));
  }
  const double b6v = rep.constant_factor * b6.value();
  rep.final_bound = rep.constant_factor * b7.value();
  rep.steps.push_back(inequality("closing_sum", b5v, b6v, kChainSlack));
  rep.steps.push_back(equality("partition_sum", b6v, rep.final_bound, kChainSlack));
  rep.steps.push_back(inequality("chain", rep.middle_bound, rep.final_bound, kChainSlack));

  if (rep.final_bound > 0.0) {
    rep.final_ratio = rep.middle_bound / rep.final_bound;
  } else {
    rep.final_ratio = rep.middle_bound > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return rep;
}

OptimalC optimal_c(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("r must be positive");
  // Minimize over u = ln c; f(u) = e^{ru} / (1 - e^{-ru}) is unimodal on u > 0.
  auto f = [r](double u) {
    const double t = std::exp(r * u);
    return t * t / (t - 1.0);
  };
  std::uintmax_t iters = 500;
  const auto [u, fmin] = boost::math::tools::brent_find_minima(
      f, 1e-9, 20.0 / r, std::numeric_limits<double>::digits / 2 + 4, iters);
  return OptimalC{std::exp(u), fmin};
}

}  // namespace rfslln
