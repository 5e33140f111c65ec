#include <cmath>
#include <set>

#include "doctest.h"
#include "rfslln/error.hpp"
#include "rfslln/fieldgen.hpp"
#include "rfslln/philox.hpp"

using namespace rfslln;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors of the Random123 distribution (kat_vectors).
  const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                               {0xffffffffu, 0xffffffffu});
  CHECK(ones == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                             {0xa4093822u, 0x299f31d0u});
  CHECK(pi == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("cell uniforms are pure, open-interval and key-sensitive") {
  const std::int64_t c1[] = {3, 4};
  const std::int64_t c2[] = {4, 3};
  const auto a = cell_uniforms(1, 0, c1);
  const auto b = cell_uniforms(1, 0, c1);
  CHECK(a.u1 == b.u1);
  CHECK(a.u2 == b.u2);
  CHECK(a.u1 > 0.0);
  CHECK(a.u1 < 1.0);
  CHECK(cell_uniforms(1, 0, c2).u1 != a.u1);
  CHECK(cell_uniforms(2, 0, c1).u1 != a.u1);
  CHECK(cell_uniforms(1, 1, c1).u1 != a.u1);
  const std::int64_t c3[] = {3, 4, 1};
  CHECK(cell_uniforms(1, 0, c3).u1 != a.u1);
}

TEST_CASE("margins: parsing, validation, moments") {
  CHECK(describe(parse_margin("normal:0,2")) == "normal:0,2");
  CHECK(describe(parse_margin(" rademacher ")) == "rademacher");
  CHECK(describe(parse_margin("finite:-1,2|0.6666666666666666,0.3333333333333334")).rfind("finite:-1,2|", 0) == 0);
  CHECK_THROWS_AS(parse_margin("finite:0,1|0.5,0.6"), InvalidArgument);
  CHECK_THROWS_AS(parse_margin("normal:0"), InvalidArgument);
  CHECK_THROWS_AS(parse_margin("pareto:-1"), InvalidArgument);
  CHECK_THROWS_AS(parse_margin("gamma:1"), InvalidArgument);
  CHECK(has_moment(margins::Pareto{3.0}, 2.0));
  CHECK_FALSE(has_moment(margins::Pareto{2.0}, 2.0));
  CHECK_FALSE(has_moment(margins::Cauchy{}, 1.0));
  CHECK(has_moment(margins::Normal{}, 8.0));
  CHECK(sample(margins::Pareto{2.0}, 0.25, 0.5) == doctest::Approx(2.0));
  CHECK(sample(margins::Rademacher{}, 0.49, 0.9) == -1.0);
  CHECK(sample(margins::Rademacher{}, 0.51, 0.1) == 1.0);
  CHECK(sample(margins::Finite{{1, 2, 3}, {0.2, 0.3, 0.5}}, 0.45, 0.0) == 2.0);
  CHECK(sample(margins::Cauchy{}, 0.5, 0.3) == doctest::Approx(0.0));
  CHECK_FALSE(finite_law(margins::Normal{}));
  CHECK(finite_law(margins::Rademacher{})->values.size() == 2);
}

TEST_CASE("generate: nested rectangles share cell values") {
  FieldModel m;
  m.margin = margins::Normal{0.0, 1.0};
  m.seed = 99;
  const auto small = generate(m, MultiIndex{3, 4}, 2);
  const auto big = generate(m, MultiIndex{7, 5}, 2);
  for (const auto& k : iter_rectangle(MultiIndex{3, 4})) CHECK(small.at(k) == big.at(k));
  const auto other = generate(m, MultiIndex{3, 4}, 3);
  CHECK(other.at(MultiIndex{1, 1}) != small.at(MultiIndex{1, 1}));
}

TEST_CASE("generate: sample moments of iid margins") {
  FieldModel m;
  m.seed = 4;
  m.margin = margins::Rademacher{};
  const auto x = generate(m, MultiIndex{200, 200}, 0);
  double s = 0.0;
  for (double v : x.values()) {
    CHECK((v == 1.0 || v == -1.0));
    s += v;
  }
  CHECK(std::abs(s / 40000.0) < 5.0 / 200.0);

  m.margin = margins::Normal{1.0, 2.0};
  const auto y = generate(m, MultiIndex{200, 200}, 0);
  double mean = 0.0, sq = 0.0;
  for (double v : y.values()) mean += v;
  mean /= 40000.0;
  for (double v : y.values()) sq += (v - mean) * (v - mean);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
  CHECK(sq / 39999.0 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("generate: point masses, scaling and moving averages") {
  FieldModel m;
  m.margin = margins::PointMass{1.0};
  m.cell_scale = families::power(2, -1.0);
  const auto x = generate(m, MultiIndex{3, 3}, 0);
  CHECK(x.at(MultiIndex{2, 3}) == doctest::Approx(1.0 / 6.0));

  FieldModel ma;
  ma.kind = FieldKind::MovingAverage;
  ma.window = MultiIndex{2, 2};
  ma.margin = margins::PointMass{1.0};
  const auto y = generate(ma, MultiIndex{4, 4}, 0);
  for (double v : y.values()) CHECK(v == doctest::Approx(2.0));

  // Moving average: X_m = <w>^{-1/2} * (sum of innovations over [m - w + 1, m]).
  // With window 1 it is the innovation itself, keyed by the cell.
  FieldModel one = ma;
  one.window = MultiIndex{1, 1};
  one.margin = margins::Normal{};
  FieldModel iid;
  iid.margin = margins::Normal{};
  CHECK(generate(one, MultiIndex{3, 3}, 5).at(MultiIndex{2, 2}) ==
        doctest::Approx(generate(iid, MultiIndex{3, 3}, 5).at(MultiIndex{2, 2})).epsilon(1e-14));
  // With window (2,1): X_(i,j) = (e_(i-1,j) + e_(i,j)) / sqrt 2, so adjacent
  // cells along axis 1 share an innovation.
  FieldModel w2 = ma;
  w2.window = MultiIndex{2, 1};
  w2.margin = margins::Normal{};
  const auto z = generate(w2, MultiIndex{3, 2}, 1);
  const auto e = generate(iid, MultiIndex{3, 2}, 1);
  CHECK(z.at(MultiIndex{2, 1}) == doctest::Approx((e.at(MultiIndex{1, 1}) + e.at(MultiIndex{2, 1})) / std::sqrt(2.0)));
  CHECK(z.at(MultiIndex{3, 2}) == doctest::Approx((e.at(MultiIndex{2, 2}) + e.at(MultiIndex{3, 2})) / std::sqrt(2.0)));

  FieldModel bad = ma;
  bad.window = MultiIndex{2};
  CHECK_THROWS_AS(generate(bad, MultiIndex{3, 3}, 0), InvalidArgument);
  FieldModel fs;
  fs.kind = FieldKind::FiniteSupport;
  fs.margin = margins::Normal{};
  CHECK_THROWS_AS(validate(fs), InvalidArgument);
}

TEST_CASE("outcome enumeration covers the product space") {
  FieldModel m;
  m.margin = margins::Rademacher{};
  const auto space = enumerate_outcomes(m, MultiIndex{2, 2});
  CHECK(space.size() == 16);
  std::set<std::vector<double>> seen;
  double total = 0.0;
  space.for_each([&](const LatticeTable& x, double p) {
    seen.insert(std::vector<double>(x.values().begin(), x.values().end()));
    CHECK(p == doctest::Approx(1.0 / 16.0));
    total += p;
  });
  CHECK(seen.size() == 16);
  CHECK(total == doctest::Approx(1.0));

  m.margin = margins::Finite{{0.0, 1.0, 5.0}, {0.5, 0.25, 0.25}};
  const auto three = enumerate_outcomes(m, MultiIndex{2});
  CHECK(three.size() == 9);
  double mean_sum = 0.0;
  three.for_each([&](const LatticeTable& x, double p) { mean_sum += p * (x.at_linear(0) + x.at_linear(1)); });
  CHECK(mean_sum == doctest::Approx(3.0));

  FieldModel ma;
  ma.kind = FieldKind::MovingAverage;
  ma.window = MultiIndex{2};
  ma.margin = margins::Rademacher{};
  CHECK(enumerate_outcomes(ma, MultiIndex{3}).size() == 16);

  CHECK_THROWS_AS(enumerate_outcomes(FieldModel{}, MultiIndex{5, 5}, 1 << 20), BudgetExceeded);
  FieldModel normal;
  normal.margin = margins::Normal{};
  CHECK_THROWS_AS(enumerate_outcomes(normal, MultiIndex{2}), InvalidArgument);
}
