#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rfslln/error.hpp"
#include "rfslln/lattice.hpp"

using namespace rfslln;

namespace {

oracle::Coords coords_of(const MultiIndex& m) { return {m.coords().begin(), m.coords().end()}; }

MultiIndex random_shape(std::mt19937_64& rng, std::size_t dim, std::uint64_t max_volume) {
  for (;;) {
    std::vector<std::int64_t> c(dim);
    for (auto& v : c) v = std::uniform_int_distribution<std::int64_t>(1, 8)(rng);
    MultiIndex m(c);
    if (m.volume() <= max_volume) return m;
  }
}

LatticeTable random_integer_table(std::mt19937_64& rng, const MultiIndex& shape) {
  std::uniform_int_distribution<int> v(-50, 50);
  std::vector<double> x(shape.volume());
  for (auto& e : x) e = v(rng);
  return LatticeTable(shape, std::move(x));
}

}  // namespace

TEST_CASE("multi-index validation and basic order") {
  CHECK_THROWS_AS(MultiIndex({0, 2}), InvalidArgument);
  CHECK_THROWS_AS(MultiIndex(std::vector<std::int64_t>{}), InvalidArgument);
  const MultiIndex a{2, 3};
  const MultiIndex b{3, 3};
  CHECK(a.volume() == 6);
  CHECK(leq(a, b));
  CHECK(less(a, b));
  CHECK_FALSE(leq(b, a));
  CHECK_FALSE(leq(MultiIndex{1, 4}, a));
  CHECK_FALSE(leq(a, MultiIndex{1, 4}));
  CHECK(join(MultiIndex{1, 4}, a) == MultiIndex{2, 4});
  CHECK(lex_less(MultiIndex{1, 9}, MultiIndex{2, 1}));
  CHECK(MultiIndex::diagonal(3, 4) == MultiIndex{4, 4, 4});
  CHECK(a.to_string() == "(2,3)");
  CHECK_THROWS_AS(leq(MultiIndex{1}, MultiIndex{1, 1}), InvalidArgument);
}

TEST_CASE("iter_rectangle walks [1,n] lexicographically") {
  const MultiIndex n{2, 3};
  std::vector<MultiIndex> seen(iter_rectangle(n).begin(), iter_rectangle(n).end());
  REQUIRE(seen.size() == 6);
  CHECK(seen.front() == MultiIndex{1, 1});
  CHECK(seen[1] == MultiIndex{1, 2});
  CHECK(seen[3] == MultiIndex{2, 1});
  CHECK(seen.back() == n);
  const auto ref = oracle::cells({2, 3});
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(coords_of(seen[i]) == ref[i]);
}

TEST_CASE("table indexing round-trips") {
  const MultiIndex shape{3, 2, 4};
  const auto t = LatticeTable::tabulate(shape, [](const MultiIndex& m) {
    return static_cast<double>(100 * m[0] + 10 * m[1] + m[2]);
  });
  CHECK(t.at(MultiIndex{2, 1, 3}) == 213.0);
  for (std::size_t i = 0; i < t.cell_count(); ++i) CHECK(t.linear_index(t.index_of(i)) == i);
  CHECK_THROWS_AS(t.at(MultiIndex{4, 1, 1}), InvalidArgument);
  CHECK_THROWS_AS(LatticeTable(MultiIndex{2}, {1.0, std::nan("")}), NumericError);
  CHECK_THROWS_AS(LatticeTable::filled(MultiIndex{1 << 14, 1 << 14}, 0.0), BudgetExceeded);
}

TEST_CASE("prefix sums match direct summation on integer tables") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + trial % 3;
    const auto shape = random_shape(rng, dim, 120);
    const auto x = random_integer_table(rng, shape);
    const auto s = prefix_sums(x);
    const auto ref = oracle::prefix({x.values().begin(), x.values().end()}, coords_of(shape));
    for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(s.at_linear(i) == ref[i]);
  }
}

TEST_CASE("prefix sums stay accurate under cancellation") {
  // 1e16 and -1e16 cancel exactly while the unit entries survive.
  std::vector<double> x(64, 1.0);
  x[0] = 1e16;
  x[9] = -1e16;
  const auto s = prefix_sums(LatticeTable(MultiIndex{8, 8}, x));
  CHECK(s.at(MultiIndex{8, 8}) == 62.0);
}

TEST_CASE("prefix sums report overflow with the offending cell") {
  const double big = std::numeric_limits<double>::max();
  CHECK_THROWS_AS(prefix_sums(LatticeTable(MultiIndex{2, 2}, {big, big, big, big})), NumericError);
}

TEST_CASE("rectangle sums by inclusion-exclusion") {
  std::mt19937_64 rng(5);
  const MultiIndex shape{4, 5, 3};
  const auto x = random_integer_table(rng, shape);
  const auto s = prefix_sums(x);
  for (const auto& lo : iter_rectangle(shape)) {
    for (const auto& hi : iter_rectangle(shape)) {
      if (!leq(lo, hi)) continue;
      double ref = 0.0;
      for (const auto& m : iter_rectangle(hi)) {
        if (leq(lo, m)) ref += x.at(m);
      }
      REQUIRE(rectangle_sum(s, lo, hi) == ref);
    }
  }
  const std::int64_t zero[] = {0, 3, 2};
  CHECK(prefix_or_zero(s, zero) == 0.0);
}

TEST_CASE("running maxima match the quadratic scan") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> w(0.1, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto shape = random_shape(rng, 1 + trial % 3, 100);
    const auto s = prefix_sums(random_integer_table(rng, shape));
    std::vector<double> wv(shape.volume());
    for (auto& e : wv) e = w(rng);
    const LatticeTable weights(shape, wv);
    const auto m = running_weighted_max(s, weights);
    const auto ref = oracle::running_max({s.values().begin(), s.values().end()}, wv, coords_of(shape));
    for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(m.at_linear(i) == ref[i]);
    const auto unweighted = running_weighted_max(s);
    const auto ref1 = oracle::running_max({s.values().begin(), s.values().end()},
                                          std::vector<double>(wv.size(), 1.0), coords_of(shape));
    for (std::size_t i = 0; i < ref1.size(); ++i) REQUIRE(unweighted.at_linear(i) == ref1[i]);
  }
  const auto s = prefix_sums(LatticeTable::filled(MultiIndex{2}, 1.0));
  CHECK_THROWS_AS(running_weighted_max(s, LatticeTable::filled(MultiIndex{2}, 0.0)), InvalidArgument);
}

TEST_CASE("rectangle schedules") {
  const auto dd = RectangleSchedule::dyadic_diagonal(2, 3);
  REQUIRE(dd.size() == 4);
  CHECK(dd[0] == MultiIndex{1, 1});
  CHECK(dd.back() == MultiIndex{8, 8});

  const auto an = RectangleSchedule::dyadic({1, 2}, 2);
  CHECK(an.back() == MultiIndex{4, 16});

  const auto hc = RectangleSchedule::halving_chain(MultiIndex{5, 8});
  const std::vector<MultiIndex> expect = {{1, 1}, {1, 2}, {2, 4}, {5, 8}};
  REQUIRE(hc.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(hc[i] == expect[i]);

  CHECK_THROWS_AS(RectangleSchedule({MultiIndex{2, 2}, MultiIndex{1, 3}}), InvalidArgument);
  CHECK_THROWS_AS(RectangleSchedule({MultiIndex{2, 2}, MultiIndex{2, 2}}), InvalidArgument);
}
