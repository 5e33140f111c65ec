#include <cmath>

#include "doctest.h"
#include "rfslln/dsequence.hpp"
#include "rfslln/error.hpp"

using namespace rfslln;

TEST_CASE("log+ and |log n|") {
  CHECK(logplus(1.0) == 1.0);
  CHECK(logplus(2.0) == 1.0);
  CHECK(logplus(std::exp(3.0)) == doctest::Approx(3.0));
  CHECK_THROWS_AS(logplus(0.0), InvalidArgument);
  CHECK(logplus_weight(MultiIndex{1, 1}) == 1.0);
  CHECK(logplus_weight(MultiIndex{1000, 10}) == doctest::Approx(std::log(1000.0) * std::log(10.0)));
  CHECK(size(MultiIndex{3, 4, 5}) == 60);
}

TEST_CASE("named families evaluate as products") {
  const auto s = parse_family("size", 2);
  CHECK(s.product_type());
  CHECK(s(MultiIndex{3, 7}) == 21.0);
  const auto lp = parse_family("logplus", 2);
  CHECK(lp(MultiIndex{1000, 1}) == doctest::Approx(std::log(1000.0)));
  const auto pw = parse_family("power:-1", 2);
  CHECK(pw(MultiIndex{4, 5}) == doctest::Approx(1.0 / 20.0));
  const auto geo = parse_family("geometric:2", 1);
  CHECK(geo(MultiIndex{5}) == 32.0);
  const auto mixed = parse_family("product:[id, geometric:2]", 2);
  CHECK(mixed(MultiIndex{3, 4}) == 48.0);
  const auto c = parse_family("constant:2.5", 3);
  CHECK(c(MultiIndex{9, 9, 9}) == 2.5);
  CHECK_FALSE(parse_family("constant:0", 1).product_type());
  CHECK_THROWS_AS(parse_family("product:[id]", 2), InvalidArgument);
  CHECK_THROWS_AS(parse_family("wobble", 1), InvalidArgument);
  CHECK_THROWS_AS(parse_family("power:x", 1), InvalidArgument);
  CHECK_THROWS_AS(parse_family("geometric:-1", 1), InvalidArgument);
}

TEST_CASE("flags are conjunctions and are spot-checked") {
  const auto s = families::size(2);
  CHECK(s.flags().positive);
  CHECK(s.flags().nondecreasing);
  CHECK(s.flags().unbounded);
  CHECK(check_flags(s, MultiIndex{6, 6}).empty());
  const auto inv = families::power(2, -1.0);
  CHECK_FALSE(inv.flags().nondecreasing);
  const auto c = families::constant(2, 1.0);
  CHECK_FALSE(c.flags().unbounded);

  const DSequence liar("liar", 1, [](const MultiIndex& n) { return -static_cast<double>(n[0]); },
                       SequenceFlags{true, true, true, false});
  const auto problems = check_flags(liar, MultiIndex{4});
  CHECK(problems.size() == 3);
}

TEST_CASE("normalization and scaling keep product type") {
  const auto b = parse_family("product:[geometric:2, power:1]", 2);
  CHECK(b.first_value() == 2.0);
  const auto bn = b.normalized();
  CHECK(bn.first_value() == 1.0);
  CHECK(bn(MultiIndex{3, 4}) == doctest::Approx(b(MultiIndex{3, 4}) / 2.0));
  const auto scaled = b.scaled(3.0);
  CHECK(scaled.product_type());
  CHECK(scaled(MultiIndex{2, 2}) == doctest::Approx(24.0));
  CHECK_THROWS_AS(DSequence("x", 1, [](const MultiIndex&) { return 1.0; }, {}).normalized(), InvalidArgument);
  CHECK_THROWS_AS(make_product({Sequence1D::power(1.0), Sequence1D::constant(-1.0)}), InvalidArgument);
}

TEST_CASE("tabulate uses the separable path consistently") {
  const auto b = parse_family("product:[logplus, geometric:1.5, id]", 3);
  const MultiIndex shape{5, 3, 4};
  const auto t = b.tabulate(shape);
  for (const auto& m : iter_rectangle(shape)) CHECK(t.at(m) == doctest::Approx(b(m)).epsilon(1e-15));
}

TEST_CASE("series: sum of 1/n^2 over d = 1 converges to pi^2/6") {
  const auto a = families::constant(1, 1.0);
  const auto b = families::size(1);
  const auto v = series_sum(a, b, 2.0, RectangleSchedule::halving_chain(MultiIndex{1 << 20}), 1e-5);
  CHECK(v.verdict == SeriesVerdictKind::ConvergedAtTolerance);
  // Tail beyond N is about 1/N.
  CHECK(v.partial_sum == doctest::Approx(M_PI * M_PI / 6.0 - 1.0 / (1 << 20)).epsilon(1e-9));
}

TEST_CASE("series: the harmonic series is reported diverging") {
  const auto a = families::constant(1, 1.0);
  const auto b = families::size(1);
  const auto v = series_sum(a, b, 1.0, RectangleSchedule::halving_chain(MultiIndex{1 << 16}));
  CHECK(v.verdict == SeriesVerdictKind::Diverging);
}

TEST_CASE("series: sum 1/<n> |log n|^-2 in d = 2") {
  const auto a = families::power(2, -1.0);
  const auto b = families::logplus(2);
  const auto v = series_sum(a, b, 2.0, RectangleSchedule::halving_chain(MultiIndex{1024, 1024}), 1e-4);
  CHECK(v.verdict == SeriesVerdictKind::ConvergedAtTolerance);
  // Separable, so the partial sum is the square of the one-dimensional sum.
  double one = 0.0;
  for (int k = 1; k <= 1024; ++k) one += 1.0 / (k * std::pow(logplus(k), 2.0));
  CHECK(v.partial_sum == doctest::Approx(one * one).epsilon(1e-12));
  CHECK(v.tail_increment < 1e-4);
  CHECK(v.tail_increment > 1e-6);
}

TEST_CASE("series: a vanishing numerator converges trivially") {
  const auto a = families::constant(2, 0.0);
  const auto v = series_sum(a, families::size(2), 1.0, RectangleSchedule::dyadic_diagonal(2, 4));
  CHECK(v.partial_sum == 0.0);
  CHECK(v.verdict == SeriesVerdictKind::ConvergedAtTolerance);
}

TEST_CASE("construct_beta: guarantees at a modest horizon") {
  const auto a = families::power(2, -1.0);
  const auto b = families::logplus(2);
  const auto res = construct_beta(a, b, 2.0, MultiIndex{256, 256}, 1e-3);
  const auto& d = res.diagnostics;
  CHECK(res.beta.product_type());
  CHECK(d.positive);
  CHECK(d.nondecreasing);
  CHECK(d.unbounded_on_sample);
  CHECK(d.nonincreasing_after_knee);
  CHECK(d.last_quarter_mean < d.first_quarter_mean);
  CHECK(d.beta_final_increment < 1e-3);
  // beta <= b eventually is not required, but beta/b must fall along the chain.
  CHECK(d.ratio.back() < d.ratio[d.knee]);
}

TEST_CASE("construct_beta rejects divergent or unresolved inputs") {
  const auto b = families::size(1);
  CHECK_THROWS_AS(construct_beta(families::constant(1, 1.0), b, 1.0, MultiIndex{4096}), HypothesisError);
  CHECK_THROWS_AS(construct_beta(families::power(1, -1.0), families::logplus(1), 2.0, MultiIndex{16}, 1e-9),
                  HypothesisError);
  CHECK_THROWS_AS(construct_beta(families::power(1, -2.0), families::constant(1, 2.0), 1.0, MultiIndex{16}),
                  InvalidArgument);
}
