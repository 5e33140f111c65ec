// Acceptance suite: one pass/fail line per criterion. With no --criterion
// every criterion runs; the exit code is nonzero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "rfslln/blockdecomp.hpp"
#include "rfslln/dsequence.hpp"
#include "rfslln/lattice.hpp"
#include "rfslln/maximal.hpp"
#include "rfslln/slln.hpp"

using namespace rfslln;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string cli;
  std::string configs;
  std::string scratch = "acceptance_scratch";
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome(const Options&)> body;
};

unsigned worker_count() { return std::max(1U, std::min(8U, std::thread::hardware_concurrency())); }

oracle::Coords coords_of(const MultiIndex& m) { return {m.coords().begin(), m.coords().end()}; }

// Positive nondecreasing factor given by a table on 1..64: v_1 = scale,
// v_k = v_{k-1} g_k with g_k in [1, 2.5].
Sequence1D monotone_factor(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> g(1.0, 2.5);
  auto v = std::make_shared<std::vector<double>>(64);
  (*v)[0] = scale;
  for (std::size_t k = 1; k < v->size(); ++k) (*v)[k] = (*v)[k - 1] * g(rng);
  return Sequence1D(
      "table",
      [v](std::int64_t k) { return (*v)[static_cast<std::size_t>(std::clamp<std::int64_t>(k, 1, 64) - 1)]; },
      SequenceFlags{true, true, true, false});
}

DSequence monotone_product(std::mt19937_64& rng, std::size_t dim) {
  std::vector<Sequence1D> f;
  std::uniform_real_distribution<double> scale(0.25, 4.0);
  for (std::size_t j = 0; j < dim; ++j) f.push_back(monotone_factor(rng, scale(rng)));
  return make_product(std::move(f));
}

// Nonnegative sequence hashed from the index; integer-valued when asked.
DSequence hashed_nonnegative(std::uint64_t key, std::size_t dim, bool integer) {
  return DSequence("hashed", dim, [key, integer](const MultiIndex& m) {
    std::uint64_t h = key ^ 0xcbf29ce484222325ULL;
    for (auto c : m.coords()) h = (h ^ static_cast<std::uint64_t>(c)) * 0x100000001b3ULL;
    h ^= h >> 29;
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return integer ? std::floor(8.0 * u) : u * u;
  }, SequenceFlags{true, false, false, false});
}

FieldModel binary_model(std::mt19937_64& rng) {
  const std::vector<std::pair<double, double>> pairs = {{-1, 1}, {0, 1}, {-1, 2}, {-2, 1}, {-0.5, 1.5}, {1, 3}};
  const auto& pr = pairs[rng() % pairs.size()];
  const double p0 = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
  FieldModel m;
  m.kind = FieldKind::FiniteSupport;
  m.margin = margins::Finite{{pr.first, pr.second}, {p0, 1.0 - p0}};
  m.seed = rng();
  return m;
}

// <n> <= 9, d in {1, 2}.
MultiIndex small_shape(std::mt19937_64& rng) {
  if (rng() % 3 == 0) return MultiIndex{1 + static_cast<std::int64_t>(rng() % 9)};
  for (;;) {
    const MultiIndex n{1 + static_cast<std::int64_t>(rng() % 4), 1 + static_cast<std::int64_t>(rng() % 4)};
    if (n.volume() <= 9) return n;
  }
}

DSequence numerator(std::mt19937_64& rng, std::size_t dim) {
  switch (rng() % 3) {
    case 0: return families::size(dim);
    case 1: return families::constant(dim, 1.0);
    default: return families::logplus(dim);
  }
}

std::vector<MultiIndex> subrectangles(const MultiIndex& n) {
  std::vector<MultiIndex> out;
  for (const auto& m : iter_rectangle(n)) out.push_back(m);
  return out;
}

Outcome optimal_constant(const Options&) {
  double worst_c = 0.0, worst_min = 0.0;
  for (double r : {0.5, 1.0, 2.0, 3.0}) {
    const auto o = optimal_c(r);
    worst_c = std::max(worst_c, std::abs(o.c_star - std::pow(2.0, 1.0 / r)));
    worst_min = std::max(worst_min, std::abs(o.min_value - 4.0));
  }
  std::ostringstream os;
  os << "max |c*-2^(1/r)| = " << worst_c << ", max |min-4| = " << worst_min;
  return {worst_c <= 1e-6 && worst_min <= 1e-6, os.str()};
}

Outcome proof_chain(const Options&) {
  std::mt19937_64 rng(0x5eedc4a1);
  const double cs[] = {1.3, 2.0, 3.0};
  const double rs[] = {0.5, 1.0, 2.0};
  int failures = 0;
  std::string first;
  for (int k = 0; k < 200; ++k) {
    const std::size_t dim = 1 + static_cast<std::size_t>(k % 3);
    std::vector<std::int64_t> n(dim);
    for (auto& v : n) v = 1 + static_cast<std::int64_t>(rng() % 8);
    const auto b = monotone_product(rng, dim);
    const auto a = hashed_nonnegative(rng(), dim, k % 2 == 0);
    const auto rep = verify_chain(a, b, MultiIndex(n), cs[rng() % 3], rs[rng() % 3]);
    if (!rep.passed()) {
      ++failures;
      if (first.empty()) first = "instance " + std::to_string(k) + " step " + rep.first_failure()->name;
    }
  }
  return {failures == 0, std::to_string(200 - failures) + "/200 chains pass" + (first.empty() ? "" : "; " + first)};
}

Outcome transfer_exact(const Options&) {
  std::mt19937_64 rng(0x7a11);
  EvalSettings s;
  int violations = 0, rows = 0;
  for (int k = 0; k < 100; ++k) {
    const auto model = binary_model(rng);
    const auto n = small_shape(rng);
    const auto a = numerator(rng, n.dim());
    const auto b = monotone_product(rng, n.dim());
    const double r = (k % 2) ? 2.0 : 1.0;
    const auto grid = subrectangles(n);
    const auto eps = default_eps_grid(model, n, s);
    const auto rep = check_transfer_prob(model, a, b, r, grid, eps.values, s);
    rows += static_cast<int>(rep.rows.size());
    for (const auto& row : rep.rows) violations += row.pass ? 0 : 1;
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(rows) + " exact rows"};
}

Outcome moment_and_bridge(const Options&) {
  std::mt19937_64 rng(0xb41d);
  EvalSettings s;
  int failures = 0, inapplicable = 0;
  for (int k = 0; k < 100; ++k) {
    const auto model = binary_model(rng);
    const auto n = small_shape(rng);
    const auto a0 = numerator(rng, n.dim());
    const auto b = monotone_product(rng, n.dim());
    const double r = (k % 2) ? 2.0 : 1.0;
    const auto grid = subrectangles(n);
    const double lambda = fit_moment_scale(model, a0, r, grid, s);
    if (lambda == 0.0) continue;  // degenerate field: both sides vanish
    const auto a = a0.scaled(lambda);
    const auto eps = default_eps_grid(model, n, s);
    for (const auto& rep : {check_transfer_moment(model, a, b, r, grid, s),
                            markov_bridge(model, a, r, grid, eps.values, s)}) {
      if (rep.verdict() == Verdict::Violation) ++failures;
      if (rep.verdict() == Verdict::Inapplicable) ++inapplicable;
    }
  }
  return {failures == 0 && inapplicable == 0,
          std::to_string(failures) + " violations, " + std::to_string(inapplicable) + " inapplicable over 200 reports"};
}

Outcome mc_coverage(const Options&) {
  std::mt19937_64 rng(0xc0fe);
  int covered = 0;
  for (int k = 0; k < 20; ++k) {
    const auto model = binary_model(rng);
    const auto n = small_shape(rng);
    EvalSettings exact;
    const auto eps = default_eps_grid(model, n, exact);
    const double e = eps.values[2 + rng() % 3];
    const double p = exact_tail_prob(model, n, e);
    EvalSettings mc;
    mc.mode = EvalMode::MonteCarlo;
    mc.reps = 10000;
    mc.confidence = 0.99;
    mc.seed = rng();
    mc.threads = worker_count();
    const auto ci = estimate_tail_prob(model, n, e, nullptr, mc);
    if (ci.lower <= p && p <= ci.upper) ++covered;
  }
  return {covered >= 18, std::to_string(covered) + "/20 intervals cover the exact probability"};
}

Outcome beta_construction(const Options&) {
  const auto res = construct_beta(families::power(2, -1.0), families::logplus(2), 2.0, MultiIndex{1024, 1024}, 1e-4);
  const auto& d = res.diagnostics;
  const double ratio = d.first_quarter_mean / d.last_quarter_mean;
  std::ostringstream os;
  os << "quarter-mean ratio " << ratio << ", final relative increment " << d.beta_final_increment;
  return {ratio >= 2.0 && d.beta_final_increment < 1e-4, os.str()};
}

Outcome logweighted(const Options&) {
  FieldModel model;
  model.margin = margins::Rademacher{};
  const auto sched = RectangleSchedule::dyadic_diagonal(2, 10);
  const auto recs = logweighted_demo(model, sched, 100, 20261019, worker_count());
  const auto trend = summarize_trend(recs, 0.9, 0.05);

  FieldModel one;
  one.margin = margins::PointMass{1.0};
  const auto ctrl = logweighted_demo(one, RectangleSchedule({MultiIndex{1024, 1024}}), 1, 1);
  const double h = oracle::harmonic(1024) / std::log(1024.0);
  const double rel = std::abs(ctrl.front().value - h * h) / (h * h);

  std::ostringstream os;
  os << "median decreased in " << trend.decreasing_fraction * 100.0 << "% of steps, final median "
     << trend.final_median << ", control relative error " << rel;
  return {trend.decreasing_fraction >= 0.9 && trend.final_median < 0.05 && rel <= 0.02, os.str()};
}

Outcome engine_exactness(const Options&) {
  std::mt19937_64 rng(0xe9);
  std::uniform_int_distribution<int> v(-1000, 1000);
  std::uniform_real_distribution<double> w(0.1, 4.0);
  int mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t dim = 1 + static_cast<std::size_t>(k % 3);
    std::vector<std::int64_t> c(dim);
    MultiIndex n{1};
    do {
      for (auto& e : c) e = 1 + static_cast<std::int64_t>(rng() % (dim == 1 ? 512 : dim == 2 ? 32 : 10));
      n = MultiIndex(c);
    } while (n.volume() > 512);
    std::vector<double> x(n.volume()), wv(n.volume());
    for (auto& e : x) e = v(rng);
    for (auto& e : wv) e = w(rng);
    const auto s = prefix_sums(LatticeTable(n, x));
    const auto ref = oracle::prefix(x, coords_of(n));
    const auto m = running_weighted_max(s, LatticeTable(n, wv));
    const auto mref = oracle::running_max(ref, wv, coords_of(n));
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (s.at_linear(i) != ref[i] || m.at_linear(i) != mref[i]) {
        ++mismatches;
        break;
      }
    }
  }
  return {mismatches == 0, std::to_string(1000 - mismatches) + "/1000 tables match both oracles"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility(const Options& opt) {
  if (opt.cli.empty() || opt.configs.empty()) return {false, "no CLI binary or config directory given"};
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(opt.configs)) {
    if (e.path().extension() == ".yaml") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  int identical = 0;
  std::string first;
  for (const auto& cfg : configs) {
    // The subcommand is the config's top-level 'command' value.
    std::string command;
    std::istringstream lines(slurp(cfg));
    for (std::string line; std::getline(lines, line);) {
      if (line.rfind("command:", 0) == 0) {
        command = line.substr(8);
        command.erase(0, command.find_first_not_of(' '));
        command.erase(command.find_last_not_of(" \r") + 1);
      }
    }
    std::vector<fs::path> dirs;
    bool ran = true;
    for (const char* tag : {"a", "b"}) {
      const auto dir = fs::path(opt.scratch) / cfg.stem() / tag;
      fs::remove_all(dir);
      fs::create_directories(dir);
      const std::string cmd = "\"" + opt.cli + "\" " + command + " --config \"" + cfg.string() + "\" --out \"" + dir.string() +
                              "\" > \"" + (dir / "stdout.txt").string() + "\" 2>&1";
      const int rc = std::system(cmd.c_str());
      // Exit 2 reports a violated check, which is still a reproducible run.
      if (!(rc == 0 || (WIFEXITED(rc) && WEXITSTATUS(rc) == 2))) ran = false;
      dirs.push_back(dir);
    }
    bool same = ran;
    std::size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      if (e.path().extension() != ".csv") continue;
      ++csvs;
      if (slurp(e.path()) != slurp(dirs[1] / e.path().filename())) same = false;
    }
    if (csvs == 0) same = false;
    if (same) {
      ++identical;
    } else if (first.empty()) {
      first = "; first difference: " + cfg.filename().string() + (ran ? "" : " (run failed)");
    }
  }
  return {!configs.empty() && identical == static_cast<int>(configs.size()),
          std::to_string(identical) + "/" + std::to_string(configs.size()) + " configs byte-identical" + first};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "acceptance: " << arg << " needs a value\n";
        std::exit(1);
      }
      return argv[++i];
    };
    if (arg == "--criterion") {
      selected.push_back(std::stoi(value()));
    } else if (arg == "--cli") {
      opt.cli = value();
    } else if (arg == "--configs") {
      opt.configs = value();
    } else if (arg == "--scratch") {
      opt.scratch = value();
    } else {
      std::cerr << "usage: acceptance [--criterion N]... [--cli PATH --configs DIR [--scratch DIR]]\n";
      return 1;
    }
  }

  const std::vector<Criterion> all = {
      {1, "optimal constant", 1.0, optimal_constant},
      {2, "proof chain", 30.0, proof_chain},
      {3, "exact transfer soundness", 120.0, transfer_exact},
      {4, "moment transfer and Markov bridge", 120.0, moment_and_bridge},
      {5, "Monte Carlo coverage", 60.0, mc_coverage},
      {6, "beta construction", 60.0, beta_construction},
      {7, "log-weighted demo", 180.0, logweighted},
      {8, "engine exactness", 30.0, engine_exactness},
      {9, "reproducibility", 60.0, reproducibility},
  };

  bool ok = true;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body(opt);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    ok = ok && pass;
    std::ostringstream t;
    t.precision(3);
    t << secs;
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << " - " << o.detail
              << " [" << t.str() << " s" << (in_time ? "" : ", over budget") << "]\n";
  }
  return ok ? 0 : 1;
}
