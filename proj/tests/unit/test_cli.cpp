#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/config.hpp"
#include "cli/run.hpp"
#include "doctest.h"
#include "rfslln/io.hpp"

using namespace rfslln;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rfslln_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_yaml(const std::string& yaml, const fs::path& dir) {
  auto cfg = cli::parse_config(yaml);
  cfg.out_dir = dir.string();
  std::ostringstream out, err;
  const int code = cli::run(cfg, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_index(MultiIndex{4, 2}) == "4x2");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("config errors name the field") {
  CHECK_THROWS_WITH_AS(cli::parse_config("command: simulate\nbogus: 1\n"),
                       doctest::Contains("bogus"), cli::ConfigError);
  CHECK_THROWS_WITH_AS(cli::parse_config("command: simulate\nschedule: {max_exponent: 3}\n"),
                       doctest::Contains("schedule.type"), cli::ConfigError);
  CHECK_THROWS_WITH_AS(cli::parse_config("command: simulate\nmodel: {kind: iid}\n"),
                       doctest::Contains("model.margin"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config("command: [1, 2"), cli::ConfigError);
}

TEST_CASE("missing seed is an error for stochastic commands") {
  const auto dir = scratch("noseed");
  const auto o = run_yaml("command: simulate\nmodel: {margin: rademacher}\nshape: [2, 2]\n", dir);
  CHECK(o.code == cli::kExitError);
  CHECK(o.err.find("seed") != std::string::npos);
}

TEST_CASE("verify-transfer writes artifacts and passes on Rademacher") {
  const auto dir = scratch("transfer");
  const auto o = run_yaml(
      "command: verify-transfer\nseed: 7\nmodel: {kind: finite_support, margin: rademacher}\n"
      "a: size\nb: size\nr: 2\ngrid: {subrectangles: [2, 2]}\n",
      dir);
  CHECK(o.code == cli::kExitOk);
  const auto csv = slurp(dir / "verify-transfer.csv");
  CHECK(csv.rfind("side,n,eps,lhs,lhs_lo,lhs_hi,rhs,verdict\n", 0) == 0);
  CHECK(csv.find("violation") == std::string::npos);
  CHECK(fs::exists(dir / "verify-transfer.json"));
  CHECK(slurp(dir / "verify-transfer.provenance.json").find("fnv1a64:") != std::string::npos);
}

TEST_CASE("deterministic commands and identical reruns") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  const std::string yaml =
      "command: slln-trajectory\nseed: 3\nreps: 4\nthreads: 2\nmodel: {margin: \"normal:0,1\"}\nb: size\n"
      "schedule: {type: dyadic_diagonal, max_exponent: 4}\n";
  CHECK(run_yaml(yaml, a).code == cli::kExitOk);
  CHECK(run_yaml(yaml, b).code == cli::kExitOk);
  CHECK(slurp(a / "slln-trajectory.csv") == slurp(b / "slln-trajectory.csv"));
  CHECK(slurp(a / "slln-trajectory.csv").rfind("replicate,n,statistic\n", 0) == 0);

  const auto c = scratch("optc");
  const auto o = run_yaml("command: optimal-c\nr: 1\n", c);
  CHECK(o.code == cli::kExitOk);
  CHECK(o.out.find("c*=2 min=4") != std::string::npos);

  const auto d = scratch("block");
  CHECK(run_yaml("command: blockdecomp-check\ndim: 1\na: size\nb: constant:1\nr: 1\nshape: [6]\n", d).code ==
        cli::kExitOk);
  CHECK(slurp(d / "blockdecomp-check.csv").rfind("s,block\n", 0) == 0);
}

TEST_CASE("every listed command is dispatchable") {
  CHECK(cli::commands().size() == 9);
  const auto dir = scratch("unknown");
  auto cfg = cli::parse_config("command: frobnicate\n");
  cfg.out_dir = dir.string();
  std::ostringstream out, err;
  CHECK(cli::run(cfg, out, err) == cli::kExitError);
}
