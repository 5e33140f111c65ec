#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cli/config.hpp"
#include "cli/run.hpp"
#include "rfslln/io.hpp"

namespace {

const std::map<std::string, std::string> kAbout = {
    {"simulate", "Generate fields and write every cell"},
    {"verify-transfer", "Check the weighted maximal bound implied by the unweighted one"},
    {"markov-bridge", "Check the step from a moment bound to a tail bound"},
    {"blockdecomp-check", "Rebuild the block partition and check the inequality chain"},
    {"optimal-c", "Minimize c^r / (1 - c^-r) over c > 1"},
    {"construct-beta", "Build an intermediate normalizer and report its diagnostics"},
    {"series-sum", "Partial sums of a / b^r with a convergence verdict"},
    {"slln-trajectory", "Trajectories of S_n / b_n along a schedule"},
    {"logweighted-demo", "Trajectories of the logarithmically weighted average"},
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<double> r;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace rfslln::cli;
  CLI::App app{"Maximal inequalities and strong laws for random fields on N^d"};
  app.set_version_flag("--version", std::string(rfslln::version()));
  app.require_subcommand(1);

  Flags flags;
  for (const auto& name : commands()) {
    auto* sub = app.add_subcommand(name, kAbout.at(name));
    sub->add_option("--config", flags.config, "YAML experiment config");
    sub->add_option("--seed", flags.seed, "Seed (overrides the config)");
    sub->add_option("--reps", flags.reps, "Replications (overrides the config)");
    sub->add_option("--threads", flags.threads, "Worker threads");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--format", flags.format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    sub->add_option("--r", flags.r, "Moment order r (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    ExperimentConfig cfg = flags.config.empty() ? parse_config("") : load_config(flags.config);
    cfg.command = app.get_subcommands().front()->get_name();
    if (flags.seed) cfg.seed = flags.seed;
    if (flags.reps) cfg.reps = flags.reps;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.out) cfg.out_dir = *flags.out;
    if (flags.format) cfg.format = parse_format(*flags.format);
    if (flags.r) cfg.r = flags.r;
    return run(cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
