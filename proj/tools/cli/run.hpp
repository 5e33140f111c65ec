#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace rfslln::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

/// Subcommand names accepted by `run`.
const std::vector<std::string>& commands();

/// Executes cfg.command, writes its artifacts under cfg.out_dir and prints a
/// one-line verdict to `out`. Errors go to `err` and yield kExitError.
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace rfslln::cli
