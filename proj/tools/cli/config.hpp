#pragma once

// Experiment configuration. The on-disk format is YAML; see
// docs/config.md for the schema.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rfslln/fieldgen.hpp"
#include "rfslln/lattice.hpp"
#include "rfslln/maximal.hpp"

namespace rfslln::cli {

/// Malformed or incomplete configuration. Messages name the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { Csv, Json, Both };
OutputFormat parse_format(std::string_view name);

struct LogWeightedFitSpec {
  double r = 2.0;
  std::vector<MultiIndex> grid;
  std::uint64_t reps = 2000;
};

struct ExperimentConfig {
  std::string command;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;  ///< per-command default when absent
  unsigned threads = 1;
  std::string out_dir = ".";
  OutputFormat format = OutputFormat::Both;

  std::size_t dim = 1;
  std::optional<FieldModel> model;  ///< seed filled in at run time
  std::optional<std::string> a;
  std::optional<std::string> b;
  std::optional<double> r;
  std::optional<double> c;
  std::string variant = "prob";
  bool fit_a = false;

  EvalMode mode = EvalMode::Exact;
  double confidence = 0.99;
  std::uint64_t budget = kDefaultOutcomeBudget;

  std::vector<MultiIndex> grid;
  std::optional<std::vector<double>> eps;
  std::optional<MultiIndex> shape;
  std::optional<MultiIndex> horizon;
  std::optional<RectangleSchedule> schedule;
  std::optional<double> tolerance;
  std::optional<LogWeightedFitSpec> fit;

  /// Bytes the config was parsed from; hashed into provenance.
  std::string source;
};

ExperimentConfig parse_config(std::string_view yaml_text);
ExperimentConfig load_config(const std::string& path);

/// Dyadic diagonal schedule with at most 2^20 cells at its last point.
RectangleSchedule default_schedule(std::size_t dim);

}  // namespace rfslln::cli
