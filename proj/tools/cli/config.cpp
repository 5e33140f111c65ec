#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rfslln/error.hpp"

namespace rfslln::cli {

namespace {

const std::set<std::string> kTopLevel = {
    "command", "seed", "reps", "threads", "output", "dim", "model", "a", "b", "r", "c",
    "variant", "fit_a", "evaluation", "grid", "shape", "horizon", "schedule", "tolerance", "fit"};

std::string mark(const YAML::Node& node) {
  const auto m = node.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: field '" + field + "' has an invalid value" + mark(node));
  }
}

MultiIndex index_node(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence() || node.size() == 0) {
    throw ConfigError("config: field '" + field + "' must be a nonempty list of positive integers" +
                      mark(node));
  }
  std::vector<std::int64_t> c;
  for (const auto& v : node) c.push_back(scalar<std::int64_t>(v, field));
  try {
    MultiIndex m(std::move(c));
    require_valid(m);
    return m;
  } catch (const Error& e) {
    throw ConfigError("config: field '" + field + "': " + e.what());
  }
}

std::vector<MultiIndex> index_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw ConfigError("config: field '" + field + "' must be a list of indices");
  std::vector<MultiIndex> out;
  for (const auto& v : node) out.push_back(index_node(v, field));
  return out;
}

std::vector<MultiIndex> grid_node(const YAML::Node& node, const std::string& field,
                                  std::optional<std::vector<double>>* eps) {
  if (!node.IsMap()) throw ConfigError("config: field '" + field + "' must be a table");
  std::vector<MultiIndex> out;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (key == "points") {
      auto pts = index_list(kv.second, field + ".points");
      out.insert(out.end(), pts.begin(), pts.end());
    } else if (key == "subrectangles") {
      const auto top = index_node(kv.second, field + ".subrectangles");
      for (const auto& m : iter_rectangle(top)) out.push_back(m);
    } else if (key == "eps" && eps) {
      std::vector<double> e;
      for (const auto& v : kv.second) e.push_back(scalar<double>(v, field + ".eps"));
      *eps = std::move(e);
    } else {
      throw ConfigError("config: unknown field '" + field + "." + key + "'");
    }
  }
  return out;
}

RectangleSchedule schedule_node(const YAML::Node& node, std::size_t dim) {
  if (!node.IsMap() || !node["type"]) throw ConfigError("config: field 'schedule.type' is required");
  const auto type = scalar<std::string>(node["type"], "schedule.type");
  try {
    if (type == "dyadic_diagonal") {
      return RectangleSchedule::dyadic_diagonal(dim, scalar<int>(node["max_exponent"], "schedule.max_exponent"));
    }
    if (type == "dyadic") {
      std::vector<int> rates;
      for (const auto& v : node["rates"]) rates.push_back(scalar<int>(v, "schedule.rates"));
      return RectangleSchedule::dyadic(std::move(rates), scalar<int>(node["steps"], "schedule.steps"));
    }
    if (type == "halving") {
      return RectangleSchedule::halving_chain(index_node(node["horizon"], "schedule.horizon"));
    }
    if (type == "points") {
      return RectangleSchedule(index_list(node["points"], "schedule.points"));
    }
  } catch (const Error& e) {
    throw ConfigError(std::string("config: field 'schedule': ") + e.what());
  }
  throw ConfigError("config: unknown schedule type '" + type + "'");
}

FieldModel model_node(const YAML::Node& node) {
  if (!node.IsMap()) throw ConfigError("config: field 'model' must be a table");
  FieldModel m;
  try {
    if (node["kind"]) m.kind = parse_field_kind(scalar<std::string>(node["kind"], "model.kind"));
    if (!node["margin"]) throw ConfigError("config: missing required field 'model.margin'");
    m.margin = parse_margin(scalar<std::string>(node["margin"], "model.margin"));
    if (node["window"]) m.window = index_node(node["window"], "model.window");
  } catch (const Error& e) {
    throw ConfigError(std::string("config: field 'model': ") + e.what());
  }
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (key != "kind" && key != "margin" && key != "window") {
      throw ConfigError("config: unknown field 'model." + key + "'");
    }
  }
  if (m.kind == FieldKind::MovingAverage && !m.window) {
    throw ConfigError("config: missing required field 'model.window' for moving_average");
  }
  return m;
}

}  // namespace

OutputFormat parse_format(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  if (name == "both") return OutputFormat::Both;
  throw ConfigError("unknown output format '" + std::string(name) + "' (csv, json or both)");
}

RectangleSchedule default_schedule(std::size_t dim) {
  return RectangleSchedule::dyadic_diagonal(dim, static_cast<int>(20 / dim));
}

ExperimentConfig parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: malformed YAML: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.source = std::string(yaml_text);
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError("config: top level must be a table");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!kTopLevel.count(key)) throw ConfigError("config: unknown field '" + key + "'" + mark(kv.first));
  }

  if (root["command"]) cfg.command = scalar<std::string>(root["command"], "command");
  if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["reps"]) cfg.reps = scalar<std::uint64_t>(root["reps"], "reps");
  if (root["threads"]) cfg.threads = scalar<unsigned>(root["threads"], "threads");
  if (const auto out = root["output"]) {
    if (out["dir"]) cfg.out_dir = scalar<std::string>(out["dir"], "output.dir");
    if (out["format"]) cfg.format = parse_format(scalar<std::string>(out["format"], "output.format"));
  }
  if (root["a"]) cfg.a = scalar<std::string>(root["a"], "a");
  if (root["b"]) cfg.b = scalar<std::string>(root["b"], "b");
  if (root["r"]) cfg.r = scalar<double>(root["r"], "r");
  if (root["c"]) cfg.c = scalar<double>(root["c"], "c");
  if (root["variant"]) cfg.variant = scalar<std::string>(root["variant"], "variant");
  if (cfg.variant != "prob" && cfg.variant != "moment") {
    throw ConfigError("config: field 'variant' must be 'prob' or 'moment'");
  }
  if (root["fit_a"]) cfg.fit_a = scalar<bool>(root["fit_a"], "fit_a");
  if (root["tolerance"]) cfg.tolerance = scalar<double>(root["tolerance"], "tolerance");
  if (const auto ev = root["evaluation"]) {
    try {
      if (ev["mode"]) cfg.mode = parse_eval_mode(scalar<std::string>(ev["mode"], "evaluation.mode"));
    } catch (const Error& e) {
      throw ConfigError(std::string("config: field 'evaluation.mode': ") + e.what());
    }
    if (ev["confidence"]) cfg.confidence = scalar<double>(ev["confidence"], "evaluation.confidence");
    if (ev["budget"]) cfg.budget = scalar<std::uint64_t>(ev["budget"], "evaluation.budget");
  }
  if (root["grid"]) cfg.grid = grid_node(root["grid"], "grid", &cfg.eps);
  if (root["shape"]) cfg.shape = index_node(root["shape"], "shape");
  if (root["horizon"]) cfg.horizon = index_node(root["horizon"], "horizon");

  // dim: explicit, else inferred from the first index-valued field.
  if (root["dim"]) {
    cfg.dim = scalar<std::size_t>(root["dim"], "dim");
  } else if (cfg.shape) {
    cfg.dim = cfg.shape->dim();
  } else if (cfg.horizon) {
    cfg.dim = cfg.horizon->dim();
  } else if (!cfg.grid.empty()) {
    cfg.dim = cfg.grid.front().dim();
  } else if (root["schedule"] && root["schedule"]["rates"]) {
    cfg.dim = root["schedule"]["rates"].size();
  }
  if (cfg.dim == 0 || cfg.dim > 24) throw ConfigError("config: field 'dim' must lie in 1..24");
  if (root["schedule"]) cfg.schedule = schedule_node(root["schedule"], cfg.dim);
  if (root["model"]) cfg.model = model_node(root["model"]);

  if (const auto fit = root["fit"]) {
    LogWeightedFitSpec spec;
    if (fit["r"]) spec.r = scalar<double>(fit["r"], "fit.r");
    if (fit["reps"]) spec.reps = scalar<std::uint64_t>(fit["reps"], "fit.reps");
    if (fit["grid"]) spec.grid = grid_node(fit["grid"], "fit.grid", nullptr);
    cfg.fit = std::move(spec);
  }

  auto check_dim = [&](const MultiIndex& m, const char* field) {
    if (m.dim() != cfg.dim) {
      throw ConfigError(std::string("config: field '") + field + "' has dimension " +
                        std::to_string(m.dim()) + ", expected " + std::to_string(cfg.dim));
    }
  };
  for (const auto& m : cfg.grid) check_dim(m, "grid");
  if (cfg.shape) check_dim(*cfg.shape, "shape");
  if (cfg.horizon) check_dim(*cfg.horizon, "horizon");
  if (cfg.schedule) check_dim(cfg.schedule->back(), "schedule");
  if (cfg.fit) {
    for (const auto& m : cfg.fit->grid) check_dim(m, "fit.grid");
  }
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
    throw ConfigError("config: field 'evaluation.confidence' must lie in (0, 1)");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rfslln::cli
