#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/experiment.hpp"

namespace polyopt {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& section, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : section.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in section [" + where + "]");
    }
  }
}

template <typename T>
void read(const json& section, const char* key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for key '") + key + "': " + e.what());
  }
}

void read_index_list(const json& section, const char* key,
                     std::vector<Eigen::Index>& out) {
  if (!section.contains(key)) return;
  std::vector<long> raw;
  read(section, key, raw);
  out.assign(raw.begin(), raw.end());
}

void parse_experiment(const json& j, ExperimentSection& out) {
  reject_unknown_keys(j, {"kind", "epochs", "seed", "out", "checkpoint_every"},
                      "experiment");
  read(j, "kind", out.kind);
  read(j, "epochs", out.epochs);
  read(j, "seed", out.seed);
  read(j, "out", out.out);
  read(j, "checkpoint_every", out.checkpoint_every);
  if (out.kind != "bench" && out.kind != "marl" && out.kind != "analysis-sweep" &&
      out.kind != "tournament") {
    throw ConfigError("experiment.kind must be bench, marl, analysis-sweep or tournament");
  }
  if (out.epochs < 1) throw ConfigError("experiment.epochs must be >= 1");
}

void parse_optimizer(const json& j, OptimizerConfig& out) {
  reject_unknown_keys(
      j, {"method", "eta", "sga_lambda", "cg_eps", "cg_max_iter", "warm_start"},
      "optimizer");
  std::string method = method_to_string(out.method);
  read(j, "method", method);
  out.method = method_from_string(method);
  read(j, "eta", out.eta);
  read(j, "sga_lambda", out.sga_lambda);
  read(j, "cg_eps", out.cg_eps);
  read(j, "cg_max_iter", out.cg_max_iter);
  read(j, "warm_start", out.warm_start);
  if (!(out.eta > 0)) throw ConfigError("optimizer.eta must be positive");
  if (!(out.cg_eps > 0)) throw ConfigError("optimizer.cg_eps must be positive");
}

void parse_game(const json& j, GameSection& out) {
  reject_unknown_keys(
      j, {"type", "coupling", "dims", "seed", "s_scale", "a_scale", "theta0"}, "game");
  read(j, "type", out.type);
  read(j, "coupling", out.coupling);
  read_index_list(j, "dims", out.dims);
  read(j, "seed", out.seed);
  read(j, "s_scale", out.s_scale);
  read(j, "a_scale", out.a_scale);
  read(j, "theta0", out.theta0);
  if (out.type != "bilinear" && out.type != "four_player_example" &&
      out.type != "random_quadratic") {
    throw ConfigError("game.type must be bilinear, four_player_example or random_quadratic");
  }
}

void parse_env(const json& j, EnvSection& out) {
  reject_unknown_keys(j,
                      {"type", "width", "height", "step_cap", "reward_variant",
                       "base_demands", "price_thresholds", "baseline_cost",
                       "baseline_capacity", "learner_costs", "bid_min", "bid_max",
                       "profit_scale", "end_probability"},
                      "env");
  read(j, "type", out.type);
  if (out.type == "soccer") {
    read(j, "width", out.soccer.width);
    read(j, "height", out.soccer.height);
    read(j, "step_cap", out.soccer.step_cap);
    std::string variant = "appendix";
    read(j, "reward_variant", variant);
    if (variant == "appendix") {
      out.soccer.reward_variant = SoccerRewardVariant::kAppendix;
    } else if (variant == "main") {
      out.soccer.reward_variant = SoccerRewardVariant::kMainText;
    } else {
      throw ConfigError("env.reward_variant must be appendix or main");
    }
  } else if (out.type == "market") {
    std::vector<double> demands, thresholds, costs;
    read(j, "base_demands", demands);
    read(j, "price_thresholds", thresholds);
    read(j, "learner_costs", costs);
    if (!demands.empty()) {
      if (demands.size() != 6) throw ConfigError("env.base_demands needs 6 entries");
      std::copy(demands.begin(), demands.end(), out.market.base_demands.begin());
    }
    if (!thresholds.empty()) {
      if (thresholds.size() != 6) throw ConfigError("env.price_thresholds needs 6 entries");
      std::copy(thresholds.begin(), thresholds.end(), out.market.price_thresholds.begin());
    }
    if (!costs.empty()) {
      if (costs.size() != 3) throw ConfigError("env.learner_costs needs 3 entries");
      std::copy(costs.begin(), costs.end(), out.market.learner_costs.begin());
    }
    read(j, "baseline_cost", out.market.baseline_cost);
    read(j, "baseline_capacity", out.market.baseline_capacity);
    read(j, "bid_min", out.market.bid_min);
    read(j, "bid_max", out.market.bid_max);
    read(j, "profit_scale", out.market.profit_scale);
    read(j, "end_probability", out.market.end_probability);
  } else {
    throw ConfigError("env.type must be soccer or market");
  }
}

void parse_marl(const json& j, MarlSection& out) {
  reject_unknown_keys(j,
                      {"batch", "gamma", "lambda", "baseline", "hidden",
                       "baseline_hidden", "sigma", "baseline_learning_rate",
                       "baseline_epochs"},
                      "marl");
  read(j, "batch", out.batch);
  read(j, "gamma", out.gamma);
  read(j, "lambda", out.lambda);
  read(j, "baseline", out.baseline);
  read_index_list(j, "hidden", out.hidden);
  read_index_list(j, "baseline_hidden", out.baseline_hidden);
  read(j, "sigma", out.sigma);
  read(j, "baseline_learning_rate", out.baseline_learning_rate);
  read(j, "baseline_epochs", out.baseline_epochs);
  if (out.batch < 1) throw ConfigError("marl.batch must be >= 1");
  if (!(out.gamma > 0 && out.gamma <= 1)) throw ConfigError("marl.gamma must be in (0, 1]");
  if (!(out.lambda >= 0 && out.lambda <= 1)) {
    throw ConfigError("marl.lambda must be in [0, 1]");
  }
  if (out.baseline != "zero" && out.baseline != "tabular" && out.baseline != "mlp") {
    throw ConfigError("marl.baseline must be zero, tabular or mlp");
  }
  if (!(out.sigma > 0)) throw ConfigError("marl.sigma must be positive");
}

void parse_analysis(const json& j, AnalysisSection& out) {
  reject_unknown_keys(
      j, {"seeds", "dims", "s_scale", "a_scales", "eta_grid", "eta_bound_factors"},
      "analysis");
  read(j, "seeds", out.seeds);
  read_index_list(j, "dims", out.dims);
  read(j, "s_scale", out.s_scale);
  read(j, "a_scales", out.a_scales);
  read(j, "eta_grid", out.eta_grid);
  read(j, "eta_bound_factors", out.eta_bound_factors);
  if (out.seeds < 0) throw ConfigError("analysis.seeds must be >= 0");
}

void parse_tournament(const json& j, TournamentSection& out) {
  reject_unknown_keys(j, {"episodes", "composition", "checkpoint_a", "checkpoint_b"},
                      "tournament");
  read(j, "episodes", out.episodes);
  read(j, "composition", out.composition);
  read(j, "checkpoint_a", out.checkpoint_a);
  read(j, "checkpoint_b", out.checkpoint_b);
  if (out.episodes < 1) throw ConfigError("tournament.episodes must be >= 1");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

  reject_unknown_keys(root,
                      {"experiment", "optimizer", "game", "env", "marl", "analysis",
                       "tournament"},
                      "top level");

  ExperimentConfig config;
  try {
    if (root.contains("experiment")) parse_experiment(root["experiment"], config.experiment);
    if (root.contains("optimizer")) parse_optimizer(root["optimizer"], config.optimizer);
    if (root.contains("game")) parse_game(root["game"], config.game);
    if (root.contains("env")) parse_env(root["env"], config.env);
    if (root.contains("marl")) parse_marl(root["marl"], config.marl);
    if (root.contains("analysis")) parse_analysis(root["analysis"], config.analysis);
    if (root.contains("tournament")) parse_tournament(root["tournament"], config.tournament);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  if (config.experiment.kind.empty()) {
    throw ConfigError(origin + ": missing experiment.kind");
  }
  if (config.experiment.kind == "bench" && config.game.type.empty()) {
    throw ConfigError(origin + ": bench experiments need a [game] section");
  }
  if ((config.experiment.kind == "marl" || config.experiment.kind == "tournament") &&
      config.env.type.empty()) {
    throw ConfigError(origin + ": this experiment kind needs an [env] section");
  }
  return config;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

PlotSpec parse_plot_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plot spec '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  reject_unknown_keys(root, {"inputs", "metric", "x", "moving_average", "negate", "out"},
                      "plot spec");
  PlotSpec spec;
  if (!root.contains("inputs") || !root["inputs"].is_array()) {
    throw ConfigError(path + ": plot spec needs an inputs array");
  }
  for (const auto& item : root["inputs"]) {
    reject_unknown_keys(item, {"path", "method"}, "plot input");
    PlotInput input;
    read(item, "path", input.path);
    read(item, "method", input.method);
    if (input.path.empty() || input.method.empty()) {
      throw ConfigError(path + ": plot inputs need path and method");
    }
    spec.inputs.push_back(std::move(input));
  }
  read(root, "metric", spec.metric);
  read(root, "x", spec.x);
  read(root, "moving_average", spec.moving_average);
  read(root, "negate", spec.negate);
  read(root, "out", spec.out);
  if (spec.x != "step" && spec.x != "wall_ms") {
    throw ConfigError(path + ": x must be step or wall_ms");
  }
  if (spec.moving_average < 0) throw ConfigError(path + ": moving_average must be >= 0");
  if (spec.out.empty()) throw ConfigError(path + ": plot spec needs an out path");
  return spec;
}

}  // namespace polyopt
