#include "sparse_lqg/config.hpp"

#include "sparse_lqg/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace sparse_lqg {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path + "/" + key;
}

std::string join(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

const json& require_key(const json& j, const std::string& path,
                        const std::string& key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

std::uint64_t u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(j.get<long long>());
  }
  throw ConfigError(path, "expected an unsigned 64-bit integer");
}

Vector vector_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    v(static_cast<Eigen::Index>(k)) = number(j[k], join(path, k));
  }
  return v;
}

// Row-major nested arrays.
Matrix matrix_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(path, "expected a nonempty array of rows");
  }
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw ConfigError(join(path, 0), "expected a row");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto rp = join(path, r);
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(rp, "rows must all have " + std::to_string(cols) +
                                " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c], join(rp, c));
    }
  }
  return m;
}

bool is_matrix_sequence(const json& j) {
  return j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() &&
         j[0][0].is_array();
}

// Either one matrix (time-invariant) or one per step.
MatrixSeq matrix_seq(const json& j, const std::string& path, std::size_t steps) {
  if (!is_matrix_sequence(j)) return MatrixSeq(steps, matrix_from(j, path));
  if (j.size() != steps) {
    throw ConfigError(path, "expected " + std::to_string(steps) + " matrices");
  }
  MatrixSeq out;
  for (std::size_t t = 0; t < steps; ++t) out.push_back(matrix_from(j[t], join(path, t)));
  return out;
}

VectorSeq vector_seq(const json& j, const std::string& path, std::size_t steps) {
  if (!(j.is_array() && !j.empty() && j[0].is_array())) {
    return VectorSeq(steps, vector_from(j, path));
  }
  if (j.size() != steps) {
    throw ConfigError(path, "expected " + std::to_string(steps) + " vectors");
  }
  VectorSeq out;
  for (std::size_t t = 0; t < steps; ++t) out.push_back(vector_from(j[t], join(path, t)));
  return out;
}

std::vector<Eigen::Index> index_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of integers");
  std::vector<Eigen::Index> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(static_cast<Eigen::Index>(count(j[k], join(path, k))));
  }
  return out;
}

GameSpec parse_game(const json& j, const std::string& path) {
  check_keys(j, path,
             {"horizon", "agents", "costs", "initial_mean", "initial_covariance"});
  const std::size_t T = count(require_key(j, path, "horizon"), join(path, "horizon"));
  if (T == 0) throw ConfigError(join(path, "horizon"), "must be positive");

  const auto apath = join(path, "agents");
  const json& ja = require_key(j, path, "agents");
  if (!ja.is_array() || ja.empty()) throw ConfigError(apath, "expected agents");
  std::vector<AgentDynamics> agents;
  for (std::size_t k = 0; k < ja.size(); ++k) {
    const auto p = join(apath, k);
    check_keys(ja[k], p, {"A", "B", "W"});
    AgentDynamics a;
    a.A = matrix_seq(require_key(ja[k], p, "A"), join(p, "A"), T);
    a.B = matrix_seq(require_key(ja[k], p, "B"), join(p, "B"), T);
    a.W = matrix_seq(require_key(ja[k], p, "W"), join(p, "W"), T);
    a.state_dim = a.A.front().rows();
    a.control_dim = a.B.front().cols();
    agents.push_back(std::move(a));
  }

  const auto cpath = join(path, "costs");
  const json& jc = require_key(j, path, "costs");
  if (!jc.is_array() || jc.size() != agents.size()) {
    throw ConfigError(cpath, "expected one cost per agent");
  }
  std::vector<AgentCost> costs;
  for (std::size_t k = 0; k < jc.size(); ++k) {
    const auto p = join(cpath, k);
    check_keys(jc[k], p, {"Q", "q", "R", "r", "constant"});
    AgentCost c;
    c.Q = matrix_seq(require_key(jc[k], p, "Q"), join(p, "Q"), T + 1);
    c.q = vector_seq(require_key(jc[k], p, "q"), join(p, "q"), T + 1);
    c.R = matrix_seq(require_key(jc[k], p, "R"), join(p, "R"), T);
    c.r = vector_seq(require_key(jc[k], p, "r"), join(p, "r"), T);
    if (jc[k].contains("constant")) {
      const json& jk = jc[k].at("constant");
      const auto kp = join(p, "constant");
      if (jk.is_array()) {
        const Vector v = vector_from(jk, kp);
        if (v.size() != static_cast<Eigen::Index>(T + 1)) {
          throw ConfigError(kp, "expected T+1 entries");
        }
        c.constant.assign(v.data(), v.data() + v.size());
      } else {
        c.constant.assign(T + 1, number(jk, kp));
      }
    }
    costs.push_back(std::move(c));
  }

  Vector mean = vector_from(require_key(j, path, "initial_mean"),
                            join(path, "initial_mean"));
  Matrix cov = matrix_from(require_key(j, path, "initial_covariance"),
                           join(path, "initial_covariance"));
  try {
    return make_game(std::move(agents), T, std::move(costs), std::move(mean),
                     std::move(cov));
  } catch (const InstanceError& e) {
    throw ConfigError(path, e.what());
  }
}

ObservationModel parse_observation(const json& j, const std::string& path,
                                   std::size_t horizon) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(path, "expected one observation model per agent");
  }
  ObservationModel obs;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto p = join(path, k);
    check_keys(j[k], p, {"C", "V", "groups"});
    AgentObservation a;
    a.C = matrix_seq(require_key(j[k], p, "C"), join(p, "C"), horizon + 1);
    a.V = matrix_seq(require_key(j[k], p, "V"), join(p, "V"), horizon + 1);
    a.groups = index_list(require_key(j[k], p, "groups"), join(p, "groups"));
    obs.agents.push_back(std::move(a));
  }
  return obs;
}

void parse_formation(const json& j, const std::string& path,
                     FormationParams& params) {
  check_keys(j, path,
             {"horizon", "dt", "L1", "L2", "path_amplitude", "path_x_rate",
              "path_y_rate", "initial_position_std", "initial_velocity_std",
              "process_velocity_std", "observation_position_std",
              "observation_velocity_std", "initial_mean"});
  for (const auto& [key, val] : j.items()) {
    const auto p = join(path, key);
    if (key == "horizon") {
      params.horizon = count(val, p);
    } else if (key == "initial_mean") {
      params.initial_mean = vector_from(val, p);
    } else {
      const double v = number(val, p);
      if (key == "dt") params.dt = v;
      else if (key == "L1") params.L1 = v;
      else if (key == "L2") params.L2 = v;
      else if (key == "path_amplitude") params.path_amplitude = v;
      else if (key == "path_x_rate") params.path_x_rate = v;
      else if (key == "path_y_rate") params.path_y_rate = v;
      else if (key == "initial_position_std") params.initial_position_std = v;
      else if (key == "initial_velocity_std") params.initial_velocity_std = v;
      else if (key == "process_velocity_std") params.process_velocity_std = v;
      else if (key == "observation_position_std") params.observation_position_std = v;
      else if (key == "observation_velocity_std") params.observation_velocity_std = v;
    }
  }
}

RegularizationPolicy parse_regularization(const json& j, const std::string& path,
                                          const FormationParams& defaults) {
  check_keys(j, path, {"policy", "lambda", "L1", "L2", "lambdas"});
  const json& jp = require_key(j, path, "policy");
  if (!jp.is_string()) throw ConfigError(join(path, "policy"), "expected a string");
  const auto kind = jp.get<std::string>();
  if (kind == "constant") {
    const double lam = number(require_key(j, path, "lambda"), join(path, "lambda"));
    if (!(lam >= 0.0)) throw ConfigError(join(path, "lambda"), "must be nonnegative");
    return ConstantLambda{lam};
  }
  if (kind == "adaptive") {
    AdaptiveLambda a{defaults.L1, defaults.L2};
    if (j.contains("L1")) a.L1 = number(j.at("L1"), join(path, "L1"));
    if (j.contains("L2")) a.L2 = number(j.at("L2"), join(path, "L2"));
    if (!(a.L1 > 0.0)) throw ConfigError(join(path, "L1"), "must be positive");
    if (!(a.L2 > 0.0)) throw ConfigError(join(path, "L2"), "must be positive");
    return a;
  }
  if (kind == "per_group") {
    const auto lp = join(path, "lambdas");
    const json& jl = require_key(j, path, "lambdas");
    if (!jl.is_array()) throw ConfigError(lp, "expected one λ list per agent");
    PerGroupLambda g;
    for (std::size_t k = 0; k < jl.size(); ++k) {
      Vector v = vector_from(jl[k], join(lp, k));
      if ((v.array() < 0.0).any()) {
        throw ConfigError(join(lp, k), "λ must be nonnegative");
      }
      g.lambdas.push_back(std::move(v));
    }
    return g;
  }
  throw ConfigError(join(path, "policy"),
                    "expected \"constant\", \"adaptive\" or \"per_group\"");
}

SolverSettings parse_solver(const json& j, const std::string& path) {
  check_keys(j, path,
             {"max_iterations", "relative_change_tol", "stop_kkt", "kkt_tolerance",
              "polish"});
  SolverSettings s;
  for (const auto& [key, val] : j.items()) {
    const auto p = join(path, key);
    if (key == "max_iterations") {
      s.max_iterations = count(val, p);
    } else if (key == "polish") {
      if (!val.is_boolean()) throw ConfigError(p, "expected a boolean");
      s.polish = val.get<bool>();
    } else {
      const double v = number(val, p);
      if (!(v > 0.0)) throw ConfigError(p, "must be positive");
      if (key == "relative_change_tol") s.relative_change_tol = v;
      else if (key == "stop_kkt") s.stop_kkt = v;
      else s.kkt_tolerance = v;
    }
  }
  return s;
}

}  // namespace

RegularizationPolicy parse_policy(const std::string& text,
                                  const FormationParams& defaults) {
  const std::string path = "--lambda";
  if (text.rfind("adaptive", 0) == 0) {
    AdaptiveLambda a{defaults.L1, defaults.L2};
    if (text.size() > 8) {
      std::istringstream is(text.substr(8));
      char c1 = 0;
      char c2 = 0;
      if (!(is >> c1 >> a.L1 >> c2 >> a.L2) || c1 != ':' || c2 != ':' ||
          !is.eof()) {
        throw ConfigError(path, "expected adaptive or adaptive:L1:L2, got '" +
                                    text + "'");
      }
    }
    if (!(a.L1 > 0.0 && a.L2 > 0.0)) {
      throw ConfigError(path, "adaptive L1, L2 must be positive");
    }
    return a;
  }
  std::size_t used = 0;
  double lam = 0.0;
  try {
    lam = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !(lam >= 0.0)) {
    throw ConfigError(path, "expected a nonnegative number or 'adaptive', got '" +
                                text + "'");
  }
  return ConstantLambda{lam};
}

std::vector<RegularizationPolicy> parse_policy_list(
    const std::string& text, const FormationParams& defaults) {
  std::vector<RegularizationPolicy> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_policy(item, defaults));
  }
  if (out.empty()) throw ConfigError("--lambda", "empty policy list");
  return out;
}

RunConfig parse_run_config(const json& doc) {
  const std::string root;
  check_keys(doc, root,
             {"scenario", "formation", "game", "observation", "regularization",
              "r_th", "seed", "runs", "output_dir", "solver", "sweep_lambdas",
              "check_instances"});
  RunConfig cfg;
  if (doc.contains("scenario")) {
    const json& js = doc.at("scenario");
    if (!js.is_string()) throw ConfigError("/scenario", "expected a string");
    cfg.scenario = js.get<std::string>();
    if (*cfg.scenario != kFormationScenario) {
      throw ConfigError("/scenario", "unknown scenario '" + *cfg.scenario + "'");
    }
  }
  if (doc.contains("formation")) {
    if (!cfg.scenario) {
      throw ConfigError("/formation", "only valid with scenario formation3");
    }
    parse_formation(doc.at("formation"), "/formation", cfg.formation);
  }
  if (doc.contains("game")) {
    if (cfg.scenario) {
      throw ConfigError("/game", "give either a scenario or an inline game");
    }
    cfg.game = parse_game(doc.at("game"), "/game");
    if (!doc.contains("observation")) {
      throw ConfigError("/observation", "missing (required with an inline game)");
    }
    cfg.observation =
        parse_observation(doc.at("observation"), "/observation", cfg.game->horizon);
    try {
      cfg.observation->validate(*cfg.game);
    } catch (const InstanceError& e) {
      throw ConfigError("/observation", e.what());
    }
  } else if (doc.contains("observation")) {
    throw ConfigError("/observation", "only valid with an inline game");
  }

  if (doc.contains("regularization")) {
    cfg.simulation.policy =
        parse_regularization(doc.at("regularization"), "/regularization", cfg.formation);
  }
  if (doc.contains("r_th")) {
    cfg.simulation.r_th = number(doc.at("r_th"), "/r_th");
    if (!(cfg.simulation.r_th > 0.0 && cfg.simulation.r_th <= 1.0)) {
      throw ConfigError("/r_th", "must lie in (0, 1]");
    }
  }
  if (doc.contains("seed")) cfg.simulation.seed = u64(doc.at("seed"), "/seed");
  if (doc.contains("runs")) {
    cfg.simulation.runs = count(doc.at("runs"), "/runs");
    if (cfg.simulation.runs == 0) throw ConfigError("/runs", "must be at least 1");
  }
  if (doc.contains("output_dir")) {
    const json& jo = doc.at("output_dir");
    if (!jo.is_string()) throw ConfigError("/output_dir", "expected a string");
    cfg.output_dir = jo.get<std::string>();
  }
  if (doc.contains("solver")) {
    cfg.simulation.solver = parse_solver(doc.at("solver"), "/solver");
  }
  if (doc.contains("sweep_lambdas")) {
    const json& jl = doc.at("sweep_lambdas");
    if (!jl.is_array()) throw ConfigError("/sweep_lambdas", "expected an array");
    for (std::size_t k = 0; k < jl.size(); ++k) {
      const auto p = join("/sweep_lambdas", k);
      try {
        if (jl[k].is_string()) {
          cfg.sweep.push_back(parse_policy(jl[k].get<std::string>(), cfg.formation));
        } else {
          const double lam = number(jl[k], p);
          if (!(lam >= 0.0)) throw ConfigError(p, "must be nonnegative");
          cfg.sweep.push_back(ConstantLambda{lam});
        }
      } catch (const ConfigError& e) {
        if (e.path() == p) throw;
        throw ConfigError(p, e.what());
      }
    }
  }
  if (doc.contains("check_instances")) {
    cfg.check_instances = count(doc.at("check_instances"), "/check_instances");
  }
  if (!cfg.scenario && !cfg.game) {
    throw ConfigError("/scenario", "missing (name a scenario or give an inline game)");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

Instance make_instance(const RunConfig& config) {
  if (config.scenario) {
    try {
      FormationGame g = build_formation_game(config.formation);
      return {std::move(g.spec), std::move(g.observation), true};
    } catch (const InstanceError& e) {
      throw ConfigError("/formation", e.what());
    }
  }
  return {*config.game, *config.observation, false};
}

}  // namespace sparse_lqg
