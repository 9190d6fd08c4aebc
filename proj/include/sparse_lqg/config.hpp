#pragma once

// Run configuration document (JSON). Unknown keys are rejected and every
// error names the offending path, e.g. "/game/agents/1/B".

#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/formation.hpp"
#include "sparse_lqg/game.hpp"
#include "sparse_lqg/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparse_lqg {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline constexpr const char* kFormationScenario = "formation3";

struct RunConfig {
  std::optional<std::string> scenario;
  FormationParams formation;
  // Inline instance, used when no scenario is named.
  std::optional<GameSpec> game;
  std::optional<ObservationModel> observation;

  SimulationConfig simulation;
  std::vector<RegularizationPolicy> sweep;
  std::string output_dir = "out";
  std::size_t check_instances = 200;
};

/// Parse and validate a configuration document.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

/// "0", "50", "adaptive", "adaptive:L1:L2". Throws ConfigError.
RegularizationPolicy parse_policy(const std::string& text,
                                  const FormationParams& defaults = {});

/// Comma-separated policy list.
std::vector<RegularizationPolicy> parse_policy_list(
    const std::string& text, const FormationParams& defaults = {});

struct Instance {
  GameSpec spec;
  ObservationModel observation;
  bool formation = false;
};

/// Scenario or inline instance described by the config.
Instance make_instance(const RunConfig& config);

}  // namespace sparse_lqg
