#pragma once

// Three-robot formation game: a leader (robot 0) tracks a reference path,
// two followers (robots 1, 2) hold reference displacements to the others.
// Robots are planar double integrators with state [px, py, vx, vy] and
// acceleration input. Every robot observes the full joint state (C = I_12),
// one sensor group per observed robot.
//
// Costs are built in the ½-weighted form of GameSpec with the objectives'
// weights taken as-is, i.e. each agent's GameSpec cost is half its
// objective; constants are included so realized costs are exact.

#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/game.hpp"
#include "sparse_lqg/simulator.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace sparse_lqg {

inline constexpr std::size_t kFormationRobots = 3;

struct FormationParams {
  std::size_t horizon = 150;
  double dt = 0.05;
  // Reference displacement p^i − p^j for follower i, indexed [i][j]
  // (robots 0-based; entries with i == j or i == 0 are unused).
  std::array<std::array<Eigen::Vector2d, kFormationRobots>, kFormationRobots>
      displacement = default_displacements();
  double path_amplitude = 30.0;
  double path_x_rate = 1.0;
  double path_y_rate = 3.0;
  double initial_position_std = 0.25;
  double initial_velocity_std = 1.2;
  double process_velocity_std = 1.2;
  double observation_position_std = 0.25;
  double observation_velocity_std = 1.2;
  double L1 = 1000.0;
  double L2 = 250.0;
  /// Mean initial joint state; defaults to the leader on the path at k = 1
  /// and followers at their displacements, all at rest.
  std::optional<Vector> initial_mean;

  static std::array<std::array<Eigen::Vector2d, kFormationRobots>,
                    kFormationRobots>
  default_displacements();
};

/// Leader reference position at 1-based path index k.
Eigen::Vector2d reference_position(const FormationParams& params,
                                   std::size_t k);

struct FormationGame {
  GameSpec spec;
  ObservationModel observation;
};

FormationGame build_formation_game(const FormationParams& params = {});

struct FormationMetrics {
  // [agent][t][group]
  std::vector<std::vector<std::vector<bool>>> usage;
  std::vector<double> usage_fraction;                   // [agent]
  std::vector<std::vector<double>> group_usage_fraction;  // [agent][group]
  std::vector<std::vector<double>> covariance_norm;     // [agent][t] ‖Σ_t^i‖_F
  std::vector<double> peak_covariance_norm;             // [agent]
  std::vector<double> leader_tracking_error;  // [t], run-averaged
  double leader_tracking_cost = 0.0;          // run-averaged Σ_t ‖p¹−p_ref‖²
  // [pair][t] with pairs (1,0), (2,0), (1,2), run-averaged.
  std::vector<std::vector<double>> formation_error;
  std::vector<double> mean_cost;  // [agent], run-averaged realized cost
  std::size_t runs = 0;
};

inline constexpr std::array<std::array<std::size_t, 2>, 3> kFormationPairs{
    {{1, 0}, {2, 0}, {1, 2}}};

/// Schedule-only metrics (usage, covariance); trajectory fields stay empty
/// when `traces` is empty.
FormationMetrics compute_metrics(const std::vector<SimulationTrace>& traces,
                                 const GainSchedule& schedule,
                                 const GameSpec& spec,
                                 const FormationParams& params);

}  // namespace sparse_lqg
