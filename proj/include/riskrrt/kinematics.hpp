#pragma once

#include <string>

#include "riskrrt/types.hpp"

namespace riskrrt {

/// Unicycle state stamped with the simulated time it is reached.
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // heading, normalized to (-pi, pi]
  double v = 0.0;      // linear velocity, m/s
  double omega = 0.0;  // angular velocity, rad/s
  double t = 0.0;      // timestamp, s

  [[nodiscard]] Vec2 position() const { return {x, y}; }
  [[nodiscard]] Vec2 heading() const { return {std::cos(theta), std::sin(theta)}; }
};

struct ControlInput {
  double v_cmd = 0.0;
  double omega_cmd = 0.0;
};

/// Velocity box reachable from a state within one step under accel limits.
struct ReachableWindow {
  double v_min = 0.0;
  double v_max = 0.0;
  double omega_min = 0.0;
  double omega_max = 0.0;
};

struct PlannerParams {
  double v_max = 1.0;
  double a_max = 0.5;
  double omega_max = 0.5;
  double alpha_max = 0.5;
  double dt = 0.5;          // step period = cycle period
  int N = 10;               // horizon depth cap
  int delta_nv = 4;         // control lattice subdivisions, linear
  int delta_nw = 4;         // control lattice subdivisions, angular
  double w1 = 1.0;          // cost weight, position term
  double w2 = 0.35;         // cost weight, heading term
  double beta = 2.0;        // risk weight in node selection
  double lambda = 3.0;      // proximity threshold, m
  double meet_radius = 1.5; // meet threshold, m
  double h_r = 0.7;         // heuristic sampling rate
  double sigma_kappa = 0.0; // gaussian component sigma, m; <= 0 means 0.02 x map width
  double goal_radius = 1.0;
  int iterations_per_cycle = 200;
  double risk_cap = 0.8;    // admission threshold on step risk
  bool retain_goal_tree = false;
  int heuristic_burst_per_node = 1;  // heuristic samples drawn per path node on meet

  /// Returns an error description, or empty when the params satisfy their invariants.
  [[nodiscard]] std::string validate() const;
};

/// Risk threshold applied when selecting an executable trajectory.
inline constexpr double kTrajectoryRiskThreshold = 0.5;

/// Exact unicycle step: straight segment or circular arc of radius v/omega.
/// Pose advances under constant (v_cmd, omega_cmd); velocities jump to the
/// command (pre-vetted by reachable_control_window); t advances by dt.
[[nodiscard]] RobotState step_kinematics(const RobotState& s, const ControlInput& u, double dt);

/// One-step velocity window under accel limits, intersected with
/// [0, v_max] x [-omega_max, omega_max]. Reverse motion is excluded.
[[nodiscard]] ReachableWindow reachable_control_window(const RobotState& s, const PlannerParams& p);

/// Standby control while moving: decelerate toward rest within the
/// acceleration limits, never through zero, steering decaying toward straight.
[[nodiscard]] ControlInput brake_control(const RobotState& s, const PlannerParams& p);

/// Steering cost of moving from x1 toward point x2 given the goal:
///   w1 * |x1 - x2| / |x1 - goal| + w2 * acos(heading(x1) . unit(x2 - x1))
/// Degenerate cases: x1 == x2 -> heading term 0; x1 == goal -> position term 0.
[[nodiscard]] double state_cost(const RobotState& x1, const Vec2& x2, const Vec2& goal,
                                const PlannerParams& p);

}  // namespace riskrrt
