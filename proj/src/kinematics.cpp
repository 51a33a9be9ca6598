#include "riskrrt/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace riskrrt {

std::string PlannerParams::validate() const {
  if (v_max <= 0.0) return "v_max must be positive";
  if (a_max <= 0.0) return "a_max must be positive";
  if (omega_max <= 0.0) return "omega_max must be positive";
  if (alpha_max <= 0.0) return "alpha_max must be positive";
  if (dt <= 0.0) return "dt must be positive";
  if (N < 1) return "N must be >= 1";
  if (delta_nv < 1) return "delta_nv must be >= 1";
  if (delta_nw < 1) return "delta_nw must be >= 1";
  if (w1 < 0.0 || w2 < 0.0) return "cost weights must be non-negative";
  if (beta < 0.0) return "beta must be non-negative";
  if (lambda <= 0.0) return "lambda must be positive";
  if (meet_radius <= 0.0) return "meet_radius must be positive";
  if (h_r < 0.0 || h_r > 1.0) return "h_r must lie in [0, 1]";
  if (goal_radius <= 0.0) return "goal_radius must be positive";
  if (iterations_per_cycle < 1) return "iterations_per_cycle must be >= 1";
  if (risk_cap <= 0.0 || risk_cap > 1.0) return "risk_cap must lie in (0, 1]";
  if (heuristic_burst_per_node < 1) return "heuristic_burst_per_node must be >= 1";
  return {};
}

RobotState step_kinematics(const RobotState& s, const ControlInput& u, double dt) {
  RobotState out = s;
  const double v = u.v_cmd;
  const double w = u.omega_cmd;
  if (std::abs(w) < 1e-9) {
    out.x = s.x + v * dt * std::cos(s.theta);
    out.y = s.y + v * dt * std::sin(s.theta);
    // theta unchanged
  } else {
    const double r = v / w;
    out.x = s.x + r * (std::sin(s.theta + w * dt) - std::sin(s.theta));
    out.y = s.y + r * (std::cos(s.theta) - std::cos(s.theta + w * dt));
    out.theta = normalize_angle(s.theta + w * dt);
  }
  out.v = v;
  out.omega = w;
  out.t = s.t + dt;
  return out;
}

ReachableWindow reachable_control_window(const RobotState& s, const PlannerParams& p) {
  ReachableWindow w;
  w.v_min = std::clamp(s.v - p.a_max * p.dt, 0.0, p.v_max);
  w.v_max = std::clamp(s.v + p.a_max * p.dt, 0.0, p.v_max);
  w.omega_min = std::clamp(s.omega - p.alpha_max * p.dt, -p.omega_max, p.omega_max);
  w.omega_max = std::clamp(s.omega + p.alpha_max * p.dt, -p.omega_max, p.omega_max);
  return w;
}

ControlInput brake_control(const RobotState& s, const PlannerParams& p) {
  ControlInput u;
  u.v_cmd = std::max(0.0, s.v - p.a_max * p.dt);
  const double dw = p.alpha_max * p.dt;
  u.omega_cmd = std::abs(s.omega) <= dw ? 0.0 : s.omega - (s.omega > 0 ? dw : -dw);
  return u;
}

double state_cost(const RobotState& x1, const Vec2& x2, const Vec2& goal,
                  const PlannerParams& p) {
  const Vec2 pos = x1.position();
  const double d_sample = (x2 - pos).norm();
  const double d_goal = (goal - pos).norm();

  double position_term = 0.0;
  if (d_goal > 0.0) position_term = p.w1 * d_sample / d_goal;

  double heading_term = 0.0;
  if (d_sample > 0.0) {
    const double c = x1.heading().dot((x2 - pos) / d_sample);
    heading_term = p.w2 * std::acos(std::clamp(c, -1.0, 1.0));
  }
  return position_term + heading_term;
}

}  // namespace riskrrt
