#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskrrt/kinematics.hpp"
#include "riskrrt/random.hpp"
#include "riskrrt/types.hpp"

namespace riskrrt {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Row-major occupancy grid. Row 0 is the TOP of the map; world y grows
/// upward, so cell (col, row) has center ((col+0.5)*res, (height-row-0.5)*res).
struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double resolution = 0.0;  // meters per cell
  std::vector<double> cells;  // occupancy in [0, 1], row-major from top row

  [[nodiscard]] double width_m() const { return width * resolution; }
  [[nodiscard]] double height_m() const { return height * resolution; }
  [[nodiscard]] double at(int col, int row) const { return cells[static_cast<size_t>(row) * width + col]; }
  [[nodiscard]] Vec2 cell_center(int col, int row) const {
    return {(col + 0.5) * resolution, (height - row - 0.5) * resolution};
  }
  [[nodiscard]] MapBounds bounds() const { return {{0.0, 0.0}, {width_m(), height_m()}}; }

  /// Occupancy of the cell containing p; 1.0 outside the map.
  [[nodiscard]] double occupancy_at(const Vec2& p) const;
};

struct TrajectorySample {
  double t = 0.0;
  Vec2 position{0.0, 0.0};
};

/// Disc obstacle following recorded (or scripted) waypoints.
struct MovingObstacle {
  int id = 0;
  double radius = 0.3;
  std::vector<TrajectorySample> trajectory;  // timestamps strictly increasing
};

struct PredictionStep {
  double t = 0.0;
  Vec2 mean{0.0, 0.0};
  double sigma = 0.0;  // positive, non-decreasing across a horizon
};

struct ObstaclePrediction {
  int obstacle_id = 0;
  double radius = 0.3;
  std::vector<PredictionStep> steps;  // N+1 steps, t0 .. t0 + N*dt
};

/// Everything the planner may see of the environment in one cycle.
struct WorldView {
  const OccupancyGrid* grid = nullptr;
  std::vector<ObstaclePrediction> predictions;
  double robot_radius = 0.3;
};

/// Prediction uncertainty model: sigma(k) = kPredictionSigma0 + kPredictionSigmaGrowth * k.
inline constexpr double kPredictionSigma0 = 0.3;
inline constexpr double kPredictionSigmaGrowth = 0.15;

/// Parses the grid text format:
///   line 1: "<width> <height> <resolution_m>"
///   then height rows of width characters, '#' occupied, '.' free, row 0 on top.
/// Malformed headers, wrong dimensions, and stray characters raise ParseError
/// naming the offending line.
[[nodiscard]] OccupancyGrid load_grid(const std::string& text);
[[nodiscard]] OccupancyGrid load_grid_file(const std::string& path);

/// Max occupancy over cells whose centers lie within robot_radius of position.
/// Positions outside the map rate 1.0.
[[nodiscard]] double static_risk(const OccupancyGrid& grid, const Vec2& position,
                                 double robot_radius);

/// True when every sample point spaced <= resolution/2 along [a, b] has
/// static_risk below 0.5. Endpoints included; a == b degenerates to one sample.
[[nodiscard]] bool segment_free(const OccupancyGrid& grid, const Vec2& a, const Vec2& b,
                                double robot_radius);

/// Constant-velocity extrapolation from the two most recent samples at or
/// before t0 (one sample: zero velocity). Obstacles with no sample at or
/// before t0 are excluded. Produces steps k = 0..N at t0 + k*dt.
[[nodiscard]] std::vector<ObstaclePrediction> predict_obstacles(
    std::span<const MovingObstacle> obstacles, double t0, const PlannerParams& p);

/// Collision likelihood against one predicted obstacle position:
/// 1.0 inside the contact radius R_c = robot_radius + obstacle_radius,
/// exp(-(d - R_c)^2 / (2 sigma^2)) outside.
[[nodiscard]] double dynamic_risk_single(const PredictionStep& step, const Vec2& position,
                                         double robot_radius, double obstacle_radius);

/// P_r = P_rs + (1 - P_rs) * (1 - prod(1 - P_rd_i)). Inputs outside [0, 1]
/// raise std::invalid_argument.
[[nodiscard]] double combined_risk(double p_rs, std::span<const double> p_rd);

/// Combined risk of standing at `position` at prediction step index k.
[[nodiscard]] double risk_at(const WorldView& world, const Vec2& position, int step_index);

/// Combined risk from the predicted obstacles alone (static occupancy
/// excluded). Step indices past the prediction horizon clamp to the last
/// step, so the tail of a long motion is audited against the horizon edge.
[[nodiscard]] double dynamic_risk_at(const WorldView& world, const Vec2& position, int step_index);

/// True when braking to rest from `state` keeps every swept sample below
/// risk_cap in dynamic-only risk, replicating the executor's brake (same
/// controls, dt/5 cadence). `step_index` is the prediction step of `state`;
/// brake cycle j audits against step_index + j + 1. Trivially true without
/// predictions, so static worlds never pay for it. Together with the static
/// envelope in the extension gate this keeps every tree state recoverable: a
/// robot that loses its trajectory can always stop without being run down.
[[nodiscard]] bool brake_clear_of_predictions(const WorldView& world, const RobotState& state,
                                              int step_index, const PlannerParams& p);

/// Uniform sample over the map redrawn until it lands on a free cell.
/// Requires at least one free cell; gives up (throws) after 1e6 attempts.
[[nodiscard]] Vec2 sample_free_point(const OccupancyGrid& grid, Rng& rng);

}  // namespace riskrrt
