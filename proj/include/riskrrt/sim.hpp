#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskrrt/planners.hpp"
#include "riskrrt/world.hpp"

namespace riskrrt {

/// Invalid scenario input (bad file, bad value, infeasible start/goal).
/// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A fully loaded benchmark episode description. The grid and crowd live
/// here; planner instances keep pointers into it, so the scenario must
/// outlive every episode run against it.
struct Scenario {
  std::string name;
  OccupancyGrid grid;
  std::vector<MovingObstacle> crowd;  // scripted ground truth, possibly empty
  RobotState start;
  Vec2 goal{0.0, 0.0};
  double robot_radius = 0.3;
  double crowd_radius = 0.3;
  double max_sim_time = 600.0;  // simulated seconds before a timeout failure
  std::uint64_t seed = 1;       // base seed; episode i runs at seed + i
  PlannerParams params;
};

/// Key-value scenario text:
///   grid <relative-path>        required
///   start <x> <y> <theta>       required
///   goal <x> <y>                required
///   crowd <relative-path>       optional crowd CSV
///   robot_radius / crowd_radius / max_sim_time / seed <value>
///   param.<name> <value>        any PlannerParams field
/// '#' starts a comment; later keys win. Relative paths resolve against the
/// scenario file's directory.
[[nodiscard]] Scenario load_scenario(const std::string& path);

/// Sets one PlannerParams field by name ("dt", "N", "w1", ...).
/// Throws ConfigError on an unknown name or an unparsable value.
void apply_param_override(PlannerParams& p, const std::string& key, const std::string& value);

/// Crowd CSV: header "id,t,x,y", then one sample per row; per id the
/// timestamps must be strictly increasing. Every obstacle gets `radius`.
[[nodiscard]] std::vector<MovingObstacle> load_crowd(const std::string& path, double radius);

/// Scripted ground-truth position: linear interpolation between samples,
/// clamped before the first and after the last. Empty trajectory throws.
[[nodiscard]] Vec2 crowd_position(const MovingObstacle& obstacle, double t);

/// Contact test at time t: the static footprint rule (occupancy >= 0.5
/// within the robot radius) or disc overlap with any scripted obstacle.
[[nodiscard]] bool check_collision(const OccupancyGrid& grid,
                                   std::span<const MovingObstacle> crowd, const Vec2& robot_pos,
                                   double robot_radius, double t);

/// Two-sample observation history (t - dt and t) the planner receives each
/// cycle; the simulated sensor sees every obstacle exactly.
[[nodiscard]] std::vector<MovingObstacle> observe_crowd(std::span<const MovingObstacle> crowd,
                                                        double t, double dt);

struct CycleRecord {
  int cycle = 0;
  double t = 0.0;  // time at plan start
  double x = 0.0, y = 0.0, theta = 0.0, v = 0.0, omega = 0.0;
  int tree_size = 0;
  int subtree_count = 0;
  int nodes_added = 0;
  int forest_nodes_added = 0;
  int meets_processed = 0;
  bool executed = false;  // false on a standby hold
};

struct EpisodeResult {
  bool success = false;
  bool collision = false;
  double sim_time = 0.0;     // simulated seconds when the episode ended
  double path_length = 0.0;  // arc length actually driven
  std::vector<CycleRecord> cycles;
  double wall_seconds = 0.0;  // diagnostic only; never serialized

  /// Byte-deterministic serialization: a summary row, then per-cycle rows.
  /// Identical seeds and inputs must produce identical bytes.
  [[nodiscard]] std::string to_csv() const;
};

/// Everything a per-cycle observer may inspect, valid only during the call.
/// Fires after planning and before execution, so the tree still holds the
/// chosen trajectory.
struct CycleView {
  int cycle = 0;
  double t = 0.0;
  const RobotState* state = nullptr;  // robot at plan time
  const PlannerInstance* planner = nullptr;
  const std::vector<MovingObstacle>* crowd = nullptr;
  const PlanCycleResult* result = nullptr;
};
using CycleObserver = std::function<void(const CycleView&)>;

/// Closed-loop episode: plan one cycle, execute the first control of the
/// chosen trajectory (or stand by: hold when at rest, brake when moving),
/// repeat until the goal region is entered (success), a collision occurs, or
/// max_sim_time elapses. Success is judged at cycle boundaries; collisions
/// are audited at dt/5 sub-steps of every executed motion and hold.
[[nodiscard]] EpisodeResult run_episode(const Scenario& scenario, PlannerKind kind,
                                        std::uint64_t seed, const CycleObserver& observer = {});

}  // namespace riskrrt
