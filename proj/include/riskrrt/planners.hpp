#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskrrt/forest.hpp"
#include "riskrrt/timed_tree.hpp"
#include "riskrrt/world.hpp"

namespace riskrrt {

enum class PlannerKind { risk_rrt, bi_risk_rrt, multi_risk_rrt };

/// Accepts both the short CLI tokens (risk, bi, multi) and the full names.
[[nodiscard]] std::optional<PlannerKind> planner_kind_from_string(const std::string& s);
[[nodiscard]] const char* to_string(PlannerKind k);

enum class GrowOutcome { reached, extended, rejected };

struct CycleStats {
  int iterations = 0;
  int nodes_added = 0;         // rooted nodes admitted
  int forest_nodes_added = 0;  // sub-tree nodes admitted
  int meets_processed = 0;
  int tree_size = 0;           // rooted node count at cycle end
  int subtree_count = 0;       // forest tree count at cycle end
  bool reached = false;        // some rooted node entered the goal region
  bool has_trajectory = false;
};

struct PlanCycleResult {
  /// Chosen node and the control chain from the root to it; empty on standby.
  std::optional<std::pair<int, std::vector<ControlInput>>> trajectory;
  CycleStats stats;
  double wall_seconds = 0.0;  // diagnostic only; never serialized
};

/// One tree-extension attempt (Algorithm 2 shape):
///   x_best = argmax over nodes of 1 / (state_cost(node, x_rand, goal) + beta * path_risk),
///            ties to the lowest node id;
///   candidate controls = inclusive (delta_nv+1) x (delta_nw+1) lattice over the
///            reachable window, each integrated for dt;
///   x_new  = argmin candidate state_cost to x_rand, ties to the lowest
///            (v index, omega index) pair;
///   admitted iff depth <= N, combined step risk < risk_cap, the swept arc is
///            statically free and below risk_cap in dynamic-only risk at dt/5
///            cadence, and braking to rest from the candidate stays wall-free
///            and clear of the predictions. Returns the new node id or nullopt.
std::optional<int> extend(TimedTree& rooted, const Vec2& x_rand, const WorldView& world,
                          const PlannerParams& p, const Vec2& goal);

/// Receding-horizon planner holding the rooted tree, the heuristic forest,
/// the active sampling heuristic, and the episode RNG. One instance per
/// episode; all randomness flows through the seeded engine, so identical
/// seeds replay identical episodes.
class PlannerInstance {
 public:
  /// sigma_kappa <= 0 in `params` resolves to 0.02 x map width. The grid
  /// reference must outlive the instance.
  PlannerInstance(PlannerKind kind, const PlannerParams& params, const RobotState& start,
                  const Vec2& goal, std::uint64_t seed, const OccupancyGrid& grid,
                  double robot_radius);

  /// One receding-horizon cycle: refresh predictions from the observations,
  /// refresh tree risks, run exactly iterations_per_cycle grow calls, then
  /// pick the best executable trajectory. `current` must equal the root state.
  PlanCycleResult plan_cycle(std::span<const MovingObstacle> observations,
                             const RobotState& current, double t_now);

  /// Single growth iteration against a prepared world view (exposed for
  /// tests; plan_cycle drives it).
  GrowOutcome grow(const WorldView& world, CycleStats& stats);

  /// The robot executed the first control of the chosen trajectory: that
  /// child becomes the new root.
  void commit_execution(int executed_child_id);

  /// Standby at rest: pose unchanged, tree kept, timestamps rebased to t0.
  void standby_hold(double t0);

  /// Standby while braking: the executed brake edge is not a tree edge, so
  /// the rooted tree restarts at the post-brake state (ids continue).
  void reset_tree(const RobotState& new_root);

  /// The meet event the next grow call would process (validated against the
  /// current structures), mirroring find_meet's total order. Test hook for
  /// the incremental-vs-exhaustive equivalence property.
  [[nodiscard]] std::optional<MeetEvent> peek_pending_meet() const;

  [[nodiscard]] PlannerKind kind() const { return kind_; }
  [[nodiscard]] const PlannerParams& params() const { return params_; }
  [[nodiscard]] const TimedTree& rooted() const { return rooted_; }
  [[nodiscard]] const SubTreeForest& forest() const { return forest_; }
  [[nodiscard]] const Vec2& goal() const { return goal_; }
  [[nodiscard]] const std::optional<HeuristicDistribution>& active_heuristic() const {
    return heuristic_;
  }
  [[nodiscard]] double robot_radius() const { return robot_radius_; }
  [[nodiscard]] const MeetExclusions& processed_meets() const { return processed_; }

 private:
  GrowOutcome grow_uniform(const WorldView& world, CycleStats& stats);
  GrowOutcome grow_bi(const WorldView& world, CycleStats& stats);
  GrowOutcome grow_multi(const WorldView& world, CycleStats& stats);
  GrowOutcome process_meet(const MeetEvent& e, const WorldView& world, CycleStats& stats);

  /// Candidate discovery at insertion time; qualification is immutable, so
  /// membership is re-validated lazily when candidates are popped.
  void on_rooted_insert(int node_id);
  void on_forest_insert(int subtree_id, int node_id);
  [[nodiscard]] bool candidate_valid(MeetEvent& e) const;  // updates owner ids in place
  std::optional<MeetEvent> pop_pending_meet();

  [[nodiscard]] bool in_goal(const Vec2& p) const {
    return (p - goal_).norm() < params_.goal_radius;
  }
  std::optional<int> try_extend(const Vec2& x_rand, const WorldView& world, CycleStats& stats,
                                bool* reached);

  PlannerKind kind_;
  PlannerParams params_;
  Vec2 goal_;
  const OccupancyGrid* grid_;
  double robot_radius_;
  MapBounds bounds_;
  Rng rng_;
  TimedTree rooted_;
  SubTreeForest forest_;
  std::optional<HeuristicDistribution> heuristic_;
  std::vector<MeetEvent> candidates_;
  MeetExclusions processed_;
  bool bi_met_ = false;
  int goal_tree_id_ = -1;  // bi/multi: forest id of the goal tree at creation
};

}  // namespace riskrrt
