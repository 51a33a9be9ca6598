#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskrrt/kinematics.hpp"
#include "riskrrt/world.hpp"

namespace riskrrt {

struct TimedNode {
  int id = 0;
  RobotState state;
  int depth = 0;
  std::optional<int> parent;
  std::optional<ControlInput> control_from_parent;
  double step_risk = 0.0;  // occupancy risk of `state` at its own timestamp
  double path_risk = 0.0;  // 1 - (1 - parent.path_risk) * (1 - step_risk); root: step_risk
  std::vector<int> children;
};

/// Kinodynamic tree whose nodes are stamped states. Depth doubles as the
/// prediction-step index: state.t = root.t + depth * dt, depth <= max depth.
/// Node ids are assigned once and never reused, so id order is insertion
/// order; every deterministic tie-break below leans on that.
class TimedTree {
 public:
  /// first_id seeds the id counter; a replacement tree continues the old
  /// tree's sequence so stale references can never alias fresh nodes.
  TimedTree(const RobotState& root_state, int max_depth, double dt, int first_id = 0);

  /// Appends a child; returns its id, or nullopt when the child would exceed
  /// the depth cap. Unknown parent ids are contract violations.
  std::optional<int> add_node(int parent_id, const RobotState& state, const ControlInput& control,
                              double step_risk);

  /// Re-roots the tree at a child of the current root; everything not in that
  /// child's subtree is discarded and depths rebase by -1.
  void prune_unreachable(int executed_child_id);

  /// Recomputes every step_risk from the world view (depth indexes the
  /// prediction step), reapplies the path-risk recurrence top-down, and
  /// removes subtrees whose root exceeds the admission cap or can no longer
  /// brake to rest clear of the predicted obstacles. Root is exempt from
  /// removal.
  void refresh_risks(const WorldView& world, const PlannerParams& p);

  /// Highest-weight executable node: weight = (1 - path_risk) / (1 + |pos - goal|)
  /// over nodes with depth >= 1 and path_risk < kTrajectoryRiskThreshold,
  /// ties to the lowest id. Returns the node id and the control sequence
  /// from the root to it.
  [[nodiscard]] std::optional<std::pair<int, std::vector<ControlInput>>> choose_best_trajectory(
      const Vec2& goal, const PlannerParams& p) const;

  struct Nearest {
    double distance = 0.0;
    int node_id = -1;
  };
  /// Euclidean nearest node to a point, ties to the lowest id.
  [[nodiscard]] Nearest nearest(const Vec2& point) const;

  /// Shifts every timestamp so the root sits at t0 (standby cycles).
  void rebase_root_time(double t0);

  /// First invariant violation found, or nullopt when the tree is sound.
  [[nodiscard]] std::optional<std::string> audit() const;

  /// Snapshot rows "id,x,y,t,depth,parent" in id order; parent -1 at the root.
  [[nodiscard]] std::string export_csv() const;

  [[nodiscard]] const std::map<int, TimedNode>& nodes() const { return nodes_; }
  [[nodiscard]] const TimedNode& node(int id) const;
  [[nodiscard]] bool has_node(int id) const { return nodes_.count(id) > 0; }
  [[nodiscard]] int next_id() const { return next_id_; }
  [[nodiscard]] int root_id() const { return root_id_; }
  [[nodiscard]] const TimedNode& root() const { return node(root_id_); }
  [[nodiscard]] size_t size() const { return nodes_.size(); }
  [[nodiscard]] int max_depth() const { return max_depth_; }
  [[nodiscard]] double dt() const { return dt_; }

 private:
  friend struct TimedTreeTestAccess;

  void remove_subtree(int id);
  [[nodiscard]] std::vector<int> top_down_order() const;

  std::map<int, TimedNode> nodes_;
  int root_id_ = 0;
  int next_id_ = 0;
  int max_depth_ = 0;
  double dt_ = 0.0;
};

}  // namespace riskrrt
