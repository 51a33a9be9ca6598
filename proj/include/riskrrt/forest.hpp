#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "riskrrt/random.hpp"
#include "riskrrt/timed_tree.hpp"
#include "riskrrt/types.hpp"
#include "riskrrt/world.hpp"

namespace riskrrt {

/// Kinematics-free heuristic node: position only.
struct SubTreeNode {
  int id = 0;
  Vec2 position{0.0, 0.0};
  std::optional<int> parent;  // within the same sub-tree
};

/// One disconnected heuristic tree. Node storage preserves insertion order;
/// merges append the absorbed tree's nodes in their own insertion order.
class SubTree {
 public:
  SubTree(int id, std::optional<int> goal_node) : id_(id), goal_node_(goal_node) {}

  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] bool contains_goal() const { return goal_node_.has_value(); }
  [[nodiscard]] std::optional<int> goal_node() const { return goal_node_; }
  [[nodiscard]] int root_id() const { return root_id_; }
  [[nodiscard]] const std::vector<SubTreeNode>& nodes() const { return nodes_; }
  [[nodiscard]] const SubTreeNode& node(int node_id) const;
  [[nodiscard]] bool has_node(int node_id) const { return index_.count(node_id) > 0; }

  /// Unique tree path between two member nodes, as node ids.
  [[nodiscard]] std::vector<int> path_between(int from, int to) const;

 private:
  friend class SubTreeForest;

  SubTreeNode& mutable_node(int node_id);

  int id_ = 0;
  int root_id_ = -1;
  std::optional<int> goal_node_;
  std::vector<SubTreeNode> nodes_;
  std::unordered_map<int, size_t> index_;  // node id -> position in nodes_
};

/// Gaussian mixture over heuristic path nodes, mixed with a uniform
/// component over the map at rate 1 - h_r.
struct HeuristicComponent {
  Vec2 mean{0.0, 0.0};
  double sigma = 0.0;
};

struct HeuristicDistribution {
  std::vector<HeuristicComponent> components;
  double h_r = 0.7;
  MapBounds bounds;
};

/// Pending rendezvous between the rooted tree and the forest, or between two
/// sub-trees. Total order (processing priority): rooted pairs first, then
/// distance, then (tree id, node id) lexicographically.
struct MeetEvent {
  enum class Kind { rooted_subtree, subtree_subtree };
  Kind kind = Kind::rooted_subtree;
  int rooted_node = -1;  // rooted_subtree only
  int subtree_a = -1;    // subtree_subtree only; subtree_a < subtree_b
  int node_a = -1;
  int subtree_b = -1;    // forest side of a rooted pair lives here
  int node_b = -1;
  double distance = 0.0;

  [[nodiscard]] bool higher_priority_than(const MeetEvent& o) const;
};

/// Disconnected heuristic sub-trees. Sub-tree ids and node ids are each
/// assigned from forest-wide counters and never reused; node ids stay stable
/// across merges so meet bookkeeping can reference them.
class SubTreeForest {
 public:
  /// New single-node sub-tree at a free-space point (caller guarantees
  /// freeness). `goal` marks the goal tree; at most one may ever carry it.
  int create_subtree(const Vec2& point, bool goal);

  /// Links x_rand under the nearest node of one sub-tree iff the straight
  /// segment is free; returns the new node id or nullopt.
  std::optional<int> grow_subtree(int subtree_id, const Vec2& x_rand, const OccupancyGrid& grid,
                                  double robot_radius);

  struct Nearest {
    double distance = 0.0;
    int subtree_id = -1;
    int node_id = -1;
  };
  /// Nearest node over the whole forest, ties to lowest (subtree id, node id).
  /// Empty forest is a contract violation.
  [[nodiscard]] Nearest nearest(const Vec2& point) const;

  /// Absorbs `absorb_id` into `keep_id`: the absorbed tree is re-rooted at its
  /// contact node and linked under the keeper's contact node. Node count is
  /// conserved; contains_goal ORs.
  void merge_subtrees(int keep_id, int absorb_id, int contact_keep_node, int contact_absorb_node);

  /// Heuristic path for a consumed sub-tree: goal trees are pruned to the
  /// unique path goal node -> contact node; plain trees contribute all their
  /// nodes in insertion order (the whole explored patch is the information).
  [[nodiscard]] std::vector<Vec2> extract_heuristic_path(int subtree_id, int contact_node_id) const;

  /// Removes a sub-tree after its heuristic was used. A goal tree survives
  /// when retain_goal_tree is set (ablation mode).
  void consume(int subtree_id, bool retain_goal_tree);

  [[nodiscard]] const std::map<int, SubTree>& trees() const { return trees_; }
  [[nodiscard]] const SubTree& tree(int id) const;
  [[nodiscard]] bool has_tree(int id) const { return trees_.count(id) > 0; }
  [[nodiscard]] size_t tree_count() const { return trees_.size(); }
  [[nodiscard]] size_t total_nodes() const { return owner_.size(); }
  [[nodiscard]] std::optional<int> owner_of(int node_id) const;
  [[nodiscard]] const SubTreeNode* find_node(int node_id) const;

  /// First invariant violation across all sub-trees, or nullopt.
  [[nodiscard]] std::optional<std::string> audit() const;

  /// Snapshot rows "id,x,y,parent,subtree", subtree id order then insertion order.
  [[nodiscard]] std::string export_csv() const;

 private:
  friend struct SubTreeForestTestAccess;

  std::map<int, SubTree> trees_;
  std::unordered_map<int, int> owner_;  // node id -> subtree id
  int next_tree_id_ = 0;
  int next_node_id_ = 0;
};

/// Pairs already handed to the planner; excluded from future meets so a
/// retained goal tree cannot replay the same event.
using MeetExclusions = std::set<std::pair<int, int>>;  // (rooted node, forest node)

/// Exhaustive meet query: closest qualifying pair with separation
/// <= meet_radius and a free straight segment between the contact nodes.
/// Rooted-subtree pairs outrank subtree-subtree pairs.
[[nodiscard]] std::optional<MeetEvent> find_meet(const TimedTree& rooted,
                                                 const SubTreeForest& forest,
                                                 const PlannerParams& p, const OccupancyGrid& grid,
                                                 double robot_radius,
                                                 const MeetExclusions* exclusions = nullptr);

/// Mixture with one component per path point, all at sigma.
[[nodiscard]] HeuristicDistribution make_heuristic(const std::vector<Vec2>& path, double sigma,
                                                   double h_r, const MapBounds& bounds);

/// Draws from the mixture: probability h_r picks a component uniformly and
/// draws a gaussian (redrawn while out of bounds, 100 attempts, then clamped);
/// otherwise draws uniformly over the bounds. h_r == 0 consumes the random
/// stream exactly like uniform_point. `gaussian_branch` reports the branch
/// taken when non-null.
[[nodiscard]] Vec2 heuristic_sample(const HeuristicDistribution& dist, Rng& rng,
                                    bool* gaussian_branch = nullptr);

}  // namespace riskrrt
