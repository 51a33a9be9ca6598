#include "riskrrt/timed_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "riskrrt/format.hpp"

namespace riskrrt {

TimedTree::TimedTree(const RobotState& root_state, int max_depth, double dt, int first_id)
    : max_depth_(max_depth), dt_(dt) {
  next_id_ = first_id;
  TimedNode root;
  root.id = next_id_++;
  root.state = root_state;
  root_id_ = root.id;
  nodes_.emplace(root.id, std::move(root));
}

const TimedNode& TimedTree::node(int id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::invalid_argument("TimedTree: unknown node id");
  return it->second;
}

std::optional<int> TimedTree::add_node(int parent_id, const RobotState& state,
                                       const ControlInput& control, double step_risk) {
  const auto it = nodes_.find(parent_id);
  if (it == nodes_.end()) throw std::invalid_argument("TimedTree::add_node: unknown parent id");
  const TimedNode& parent = it->second;
  if (parent.depth + 1 > max_depth_) return std::nullopt;

  TimedNode n;
  n.id = next_id_++;
  n.state = state;
  n.depth = parent.depth + 1;
  n.parent = parent_id;
  n.control_from_parent = control;
  n.step_risk = step_risk;
  n.path_risk = 1.0 - (1.0 - parent.path_risk) * (1.0 - step_risk);
  const int id = n.id;
  nodes_.emplace(id, std::move(n));
  it->second.children.push_back(id);
  return id;
}

void TimedTree::remove_subtree(int id) {
  std::vector<int> stack{id};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const auto it = nodes_.find(cur);
    if (it == nodes_.end()) continue;
    for (int c : it->second.children) stack.push_back(c);
    if (it->second.parent) {
      auto pit = nodes_.find(*it->second.parent);
      if (pit != nodes_.end()) {
        auto& ch = pit->second.children;
        ch.erase(std::remove(ch.begin(), ch.end(), cur), ch.end());
      }
    }
    nodes_.erase(it);
  }
}

std::vector<int> TimedTree::top_down_order() const {
  std::vector<int> order;
  order.reserve(nodes_.size());
  std::vector<int> stack{root_id_};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    order.push_back(cur);
    const TimedNode& n = nodes_.at(cur);
    for (int c : n.children) stack.push_back(c);
  }
  return order;
}

void TimedTree::prune_unreachable(int executed_child_id) {
  const TimedNode& root = nodes_.at(root_id_);
  if (std::find(root.children.begin(), root.children.end(), executed_child_id) ==
      root.children.end())
    throw std::invalid_argument("TimedTree::prune_unreachable: not a child of the root");

  // keep = executed child's subtree
  std::vector<int> keep;
  std::vector<int> stack{executed_child_id};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    keep.push_back(cur);
    for (int c : nodes_.at(cur).children) stack.push_back(c);
  }

  std::map<int, TimedNode> survivors;
  for (int id : keep) survivors.emplace(id, std::move(nodes_.at(id)));
  nodes_ = std::move(survivors);

  TimedNode& new_root = nodes_.at(executed_child_id);
  new_root.parent.reset();
  new_root.control_from_parent.reset();
  root_id_ = executed_child_id;
  for (auto& [id, n] : nodes_) n.depth -= 1;

  // path risks restart from the new root
  for (int id : top_down_order()) {
    TimedNode& n = nodes_.at(id);
    n.path_risk = n.parent
                      ? 1.0 - (1.0 - nodes_.at(*n.parent).path_risk) * (1.0 - n.step_risk)
                      : n.step_risk;
  }
}

void TimedTree::refresh_risks(const WorldView& world, const PlannerParams& p) {
  std::vector<int> doomed;
  for (int id : top_down_order()) {
    TimedNode& n = nodes_.at(id);
    n.step_risk = risk_at(world, n.state.position(), n.depth);
    n.path_risk = n.parent
                      ? 1.0 - (1.0 - nodes_.at(*n.parent).path_risk) * (1.0 - n.step_risk)
                      : n.step_risk;
    if (id != root_id_ && (n.step_risk >= p.risk_cap ||
                           !brake_clear_of_predictions(world, n.state, n.depth, p)))
      doomed.push_back(id);
  }
  for (int id : doomed) {
    if (nodes_.count(id)) remove_subtree(id);
  }
}

std::optional<std::pair<int, std::vector<ControlInput>>> TimedTree::choose_best_trajectory(
    const Vec2& goal, const PlannerParams& p) const {
  (void)p;
  int best = -1;
  double best_weight = 0.0;
  for (const auto& [id, n] : nodes_) {
    if (n.depth < 1 || n.path_risk >= kTrajectoryRiskThreshold) continue;
    const double w = (1.0 - n.path_risk) / (1.0 + (n.state.position() - goal).norm());
    if (best < 0 || w > best_weight) {
      best = id;
      best_weight = w;
    }
  }
  if (best < 0) return std::nullopt;

  std::vector<ControlInput> controls;
  for (int cur = best; cur != root_id_;) {
    const TimedNode& n = nodes_.at(cur);
    controls.push_back(*n.control_from_parent);
    cur = *n.parent;
  }
  std::reverse(controls.begin(), controls.end());
  return std::make_pair(best, std::move(controls));
}

TimedTree::Nearest TimedTree::nearest(const Vec2& point) const {
  Nearest best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const auto& [id, n] : nodes_) {
    const double d = (n.state.position() - point).norm();
    if (d < best.distance) {
      best.distance = d;
      best.node_id = id;
    }
  }
  return best;
}

void TimedTree::rebase_root_time(double t0) {
  const double delta = t0 - nodes_.at(root_id_).state.t;
  for (auto& [id, n] : nodes_) n.state.t += delta;
}

std::optional<std::string> TimedTree::audit() const {
  if (nodes_.empty()) return "no nodes";
  if (!nodes_.count(root_id_)) return "root id missing";
  size_t reachable = 0;
  for (int id : top_down_order()) {
    ++reachable;
    const TimedNode& n = nodes_.at(id);
    if (n.id != id) return "node id mismatch at " + std::to_string(id);
    if (n.depth > max_depth_) return "depth cap exceeded at node " + std::to_string(id);
    if (n.step_risk < 0.0 || n.step_risk > 1.0) return "step_risk out of range at " + std::to_string(id);
    if (n.path_risk < 0.0 || n.path_risk > 1.0) return "path_risk out of range at " + std::to_string(id);
    if (n.state.theta <= -kPi || n.state.theta > kPi)
      return "theta unnormalized at node " + std::to_string(id);
    for (int c : n.children) {
      const auto cit = nodes_.find(c);
      if (cit == nodes_.end()) return "dangling child link at node " + std::to_string(id);
      if (!cit->second.parent || *cit->second.parent != id)
        return "child/parent disagreement at node " + std::to_string(c);
    }
    if (id == root_id_) {
      if (n.parent || n.control_from_parent) return "root carries parent data";
      if (n.depth != 0) return "root depth nonzero";
      if (std::abs(n.path_risk - n.step_risk) > 1e-12) return "root path_risk != step_risk";
      continue;
    }
    if (!n.parent) return "non-root without parent at node " + std::to_string(id);
    const auto pit = nodes_.find(*n.parent);
    if (pit == nodes_.end()) return "orphan node " + std::to_string(id);
    const TimedNode& parent = pit->second;
    if (n.depth != parent.depth + 1) return "depth recurrence broken at node " + std::to_string(id);
    if (std::abs(n.state.t - (parent.state.t + dt_)) > 1e-9)
      return "timestamp recurrence broken at node " + std::to_string(id);
    if (!n.control_from_parent) return "missing control at node " + std::to_string(id);
    const double expect = 1.0 - (1.0 - parent.path_risk) * (1.0 - n.step_risk);
    if (std::abs(n.path_risk - expect) > 1e-12)
      return "path_risk recurrence broken at node " + std::to_string(id);
  }
  if (reachable != nodes_.size()) return "unreachable nodes present";
  return std::nullopt;
}

std::string TimedTree::export_csv() const {
  std::string out = "id,x,y,t,depth,parent\n";
  for (const auto& [id, n] : nodes_) {
    out += std::to_string(id);
    out += ',';
    out += fmt_double(n.state.x);
    out += ',';
    out += fmt_double(n.state.y);
    out += ',';
    out += fmt_double(n.state.t);
    out += ',';
    out += std::to_string(n.depth);
    out += ',';
    out += std::to_string(n.parent ? *n.parent : -1);
    out += '\n';
  }
  return out;
}

}  // namespace riskrrt
