#include "riskrrt/planners.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace riskrrt {

std::optional<PlannerKind> planner_kind_from_string(const std::string& s) {
  if (s == "risk" || s == "risk_rrt") return PlannerKind::risk_rrt;
  if (s == "bi" || s == "bi_risk_rrt") return PlannerKind::bi_risk_rrt;
  if (s == "multi" || s == "multi_risk_rrt") return PlannerKind::multi_risk_rrt;
  return std::nullopt;
}

const char* to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::risk_rrt: return "risk_rrt";
    case PlannerKind::bi_risk_rrt: return "bi_risk_rrt";
    case PlannerKind::multi_risk_rrt: return "multi_risk_rrt";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// extend

std::optional<int> extend(TimedTree& rooted, const Vec2& x_rand, const WorldView& world,
                          const PlannerParams& p, const Vec2& goal) {
  // node selection: maximize 1 / (cost + beta * path_risk); strict > keeps
  // the lowest id on ties because ids iterate in ascending order
  int best_id = -1;
  double best_w = -std::numeric_limits<double>::infinity();
  for (const auto& [id, n] : rooted.nodes()) {
    const double c = state_cost(n.state, x_rand, goal, p);
    const double w = 1.0 / (c + p.beta * n.path_risk);
    if (w > best_w) {
      best_w = w;
      best_id = id;
    }
  }
  const TimedNode& best = rooted.node(best_id);
  if (best.depth + 1 > rooted.max_depth()) return std::nullopt;

  // control selection: minimize candidate cost toward x_rand over the
  // inclusive lattice; strict < keeps the lowest (i, j) on ties
  const ReachableWindow win = reachable_control_window(best.state, p);
  double best_c = std::numeric_limits<double>::infinity();
  RobotState new_state;
  ControlInput new_control;
  bool found = false;
  for (int i = 0; i <= p.delta_nv; ++i) {
    const double v = win.v_min + (win.v_max - win.v_min) * i / p.delta_nv;
    for (int j = 0; j <= p.delta_nw; ++j) {
      const double w = win.omega_min + (win.omega_max - win.omega_min) * j / p.delta_nw;
      const RobotState cand = step_kinematics(best.state, {v, w}, p.dt);
      const double c = state_cost(cand, x_rand, goal, p);
      if (c < best_c) {
        best_c = c;
        new_state = cand;
        new_control = {v, w};
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;

  const double risk = risk_at(world, new_state.position(), best.depth + 1);
  if (risk >= p.risk_cap) return std::nullopt;
  // the executed motion is the whole arc, not just its endpoint: audit the
  // same dt/5 compositions the simulator audits, so admitted edges can never
  // clip a wall corner between nodes
  RobotState sub = best.state;
  for (int k = 0; k < 5; ++k) {
    sub = step_kinematics(sub, new_control, p.dt / 5.0);
    if (static_risk(*world.grid, sub.position(), world.robot_radius) >= 0.5)
      return std::nullopt;
    if (dynamic_risk_at(world, sub.position(), best.depth + 1) >= p.risk_cap)
      return std::nullopt;
  }
  // stopping envelope: a node is admissible only if braking to rest from it
  // stays wall-free, replicating the executor's brake (same controls and
  // sub-step cadence). Keeps every tree state recoverable, so losing the
  // trajectory mid-motion never strands the robot against a wall.
  RobotState stop = new_state;
  while (stop.v > 0.0) {
    const ControlInput u_brake = brake_control(stop, p);
    sub = stop;
    for (int k = 0; k < 5; ++k) {
      sub = step_kinematics(sub, u_brake, p.dt / 5.0);
      if (static_risk(*world.grid, sub.position(), world.robot_radius) >= 0.5)
        return std::nullopt;
    }
    stop = step_kinematics(stop, u_brake, p.dt);
  }
  // the same envelope against the moving obstacles: committing to a state
  // from which no brake dodges the predicted crossings is how a receding
  // horizon walks into a pedestrian one safe-looking step at a time
  if (!brake_clear_of_predictions(world, new_state, best.depth + 1, p)) return std::nullopt;
  return rooted.add_node(best_id, new_state, new_control, risk);
}

// ---------------------------------------------------------------------------
// PlannerInstance

PlannerInstance::PlannerInstance(PlannerKind kind, const PlannerParams& params,
                                 const RobotState& start, const Vec2& goal, std::uint64_t seed,
                                 const OccupancyGrid& grid, double robot_radius)
    : kind_(kind),
      params_(params),
      goal_(goal),
      grid_(&grid),
      robot_radius_(robot_radius),
      bounds_(grid.bounds()),
      rng_(seed),
      rooted_(start, params.N, params.dt) {
  if (params_.sigma_kappa <= 0.0) params_.sigma_kappa = 0.02 * grid.width_m();
  const std::string err = params_.validate();
  if (!err.empty()) throw std::invalid_argument("PlannerParams: " + err);

  if (kind_ != PlannerKind::risk_rrt) {
    goal_tree_id_ = forest_.create_subtree(goal_, true);
    on_forest_insert(goal_tree_id_, forest_.tree(goal_tree_id_).root_id());
  }
}

void PlannerInstance::on_rooted_insert(int node_id) {
  if (forest_.tree_count() == 0) return;
  const Vec2 pos = rooted_.node(node_id).state.position();
  const double r = params_.meet_radius;
  for (const auto& [tid, t] : forest_.trees()) {
    for (const SubTreeNode& fn : t.nodes()) {
      if (std::abs(fn.position.x() - pos.x()) > r || std::abs(fn.position.y() - pos.y()) > r)
        continue;
      const double d = (fn.position - pos).norm();
      if (d > r) continue;
      if (!segment_free(*grid_, pos, fn.position, robot_radius_)) continue;
      MeetEvent e;
      e.kind = MeetEvent::Kind::rooted_subtree;
      e.rooted_node = node_id;
      e.subtree_b = tid;
      e.node_b = fn.id;
      e.distance = d;
      candidates_.push_back(e);
    }
  }
}

void PlannerInstance::on_forest_insert(int subtree_id, int node_id) {
  const Vec2 pos = forest_.tree(subtree_id).node(node_id).position;
  const double r = params_.meet_radius;
  for (const auto& [rid, rn] : rooted_.nodes()) {
    const Vec2 rp = rn.state.position();
    if (std::abs(rp.x() - pos.x()) > r || std::abs(rp.y() - pos.y()) > r) continue;
    const double d = (rp - pos).norm();
    if (d > r) continue;
    if (!segment_free(*grid_, rp, pos, robot_radius_)) continue;
    MeetEvent e;
    e.kind = MeetEvent::Kind::rooted_subtree;
    e.rooted_node = rid;
    e.subtree_b = subtree_id;
    e.node_b = node_id;
    e.distance = d;
    candidates_.push_back(e);
  }
  for (const auto& [tid, t] : forest_.trees()) {
    if (tid == subtree_id) continue;
    for (const SubTreeNode& fn : t.nodes()) {
      if (std::abs(fn.position.x() - pos.x()) > r || std::abs(fn.position.y() - pos.y()) > r)
        continue;
      const double d = (fn.position - pos).norm();
      if (d > r) continue;
      if (!segment_free(*grid_, pos, fn.position, robot_radius_)) continue;
      MeetEvent e;
      e.kind = MeetEvent::Kind::subtree_subtree;
      if (tid < subtree_id) {
        e.subtree_a = tid;
        e.node_a = fn.id;
        e.subtree_b = subtree_id;
        e.node_b = node_id;
      } else {
        e.subtree_a = subtree_id;
        e.node_a = node_id;
        e.subtree_b = tid;
        e.node_b = fn.id;
      }
      e.distance = d;
      candidates_.push_back(e);
    }
  }
}

bool PlannerInstance::candidate_valid(MeetEvent& e) const {
  if (e.kind == MeetEvent::Kind::rooted_subtree) {
    if (!rooted_.has_node(e.rooted_node)) return false;
    const auto owner = forest_.owner_of(e.node_b);
    if (!owner) return false;
    e.subtree_b = *owner;  // merges may have moved the node
    return processed_.count({e.rooted_node, e.node_b}) == 0;
  }
  const auto owner_a = forest_.owner_of(e.node_a);
  const auto owner_b = forest_.owner_of(e.node_b);
  if (!owner_a || !owner_b || *owner_a == *owner_b) return false;
  e.subtree_a = *owner_a;
  e.subtree_b = *owner_b;
  if (e.subtree_a > e.subtree_b) {
    std::swap(e.subtree_a, e.subtree_b);
    std::swap(e.node_a, e.node_b);
  }
  return true;
}

std::optional<MeetEvent> PlannerInstance::pop_pending_meet() {
  size_t keep = 0;
  ptrdiff_t best = -1;
  for (size_t i = 0; i < candidates_.size(); ++i) {
    MeetEvent e = candidates_[i];
    if (!candidate_valid(e)) continue;  // compacted away
    candidates_[keep] = e;
    if (best < 0 || e.higher_priority_than(candidates_[static_cast<size_t>(best)]))
      best = static_cast<ptrdiff_t>(keep);
    ++keep;
  }
  candidates_.resize(keep);
  if (best < 0) return std::nullopt;
  const MeetEvent e = candidates_[static_cast<size_t>(best)];
  candidates_.erase(candidates_.begin() + best);
  return e;
}

std::optional<MeetEvent> PlannerInstance::peek_pending_meet() const {
  std::optional<MeetEvent> best;
  for (MeetEvent e : candidates_) {
    if (!candidate_valid(e)) continue;
    if (!best || e.higher_priority_than(*best)) best = e;
  }
  return best;
}

std::optional<int> PlannerInstance::try_extend(const Vec2& x_rand, const WorldView& world,
                                               CycleStats& stats, bool* reached) {
  const auto id = extend(rooted_, x_rand, world, params_, goal_);
  if (id) {
    ++stats.nodes_added;
    if (kind_ != PlannerKind::risk_rrt) on_rooted_insert(*id);
    if (reached && in_goal(rooted_.node(*id).state.position())) *reached = true;
  }
  return id;
}

GrowOutcome PlannerInstance::grow_uniform(const WorldView& world, CycleStats& stats) {
  const Vec2 x_rand = sample_free_point(*grid_, rng_);
  bool reached = false;
  const auto id = try_extend(x_rand, world, stats, &reached);
  if (reached) return GrowOutcome::reached;
  return id ? GrowOutcome::extended : GrowOutcome::rejected;
}

GrowOutcome PlannerInstance::grow_bi(const WorldView& world, CycleStats& stats) {
  if (!bi_met_) {
    if (const auto e = pop_pending_meet()) {
      bi_met_ = true;
      ++stats.meets_processed;
      processed_.insert({e->rooted_node, e->node_b});
      const auto path = forest_.extract_heuristic_path(e->subtree_b, e->node_b);
      heuristic_ = make_heuristic(path, params_.sigma_kappa, params_.h_r, bounds_);
      // goal tree freezes here: pre-meet growth below is skipped from now on
    }
  }
  bool reached = false;
  if (bi_met_) {
    const Vec2 x_rand = heuristic_sample(*heuristic_, rng_);
    const auto id = try_extend(x_rand, world, stats, &reached);
    if (reached) return GrowOutcome::reached;
    return id ? GrowOutcome::extended : GrowOutcome::rejected;
  }

  const Vec2 x_rand = sample_free_point(*grid_, rng_);
  const auto id = try_extend(x_rand, world, stats, &reached);

  // position-only goal-tree growth toward the same sample, steered at most
  // lambda from the nearest goal-tree node
  const auto near = forest_.nearest(x_rand);
  bool grew_goal_tree = false;
  if (near.distance > 0.0) {
    const Vec2 q = forest_.tree(near.subtree_id).node(near.node_id).position;
    const Vec2 target = near.distance <= params_.lambda
                            ? x_rand
                            : Vec2(q + (x_rand - q) * (params_.lambda / near.distance));
    const auto nid = forest_.grow_subtree(goal_tree_id_, target, *grid_, robot_radius_);
    if (nid) {
      ++stats.forest_nodes_added;
      on_forest_insert(goal_tree_id_, *nid);
      grew_goal_tree = true;
    }
  }
  if (reached) return GrowOutcome::reached;
  return (id || grew_goal_tree) ? GrowOutcome::extended : GrowOutcome::rejected;
}

GrowOutcome PlannerInstance::process_meet(const MeetEvent& e, const WorldView& world,
                                          CycleStats& stats) {
  ++stats.meets_processed;
  if (e.kind == MeetEvent::Kind::rooted_subtree) {
    processed_.insert({e.rooted_node, e.node_b});
    const auto path = forest_.extract_heuristic_path(e.subtree_b, e.node_b);
    // fresh mixture per meet: the burst below spends this sub-tree's
    // information, so the next meet starts over from its own path
    heuristic_ = make_heuristic(path, params_.sigma_kappa, params_.h_r, bounds_);
    bool reached = false;
    const int burst = static_cast<int>(path.size()) * params_.heuristic_burst_per_node;
    for (int s = 0; s < burst; ++s) {
      const Vec2 x_rand = heuristic_sample(*heuristic_, rng_);
      (void)try_extend(x_rand, world, stats, &reached);
    }
    forest_.consume(e.subtree_b, params_.retain_goal_tree);
    return reached ? GrowOutcome::reached : GrowOutcome::extended;
  }
  forest_.merge_subtrees(e.subtree_a, e.subtree_b, e.node_a, e.node_b);
  return GrowOutcome::extended;
}

GrowOutcome PlannerInstance::grow_multi(const WorldView& world, CycleStats& stats) {
  if (const auto e = pop_pending_meet()) return process_meet(*e, world, stats);

  const Vec2 x_rand = sample_free_point(*grid_, rng_);
  bool reached = false;
  if (rooted_.nearest(x_rand).distance < params_.lambda) {
    const auto id = try_extend(x_rand, world, stats, &reached);
    if (reached) return GrowOutcome::reached;
    return id ? GrowOutcome::extended : GrowOutcome::rejected;
  }
  if (forest_.tree_count() > 0) {
    const auto near = forest_.nearest(x_rand);
    if (near.distance < params_.lambda) {
      const auto nid = forest_.grow_subtree(near.subtree_id, x_rand, *grid_, robot_radius_);
      if (!nid) return GrowOutcome::rejected;
      ++stats.forest_nodes_added;
      on_forest_insert(near.subtree_id, *nid);
      return GrowOutcome::extended;
    }
  }
  const int tid = forest_.create_subtree(x_rand, false);
  ++stats.forest_nodes_added;
  on_forest_insert(tid, forest_.tree(tid).root_id());
  return GrowOutcome::extended;
}

GrowOutcome PlannerInstance::grow(const WorldView& world, CycleStats& stats) {
  ++stats.iterations;
  GrowOutcome out = GrowOutcome::rejected;
  switch (kind_) {
    case PlannerKind::risk_rrt: out = grow_uniform(world, stats); break;
    case PlannerKind::bi_risk_rrt: out = grow_bi(world, stats); break;
    case PlannerKind::multi_risk_rrt: out = grow_multi(world, stats); break;
  }
  if (out == GrowOutcome::reached) stats.reached = true;
  return out;
}

PlanCycleResult PlannerInstance::plan_cycle(std::span<const MovingObstacle> observations,
                                            const RobotState& current, double t_now) {
  const auto t_begin = std::chrono::steady_clock::now();
  const RobotState& root = rooted_.root().state;
  if (std::abs(root.x - current.x) > 1e-9 || std::abs(root.y - current.y) > 1e-9 ||
      std::abs(root.t - t_now) > 1e-9)
    throw std::logic_error("plan_cycle: robot state does not match the tree root");

  WorldView world;
  world.grid = grid_;
  world.predictions = predict_obstacles(observations, t_now, params_);
  world.robot_radius = robot_radius_;

  PlanCycleResult out;
  rooted_.refresh_risks(world, params_);
  for (int i = 0; i < params_.iterations_per_cycle; ++i) (void)grow(world, out.stats);

  out.trajectory = rooted_.choose_best_trajectory(goal_, params_);
  out.stats.has_trajectory = out.trajectory.has_value();
  out.stats.tree_size = static_cast<int>(rooted_.size());
  out.stats.subtree_count = static_cast<int>(forest_.tree_count());
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return out;
}

void PlannerInstance::commit_execution(int executed_child_id) {
  rooted_.prune_unreachable(executed_child_id);
}

void PlannerInstance::standby_hold(double t0) { rooted_.rebase_root_time(t0); }

void PlannerInstance::reset_tree(const RobotState& new_root) {
  rooted_ = TimedTree(new_root, params_.N, params_.dt, rooted_.next_id());
  // stale rooted references can never validate (ids are not reused), but the
  // dead weight is dropped eagerly
  std::erase_if(candidates_, [](const MeetEvent& e) {
    return e.kind == MeetEvent::Kind::rooted_subtree;
  });
  if (kind_ != PlannerKind::risk_rrt) on_rooted_insert(rooted_.root_id());
}

}  // namespace riskrrt
