#include "riskrrt/sim.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "riskrrt/format.hpp"

namespace riskrrt {

namespace {

double parse_double(const std::string& token, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || token.empty() || errno == ERANGE ||
      !std::isfinite(v))
    throw ConfigError(where + ": expected a number, got '" + token + "'");
  return v;
}

std::int64_t parse_int(const std::string& token, const std::string& where) {
  const double v = parse_double(token, where);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9) throw ConfigError(where + ": expected an integer, got '" + token + "'");
  return static_cast<std::int64_t>(r);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_char(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void apply_param_override(PlannerParams& p, const std::string& key, const std::string& value) {
  const std::string where = "param." + key;
  const std::map<std::string, double*> doubles = {
      {"v_max", &p.v_max},           {"a_max", &p.a_max},
      {"omega_max", &p.omega_max},   {"alpha_max", &p.alpha_max},
      {"dt", &p.dt},                 {"w1", &p.w1},
      {"w2", &p.w2},                 {"beta", &p.beta},
      {"lambda", &p.lambda},         {"meet_radius", &p.meet_radius},
      {"h_r", &p.h_r},               {"sigma_kappa", &p.sigma_kappa},
      {"goal_radius", &p.goal_radius}, {"risk_cap", &p.risk_cap},
  };
  const std::map<std::string, int*> ints = {
      {"N", &p.N},
      {"delta_nv", &p.delta_nv},
      {"delta_nw", &p.delta_nw},
      {"iterations_per_cycle", &p.iterations_per_cycle},
      {"heuristic_burst_per_node", &p.heuristic_burst_per_node},
  };
  if (const auto it = doubles.find(key); it != doubles.end()) {
    *it->second = parse_double(value, where);
    return;
  }
  if (const auto it = ints.find(key); it != ints.end()) {
    *it->second = static_cast<int>(parse_int(value, where));
    return;
  }
  if (key == "retain_goal_tree") {
    const std::int64_t v = parse_int(value, where);
    if (v != 0 && v != 1) throw ConfigError(where + ": expected 0 or 1");
    p.retain_goal_tree = v == 1;
    return;
  }
  throw ConfigError(where + ": unknown parameter");
}

std::vector<MovingObstacle> load_crowd(const std::string& path, double radius) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open crowd file");
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "id,t,x,y")
    throw ConfigError(path + ":1: crowd header must be 'id,t,x,y'");

  std::map<int, MovingObstacle> by_id;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = split_char(line, ',');
    if (fields.size() != 4) throw ConfigError(where + ": expected 4 fields");
    const int id = static_cast<int>(parse_int(fields[0], where));
    TrajectorySample s;
    s.t = parse_double(fields[1], where);
    s.position = {parse_double(fields[2], where), parse_double(fields[3], where)};
    auto& o = by_id[id];
    o.id = id;
    o.radius = radius;
    if (!o.trajectory.empty() && s.t <= o.trajectory.back().t)
      throw ConfigError(where + ": timestamps must be strictly increasing per id");
    o.trajectory.push_back(s);
  }
  std::vector<MovingObstacle> out;
  out.reserve(by_id.size());
  for (auto& [id, o] : by_id) out.push_back(std::move(o));
  return out;
}

Vec2 crowd_position(const MovingObstacle& obstacle, double t) {
  const auto& traj = obstacle.trajectory;
  if (traj.empty()) throw std::invalid_argument("crowd_position: empty trajectory");
  if (t <= traj.front().t) return traj.front().position;
  if (t >= traj.back().t) return traj.back().position;
  for (size_t i = 1; i < traj.size(); ++i) {
    if (t <= traj[i].t) {
      const double span = traj[i].t - traj[i - 1].t;
      const double a = (t - traj[i - 1].t) / span;
      return traj[i - 1].position + a * (traj[i].position - traj[i - 1].position);
    }
  }
  return traj.back().position;  // unreachable
}

bool check_collision(const OccupancyGrid& grid, std::span<const MovingObstacle> crowd,
                     const Vec2& robot_pos, double robot_radius, double t) {
  if (static_risk(grid, robot_pos, robot_radius) >= 0.5) return true;
  for (const MovingObstacle& o : crowd) {
    if (o.trajectory.empty()) continue;
    const double r = robot_radius + o.radius;
    if ((crowd_position(o, t) - robot_pos).squaredNorm() <= r * r) return true;
  }
  return false;
}

std::vector<MovingObstacle> observe_crowd(std::span<const MovingObstacle> crowd, double t,
                                          double dt) {
  std::vector<MovingObstacle> out;
  out.reserve(crowd.size());
  for (const MovingObstacle& o : crowd) {
    if (o.trajectory.empty()) continue;
    MovingObstacle m;
    m.id = o.id;
    m.radius = o.radius;
    m.trajectory = {{t - dt, crowd_position(o, t - dt)}, {t, crowd_position(o, t)}};
    out.push_back(std::move(m));
  }
  return out;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  const auto resolve = [&dir](const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p.string() : (dir / p).string();
  };

  Scenario sc;
  sc.name = std::filesystem::path(path).stem().string();
  std::string grid_path;
  std::string crowd_path;
  bool have_start = false;
  bool have_goal = false;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const std::string& key = tok[0];
    const auto want = [&](size_t n) {
      if (tok.size() != n + 1)
        throw ConfigError(where + ": '" + key + "' takes " + std::to_string(n) + " value(s)");
    };
    if (key == "grid") {
      want(1);
      grid_path = resolve(tok[1]);
    } else if (key == "crowd") {
      want(1);
      crowd_path = resolve(tok[1]);
    } else if (key == "start") {
      want(3);
      sc.start = RobotState{};
      sc.start.x = parse_double(tok[1], where);
      sc.start.y = parse_double(tok[2], where);
      sc.start.theta = normalize_angle(parse_double(tok[3], where));
      have_start = true;
    } else if (key == "goal") {
      want(2);
      sc.goal = {parse_double(tok[1], where), parse_double(tok[2], where)};
      have_goal = true;
    } else if (key == "robot_radius") {
      want(1);
      sc.robot_radius = parse_double(tok[1], where);
    } else if (key == "crowd_radius") {
      want(1);
      sc.crowd_radius = parse_double(tok[1], where);
    } else if (key == "max_sim_time") {
      want(1);
      sc.max_sim_time = parse_double(tok[1], where);
    } else if (key == "seed") {
      want(1);
      sc.seed = static_cast<std::uint64_t>(parse_int(tok[1], where));
    } else if (key.rfind("param.", 0) == 0) {
      want(1);
      try {
        apply_param_override(sc.params, key.substr(6), tok[1]);
      } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
      }
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }

  if (grid_path.empty()) throw ConfigError(path + ": missing required key 'grid'");
  if (!have_start) throw ConfigError(path + ": missing required key 'start'");
  if (!have_goal) throw ConfigError(path + ": missing required key 'goal'");
  if (sc.robot_radius <= 0.0) throw ConfigError(path + ": robot_radius must be positive");
  if (sc.crowd_radius <= 0.0) throw ConfigError(path + ": crowd_radius must be positive");
  if (sc.max_sim_time <= 0.0) throw ConfigError(path + ": max_sim_time must be positive");

  try {
    sc.grid = load_grid_file(grid_path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  if (!crowd_path.empty()) sc.crowd = load_crowd(crowd_path, sc.crowd_radius);

  if (const std::string err = sc.params.validate(); !err.empty())
    throw ConfigError(path + ": " + err);
  const MapBounds b = sc.grid.bounds();
  if (!b.contains(sc.start.position())) throw ConfigError(path + ": start is outside the map");
  if (!b.contains(sc.goal)) throw ConfigError(path + ": goal is outside the map");
  if (static_risk(sc.grid, sc.start.position(), sc.robot_radius) >= 0.5)
    throw ConfigError(path + ": start footprint is not free");
  if (static_risk(sc.grid, sc.goal, sc.robot_radius) >= 0.5)
    throw ConfigError(path + ": goal footprint is not free");
  return sc;
}

std::string EpisodeResult::to_csv() const {
  std::string out = "success,collision,sim_time,path_length,cycle_count\n";
  out += std::string(success ? "1" : "0") + "," + (collision ? "1" : "0") + "," +
         fmt_double(sim_time) + "," + fmt_double(path_length) + "," +
         std::to_string(cycles.size()) + "\n";
  out +=
      "cycle,t,x,y,theta,v,omega,tree_size,subtree_count,nodes_added,forest_nodes_added,meets_"
      "processed,executed\n";
  for (const CycleRecord& c : cycles) {
    out += std::to_string(c.cycle) + "," + fmt_double(c.t) + "," + fmt_double(c.x) + "," +
           fmt_double(c.y) + "," + fmt_double(c.theta) + "," + fmt_double(c.v) + "," +
           fmt_double(c.omega) + "," + std::to_string(c.tree_size) + "," +
           std::to_string(c.subtree_count) + "," + std::to_string(c.nodes_added) + "," +
           std::to_string(c.forest_nodes_added) + "," + std::to_string(c.meets_processed) + "," +
           (c.executed ? "1" : "0") + "\n";
  }
  return out;
}

namespace {

/// First node on the root -> chosen path; the robot executes its incoming
/// control.
int first_child_on_path(const TimedTree& tree, int chosen) {
  int child = chosen;
  while (tree.node(child).depth > 1) child = *tree.node(child).parent;
  return child;
}

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, PlannerKind kind, std::uint64_t seed,
                          const CycleObserver& observer) {
  const auto t_begin = std::chrono::steady_clock::now();
  EpisodeResult out;
  RobotState state = scenario.start;
  double t = state.t;

  PlannerInstance planner(kind, scenario.params, state, scenario.goal, seed, scenario.grid,
                          scenario.robot_radius);
  const PlannerParams& p = planner.params();  // sigma_kappa resolved
  const double sub_dt = p.dt / 5.0;

  for (int cycle = 0;; ++cycle) {
    if ((state.position() - scenario.goal).norm() < p.goal_radius) {
      out.success = true;
      break;
    }
    if (t >= scenario.max_sim_time - 1e-9) break;  // timeout

    const auto obs = observe_crowd(scenario.crowd, t, p.dt);
    const PlanCycleResult res = planner.plan_cycle(obs, state, t);
    if (observer) {
      CycleView view;
      view.cycle = cycle;
      view.t = t;
      view.state = &state;
      view.planner = &planner;
      view.crowd = &scenario.crowd;
      view.result = &res;
      observer(view);
    }

    CycleRecord rec;
    rec.cycle = cycle;
    rec.t = t;
    rec.x = state.x;
    rec.y = state.y;
    rec.theta = state.theta;
    rec.v = state.v;
    rec.omega = state.omega;
    rec.tree_size = res.stats.tree_size;
    rec.subtree_count = res.stats.subtree_count;
    rec.nodes_added = res.stats.nodes_added;
    rec.forest_nodes_added = res.stats.forest_nodes_added;
    rec.meets_processed = res.stats.meets_processed;

    const bool at_rest = std::abs(state.v) < 1e-9 && std::abs(state.omega) < 1e-9;
    if (!res.trajectory && at_rest) {
      // hold in place; scripted obstacles may still hit the robot
      rec.executed = false;
      out.cycles.push_back(rec);
      bool hit = false;
      for (int k = 1; k <= 5 && !hit; ++k) {
        if (check_collision(scenario.grid, scenario.crowd, state.position(),
                            scenario.robot_radius, t + k * sub_dt)) {
          out.collision = true;
          t += k * sub_dt;
          hit = true;
        }
      }
      if (hit) break;
      t += p.dt;
      state.t = t;
      planner.standby_hold(t);
      continue;
    }

    // executed motion: either the trajectory's first control or a brake
    ControlInput u;
    int child = -1;
    if (res.trajectory) {
      child = first_child_on_path(planner.rooted(), res.trajectory->first);
      u = *planner.rooted().node(child).control_from_parent;
    } else {
      u = brake_control(state, p);
    }

    rec.executed = true;
    out.cycles.push_back(rec);

    RobotState sub = state;
    bool hit = false;
    for (int k = 1; k <= 5 && !hit; ++k) {
      sub = step_kinematics(sub, u, sub_dt);
      if (check_collision(scenario.grid, scenario.crowd, sub.position(), scenario.robot_radius,
                          sub.t)) {
        out.collision = true;
        out.path_length += u.v_cmd * k * sub_dt;
        t = sub.t;
        hit = true;
      }
    }
    if (hit) break;

    out.path_length += u.v_cmd * p.dt;
    if (res.trajectory) {
      // the tree's stored state is canonical; the sub-step composition above
      // agrees with it to integration tolerance
      state = planner.rooted().node(child).state;
      t = state.t;
      planner.commit_execution(child);
    } else {
      state = step_kinematics(state, u, p.dt);
      t = state.t;
      planner.reset_tree(state);  // the brake edge is not a tree edge
    }
  }

  out.sim_time = t;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return out;
}

}  // namespace riskrrt
