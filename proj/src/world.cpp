#include "riskrrt/world.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <sstream>

namespace riskrrt {

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

double OccupancyGrid::occupancy_at(const Vec2& p) const {
  const int col = static_cast<int>(std::floor(p.x() / resolution));
  const int row = height - 1 - static_cast<int>(std::floor(p.y() / resolution));
  if (col < 0 || col >= width || row < 0 || row >= height) return 1.0;
  return at(col, row);
}

OccupancyGrid load_grid(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("grid line 1: empty input");
  strip_cr(line);

  OccupancyGrid g;
  {
    std::istringstream header(line);
    if (!(header >> g.width >> g.height >> g.resolution))
      throw ParseError("grid line 1: expected \"<width> <height> <resolution_m>\"");
    std::string rest;
    if (header >> rest) throw ParseError("grid line 1: trailing tokens after resolution");
  }
  if (g.width < 1 || g.height < 1) throw ParseError("grid line 1: dimensions must be >= 1");
  if (!(g.resolution > 0.0)) throw ParseError("grid line 1: resolution must be positive");

  g.cells.resize(static_cast<size_t>(g.width) * g.height);
  for (int row = 0; row < g.height; ++row) {
    const int line_no = row + 2;
    if (!std::getline(in, line))
      throw ParseError("grid line " + std::to_string(line_no) + ": missing row");
    strip_cr(line);
    if (static_cast<int>(line.size()) != g.width)
      throw ParseError("grid line " + std::to_string(line_no) + ": expected " +
                       std::to_string(g.width) + " cells, got " + std::to_string(line.size()));
    for (int col = 0; col < g.width; ++col) {
      const char c = line[col];
      if (c == '#')
        g.cells[static_cast<size_t>(row) * g.width + col] = 1.0;
      else if (c == '.')
        g.cells[static_cast<size_t>(row) * g.width + col] = 0.0;
      else
        throw ParseError("grid line " + std::to_string(line_no) + ": invalid cell '" +
                         std::string(1, c) + "'");
    }
  }
  while (std::getline(in, line)) {
    strip_cr(line);
    if (!line.empty())
      throw ParseError("grid: unexpected content after row " + std::to_string(g.height));
  }
  return g;
}

OccupancyGrid load_grid_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("grid: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return load_grid(buf.str());
}

double static_risk(const OccupancyGrid& grid, const Vec2& position, double robot_radius) {
  const double W = grid.width_m();
  const double H = grid.height_m();
  if (position.x() < 0.0 || position.x() > W || position.y() < 0.0 || position.y() > H)
    return 1.0;

  const double res = grid.resolution;
  const int col_lo = std::max(0, static_cast<int>(std::floor((position.x() - robot_radius) / res)));
  const int col_hi = std::min(grid.width - 1,
                              static_cast<int>(std::floor((position.x() + robot_radius) / res)));
  const int row_lo = std::max(0, grid.height - 1 -
                                     static_cast<int>(std::floor((position.y() + robot_radius) / res)));
  const int row_hi = std::min(grid.height - 1,
                              grid.height - 1 -
                                  static_cast<int>(std::floor((position.y() - robot_radius) / res)));

  double worst = 0.0;
  const double r2 = robot_radius * robot_radius;
  for (int row = row_lo; row <= row_hi; ++row) {
    for (int col = col_lo; col <= col_hi; ++col) {
      if ((grid.cell_center(col, row) - position).squaredNorm() <= r2)
        worst = std::max(worst, grid.at(col, row));
    }
  }
  return worst;
}

bool segment_free(const OccupancyGrid& grid, const Vec2& a, const Vec2& b, double robot_radius) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / (grid.resolution / 2.0))));
  for (int i = 0; i <= n; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / n);
    if (static_risk(grid, p, robot_radius) >= 0.5) return false;
  }
  return true;
}

std::vector<ObstaclePrediction> predict_obstacles(std::span<const MovingObstacle> obstacles,
                                                  double t0, const PlannerParams& p) {
  std::vector<ObstaclePrediction> out;
  out.reserve(obstacles.size());
  for (const MovingObstacle& ob : obstacles) {
    // index of the most recent sample at or before t0
    int last = -1;
    for (size_t i = 0; i < ob.trajectory.size(); ++i) {
      if (ob.trajectory[i].t <= t0) last = static_cast<int>(i);
      else break;
    }
    if (last < 0) continue;

    Vec2 velocity{0.0, 0.0};
    Vec2 base = ob.trajectory[last].position;
    if (last >= 1) {
      const TrajectorySample& s0 = ob.trajectory[last - 1];
      const TrajectorySample& s1 = ob.trajectory[last];
      velocity = (s1.position - s0.position) / (s1.t - s0.t);
      base = s1.position + velocity * (t0 - s1.t);
    }

    ObstaclePrediction pred;
    pred.obstacle_id = ob.id;
    pred.radius = ob.radius;
    pred.steps.reserve(p.N + 1);
    for (int k = 0; k <= p.N; ++k) {
      PredictionStep step;
      step.t = t0 + k * p.dt;
      step.mean = base + velocity * (k * p.dt);
      step.sigma = kPredictionSigma0 + kPredictionSigmaGrowth * k;
      pred.steps.push_back(step);
    }
    out.push_back(std::move(pred));
  }
  return out;
}

double dynamic_risk_single(const PredictionStep& step, const Vec2& position, double robot_radius,
                           double obstacle_radius) {
  const double d = (position - step.mean).norm();
  const double contact = robot_radius + obstacle_radius;
  if (d <= contact) return 1.0;
  const double gap = d - contact;
  return std::exp(-(gap * gap) / (2.0 * step.sigma * step.sigma));
}

double combined_risk(double p_rs, std::span<const double> p_rd) {
  if (!(p_rs >= 0.0 && p_rs <= 1.0))
    throw std::invalid_argument("combined_risk: static probability outside [0, 1]");
  double survive = 1.0;
  for (double p : p_rd) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("combined_risk: dynamic probability outside [0, 1]");
    survive *= 1.0 - p;
  }
  return p_rs + (1.0 - p_rs) * (1.0 - survive);
}

double risk_at(const WorldView& world, const Vec2& position, int step_index) {
  const double p_rs = static_risk(*world.grid, position, world.robot_radius);
  double survive = 1.0;
  for (const ObstaclePrediction& pred : world.predictions) {
    assert(step_index >= 0 && step_index < static_cast<int>(pred.steps.size()));
    const double p = dynamic_risk_single(pred.steps[step_index], position, world.robot_radius,
                                         pred.radius);
    survive *= 1.0 - p;
  }
  return p_rs + (1.0 - p_rs) * (1.0 - survive);
}

double dynamic_risk_at(const WorldView& world, const Vec2& position, int step_index) {
  double survive = 1.0;
  for (const ObstaclePrediction& pred : world.predictions) {
    if (pred.steps.empty()) continue;
    const int k = std::min(step_index, static_cast<int>(pred.steps.size()) - 1);
    survive *= 1.0 - dynamic_risk_single(pred.steps[k], position, world.robot_radius, pred.radius);
  }
  return 1.0 - survive;
}

bool brake_clear_of_predictions(const WorldView& world, const RobotState& state, int step_index,
                                const PlannerParams& p) {
  if (world.predictions.empty()) return true;
  RobotState stop = state;
  for (int cycle = 0; stop.v > 0.0; ++cycle) {
    const ControlInput u = brake_control(stop, p);
    RobotState sweep = stop;
    for (int k = 0; k < 5; ++k) {
      sweep = step_kinematics(sweep, u, p.dt / 5.0);
      if (dynamic_risk_at(world, sweep.position(), step_index + cycle + 1) >= p.risk_cap)
        return false;
    }
    stop = step_kinematics(stop, u, p.dt);
  }
  return true;
}

Vec2 sample_free_point(const OccupancyGrid& grid, Rng& rng) {
  const MapBounds b = grid.bounds();
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const Vec2 p = uniform_point(rng, b);
    if (grid.occupancy_at(p) < 0.5) return p;
  }
  throw std::runtime_error("sample_free_point: no free cell found");
}

}  // namespace riskrrt
