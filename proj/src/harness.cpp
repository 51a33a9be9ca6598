#include "riskrrt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "riskrrt/format.hpp"

namespace riskrrt {

std::pair<double, double> mean_and_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

BatchResult run_batch(const Scenario& scenario, const std::vector<PlannerKind>& planners,
                      int repeats, std::uint64_t seed_base, int jobs) {
  BatchResult out;
  out.episodes.resize(planners.size() * static_cast<size_t>(repeats));
  for (size_t pi = 0; pi < planners.size(); ++pi) {
    for (int i = 0; i < repeats; ++i) {
      BatchEpisode& e = out.episodes[pi * static_cast<size_t>(repeats) + i];
      e.kind = planners[pi];
      e.index = i;
      e.seed = seed_base + static_cast<std::uint64_t>(i);
    }
  }

  const auto worker_count =
      static_cast<size_t>(std::clamp(jobs, 1, static_cast<int>(out.episodes.size()) + 1));
  std::atomic<size_t> next{0};
  const auto work = [&] {
    for (size_t k = next.fetch_add(1); k < out.episodes.size(); k = next.fetch_add(1)) {
      BatchEpisode& e = out.episodes[k];
      e.result = run_episode(scenario, e.kind, e.seed);
    }
  };
  if (worker_count <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (size_t w = 0; w < worker_count; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }

  for (size_t pi = 0; pi < planners.size(); ++pi) {
    PlannerSummary s;
    s.kind = planners[pi];
    s.episodes = repeats;
    std::vector<double> exec, len;
    for (int i = 0; i < repeats; ++i) {
      const EpisodeResult& r = out.episodes[pi * static_cast<size_t>(repeats) + i].result;
      if (r.collision) ++s.collisions;
      if (r.success) {
        ++s.successes;
        exec.push_back(r.sim_time);
        len.push_back(r.path_length);
      }
    }
    if (s.successes > 0) {
      std::tie(s.exec_mean, s.exec_std) = mean_and_std(exec);
      std::tie(s.len_mean, s.len_std) = mean_and_std(len);
    }
    out.summaries.push_back(s);
  }
  return out;
}

namespace {

std::string opt_cell(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string{};
}

}  // namespace

std::string summary_csv(const BatchResult& batch) {
  std::string out = "planner,episodes,success_rate,exec_mean,exec_std,len_mean,len_std,collisions\n";
  for (const PlannerSummary& s : batch.summaries) {
    const double rate =
        s.episodes > 0 ? static_cast<double>(s.successes) / s.episodes : 0.0;
    out += std::string(to_string(s.kind)) + "," + std::to_string(s.episodes) + "," +
           fmt_double(rate) + "," + opt_cell(s.exec_mean) + "," + opt_cell(s.exec_std) + "," +
           opt_cell(s.len_mean) + "," + opt_cell(s.len_std) + "," +
           std::to_string(s.collisions) + "\n";
  }
  return out;
}

std::string episodes_csv(const BatchResult& batch) {
  std::string out = "planner,episode,seed,success,collision,sim_time,path_length,cycles\n";
  for (const BatchEpisode& e : batch.episodes) {
    out += std::string(to_string(e.kind)) + "," + std::to_string(e.index) + "," +
           std::to_string(e.seed) + "," + (e.result.success ? "1" : "0") + "," +
           (e.result.collision ? "1" : "0") + "," + fmt_double(e.result.sim_time) + "," +
           fmt_double(e.result.path_length) + "," + std::to_string(e.result.cycles.size()) +
           "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// snapshot rendering

namespace {

constexpr int kPrec = 3;

struct Svg {
  std::string body;
  double height_m = 0.0;

  [[nodiscard]] std::string x(double v) const { return fmt_fixed(v, kPrec); }
  [[nodiscard]] std::string y(double v) const { return fmt_fixed(height_m - v, kPrec); }

  void line(const Vec2& a, const Vec2& b) {
    body += "<line x1=\"" + x(a.x()) + "\" y1=\"" + y(a.y()) + "\" x2=\"" + x(b.x()) +
            "\" y2=\"" + y(b.y()) + "\"/>";
  }
  void circle(const Vec2& c, double r, const std::string& cls) {
    body += "<circle class=\"" + cls + "\" cx=\"" + x(c.x()) + "\" cy=\"" + y(c.y()) +
            "\" r=\"" + fmt_fixed(r, kPrec) + "\"/>";
  }
  void polyline(const std::vector<Vec2>& pts, const std::string& cls) {
    if (pts.empty()) return;
    body += "<polyline class=\"" + cls + "\" points=\"";
    for (size_t i = 0; i < pts.size(); ++i) {
      if (i) body += ' ';
      body += x(pts[i].x()) + "," + y(pts[i].y());
    }
    body += "\"/>";
  }
};

}  // namespace

std::string render_snapshot(const Scenario& scenario, const CycleView& view) {
  const OccupancyGrid& grid = scenario.grid;
  Svg svg;
  svg.height_m = grid.height_m();
  const std::string w = fmt_fixed(grid.width_m(), kPrec);
  const std::string h = fmt_fixed(grid.height_m(), kPrec);

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + w + " " + h +
                    "\" width=\"800\" height=\"800\">";
  out +=
      "<style>"
      ".walls{fill:#444;}"
      ".tree line{stroke:#2b6cb0;stroke-width:0.03;}"
      ".subtree line{stroke:#b08a2b;stroke-width:0.03;}"
      ".subtree circle{fill:#b08a2b;}"
      ".heuristic{fill:none;stroke:#38a169;stroke-width:0.08;stroke-dasharray:0.2 0.1;}"
      ".plan{fill:none;stroke:#e53e3e;stroke-width:0.09;}"
      ".obstacle{fill:#805ad5;fill-opacity:0.7;}"
      ".robot{fill:#1a202c;}"
      ".start{fill:none;stroke:#2b6cb0;stroke-width:0.05;}"
      ".goal{fill:none;stroke:#38a169;stroke-width:0.05;}"
      "</style>";
  out += "<rect width=\"" + w + "\" height=\"" + h + "\" fill=\"#fff\"/>";

  // occupied cells, one rect per cell
  out += "<g class=\"walls\">";
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      if (grid.cells[static_cast<size_t>(row) * grid.width + col] < 0.5) continue;
      const double cw = grid.resolution;
      const double cx = col * cw;
      const double cy_top = row * cw;  // row 0 is the top in svg space too
      out += "<rect x=\"" + fmt_fixed(cx, kPrec) + "\" y=\"" + fmt_fixed(cy_top, kPrec) +
             "\" width=\"" + fmt_fixed(cw, kPrec) + "\" height=\"" + fmt_fixed(cw, kPrec) +
             "\"/>";
    }
  }
  out += "</g>";

  const PlannerInstance& planner = *view.planner;

  // forest, one group per sub-tree
  for (const auto& [tid, tree] : planner.forest().trees()) {
    svg.body.clear();
    for (const SubTreeNode& n : tree.nodes()) {
      if (n.parent)
        svg.line(tree.node(*n.parent).position, n.position);
      else
        svg.circle(n.position, 0.07, "root");
    }
    out += "<g class=\"subtree\" id=\"subtree-" + std::to_string(tid) + "\">" + svg.body + "</g>";
  }

  // rooted tree edges
  svg.body.clear();
  for (const auto& [id, n] : planner.rooted().nodes())
    if (n.parent) svg.line(planner.rooted().node(*n.parent).state.position(), n.state.position());
  out += "<g class=\"tree\">" + svg.body + "</g>";

  // active heuristic path
  if (planner.active_heuristic()) {
    std::vector<Vec2> pts;
    for (const HeuristicComponent& c : planner.active_heuristic()->components)
      pts.push_back(c.mean);
    svg.body.clear();
    svg.polyline(pts, "heuristic");
    out += svg.body;
  }

  // chosen trajectory: root -> chosen node positions
  if (view.result && view.result->trajectory) {
    std::vector<Vec2> pts;
    int id = view.result->trajectory->first;
    while (true) {
      const TimedNode& n = planner.rooted().node(id);
      pts.push_back(n.state.position());
      if (!n.parent) break;
      id = *n.parent;
    }
    std::reverse(pts.begin(), pts.end());
    svg.body.clear();
    svg.polyline(pts, "plan");
    out += svg.body;
  }

  // obstacles at the cycle time
  svg.body.clear();
  if (view.crowd)
    for (const MovingObstacle& o : *view.crowd)
      if (!o.trajectory.empty()) svg.circle(crowd_position(o, view.t), o.radius, "obstacle");
  out += svg.body;

  // start, goal region, robot with a heading tick
  svg.body.clear();
  svg.circle(scenario.start.position(), scenario.robot_radius, "start");
  svg.circle(scenario.goal, scenario.params.goal_radius, "goal");
  if (view.state) {
    svg.circle(view.state->position(), scenario.robot_radius, "robot");
    out += svg.body;
    svg.body.clear();
    out += "<g class=\"tree\">";
    svg.line(view.state->position(),
             view.state->position() + 2.0 * scenario.robot_radius * view.state->heading());
    out += svg.body + "</g>";
  } else {
    out += svg.body;
  }

  out += "</svg>\n";
  return out;
}

}  // namespace riskrrt
