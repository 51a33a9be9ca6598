#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riskrrt/sim.hpp"

namespace riskrrt {

/// Aggregate over one planner's episodes. Time and length moments cover
/// successful episodes only; a planner with no successes leaves them empty.
struct PlannerSummary {
  PlannerKind kind = PlannerKind::risk_rrt;
  int episodes = 0;
  int successes = 0;
  int collisions = 0;
  std::optional<double> exec_mean, exec_std;  // sim seconds to goal
  std::optional<double> len_mean, len_std;    // driven metres
};

struct BatchEpisode {
  PlannerKind kind = PlannerKind::risk_rrt;
  int index = 0;  // episode number within the planner's block
  std::uint64_t seed = 0;
  EpisodeResult result;
};

struct BatchResult {
  std::vector<PlannerSummary> summaries;  // one per requested planner, in order
  std::vector<BatchEpisode> episodes;     // planner-major, episode order
};

/// Mean and population standard deviation (n divisor; one sample gives 0).
[[nodiscard]] std::pair<double, double> mean_and_std(const std::vector<double>& xs);

/// Runs `repeats` episodes per planner; episode i uses seed_base + i for
/// every planner, so comparisons are seed-paired. jobs > 1 distributes
/// episodes over threads; assembly is by index, so the result is identical
/// for any job count.
[[nodiscard]] BatchResult run_batch(const Scenario& scenario,
                                    const std::vector<PlannerKind>& planners, int repeats,
                                    std::uint64_t seed_base, int jobs = 1);

/// "planner,episodes,success_rate,exec_mean,exec_std,len_mean,len_std,collisions"
/// rows in planner order; absent moments serialize as empty cells.
[[nodiscard]] std::string summary_csv(const BatchResult& batch);

/// "planner,episode,seed,success,collision,sim_time,path_length,cycles" rows.
[[nodiscard]] std::string episodes_csv(const BatchResult& batch);

/// One planning cycle as a standalone SVG: grid, forest sub-trees (each in
/// its own <g class="subtree">), rooted tree, active heuristic path, chosen
/// trajectory, obstacles at the cycle time, robot, start and goal. Byte
/// deterministic for identical inputs.
[[nodiscard]] std::string render_snapshot(const Scenario& scenario, const CycleView& view);

}  // namespace riskrrt
