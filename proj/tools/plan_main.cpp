#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "riskrrt/format.hpp"
#include "riskrrt/harness.hpp"

namespace fs = std::filesystem;
using namespace riskrrt;

namespace {

std::vector<PlannerKind> parse_planner_list(const std::string& csv) {
  std::vector<PlannerKind> out;
  std::string cur;
  const auto flush = [&] {
    if (cur.empty()) return;
    const auto kind = planner_kind_from_string(cur);
    if (!kind) throw ConfigError("unknown planner '" + cur + "'");
    out.push_back(*kind);
    cur.clear();
  };
  for (char c : csv) {
    if (c == ',')
      flush();
    else
      cur += c;
  }
  flush();
  if (out.empty()) throw ConfigError("no planners requested");
  return out;
}

void apply_cli_params(Scenario& sc, const std::vector<std::string>& overrides) {
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    if (key.rfind("param.", 0) == 0) key = key.substr(6);
    apply_param_override(sc.params, key, kv.substr(eq + 1));
  }
  if (const std::string err = sc.params.validate(); !err.empty()) throw ConfigError(err);
}

void write_text(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
}

int cmd_run(const std::string& scenario_path, const std::string& planner_name,
            std::int64_t seed_arg, const std::string& out_dir, int snapshot_every,
            const std::vector<std::string>& params) {
  Scenario sc = load_scenario(scenario_path);
  apply_cli_params(sc, params);
  const auto kind = planner_kind_from_string(planner_name);
  if (!kind) throw ConfigError("unknown planner '" + planner_name + "'");
  const std::uint64_t seed = seed_arg >= 0 ? static_cast<std::uint64_t>(seed_arg) : sc.seed;

  CycleObserver observer;
  if (!out_dir.empty() && snapshot_every > 0) {
    observer = [&](const CycleView& view) {
      if (view.cycle % snapshot_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof name, "snapshot_%06d.svg", view.cycle);
      write_text(fs::path(out_dir) / name, render_snapshot(sc, view));
    };
  }

  const EpisodeResult r = run_episode(sc, *kind, seed, observer);
  if (!out_dir.empty()) write_text(fs::path(out_dir) / "episode.csv", r.to_csv());

  std::cout << "scenario " << sc.name << " planner " << to_string(*kind) << " seed " << seed
            << "\n"
            << "result " << (r.success ? "success" : (r.collision ? "collision" : "timeout"))
            << " sim_time " << fmt_double(r.sim_time) << " path_length "
            << fmt_double(r.path_length) << " cycles " << r.cycles.size() << " wall "
            << fmt_fixed(r.wall_seconds, 2) << "s\n";
  return 0;
}

int cmd_bench(const std::string& scenario_path, const std::string& planners_csv, int repeats,
              std::int64_t seed_base_arg, int jobs, const std::string& out_csv,
              const std::vector<std::string>& params) {
  Scenario sc = load_scenario(scenario_path);
  apply_cli_params(sc, params);
  const auto planners = parse_planner_list(planners_csv);
  const std::uint64_t seed_base =
      seed_base_arg >= 0 ? static_cast<std::uint64_t>(seed_base_arg) : sc.seed;

  const BatchResult batch = run_batch(sc, planners, repeats, seed_base, jobs);
  const std::string summary = summary_csv(batch);
  std::cout << summary;
  if (!out_csv.empty()) {
    write_text(out_csv, summary);
    fs::path raw(out_csv);
    raw.replace_filename(raw.stem().string() + "_episodes" + raw.extension().string());
    write_text(raw, episodes_csv(batch));
  }
  return 0;
}

int cmd_ablate(const std::string& scenario_path, int repeats, std::int64_t seed_base_arg,
               const std::string& out_csv, const std::vector<std::string>& params) {
  Scenario sc = load_scenario(scenario_path);
  apply_cli_params(sc, params);
  const std::uint64_t seed_base =
      seed_base_arg >= 0 ? static_cast<std::uint64_t>(seed_base_arg) : sc.seed;

  std::string out = "variant,episodes,success_rate,exec_mean,exec_std,len_mean,len_std,collisions\n";
  for (const bool retain : {false, true}) {
    sc.params.retain_goal_tree = retain;
    const BatchResult batch = run_batch(sc, {PlannerKind::multi_risk_rrt}, repeats, seed_base);
    const std::string row = summary_csv(batch);
    const auto nl = row.find('\n');
    std::string line = row.substr(nl + 1);
    line = line.substr(line.find(','));  // drop the planner name cell
    out += std::string(retain ? "retain_goal_tree" : "delete_after_use") + line;
  }
  std::cout << out;
  if (!out_csv.empty()) write_text(out_csv, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-aware kinodynamic planning benchmark"};
  app.require_subcommand(1);

  std::string scenario_path, planner = "multi", planners_csv = "risk_rrt,bi_risk_rrt,multi_risk_rrt";
  std::string out_path;
  std::int64_t seed = -1, seed_base = -1;
  int repeats = 20, jobs = 1, snapshot_every = 0;
  std::vector<std::string> params;

  CLI::App* run = app.add_subcommand("run", "run one episode");
  run->add_option("--scenario", scenario_path, "scenario file")->required();
  run->add_option("--planner", planner, "risk | bi | multi");
  run->add_option("--seed", seed, "episode seed (default: scenario seed)");
  run->add_option("--out", out_path, "output directory for episode.csv and snapshots");
  run->add_option("--snapshot-every", snapshot_every, "svg snapshot period in cycles");
  run->add_option("--param", params, "override, e.g. --param h_r=0.5");

  CLI::App* bench = app.add_subcommand("bench", "run a planner comparison batch");
  bench->add_option("--scenario", scenario_path, "scenario file")->required();
  bench->add_option("--planners", planners_csv, "comma-separated planner list");
  bench->add_option("--repeats", repeats, "episodes per planner");
  bench->add_option("--seed-base", seed_base, "episode i uses seed-base + i");
  bench->add_option("--jobs", jobs, "worker threads");
  bench->add_option("--out", out_path, "summary csv path; raw episodes go next to it");
  bench->add_option("--param", params, "override, e.g. --param h_r=0.5");

  CLI::App* ablate = app.add_subcommand("ablate-goal-tree", "compare goal-tree retention modes");
  ablate->add_option("--scenario", scenario_path, "scenario file")->required();
  ablate->add_option("--repeats", repeats, "episodes per variant");
  ablate->add_option("--seed-base", seed_base, "episode i uses seed-base + i");
  ablate->add_option("--out", out_path, "csv path");
  ablate->add_option("--param", params, "override, e.g. --param h_r=0.5");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario_path, planner, seed, out_path, snapshot_every, params);
    if (bench->parsed())
      return cmd_bench(scenario_path, planners_csv, repeats, seed_base, jobs, out_path, params);
    if (ablate->parsed()) return cmd_ablate(scenario_path, repeats, seed_base, out_path, params);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
