#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "riskrrt/random.hpp"
#include "riskrrt/world.hpp"

using namespace riskrrt;

namespace {

const std::string k3x3 =
    "3 3 1.0\n"
    "...\n"
    ".#.\n"
    "...\n";

// Oracle: full-grid enumeration of centers within radius, no window math.
double static_risk_oracle(const OccupancyGrid& g, const Vec2& p, double r) {
  if (p.x() < 0 || p.x() > g.width_m() || p.y() < 0 || p.y() > g.height_m()) return 1.0;
  double worst = 0.0;
  for (int row = 0; row < g.height; ++row)
    for (int col = 0; col < g.width; ++col)
      if ((g.cell_center(col, row) - p).norm() <= r) worst = std::max(worst, g.at(col, row));
  return worst;
}

bool segment_free_oracle(const OccupancyGrid& g, const Vec2& a, const Vec2& b, double r) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / (g.resolution / 2.0))));
  for (int i = 0; i <= n; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / n);
    if (static_risk_oracle(g, p, r) >= 0.5) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("3x3 grid parses with top-row-first orientation") {
  const OccupancyGrid g = load_grid(k3x3);
  CHECK(g.width == 3);
  CHECK(g.height == 3);
  CHECK(g.resolution == doctest::Approx(1.0));
  CHECK(g.at(1, 1) == doctest::Approx(1.0));
  CHECK(g.at(0, 0) == doctest::Approx(0.0));
  // center cell of a 3x3 map at 1 m resolution sits at (1.5, 1.5)
  CHECK(g.cell_center(1, 1).x() == doctest::Approx(1.5));
  CHECK(g.cell_center(1, 1).y() == doctest::Approx(1.5));
  // row 0 is the top: its centers carry the largest y
  CHECK(g.cell_center(0, 0).y() == doctest::Approx(2.5));
  CHECK(g.occupancy_at({1.5, 1.5}) == doctest::Approx(1.0));
  CHECK(g.occupancy_at({0.2, 2.8}) == doctest::Approx(0.0));
  CHECK(g.occupancy_at({-0.1, 1.0}) == doctest::Approx(1.0));
}

TEST_CASE("grid parse errors name the offending line") {
  CHECK_THROWS_AS((void)load_grid(""), ParseError);
  CHECK_THROWS_AS((void)load_grid("3 3\n...\n.#.\n...\n"), ParseError);
  CHECK_THROWS_AS((void)load_grid("3 3 1.0\n...\n.#.\n"), ParseError);       // missing row
  CHECK_THROWS_AS((void)load_grid("3 3 1.0\n...\n.#..\n...\n"), ParseError); // row too long
  CHECK_THROWS_AS((void)load_grid("3 3 1.0\n...\n.X.\n...\n"), ParseError);  // bad cell
  CHECK_THROWS_AS((void)load_grid("3 3 0\n...\n...\n...\n"), ParseError);    // bad resolution
  try {
    (void)load_grid("3 3 1.0\n...\n.X.\n...\n");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("static risk on, near, and far from an occupied cell") {
  const OccupancyGrid g = load_grid(k3x3);
  const Vec2 center = g.cell_center(1, 1);
  CHECK(static_risk(g, center, 0.4) == doctest::Approx(1.0));
  // one cell away with a 1.5-cell radius still covers the occupied center
  CHECK(static_risk(g, {1.5, 0.5}, 1.5) == doctest::Approx(1.0));
  CHECK(static_risk(g, {0.5, 0.5}, 0.4) == doctest::Approx(0.0));
  CHECK(static_risk(g, {-1.0, 1.0}, 0.4) == doctest::Approx(1.0));
  CHECK(static_risk(g, {1.0, 4.0}, 0.4) == doctest::Approx(1.0));
}

TEST_CASE("static risk window matches the full-grid oracle") {
  const OccupancyGrid g = load_grid(
      "8 6 0.5\n"
      "########\n"
      "#......#\n"
      "#..##..#\n"
      "#..##..#\n"
      "#......#\n"
      "########\n");
  Rng rng(5);
  for (int i = 0; i < 3000; ++i) {
    const Vec2 p{uniform_in(rng, -0.5, 4.5), uniform_in(rng, -0.5, 3.5)};
    const double r = uniform_in(rng, 0.05, 1.2);
    CHECK(static_risk(g, p, r) == static_risk_oracle(g, p, r));
  }
}

TEST_CASE("static risk is monotone in the footprint radius") {
  const OccupancyGrid g = load_grid(k3x3);
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p{uniform_in(rng, 0.0, 3.0), uniform_in(rng, 0.0, 3.0)};
    const double r1 = uniform_in(rng, 0.05, 1.0);
    const double r2 = r1 + uniform_in(rng, 0.0, 1.0);
    CHECK(static_risk(g, p, r1) <= static_risk(g, p, r2));
  }
}

TEST_CASE("combined risk frozen examples") {
  const double a[] = {0.5};
  CHECK(combined_risk(0.3, a) == doctest::Approx(0.65).epsilon(1e-12));
  const double b[] = {0.5, 0.5};
  CHECK(combined_risk(0.0, b) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(combined_risk(0.0, {}) == doctest::Approx(0.0));
  const double c[] = {0.0, 0.0, 0.0};
  CHECK(combined_risk(0.0, c) == doctest::Approx(0.0));
  const double d[] = {1.0};
  CHECK(combined_risk(0.0, d) == doctest::Approx(1.0));
  CHECK(combined_risk(1.0, {}) == doctest::Approx(1.0));
}

TEST_CASE("combined risk rejects out-of-range probabilities") {
  const double bad[] = {1.2};
  CHECK_THROWS_AS((void)combined_risk(0.1, bad), std::invalid_argument);
  CHECK_THROWS_AS((void)combined_risk(-0.1, {}), std::invalid_argument);
  const double nan_in[] = {std::nan("")};
  CHECK_THROWS_AS((void)combined_risk(0.1, nan_in), std::invalid_argument);
}

TEST_CASE("combined risk bounds, monotonicity, permutation invariance") {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const int n = static_cast<int>(rng() % 5);
    std::vector<double> pd(n);
    for (double& p : pd) p = uniform01(rng);
    const double ps = uniform01(rng);
    const double r = combined_risk(ps, pd);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(r >= ps);  // adding dynamic risk never reduces total risk
    if (!pd.empty()) {
      CHECK(r >= *std::max_element(pd.begin(), pd.end()) * (1.0 - 1e-12));
      std::vector<double> shuffled = pd;
      std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
      CHECK(combined_risk(ps, shuffled) == doctest::Approx(r).epsilon(1e-12));
      std::vector<double> bumped = pd;
      bumped[0] = std::min(1.0, bumped[0] + 0.1);
      CHECK(combined_risk(ps, bumped) >= r - 1e-12);
    }
  }
}

TEST_CASE("constant-velocity prediction extrapolates the last two samples") {
  PlannerParams p;
  p.N = 2;
  p.dt = 0.5;
  MovingObstacle ob;
  ob.id = 4;
  ob.trajectory = {{0.0, {0.0, 0.0}}, {1.0, {1.0, 0.0}}};
  const MovingObstacle obs[] = {ob};
  const auto preds = predict_obstacles(obs, 1.0, p);
  REQUIRE(preds.size() == 1);
  REQUIRE(preds[0].steps.size() == 3);
  CHECK(preds[0].obstacle_id == 4);
  CHECK(preds[0].steps[0].mean.x() == doctest::Approx(1.0));
  CHECK(preds[0].steps[1].mean.x() == doctest::Approx(1.5));
  CHECK(preds[0].steps[2].mean.x() == doctest::Approx(2.0));
  CHECK(preds[0].steps[0].sigma == doctest::Approx(0.3));
  CHECK(preds[0].steps[1].sigma == doctest::Approx(0.45));
  CHECK(preds[0].steps[2].sigma == doctest::Approx(0.6));
  CHECK(preds[0].steps[2].t == doctest::Approx(2.0));
}

TEST_CASE("prediction handles single-sample and future-only obstacles") {
  PlannerParams p;
  p.N = 3;
  MovingObstacle lone;
  lone.id = 1;
  lone.trajectory = {{0.5, {2.0, 3.0}}};
  MovingObstacle future;
  future.id = 2;
  future.trajectory = {{10.0, {0.0, 0.0}}};
  const MovingObstacle obs[] = {lone, future};
  const auto preds = predict_obstacles(obs, 1.0, p);
  REQUIRE(preds.size() == 1);  // future-only obstacle excluded
  CHECK(preds[0].obstacle_id == 1);
  for (const auto& s : preds[0].steps) {
    CHECK(s.mean.x() == doctest::Approx(2.0));
    CHECK(s.mean.y() == doctest::Approx(3.0));
  }
  // extrapolation starts at t0, not at the stale sample time
  MovingObstacle moving;
  moving.id = 3;
  moving.trajectory = {{0.0, {0.0, 0.0}}, {1.0, {1.0, 0.0}}};
  const MovingObstacle obs2[] = {moving};
  const auto preds2 = predict_obstacles(obs2, 2.0, p);
  REQUIRE(preds2.size() == 1);
  CHECK(preds2[0].steps[0].mean.x() == doctest::Approx(2.0));
}

TEST_CASE("prediction sigmas are non-decreasing") {
  PlannerParams p;
  MovingObstacle ob;
  ob.trajectory = {{0.0, {0.0, 0.0}}};
  const MovingObstacle obs[] = {ob};
  for (const auto& pred : predict_obstacles(obs, 5.0, p))
    for (size_t k = 1; k < pred.steps.size(); ++k)
      CHECK(pred.steps[k].sigma >= pred.steps[k - 1].sigma);
}

TEST_CASE("dynamic risk saturates inside contact and decays outside") {
  PredictionStep step;
  step.mean = {0.0, 0.0};
  step.sigma = 0.4;
  CHECK(dynamic_risk_single(step, {0.3, 0.0}, 0.3, 0.3) == doctest::Approx(1.0));
  CHECK(dynamic_risk_single(step, {0.6, 0.0}, 0.3, 0.3) == doctest::Approx(1.0));
  // exactly one sigma past contact
  CHECK(dynamic_risk_single(step, {1.0, 0.0}, 0.3, 0.3) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(dynamic_risk_single(step, {5.0, 0.0}, 0.3, 0.3) < 1e-6);
}

TEST_CASE("dynamic-only risk composes with static risk and clamps its step") {
  PlannerParams p;
  const OccupancyGrid g = load_grid("10 10 1.0\n" + std::string(
      "..........\n..........\n..........\n..........\n..........\n"
      "..........\n..........\n..........\n..........\n..........\n"));
  MovingObstacle ob;
  ob.id = 0;
  ob.radius = 0.3;
  ob.trajectory = {{0.0, {5.0, 5.0}}};
  const MovingObstacle obs[] = {ob};
  const WorldView world{&g, predict_obstacles(obs, 0.0, p), 0.3};

  CHECK(dynamic_risk_at(world, {5.0, 5.0}, 0) == doctest::Approx(1.0));
  CHECK(dynamic_risk_at(world, {1.0, 1.0}, 0) < 1e-6);
  // clamped step equals the horizon's last step
  CHECK(dynamic_risk_at(world, {5.8, 5.0}, 999) ==
        doctest::Approx(dynamic_risk_at(world, {5.8, 5.0}, p.N)).epsilon(1e-12));
  // on a free grid the combined risk is exactly the dynamic part
  CHECK(risk_at(world, {5.8, 5.0}, 3) ==
        doctest::Approx(dynamic_risk_at(world, {5.8, 5.0}, 3)).epsilon(1e-12));

  const WorldView empty{&g, {}, 0.3};
  CHECK(dynamic_risk_at(empty, {5.0, 5.0}, 0) == 0.0);
}

TEST_CASE("brake envelope clears parked obstacles behind but not ahead") {
  PlannerParams p;
  const OccupancyGrid g = load_grid("10 10 1.0\n" + std::string(
      "..........\n..........\n..........\n..........\n..........\n"
      "..........\n..........\n..........\n..........\n..........\n"));
  MovingObstacle ob;
  ob.id = 0;
  ob.radius = 0.3;
  ob.trajectory = {{0.0, {6.4, 5.0}}};
  const MovingObstacle obs[] = {ob};
  const WorldView world{&g, predict_obstacles(obs, 0.0, p), 0.3};

  RobotState s;
  s.x = 5.0;
  s.y = 5.0;
  s.v = 1.0;  // heading 0: braking sweeps toward the obstacle
  CHECK(!brake_clear_of_predictions(world, s, 1, p));
  s.theta = kPi;  // same speed pointed away
  CHECK(brake_clear_of_predictions(world, s, 1, p));
  s.theta = 0.0;
  s.v = 0.0;  // already at rest: nothing is swept
  CHECK(brake_clear_of_predictions(world, s, 1, p));
  const WorldView empty{&g, {}, 0.3};
  s.v = 1.0;
  CHECK(brake_clear_of_predictions(empty, s, 1, p));
}

TEST_CASE("segment checks against the brute-force oracle") {
  const OccupancyGrid g = load_grid(
      "10 10 0.5\n"
      "..........\n"
      "..........\n"
      "..........\n"
      "..........\n"
      "...####...\n"
      "...####...\n"
      "..........\n"
      "..........\n"
      "..........\n"
      "..........\n");
  const double r = 0.3;
  CHECK(segment_free(g, {0.5, 0.5}, {4.5, 0.5}, r));
  CHECK(!segment_free(g, {0.5, 2.5}, {4.5, 2.5}, r));  // crosses the block
  Rng rng(23);
  for (int i = 0; i < 400; ++i) {
    const Vec2 a{uniform_in(rng, 0.0, 5.0), uniform_in(rng, 0.0, 5.0)};
    const Vec2 b{uniform_in(rng, 0.0, 5.0), uniform_in(rng, 0.0, 5.0)};
    CHECK(segment_free(g, a, b, r) == segment_free_oracle(g, a, b, r));
  }
}

TEST_CASE("grazing pass at radius plus one resolution of clearance stays free") {
  const OccupancyGrid g = load_grid(
      "9 9 0.2\n"
      ".........\n"
      ".........\n"
      ".........\n"
      ".........\n"
      "....#....\n"
      ".........\n"
      ".........\n"
      ".........\n"
      ".........\n");
  const double r = 0.3;
  const Vec2 occupied = g.cell_center(4, 4);
  const double clearance = r + g.resolution;
  const double y = occupied.y() - clearance;
  CHECK(segment_free(g, {0.1, y}, {1.7, y}, r));
  CHECK(segment_free_oracle(g, {0.1, y}, {1.7, y}, r));
  // shaving the clearance below the radius must collide
  const double y_bad = occupied.y() - r + 0.05;
  CHECK(!segment_free(g, {0.1, y_bad}, {1.7, y_bad}, r));
}

TEST_CASE("free-point sampler lands on free cells only") {
  const OccupancyGrid g = load_grid(
      "4 4 1.0\n"
      "####\n"
      "##.#\n"
      "####\n"
      "####\n");
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p = sample_free_point(g, rng);
    CHECK(g.occupancy_at(p) < 0.5);
  }
}
