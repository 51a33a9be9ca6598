#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "riskrrt/random.hpp"
#include "riskrrt/timed_tree.hpp"

using namespace riskrrt;

namespace riskrrt {
struct TimedTreeTestAccess {
  static TimedNode& node(TimedTree& t, int id) {
    return const_cast<TimedNode&>(t.node(id));
  }
};
}  // namespace riskrrt

namespace {

RobotState state_at(double x, double y, double t) {
  RobotState s;
  s.x = x;
  s.y = y;
  s.t = t;
  return s;
}

/// Grows a child with consistent timestamps; risk supplied by the caller.
int grow(TimedTree& tree, int parent, double x, double y, double risk) {
  const TimedNode& p = tree.node(parent);
  const auto id = tree.add_node(parent, state_at(x, y, p.state.t + tree.dt()), {0.5, 0.0}, risk);
  REQUIRE(id.has_value());
  return *id;
}

const OccupancyGrid& empty_grid() {
  static const OccupancyGrid g = load_grid(
      "10 10 1.0\n"
      "..........\n..........\n..........\n..........\n..........\n"
      "..........\n..........\n..........\n..........\n..........\n");
  return g;
}

}  // namespace

TEST_CASE("nodes chain depth, time, and path risk") {
  TimedTree tree(state_at(1, 1, 0), 10, 0.5);
  CHECK(tree.size() == 1);
  const int a = grow(tree, tree.root_id(), 1.5, 1.0, 0.1);
  const int b = grow(tree, a, 2.0, 1.0, 0.2);
  CHECK(tree.size() == 3);
  CHECK(tree.node(a).depth == 1);
  CHECK(tree.node(b).depth == 2);
  CHECK(tree.node(b).state.t == doctest::Approx(1.0));
  // 1 - (1 - 0.1)(1 - 0.2) = 0.28
  CHECK(tree.node(b).path_risk == doctest::Approx(0.28).epsilon(1e-12));
  CHECK(!tree.audit());
}

TEST_CASE("depth cap rejects, unknown parent throws") {
  TimedTree tree(state_at(0, 0, 0), 2, 0.5);
  const int a = grow(tree, tree.root_id(), 1, 0, 0);
  const int b = grow(tree, a, 2, 0, 0);
  CHECK(!tree.add_node(b, state_at(3, 0, 1.5), {0.5, 0}, 0.0).has_value());
  CHECK(tree.size() == 3);
  CHECK_THROWS_AS((void)tree.add_node(99, state_at(0, 0, 0.5), {0, 0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("prune keeps exactly the executed subtree") {
  TimedTree tree(state_at(0, 0, 0), 10, 0.5);
  const int kept = grow(tree, tree.root_id(), 1, 0, 0.1);
  const int lost = grow(tree, tree.root_id(), 0, 1, 0.1);
  const int kept_child = grow(tree, kept, 2, 0, 0.3);
  const int lost_child = grow(tree, lost, 0, 2, 0.1);
  grow(tree, kept_child, 3, 0, 0.0);

  // oracle: collect the executed child's subtree by traversal before pruning
  std::set<int> expect;
  std::vector<int> stack{kept};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    expect.insert(cur);
    for (int c : tree.node(cur).children) stack.push_back(c);
  }

  tree.prune_unreachable(kept);
  CHECK(tree.size() == expect.size());
  for (int id : expect) CHECK_NOTHROW((void)tree.node(id));
  CHECK_THROWS((void)tree.node(lost));
  CHECK_THROWS((void)tree.node(lost_child));
  CHECK(tree.root_id() == kept);
  CHECK(tree.node(kept).depth == 0);
  CHECK(!tree.node(kept).parent.has_value());
  CHECK(tree.node(kept_child).depth == 1);
  // path risk rebased on the new root: root keeps its own step risk
  CHECK(tree.node(kept).path_risk == doctest::Approx(0.1));
  CHECK(tree.node(kept_child).path_risk == doctest::Approx(1.0 - 0.9 * 0.7).epsilon(1e-12));
  CHECK(!tree.audit());
}

TEST_CASE("prune of a non-child is a contract violation") {
  TimedTree tree(state_at(0, 0, 0), 10, 0.5);
  const int a = grow(tree, tree.root_id(), 1, 0, 0);
  const int b = grow(tree, a, 2, 0, 0);
  CHECK_THROWS_AS(tree.prune_unreachable(b), std::invalid_argument);
  CHECK_THROWS_AS(tree.prune_unreachable(1234), std::invalid_argument);
}

TEST_CASE("refresh recomputes risks from the world and removes hot subtrees") {
  PlannerParams p;
  TimedTree tree(state_at(5, 5, 0), 10, p.dt);
  const int a = grow(tree, tree.root_id(), 5.5, 5, 0.0);
  const int b = grow(tree, a, 6, 5, 0.0);
  grow(tree, b, 6.5, 5, 0.0);
  const int side = grow(tree, tree.root_id(), 5, 5.5, 0.0);

  // obstacle parked inside contact range of node b only
  MovingObstacle ob;
  ob.id = 1;
  ob.radius = 0.3;
  ob.trajectory = {{0.0, {6.5, 5.0}}};
  const MovingObstacle obs[] = {ob};
  WorldView world{&empty_grid(), predict_obstacles(obs, 0.0, p), 0.3};

  tree.refresh_risks(world, p);
  CHECK(!tree.audit());
  // b and its child are gone; a and side survive with updated risks
  CHECK_THROWS((void)tree.node(b));
  CHECK(tree.size() == 3);
  CHECK(tree.node(a).step_risk > 0.0);
  CHECK(tree.node(a).step_risk < p.risk_cap);
  CHECK(tree.node(side).path_risk ==
        doctest::Approx(1.0 - (1.0 - tree.node(tree.root_id()).path_risk) *
                                  (1.0 - tree.node(side).step_risk))
            .epsilon(1e-12));
  // root is exempt even when its own risk saturates
  MovingObstacle on_root = ob;
  on_root.trajectory = {{0.0, {5.0, 5.0}}};
  const MovingObstacle obs2[] = {on_root};
  WorldView world2{&empty_grid(), predict_obstacles(obs2, 0.0, p), 0.3};
  tree.refresh_risks(world2, p);
  CHECK(tree.node(tree.root_id()).step_risk == doctest::Approx(1.0));
  CHECK(tree.size() >= 1);
  CHECK(!tree.audit());
}

TEST_CASE("refresh culls nodes whose brake envelope meets a predicted obstacle") {
  PlannerParams p;
  TimedTree tree(state_at(5, 5, 0), 10, p.dt);
  // two children at the same spot: one moving toward the obstacle, one at rest
  RobotState rolling = state_at(5, 5, p.dt);
  rolling.v = 1.0;  // heading 0: the brake sweep runs straight at the obstacle
  const int mover = *tree.add_node(tree.root_id(), rolling, {1.0, 0.0}, 0.0);
  const int rester = grow(tree, tree.root_id(), 5, 5, 0.0);

  MovingObstacle ob;
  ob.id = 1;
  ob.radius = 0.3;
  ob.trajectory = {{0.0, {6.4, 5.0}}};
  const MovingObstacle obs[] = {ob};
  WorldView world{&empty_grid(), predict_obstacles(obs, 0.0, p), 0.3};

  // both stand clear of the obstacle now; only the mover cannot stop in time
  REQUIRE(risk_at(world, {5.0, 5.0}, 1) < p.risk_cap);
  tree.refresh_risks(world, p);
  CHECK(!tree.audit());
  CHECK_THROWS((void)tree.node(mover));
  CHECK(tree.has_node(rester));
}

TEST_CASE("best trajectory returns the control chain to the strongest node") {
  PlannerParams p;
  TimedTree tree(state_at(0, 0, 0), 10, p.dt);
  int cur = tree.root_id();
  for (int i = 1; i <= 3; ++i) {
    const auto id = tree.add_node(cur, state_at(0.5 * i, 0, 0.5 * i),
                                  {0.5 * i, 0.0}, 0.0);
    REQUIRE(id);
    cur = *id;
  }
  const auto best = tree.choose_best_trajectory({5, 0}, p);
  REQUIRE(best);
  CHECK(best->first == cur);
  REQUIRE(best->second.size() == 3);
  CHECK(best->second[0].v_cmd == doctest::Approx(0.5));
  CHECK(best->second[2].v_cmd == doctest::Approx(1.5));
}

TEST_CASE("best trajectory is empty for root-only and for all-risky trees") {
  PlannerParams p;
  TimedTree tree(state_at(0, 0, 0), 10, p.dt);
  CHECK(!tree.choose_best_trajectory({5, 0}, p));
  grow(tree, tree.root_id(), 0.5, 0, 0.6);  // path risk 0.6 >= 0.5
  CHECK(!tree.choose_best_trajectory({5, 0}, p));
}

TEST_CASE("best trajectory ties break to the lowest id") {
  PlannerParams p;
  TimedTree tree(state_at(0, 0, 0), 10, p.dt);
  const int first = grow(tree, tree.root_id(), 1, 1, 0.2);
  grow(tree, tree.root_id(), 1, -1, 0.2);  // mirror image, same weight
  const auto best = tree.choose_best_trajectory({0, 0}, p);
  REQUIRE(best);
  CHECK(best->first == first);
}

TEST_CASE("nearest picks minimum distance with lowest-id ties") {
  TimedTree tree(state_at(0, 0, 0), 10, 0.5);
  const int a = grow(tree, tree.root_id(), 2, 0, 0);
  grow(tree, tree.root_id(), 0, 2, 0);
  const auto n = tree.nearest({2.1, 0.0});
  CHECK(n.node_id == a);
  CHECK(n.distance == doctest::Approx(0.1));
  const auto tie = tree.nearest({2.0, 2.0});  // equidistant from both children, root farther
  CHECK(tie.node_id == a);
}

TEST_CASE("path risk recurrence holds under random growth (oracle recompute)") {
  Rng rng(41);
  PlannerParams p;
  TimedTree tree(state_at(0, 0, 0), 8, p.dt);
  std::vector<int> ids{tree.root_id()};
  for (int i = 0; i < 300; ++i) {
    const int parent = ids[rng() % ids.size()];
    const TimedNode& pn = tree.node(parent);
    const auto id = tree.add_node(
        parent, state_at(uniform_in(rng, 0, 10), uniform_in(rng, 0, 10), pn.state.t + p.dt),
        {uniform_in(rng, 0, 1), uniform_in(rng, -0.5, 0.5)}, uniform01(rng));
    if (id) ids.push_back(*id);
  }
  REQUIRE(!tree.audit());
  // independent recompute by walking parents
  for (const auto& [id, n] : tree.nodes()) {
    double expect = 0.0;
    std::vector<double> chain;
    for (int cur = id;;) {
      const TimedNode& m = tree.node(cur);
      chain.push_back(m.step_risk);
      if (!m.parent) break;
      cur = *m.parent;
    }
    double survive = 1.0;
    for (double r : chain) survive *= 1.0 - r;
    expect = 1.0 - survive;
    CHECK(n.path_risk == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("rebase shifts timestamps uniformly") {
  TimedTree tree(state_at(0, 0, 0), 10, 0.5);
  const int a = grow(tree, tree.root_id(), 1, 0, 0);
  tree.rebase_root_time(3.0);
  CHECK(tree.root().state.t == doctest::Approx(3.0));
  CHECK(tree.node(a).state.t == doctest::Approx(3.5));
  CHECK(!tree.audit());
}

TEST_CASE("audit flags corrupted trees") {
  TimedTree tree(state_at(0, 0, 0), 10, 0.5);
  const int a = grow(tree, tree.root_id(), 1, 0, 0.1);
  REQUIRE(!tree.audit());
  SUBCASE("broken depth") {
    TimedTreeTestAccess::node(tree, a).depth = 5;
    CHECK(tree.audit());
  }
  SUBCASE("broken timestamp") {
    TimedTreeTestAccess::node(tree, a).state.t = 9.0;
    CHECK(tree.audit());
  }
  SUBCASE("broken path risk") {
    TimedTreeTestAccess::node(tree, a).path_risk = 0.9;
    CHECK(tree.audit());
  }
}

TEST_CASE("csv export lists id order with -1 root parent") {
  TimedTree tree(state_at(0.25, 0.5, 0), 10, 0.5);
  grow(tree, tree.root_id(), 1, 0.5, 0);
  const std::string csv = tree.export_csv();
  CHECK(csv == "id,x,y,t,depth,parent\n"
               "0,0.25,0.5,0,0,-1\n"
               "1,1,0.5,0.5,1,0\n");
}
