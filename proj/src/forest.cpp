#include "riskrrt/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "riskrrt/format.hpp"

namespace riskrrt {

// ---------------------------------------------------------------------------
// SubTree

const SubTreeNode& SubTree::node(int node_id) const {
  const auto it = index_.find(node_id);
  if (it == index_.end()) throw std::invalid_argument("SubTree: unknown node id");
  return nodes_[it->second];
}

SubTreeNode& SubTree::mutable_node(int node_id) {
  const auto it = index_.find(node_id);
  if (it == index_.end()) throw std::invalid_argument("SubTree: unknown node id");
  return nodes_[it->second];
}

std::vector<int> SubTree::path_between(int from, int to) const {
  // ancestor chain of `from` up to the root
  std::vector<int> from_chain;
  for (int cur = from;;) {
    from_chain.push_back(cur);
    const auto& n = node(cur);
    if (!n.parent) break;
    cur = *n.parent;
  }
  std::unordered_map<int, size_t> rank;
  for (size_t i = 0; i < from_chain.size(); ++i) rank[from_chain[i]] = i;

  // climb from `to` until the chains join
  std::vector<int> to_chain;
  int join = -1;
  for (int cur = to;;) {
    if (rank.count(cur)) {
      join = cur;
      break;
    }
    to_chain.push_back(cur);
    const auto& n = node(cur);
    if (!n.parent) break;
    cur = *n.parent;
  }
  if (join < 0) throw std::logic_error("SubTree::path_between: nodes not connected");

  std::vector<int> path(from_chain.begin(), from_chain.begin() + rank[join] + 1);
  for (auto it = to_chain.rbegin(); it != to_chain.rend(); ++it) path.push_back(*it);
  return path;
}

// ---------------------------------------------------------------------------
// SubTreeForest

int SubTreeForest::create_subtree(const Vec2& point, bool goal) {
  const int tree_id = next_tree_id_++;
  const int node_id = next_node_id_++;
  SubTree t(tree_id, goal ? std::optional<int>(node_id) : std::nullopt);
  SubTreeNode n;
  n.id = node_id;
  n.position = point;
  t.root_id_ = node_id;
  t.index_[node_id] = 0;
  t.nodes_.push_back(n);
  trees_.emplace(tree_id, std::move(t));
  owner_[node_id] = tree_id;
  return tree_id;
}

const SubTree& SubTreeForest::tree(int id) const {
  const auto it = trees_.find(id);
  if (it == trees_.end()) throw std::invalid_argument("SubTreeForest: unknown sub-tree id");
  return it->second;
}

std::optional<int> SubTreeForest::grow_subtree(int subtree_id, const Vec2& x_rand,
                                               const OccupancyGrid& grid, double robot_radius) {
  auto it = trees_.find(subtree_id);
  if (it == trees_.end()) throw std::invalid_argument("grow_subtree: unknown sub-tree id");
  SubTree& t = it->second;

  int nearest_id = -1;
  double best = std::numeric_limits<double>::infinity();
  for (const SubTreeNode& n : t.nodes_) {
    const double d = (n.position - x_rand).norm();
    if (d < best) {
      best = d;
      nearest_id = n.id;
    }
  }
  if (!segment_free(grid, t.node(nearest_id).position, x_rand, robot_radius)) return std::nullopt;

  const int node_id = next_node_id_++;
  SubTreeNode n;
  n.id = node_id;
  n.position = x_rand;
  n.parent = nearest_id;
  t.index_[node_id] = t.nodes_.size();
  t.nodes_.push_back(n);
  owner_[node_id] = subtree_id;
  return node_id;
}

SubTreeForest::Nearest SubTreeForest::nearest(const Vec2& point) const {
  if (trees_.empty()) throw std::logic_error("SubTreeForest::nearest: empty forest");
  Nearest best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const auto& [tid, t] : trees_) {
    for (const SubTreeNode& n : t.nodes_) {
      const double d = (n.position - point).norm();
      if (d < best.distance ||
          (d == best.distance &&
           (tid < best.subtree_id || (tid == best.subtree_id && n.id < best.node_id)))) {
        best.distance = d;
        best.subtree_id = tid;
        best.node_id = n.id;
      }
    }
  }
  return best;
}

void SubTreeForest::merge_subtrees(int keep_id, int absorb_id, int contact_keep_node,
                                   int contact_absorb_node) {
  if (keep_id == absorb_id) throw std::invalid_argument("merge_subtrees: identical sub-trees");
  auto kit = trees_.find(keep_id);
  auto ait = trees_.find(absorb_id);
  if (kit == trees_.end() || ait == trees_.end())
    throw std::invalid_argument("merge_subtrees: unknown sub-tree id");
  SubTree& keep = kit->second;
  SubTree& absorb = ait->second;
  if (!keep.has_node(contact_keep_node) || !absorb.has_node(contact_absorb_node))
    throw std::invalid_argument("merge_subtrees: contact node not in its sub-tree");

  // re-root the absorbed tree at its contact node by reversing the parent
  // links along the root -> contact path
  std::vector<int> chain;  // contact .. old root
  for (int cur = contact_absorb_node;;) {
    chain.push_back(cur);
    const auto& n = absorb.node(cur);
    if (!n.parent) break;
    cur = *n.parent;
  }
  for (size_t i = chain.size(); i-- > 1;)
    absorb.mutable_node(chain[i]).parent = chain[i - 1];
  absorb.mutable_node(contact_absorb_node).parent = contact_keep_node;

  for (const SubTreeNode& n : absorb.nodes_) {
    keep.index_[n.id] = keep.nodes_.size();
    keep.nodes_.push_back(n);
    owner_[n.id] = keep_id;
  }
  if (!keep.goal_node_ && absorb.goal_node_) keep.goal_node_ = absorb.goal_node_;
  trees_.erase(ait);
}

std::vector<Vec2> SubTreeForest::extract_heuristic_path(int subtree_id,
                                                        int contact_node_id) const {
  const SubTree& t = tree(subtree_id);
  if (!t.has_node(contact_node_id))
    throw std::invalid_argument("extract_heuristic_path: contact node not in sub-tree");
  std::vector<Vec2> path;
  if (t.contains_goal()) {
    for (int id : t.path_between(*t.goal_node(), contact_node_id))
      path.push_back(t.node(id).position);
  } else {
    for (const SubTreeNode& n : t.nodes()) path.push_back(n.position);
  }
  return path;
}

void SubTreeForest::consume(int subtree_id, bool retain_goal_tree) {
  auto it = trees_.find(subtree_id);
  if (it == trees_.end()) throw std::invalid_argument("consume: unknown sub-tree id");
  if (it->second.contains_goal() && retain_goal_tree) return;
  for (const SubTreeNode& n : it->second.nodes_) owner_.erase(n.id);
  trees_.erase(it);
}

std::optional<int> SubTreeForest::owner_of(int node_id) const {
  const auto it = owner_.find(node_id);
  if (it == owner_.end()) return std::nullopt;
  return it->second;
}

const SubTreeNode* SubTreeForest::find_node(int node_id) const {
  const auto owner = owner_of(node_id);
  if (!owner) return nullptr;
  return &tree(*owner).node(node_id);
}

std::optional<std::string> SubTreeForest::audit() const {
  size_t counted = 0;
  for (const auto& [tid, t] : trees_) {
    if (t.id() != tid) return "sub-tree id mismatch";
    if (t.nodes_.empty()) return "empty sub-tree " + std::to_string(tid);
    if (t.index_.size() != t.nodes_.size()) return "index desync in sub-tree " + std::to_string(tid);
    int roots = 0;
    int found_root = -1;
    for (const SubTreeNode& n : t.nodes_) {
      ++counted;
      const auto oit = owner_.find(n.id);
      if (oit == owner_.end() || oit->second != tid)
        return "owner map wrong for node " + std::to_string(n.id);
      const auto iit = t.index_.find(n.id);
      if (iit == t.index_.end() || t.nodes_[iit->second].id != n.id)
        return "index wrong for node " + std::to_string(n.id);
      if (!n.parent) {
        ++roots;
        found_root = n.id;
      } else if (!t.has_node(*n.parent)) {
        return "parent outside sub-tree at node " + std::to_string(n.id);
      }
    }
    if (roots != 1) return "sub-tree " + std::to_string(tid) + " has " + std::to_string(roots) + " roots";
    if (found_root != t.root_id_) return "root tracking stale in sub-tree " + std::to_string(tid);
    if (t.contains_goal() && !t.has_node(*t.goal_node()))
      return "goal node missing from sub-tree " + std::to_string(tid);
    // acyclicity + connectivity: every node must reach the root
    for (const SubTreeNode& n : t.nodes_) {
      size_t hops = 0;
      int cur = n.id;
      while (true) {
        const auto& m = t.node(cur);
        if (!m.parent) break;
        cur = *m.parent;
        if (++hops > t.nodes_.size()) return "cycle in sub-tree " + std::to_string(tid);
      }
    }
  }
  if (counted != owner_.size()) return "owner map size mismatch";
  return std::nullopt;
}

std::string SubTreeForest::export_csv() const {
  std::string out = "id,x,y,parent,subtree\n";
  for (const auto& [tid, t] : trees_) {
    for (const SubTreeNode& n : t.nodes()) {
      out += std::to_string(n.id);
      out += ',';
      out += fmt_double(n.position.x());
      out += ',';
      out += fmt_double(n.position.y());
      out += ',';
      out += std::to_string(n.parent ? *n.parent : -1);
      out += ',';
      out += std::to_string(tid);
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Meets

bool MeetEvent::higher_priority_than(const MeetEvent& o) const {
  auto key = [](const MeetEvent& e) {
    return std::tuple<int, double, int, int, int, int>(
        e.kind == Kind::rooted_subtree ? 0 : 1, e.distance,
        e.kind == Kind::rooted_subtree ? e.subtree_b : e.subtree_a,
        e.kind == Kind::rooted_subtree ? e.rooted_node : e.subtree_b,
        e.kind == Kind::rooted_subtree ? e.node_b : e.node_a, e.node_b);
  };
  return key(*this) < key(o);
}

std::optional<MeetEvent> find_meet(const TimedTree& rooted, const SubTreeForest& forest,
                                   const PlannerParams& p, const OccupancyGrid& grid,
                                   double robot_radius, const MeetExclusions* exclusions) {
  std::optional<MeetEvent> best;
  // rooted vs forest
  for (const auto& [rid, rn] : rooted.nodes()) {
    for (const auto& [tid, t] : forest.trees()) {
      for (const SubTreeNode& fn : t.nodes()) {
        const double d = (rn.state.position() - fn.position).norm();
        if (d > p.meet_radius) continue;
        if (exclusions && exclusions->count({rid, fn.id})) continue;
        if (!segment_free(grid, rn.state.position(), fn.position, robot_radius)) continue;
        MeetEvent e;
        e.kind = MeetEvent::Kind::rooted_subtree;
        e.rooted_node = rid;
        e.subtree_b = tid;
        e.node_b = fn.id;
        e.distance = d;
        if (!best || e.higher_priority_than(*best)) best = e;
      }
    }
  }
  // sub-tree vs sub-tree
  for (auto ait = forest.trees().begin(); ait != forest.trees().end(); ++ait) {
    auto bit = ait;
    for (++bit; bit != forest.trees().end(); ++bit) {
      for (const SubTreeNode& na : ait->second.nodes()) {
        for (const SubTreeNode& nb : bit->second.nodes()) {
          const double d = (na.position - nb.position).norm();
          if (d > p.meet_radius) continue;
          if (!segment_free(grid, na.position, nb.position, robot_radius)) continue;
          MeetEvent e;
          e.kind = MeetEvent::Kind::subtree_subtree;
          e.subtree_a = ait->first;
          e.node_a = na.id;
          e.subtree_b = bit->first;
          e.node_b = nb.id;
          e.distance = d;
          if (!best || e.higher_priority_than(*best)) best = e;
        }
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Heuristic sampling

HeuristicDistribution make_heuristic(const std::vector<Vec2>& path, double sigma, double h_r,
                                     const MapBounds& bounds) {
  HeuristicDistribution d;
  d.h_r = h_r;
  d.bounds = bounds;
  d.components.reserve(path.size());
  for (const Vec2& p : path) d.components.push_back({p, sigma});
  return d;
}

Vec2 heuristic_sample(const HeuristicDistribution& dist, Rng& rng, bool* gaussian_branch) {
  if (dist.components.empty())
    throw std::invalid_argument("heuristic_sample: no components");
  if (gaussian_branch) *gaussian_branch = false;
  if (dist.h_r <= 0.0) return uniform_point(rng, dist.bounds);

  if (uniform01(rng) < dist.h_r) {
    if (gaussian_branch) *gaussian_branch = true;
    const size_t l = dist.components.size();
    size_t k = static_cast<size_t>(uniform01(rng) * static_cast<double>(l));
    if (k >= l) k = l - 1;
    const HeuristicComponent& c = dist.components[k];
    Vec2 p{0.0, 0.0};
    for (int attempt = 0; attempt < 100; ++attempt) {
      p = gaussian_point(rng, c.mean, c.sigma);
      if (dist.bounds.contains(p)) return p;
    }
    return dist.bounds.clamp(p);
  }
  return uniform_point(rng, dist.bounds);
}

}  // namespace riskrrt
