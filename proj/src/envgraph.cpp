#include "navlab/envgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace navlab::envgraph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dijkstra from one source over the adjacency lists. Relaxation is strict,
// pop order is keyed by (distance, node id), so results are deterministic.
void dijkstra_from(const NavGraph& g, int source, Eigen::VectorXd& dist_out,
                   Eigen::VectorXi& hops_out) {
  const int n = g.node_count();
  dist_out.setConstant(n, kInf);
  hops_out.setConstant(n, -1);
  dist_out[source] = 0.0;
  hops_out[source] = 0;

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist_out[u]) continue;
    for (const Neighbor& nb : g.adjacency[u]) {
      const double cand = dist_out[u] + nb.length;
      if (cand < dist_out[nb.id]) {
        dist_out[nb.id] = cand;
        hops_out[nb.id] = hops_out[u] + 1;
        queue.push({cand, nb.id});
      }
    }
  }
}

// All-pairs geodesics. Rows are computed from the lower-id endpoint and
// mirrored, which makes dist exactly symmetric.
void compute_geodesics(NavGraph& g) {
  const int n = g.node_count();
  g.dist.setZero(n, n);
  g.hops.setZero(n, n);
  Eigen::VectorXd d(n);
  Eigen::VectorXi h(n);
  for (int u = 0; u < n; ++u) {
    dijkstra_from(g, u, d, h);
    for (int v = u; v < n; ++v) {
      g.dist(u, v) = d[v];
      g.dist(v, u) = d[v];
      g.hops(u, v) = h[v];
      g.hops(v, u) = h[v];
    }
  }
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

double NavGraph::edge_length(int u, int v) const {
  for (const Neighbor& nb : adjacency[u]) {
    if (nb.id == v) return nb.length;
  }
  throw std::invalid_argument("edge_length: nodes are not adjacent");
}

NavGraph build_graph(Eigen::Matrix2Xd positions, std::vector<Edge> edges,
                     double connect_radius, double area_side, std::uint64_t seed) {
  NavGraph g;
  g.positions = std::move(positions);
  g.edges = std::move(edges);
  g.connect_radius = connect_radius;
  g.area_side = area_side;
  g.seed = seed;

  const int n = g.node_count();
  g.adjacency.assign(static_cast<std::size_t>(n), {});
  for (const Edge& e : g.edges) {
    g.adjacency[e.u].push_back({e.v, e.length});
    g.adjacency[e.v].push_back({e.u, e.length});
  }
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  }
  compute_geodesics(g);
  return g;
}

NavGraph generate_graph(int n_nodes, double area_side, double connect_radius,
                        std::uint64_t seed) {
  if (n_nodes < 2) throw std::invalid_argument("generate_graph: n_nodes must be >= 2");
  if (area_side <= 0.0) throw std::invalid_argument("generate_graph: area_side must be > 0");
  if (connect_radius <= 0.0)
    throw std::invalid_argument("generate_graph: connect_radius must be > 0");

  Rng rng = make_rng(seed, {stream::kGraph});
  Eigen::Matrix2Xd positions(2, n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    positions(0, i) = rng.uniform() * area_side;
    positions(1, i) = rng.uniform() * area_side;
  }

  std::vector<Edge> edges;
  for (int i = 0; i < n_nodes; ++i) {
    for (int j = i + 1; j < n_nodes; ++j) {
      const double len = (positions.col(i) - positions.col(j)).norm();
      if (len <= connect_radius) edges.push_back({i, j, len});
    }
  }

  // Repair connectivity with the closest cross-component pair until the
  // graph is a single component.
  UnionFind uf(n_nodes);
  int components = n_nodes;
  for (const Edge& e : edges) {
    if (uf.unite(e.u, e.v)) --components;
  }
  while (components > 1) {
    int best_u = -1, best_v = -1;
    double best_len = kInf;
    for (int i = 0; i < n_nodes; ++i) {
      for (int j = i + 1; j < n_nodes; ++j) {
        if (uf.find(i) == uf.find(j)) continue;
        const double len = (positions.col(i) - positions.col(j)).norm();
        if (len < best_len) {
          best_len = len;
          best_u = i;
          best_v = j;
        }
      }
    }
    edges.push_back({best_u, best_v, best_len});
    uf.unite(best_u, best_v);
    --components;
  }

  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  return build_graph(std::move(positions), std::move(edges), connect_radius,
                     area_side, seed);
}

std::vector<EpisodeSpec> sample_episodes(const NavGraph& graph, int count,
                                         std::pair<double, double> l_range,
                                         double noise_sigma, double epsilon,
                                         std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample_episodes: count must be >= 0");
  if (epsilon <= 0.0) throw std::invalid_argument("sample_episodes: epsilon must be > 0");
  if (noise_sigma < 0.0)
    throw std::invalid_argument("sample_episodes: noise_sigma must be >= 0");
  if (!(l_range.first > 0.0) || l_range.second < l_range.first)
    throw std::invalid_argument("sample_episodes: l_range must satisfy 0 < lo <= hi");

  std::vector<EpisodeSpec> episodes;
  if (count == 0) return episodes;

  const int n = graph.node_count();
  std::vector<std::pair<int, int>> valid_pairs;
  for (int s = 0; s < n; ++s) {
    for (int g = 0; g < n; ++g) {
      if (s == g) continue;
      const double d = graph.dist(s, g);
      if (d >= l_range.first && d <= l_range.second) valid_pairs.push_back({s, g});
    }
  }
  if (valid_pairs.empty())
    throw std::runtime_error("sample_episodes: no start/goal pair satisfies l_range");

  Rng rng = make_rng(seed, {stream::kEpisodes});
  episodes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto [s, g] = valid_pairs[rng.below(static_cast<int>(valid_pairs.size()))];
    EpisodeSpec ep;
    ep.graph = &graph;
    ep.start = s;
    ep.goal = g;
    const double nx = rng.normal();
    const double ny = rng.normal();
    ep.goal_estimate = graph.position(g) + noise_sigma * Vec2(nx, ny);
    ep.l_star = graph.dist(s, g);
    ep.epsilon = epsilon;
    ep.t_max = graph.hops(s, g) + 6;
    episodes.push_back(ep);
  }
  return episodes;
}

AgentState initial_state(const EpisodeSpec& episode) {
  AgentState state;
  state.node = episode.start;
  state.visited.assign(static_cast<std::size_t>(episode.graph->node_count()), 0);
  state.visited[episode.start] = 1;
  state.step = 0;
  state.path_len = 0.0;
  state.d_t = episode.graph->dist(episode.start, episode.goal);
  return state;
}

std::vector<ActionCandidate> candidates(const AgentState& state,
                                        const EpisodeSpec& episode) {
  const NavGraph& g = *episode.graph;
  const Vec2 here = g.position(state.node);
  const Vec2 to_goal = episode.goal_estimate - here;
  const double to_goal_norm = to_goal.norm();
  const double two_eps_sq = 2.0 * episode.epsilon * episode.epsilon;

  const auto proximity = [&](const Vec2& p) {
    return std::exp(-(p - episode.goal_estimate).squaredNorm() / two_eps_sq);
  };

  std::vector<ActionCandidate> cands;
  cands.reserve(g.adjacency[state.node].size() + 1);

  ActionCandidate stop;
  stop.kind = ActionKind::Stop;
  stop.target = state.node;
  stop.features << 1.0, 0.0, 0.0, state.visited[state.node] ? 1.0 : 0.0,
      proximity(here), 1.0;
  cands.push_back(stop);

  for (const Neighbor& nb : g.adjacency[state.node]) {
    const Vec2 there = g.position(nb.id);
    const Vec2 along = there - here;
    double bearing = 0.0;
    if (to_goal_norm > 1e-12 && along.norm() > 1e-12)
      bearing = along.dot(to_goal) / (along.norm() * to_goal_norm);
    ActionCandidate move;
    move.kind = ActionKind::Move;
    move.target = nb.id;
    move.features << 0.0, bearing,
        std::clamp(nb.length / g.connect_radius, 0.0, 1.0),
        state.visited[nb.id] ? 1.0 : 0.0, proximity(there), 1.0;
    cands.push_back(move);
  }
  return cands;
}

std::pair<AgentState, bool> step(const AgentState& state,
                                 const ActionCandidate& action,
                                 const EpisodeSpec& episode) {
  const NavGraph& g = *episode.graph;
  AgentState next = state;
  next.step = state.step + 1;

  if (action.kind == ActionKind::Stop) {
    if (action.target != state.node)
      throw std::invalid_argument("step: stop action does not match current node");
    return {next, true};
  }

  const auto& nbrs = g.adjacency[state.node];
  const auto it = std::lower_bound(
      nbrs.begin(), nbrs.end(), action.target,
      [](const Neighbor& nb, int id) { return nb.id < id; });
  if (it == nbrs.end() || it->id != action.target)
    throw std::invalid_argument("step: move target is not a neighbor of the current node");

  next.node = action.target;
  next.visited[action.target] = 1;
  next.path_len = state.path_len + it->length;
  next.d_t = g.dist(action.target, episode.goal);
  return {next, next.step >= episode.t_max};
}

int expert_action(const AgentState& state, const EpisodeSpec& episode) {
  if (state.node == episode.goal) return 0;  // stop candidate index
  const NavGraph& g = *episode.graph;
  const auto& nbrs = g.adjacency[state.node];
  int best = -1;
  double best_cost = kInf;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    const double cost = nbrs[i].length + g.dist(nbrs[i].id, episode.goal);
    if (cost < best_cost) {
      best_cost = cost;
      best = static_cast<int>(i);
    }
  }
  return best + 1;  // move candidates start after the stop candidate
}

FeatureMatrix feature_matrix(const std::vector<ActionCandidate>& cands) {
  FeatureMatrix features(kFeatureDim, static_cast<Eigen::Index>(cands.size()));
  for (std::size_t i = 0; i < cands.size(); ++i)
    features.col(static_cast<Eigen::Index>(i)) = cands[i].features;
  return features;
}

}  // namespace navlab::envgraph
