#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "navlab/rng.hpp"
#include "navlab/types.hpp"

namespace navlab::envgraph {

struct Neighbor {
  int id;
  double length;
};

struct Edge {
  int u;
  int v;
  double length;
};

/// Undirected geometric navigation graph with precomputed geodesics.
/// Immutable after construction and safe to share across concurrent rollouts.
struct NavGraph {
  Eigen::Matrix2Xd positions;                    // one column per node, meters
  std::vector<Edge> edges;
  std::vector<std::vector<Neighbor>> adjacency;  // sorted by neighbor id
  Eigen::MatrixXd dist;                          // all-pairs geodesic distance
  Eigen::MatrixXi hops;                          // edge count along that geodesic
  double connect_radius = 0.0;
  double area_side = 0.0;
  std::uint64_t seed = 0;

  int node_count() const { return static_cast<int>(positions.cols()); }
  Vec2 position(int node) const { return positions.col(node); }
  /// Length of the edge (u, v); throws if the nodes are not adjacent.
  double edge_length(int u, int v) const;
};

/// One instruction instance. The "instruction" is a noisy estimate of the
/// goal position; the true goal id is an oracle side-channel for rewards
/// and expert supervision only.
struct EpisodeSpec {
  const NavGraph* graph = nullptr;
  int graph_id = 0;  // index of the graph within its bundle
  int id = 0;        // bundle-global episode id (keys RNG substreams)
  int start = 0;
  int goal = 0;
  Vec2 goal_estimate = Vec2::Zero();
  double l_star = 0.0;   // geodesic start->goal, meters
  double epsilon = 0.0;  // success threshold, meters
  int t_max = 0;         // step budget
};

enum class ActionKind { Move, Stop };

struct ActionCandidate {
  ActionKind kind;
  int target;  // current node for stop
  FeatureVector features;
};

/// Rollout-local agent state; single-owner, copied on step.
struct AgentState {
  int node = 0;
  std::vector<std::uint8_t> visited;  // bitmap over nodes
  int step = 0;
  double path_len = 0.0;
  double d_t = 0.0;  // geodesic distance to goal (oracle side-channel)
};

/// Random geometric graph on [0, area_side]^2 with edges below
/// connect_radius. Disconnected components are repaired by adding the
/// shortest cross-component edge until the graph is connected.
NavGraph generate_graph(int n_nodes, double area_side, double connect_radius,
                        std::uint64_t seed);

/// Assembles adjacency and geodesics from raw nodes and edges.
/// Deserialization reuses this so loaded graphs match generated ones.
NavGraph build_graph(Eigen::Matrix2Xd positions, std::vector<Edge> edges,
                     double connect_radius, double area_side, std::uint64_t seed);

/// Samples episodes whose geodesic length lies in l_range. The goal estimate
/// is the goal position plus isotropic Gaussian noise with std noise_sigma;
/// t_max is the geodesic hop count plus six.
/// Throws if count > 0 and no start/goal pair satisfies l_range.
std::vector<EpisodeSpec> sample_episodes(const NavGraph& graph, int count,
                                         std::pair<double, double> l_range,
                                         double noise_sigma, double epsilon,
                                         std::uint64_t seed);

AgentState initial_state(const EpisodeSpec& episode);

/// One stop candidate (index 0) plus one move candidate per neighbor in
/// ascending node-id order, with the documented 6-feature layout.
std::vector<ActionCandidate> candidates(const AgentState& state,
                                        const EpisodeSpec& episode);

/// Applies an action. Returns the successor state and whether the episode
/// terminated (stop action or step budget exhausted).
std::pair<AgentState, bool> step(const AgentState& state,
                                 const ActionCandidate& action,
                                 const EpisodeSpec& episode);

/// Index of the expert action: stop at the goal, otherwise the move whose
/// target is the next hop of a shortest path (ties to the lowest node id).
int expert_action(const AgentState& state, const EpisodeSpec& episode);

/// Candidate features as a kFeatureDim x n matrix, one column per candidate.
FeatureMatrix feature_matrix(const std::vector<ActionCandidate>& cands);

}  // namespace navlab::envgraph
