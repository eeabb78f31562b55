#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "navlab/envgraph.hpp"
#include "navlab/optim.hpp"
#include "navlab/policy.hpp"
#include "navlab/rng.hpp"

namespace navlab::eval {

struct PerturbSpec {
  enum class Mode { None, Global, Early };
  Mode mode = Mode::None;
  double p = 0.0;  // Global: per-step sampling probability
  int n = 0;       // Early: number of forced least-probable steps

  static PerturbSpec none() { return {}; }
  static PerturbSpec global(double p);
  static PerturbSpec early(int n);
  bool is_none() const { return mode == Mode::None; }
  std::string label() const;
};

struct EvalRow {
  int episode_id = 0;
  double d_final = 0.0;
  double length = 0.0;
  double l_star = 0.0;
  bool success = false;
  bool oracle_success = false;
  double min_d = 0.0;  // min goal distance over visited nodes, start included
};

struct EvalResult {
  double ne = 0.0;   // meters
  double sr = 0.0;   // percent
  double spl = 0.0;  // percent
  double osr = 0.0;  // percent
  std::vector<EvalRow> rows;
};

/// One evaluation rollout: greedy by default; global(p) samples each step
/// with probability p; early(n) forces the least probable action for the
/// first n steps.
optim::TrajectoryRecord run_episode(const policy::PolicyParams& params,
                                    const envgraph::EpisodeSpec& episode,
                                    const PerturbSpec& perturb, Rng& rng);

/// Builds a metric row, recomputing distances from the graph oracle rather
/// than trusting cached values.
EvalRow make_row(const optim::TrajectoryRecord& record,
                 const envgraph::EpisodeSpec& episode);

EvalResult compute_metrics(const std::vector<EvalRow>& rows);

/// Evaluates one policy over an episode set with per-episode RNG substreams.
EvalResult evaluate(const policy::PolicyParams& params,
                    const std::vector<envgraph::EpisodeSpec>& episodes,
                    const PerturbSpec& perturb, std::uint64_t seed, int workers = 1);

struct Method {
  std::string name;
  policy::PolicyParams params;
};

struct TableRow {
  std::string method;
  PerturbSpec spec;
  std::uint64_t seed = 0;  // ignored in aggregate rows
  double osr = 0.0;
  double ne = 0.0;
  double sr = 0.0;
  double spl = 0.0;
  double dspl = 0.0;  // SPL(spec) - SPL(none), same method (and seed)
};

struct RobustnessTable {
  std::vector<TableRow> per_seed;
  std::vector<TableRow> aggregate;  // metrics averaged over seeds
};

/// Per method x perturbation metrics with SPL degradation relative to the
/// unperturbed run. The spec list must include the none spec.
RobustnessTable robustness_table(const std::vector<Method>& methods,
                                 const std::vector<envgraph::EpisodeSpec>& episodes,
                                 const std::vector<PerturbSpec>& specs,
                                 const std::vector<std::uint64_t>& seeds,
                                 int workers = 1);

}  // namespace navlab::eval
