#include "navlab/eval.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "navlab/parallel.hpp"
#include "navlab/rollout.hpp"

namespace navlab::eval {

PerturbSpec PerturbSpec::global(double p) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("PerturbSpec: global probability must be in [0, 1]");
  PerturbSpec spec;
  // p = 0 is the unperturbed setting; canonicalize so report rows and
  // delta-SPL baselines agree.
  if (p == 0.0) return spec;
  spec.mode = Mode::Global;
  spec.p = p;
  return spec;
}

PerturbSpec PerturbSpec::early(int n) {
  if (n < 1) throw std::invalid_argument("PerturbSpec: early step count must be >= 1");
  PerturbSpec spec;
  spec.mode = Mode::Early;
  spec.n = n;
  return spec;
}

std::string PerturbSpec::label() const {
  switch (mode) {
    case Mode::None: return "none";
    case Mode::Global: return "global_p" + std::to_string(p);
    case Mode::Early: return "early_n" + std::to_string(n);
  }
  return "unknown";
}

optim::TrajectoryRecord run_episode(const policy::PolicyParams& params,
                                    const envgraph::EpisodeSpec& episode,
                                    const PerturbSpec& perturb, Rng& rng) {
  const auto picker = [&perturb](const policy::ActionDistribution& dist, int step_index,
                                 Rng& r) {
    switch (perturb.mode) {
      case PerturbSpec::Mode::Global:
        if (r.uniform() < perturb.p)
          return policy::select(dist, policy::SelectMode::Sample, r);
        return policy::select(dist, policy::SelectMode::Greedy, r);
      case PerturbSpec::Mode::Early:
        if (step_index < perturb.n)
          return policy::select(dist, policy::SelectMode::LeastProbable, r);
        return policy::select(dist, policy::SelectMode::Greedy, r);
      case PerturbSpec::Mode::None:
      default:
        return policy::select(dist, policy::SelectMode::Greedy, r);
    }
  };
  return rollout_episode(params, episode, picker, rng);
}

EvalRow make_row(const optim::TrajectoryRecord& record,
                 const envgraph::EpisodeSpec& episode) {
  const envgraph::NavGraph& graph = *episode.graph;
  EvalRow row;
  row.episode_id = episode.id;
  row.d_final = graph.dist(record.path.back(), episode.goal);
  row.length = record.length;
  row.l_star = episode.l_star;
  row.min_d = std::numeric_limits<double>::infinity();
  for (int node : record.path)
    row.min_d = std::min(row.min_d, graph.dist(node, episode.goal));
  row.success = row.d_final < episode.epsilon;
  row.oracle_success = row.min_d < episode.epsilon;
  return row;
}

EvalResult compute_metrics(const std::vector<EvalRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("compute_metrics: no rows");
  EvalResult result;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (const EvalRow& row : rows) {
    result.ne += row.d_final;
    if (row.success) {
      result.sr += 1.0;
      result.spl += row.l_star / std::max(row.length, row.l_star);
    }
    if (row.oracle_success) result.osr += 1.0;
  }
  result.ne *= inv_n;
  result.sr *= 100.0 * inv_n;
  result.spl *= 100.0 * inv_n;
  result.osr *= 100.0 * inv_n;
  result.rows = rows;
  return result;
}

EvalResult evaluate(const policy::PolicyParams& params,
                    const std::vector<envgraph::EpisodeSpec>& episodes,
                    const PerturbSpec& perturb, std::uint64_t seed, int workers) {
  if (episodes.empty()) throw std::invalid_argument("evaluate: no episodes");
  std::vector<EvalRow> rows(episodes.size());
  parallel_for(static_cast<int>(episodes.size()), workers, [&](int i) {
    const envgraph::EpisodeSpec& ep = episodes[static_cast<std::size_t>(i)];
    Rng rng = make_rng(seed, {stream::kEval, static_cast<std::uint64_t>(ep.id)});
    rows[static_cast<std::size_t>(i)] = make_row(run_episode(params, ep, perturb, rng), ep);
  });
  return compute_metrics(rows);
}

RobustnessTable robustness_table(const std::vector<Method>& methods,
                                 const std::vector<envgraph::EpisodeSpec>& episodes,
                                 const std::vector<PerturbSpec>& specs,
                                 const std::vector<std::uint64_t>& seeds,
                                 int workers) {
  const bool has_none =
      std::any_of(specs.begin(), specs.end(), [](const PerturbSpec& s) { return s.is_none(); });
  if (!has_none)
    throw std::invalid_argument("robustness_table: spec list must include the none spec");
  if (seeds.empty()) throw std::invalid_argument("robustness_table: no seeds");

  RobustnessTable table;
  for (const Method& method : methods) {
    // Baseline SPL per seed from the unperturbed spec.
    std::vector<double> base_spl(seeds.size(), 0.0);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const EvalResult base =
          evaluate(method.params, episodes, PerturbSpec::none(), seeds[s], workers);
      base_spl[s] = base.spl;
    }
    for (const PerturbSpec& spec : specs) {
      TableRow agg;
      agg.method = method.name;
      agg.spec = spec;
      double base_mean = 0.0;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const EvalResult res = evaluate(method.params, episodes, spec, seeds[s], workers);
        TableRow row;
        row.method = method.name;
        row.spec = spec;
        row.seed = seeds[s];
        row.osr = res.osr;
        row.ne = res.ne;
        row.sr = res.sr;
        row.spl = res.spl;
        row.dspl = res.spl - base_spl[s];
        table.per_seed.push_back(row);
        agg.osr += res.osr;
        agg.ne += res.ne;
        agg.sr += res.sr;
        agg.spl += res.spl;
        base_mean += base_spl[s];
      }
      const double inv_s = 1.0 / static_cast<double>(seeds.size());
      agg.osr *= inv_s;
      agg.ne *= inv_s;
      agg.sr *= inv_s;
      agg.spl *= inv_s;
      agg.dspl = agg.spl - base_mean * inv_s;
      table.aggregate.push_back(agg);
    }
  }
  return table;
}

}  // namespace navlab::eval
