#include "navlab/serialize.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "navlab/types.hpp"

namespace navlab::serialize {

namespace {

using nlohmann::json;

constexpr int kBundleFormatVersion = 1;
constexpr int kCheckpointFormatVersion = 1;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

json episode_to_json(const envgraph::EpisodeSpec& ep) {
  return json{{"graph_id", ep.graph_id},
              {"id", ep.id},
              {"start", ep.start},
              {"goal", ep.goal},
              {"goal_estimate", {ep.goal_estimate.x(), ep.goal_estimate.y()}},
              {"l_star", ep.l_star},
              {"epsilon", ep.epsilon},
              {"t_max", ep.t_max}};
}

envgraph::EpisodeSpec episode_from_json(const json& j) {
  envgraph::EpisodeSpec ep;
  ep.graph_id = j.at("graph_id").get<int>();
  ep.id = j.at("id").get<int>();
  ep.start = j.at("start").get<int>();
  ep.goal = j.at("goal").get<int>();
  ep.goal_estimate = Vec2(j.at("goal_estimate").at(0).get<double>(),
                          j.at("goal_estimate").at(1).get<double>());
  ep.l_star = j.at("l_star").get<double>();
  ep.epsilon = j.at("epsilon").get<double>();
  ep.t_max = j.at("t_max").get<int>();
  return ep;
}

json params_to_json(const policy::PolicyParams& p) {
  json w = json::array();
  for (int i = 0; i < kFeatureDim; ++i) w.push_back(p.w[i]);
  return json{{"w", w}, {"version", p.version}};
}

policy::PolicyParams params_from_json(const json& j) {
  policy::PolicyParams p;
  const auto& w = j.at("w");
  if (w.size() != kFeatureDim)
    throw std::runtime_error("checkpoint: weight vector has wrong dimension");
  for (int i = 0; i < kFeatureDim; ++i) p.w[i] = w.at(i).get<double>();
  p.version = j.at("version").get<std::int64_t>();
  return p;
}

}  // namespace

std::string env_bundle_to_string(const EnvBundle& bundle, const json& config_echo) {
  json j;
  j["artifact_version"] = kArtifactVersion;
  j["format_version"] = kBundleFormatVersion;
  j["config"] = config_echo;
  j["n_train_graphs"] = bundle.n_train_graphs;

  json graphs = json::array();
  for (const auto& g : bundle.graphs) {
    json nodes = json::array();
    for (int i = 0; i < g->node_count(); ++i)
      nodes.push_back({g->positions(0, i), g->positions(1, i)});
    json edges = json::array();
    for (const auto& e : g->edges) edges.push_back({e.u, e.v, e.length});
    graphs.push_back({{"nodes", nodes},
                      {"edges", edges},
                      {"connect_radius", g->connect_radius},
                      {"area_side", g->area_side},
                      {"seed", g->seed}});
  }
  j["graphs"] = graphs;

  json train_eps = json::array();
  for (const auto& ep : bundle.train_episodes) train_eps.push_back(episode_to_json(ep));
  json val_eps = json::array();
  for (const auto& ep : bundle.val_episodes) val_eps.push_back(episode_to_json(ep));
  j["episodes_train"] = train_eps;
  j["episodes_val"] = val_eps;
  return j.dump(2) + "\n";
}

void write_env_bundle(const std::string& path, const EnvBundle& bundle,
                      const json& config_echo) {
  write_text_file(path, env_bundle_to_string(bundle, config_echo));
}

EnvBundle load_env_bundle(const std::string& path) {
  const json j = load_json_file(path);
  if (j.at("format_version").get<int>() != kBundleFormatVersion)
    throw std::runtime_error("env bundle: unsupported format version");

  EnvBundle bundle;
  bundle.n_train_graphs = j.at("n_train_graphs").get<int>();
  for (const auto& gj : j.at("graphs")) {
    const auto& nodes = gj.at("nodes");
    Eigen::Matrix2Xd positions(2, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      positions(0, static_cast<Eigen::Index>(i)) = nodes[i].at(0).get<double>();
      positions(1, static_cast<Eigen::Index>(i)) = nodes[i].at(1).get<double>();
    }
    std::vector<envgraph::Edge> edges;
    for (const auto& ej : gj.at("edges"))
      edges.push_back({ej.at(0).get<int>(), ej.at(1).get<int>(), ej.at(2).get<double>()});
    bundle.graphs.push_back(std::make_unique<envgraph::NavGraph>(envgraph::build_graph(
        std::move(positions), std::move(edges), gj.at("connect_radius").get<double>(),
        gj.at("area_side").get<double>(), gj.at("seed").get<std::uint64_t>())));
  }

  const auto bind = [&bundle](const json& arr) {
    std::vector<envgraph::EpisodeSpec> eps;
    for (const auto& ej : arr) {
      envgraph::EpisodeSpec ep = episode_from_json(ej);
      if (ep.graph_id < 0 || ep.graph_id >= static_cast<int>(bundle.graphs.size()))
        throw std::runtime_error("env bundle: episode references missing graph");
      ep.graph = bundle.graphs[static_cast<std::size_t>(ep.graph_id)].get();
      eps.push_back(ep);
    }
    return eps;
  };
  bundle.train_episodes = bind(j.at("episodes_train"));
  bundle.val_episodes = bind(j.at("episodes_val"));
  return bundle;
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint,
                      const json& config_echo) {
  json j;
  j["artifact_version"] = kArtifactVersion;
  j["format_version"] = kCheckpointFormatVersion;
  j["phase"] = checkpoint.phase;
  j["policy"] = params_to_json(checkpoint.params);
  j["reference_policy"] = params_to_json(checkpoint.reference);
  j["config"] = config_echo;
  write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  const json j = load_json_file(path);
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format version");
  Checkpoint c;
  c.phase = j.at("phase").get<std::string>();
  c.params = params_from_json(j.at("policy"));
  c.reference = params_from_json(j.at("reference_policy"));
  return c;
}

void write_train_log(const std::string& path, const std::vector<train::LogRow>& log,
                     const json& config_echo) {
  std::string text;
  text += std::string("# artifact: ") + kArtifactVersion + "\n";
  text += "# config: " + config_echo.dump() + "\n";
  text += "iteration,mean_reward,success_frac,mean_kl,buffer_size,wall_ms\n";
  for (const auto& row : log) {
    char line[256];
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%" PRIu64 ",%.3f\n",
                  row.iteration, row.mean_reward, row.success_frac, row.mean_kl,
                  row.buffer_size, row.wall_ms);
    text += line;
  }
  write_text_file(path, text);
}

void write_robustness_csv(const std::string& path, const eval::RobustnessTable& table,
                          const json& config_echo) {
  std::string text;
  text += std::string("# artifact: ") + kArtifactVersion + "\n";
  text += "# config: " + config_echo.dump() + "\n";
  text += "method,perturb_kind,perturb_param,seed,OSR,NE,SR,SPL,dSPL\n";
  for (const auto& row : table.per_seed) {
    std::string kind;
    double param = 0.0;
    switch (row.spec.mode) {
      case eval::PerturbSpec::Mode::None: kind = "none"; break;
      case eval::PerturbSpec::Mode::Global: kind = "global"; param = row.spec.p; break;
      case eval::PerturbSpec::Mode::Early: kind = "early"; param = row.spec.n; break;
    }
    char line[512];
    std::snprintf(line, sizeof line, "%s,%s,%s,%" PRIu64 ",%s,%s,%s,%s,%s\n",
                  row.method.c_str(), kind.c_str(), format_double(param).c_str(),
                  row.seed, format_double(row.osr).c_str(), format_double(row.ne).c_str(),
                  format_double(row.sr).c_str(), format_double(row.spl).c_str(),
                  format_double(row.dspl).c_str());
    text += line;
  }
  write_text_file(path, text);
}

void write_robustness_summary(const std::string& path, const eval::RobustnessTable& table,
                              const std::vector<std::uint64_t>& seeds,
                              const json& config_echo) {
  json rows = json::array();
  for (const auto& row : table.aggregate) {
    std::string kind;
    double param = 0.0;
    switch (row.spec.mode) {
      case eval::PerturbSpec::Mode::None: kind = "none"; break;
      case eval::PerturbSpec::Mode::Global: kind = "global"; param = row.spec.p; break;
      case eval::PerturbSpec::Mode::Early: kind = "early"; param = row.spec.n; break;
    }
    rows.push_back({{"method", row.method},
                    {"perturb_kind", kind},
                    {"perturb_param", param},
                    {"OSR", row.osr},
                    {"NE", row.ne},
                    {"SR", row.sr},
                    {"SPL", row.spl},
                    {"dSPL", row.dspl}});
  }
  json j;
  j["artifact_version"] = kArtifactVersion;
  j["config"] = config_echo;
  j["seeds"] = seeds;
  j["rows"] = rows;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace navlab::serialize
