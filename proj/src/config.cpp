#include "navlab/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "navlab/train.hpp"

namespace navlab::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw std::invalid_argument("config: " + field + ": " + message);
}

void reject_unknown_keys(const json& j, const std::string& section,
                         const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      fail(section.empty() ? it.key() : section + "." + it.key(), "unknown key");
  }
}

const json* find(const json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<int>();
}

}  // namespace

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: root must be an object");
  reject_unknown_keys(j, "", {"seed", "output_dir", "env", "reward", "optim", "train", "eval"});

  ExperimentConfig cfg;
  if (const json* v = find(j, "seed")) {
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0))
      fail("seed", "expected a non-negative integer");
    cfg.seed = v->get<std::uint64_t>();
  }
  if (const json* v = find(j, "output_dir")) {
    if (!v->is_string()) fail("output_dir", "expected a string");
    cfg.output_dir = v->get<std::string>();
  }

  if (const json* env = find(j, "env")) {
    reject_unknown_keys(*env, "env",
                        {"n_nodes", "area_side", "connect_radius", "train_graphs",
                         "val_graphs", "episodes_per_graph", "l_range", "noise_sigma",
                         "epsilon"});
    EnvConfig& e = cfg.env;
    if (const json* v = find(*env, "n_nodes")) e.n_nodes = get_int(*v, "env.n_nodes");
    if (const json* v = find(*env, "area_side")) e.area_side = get_number(*v, "env.area_side");
    if (const json* v = find(*env, "connect_radius"))
      e.connect_radius = get_number(*v, "env.connect_radius");
    if (const json* v = find(*env, "train_graphs"))
      e.train_graphs = get_int(*v, "env.train_graphs");
    if (const json* v = find(*env, "val_graphs")) e.val_graphs = get_int(*v, "env.val_graphs");
    if (const json* v = find(*env, "episodes_per_graph"))
      e.episodes_per_graph = get_int(*v, "env.episodes_per_graph");
    if (const json* v = find(*env, "l_range")) {
      if (!v->is_array() || v->size() != 2) fail("env.l_range", "expected [lo, hi]");
      e.l_lo = get_number((*v)[0], "env.l_range[0]");
      e.l_hi = get_number((*v)[1], "env.l_range[1]");
    }
    if (const json* v = find(*env, "noise_sigma"))
      e.noise_sigma = get_number(*v, "env.noise_sigma");
    if (const json* v = find(*env, "epsilon")) e.epsilon = get_number(*v, "env.epsilon");

    if (e.n_nodes < 2) fail("env.n_nodes", "must be >= 2");
    if (e.area_side <= 0.0) fail("env.area_side", "must be > 0");
    if (e.connect_radius <= 0.0) fail("env.connect_radius", "must be > 0");
    if (e.train_graphs < 1) fail("env.train_graphs", "must be >= 1");
    if (e.val_graphs < 1) fail("env.val_graphs", "must be >= 1");
    if (e.episodes_per_graph < 1) fail("env.episodes_per_graph", "must be >= 1");
    if (!(e.l_lo > 0.0) || e.l_hi < e.l_lo) fail("env.l_range", "must satisfy 0 < lo <= hi");
    if (e.noise_sigma < 0.0) fail("env.noise_sigma", "must be >= 0");
    if (e.epsilon <= 0.0) fail("env.epsilon", "must be > 0");
  }

  if (const json* rew = find(j, "reward")) {
    reject_unknown_keys(*rew, "reward", {"alpha"});
    if (const json* v = find(*rew, "alpha")) cfg.reward.alpha = get_number(*v, "reward.alpha");
    if (cfg.reward.alpha < 0.0) fail("reward.alpha", "must be >= 0");
  }
  cfg.reward.epsilon = cfg.env.epsilon;  // single success threshold everywhere

  if (const json* opt = find(j, "optim")) {
    reject_unknown_keys(*opt, "optim",
                        {"variant", "delta", "beta", "inner_epochs", "std_floor",
                         "gspo_delta", "gmpo_eps", "lr"});
    optim::OptimConfig& o = cfg.optim;
    if (const json* v = find(*opt, "variant")) {
      if (!v->is_string()) fail("optim.variant", "expected a string");
      o.variant = optim::variant_from_name(v->get<std::string>());
    }
    if (const json* v = find(*opt, "delta")) o.delta = get_number(*v, "optim.delta");
    if (const json* v = find(*opt, "beta")) o.beta = get_number(*v, "optim.beta");
    if (const json* v = find(*opt, "inner_epochs"))
      o.inner_epochs = get_int(*v, "optim.inner_epochs");
    if (const json* v = find(*opt, "std_floor")) o.std_floor = get_number(*v, "optim.std_floor");
    if (const json* v = find(*opt, "gspo_delta"))
      o.gspo_delta = get_number(*v, "optim.gspo_delta");
    if (const json* v = find(*opt, "gmpo_eps")) o.gmpo_eps = get_number(*v, "optim.gmpo_eps");
    if (const json* v = find(*opt, "lr")) o.lr = get_number(*v, "optim.lr");

    if (!(o.delta > 0.0 && o.delta < 1.0)) fail("optim.delta", "must be in (0, 1)");
    if (o.beta < 0.0) fail("optim.beta", "must be >= 0");
    if (o.inner_epochs < 1) fail("optim.inner_epochs", "must be >= 1");
    if (o.std_floor <= 0.0) fail("optim.std_floor", "must be > 0");
    if (!(o.gspo_delta > 0.0 && o.gspo_delta < 1.0)) fail("optim.gspo_delta", "must be in (0, 1)");
    if (o.gmpo_eps <= 0.0) fail("optim.gmpo_eps", "must be > 0");
  }

  if (const json* tr = find(j, "train")) {
    reject_unknown_keys(*tr, "train",
                        {"B", "K", "warmup_steps", "rl_steps", "M", "lr_sft"});
    TrainSection& t = cfg.train;
    if (const json* v = find(*tr, "B")) t.batch_size = get_int(*v, "train.B");
    if (const json* v = find(*tr, "K")) t.group_size = get_int(*v, "train.K");
    if (const json* v = find(*tr, "warmup_steps"))
      t.warmup_steps = get_int(*v, "train.warmup_steps");
    if (const json* v = find(*tr, "rl_steps")) t.rl_steps = get_int(*v, "train.rl_steps");
    if (const json* v = find(*tr, "M")) {
      if (v->is_string() && v->get<std::string>() == "inf") {
        t.hard_buffer_trigger = train::kNoFlush;
      } else if (v->is_number_integer() &&
                 (v->is_number_unsigned() || v->get<std::int64_t>() >= 0)) {
        t.hard_buffer_trigger = v->get<std::uint64_t>();
      } else {
        fail("train.M", "expected a positive integer or \"inf\"");
      }
    }
    if (const json* v = find(*tr, "lr_sft")) t.lr_sft = get_number(*v, "train.lr_sft");

    if (t.batch_size < 1) fail("train.B", "must be >= 1");
    if (t.group_size < 2) fail("train.K", "must be >= 2");
    if (t.warmup_steps < 0) fail("train.warmup_steps", "must be >= 0");
    if (t.rl_steps < 0) fail("train.rl_steps", "must be >= 0");
    if (t.hard_buffer_trigger < 1) fail("train.M", "must be >= 1");
  }

  if (const json* ev = find(j, "eval")) {
    reject_unknown_keys(*ev, "eval", {"global_probs", "early_steps", "seeds"});
    EvalSection& e = cfg.eval;
    if (const json* v = find(*ev, "global_probs")) {
      if (!v->is_array()) fail("eval.global_probs", "expected an array");
      e.global_probs.clear();
      for (const auto& item : *v) {
        const double p = get_number(item, "eval.global_probs[]");
        if (p < 0.0 || p > 1.0) fail("eval.global_probs[]", "must be in [0, 1]");
        e.global_probs.push_back(p);
      }
    }
    if (const json* v = find(*ev, "early_steps")) {
      if (!v->is_array()) fail("eval.early_steps", "expected an array");
      e.early_steps.clear();
      for (const auto& item : *v) {
        const int n = get_int(item, "eval.early_steps[]");
        if (n < 1) fail("eval.early_steps[]", "must be >= 1");
        e.early_steps.push_back(n);
      }
    }
    if (const json* v = find(*ev, "seeds")) e.seeds = get_int(*v, "eval.seeds");
    if (e.seeds < 1) fail("eval.seeds", "must be >= 1");
  }

  return cfg;
}

ExperimentConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  return from_json(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["env"] = {{"n_nodes", cfg.env.n_nodes},
              {"area_side", cfg.env.area_side},
              {"connect_radius", cfg.env.connect_radius},
              {"train_graphs", cfg.env.train_graphs},
              {"val_graphs", cfg.env.val_graphs},
              {"episodes_per_graph", cfg.env.episodes_per_graph},
              {"l_range", {cfg.env.l_lo, cfg.env.l_hi}},
              {"noise_sigma", cfg.env.noise_sigma},
              {"epsilon", cfg.env.epsilon}};
  j["reward"] = {{"alpha", cfg.reward.alpha}};
  j["optim"] = {{"variant", optim::variant_name(cfg.optim.variant)},
                {"delta", cfg.optim.delta},
                {"beta", cfg.optim.beta},
                {"inner_epochs", cfg.optim.inner_epochs},
                {"std_floor", cfg.optim.std_floor},
                {"gspo_delta", cfg.optim.gspo_delta},
                {"gmpo_eps", cfg.optim.gmpo_eps},
                {"lr", cfg.optim.lr}};
  if (cfg.train.hard_buffer_trigger == train::kNoFlush) {
    j["train"] = {{"B", cfg.train.batch_size},
                  {"K", cfg.train.group_size},
                  {"warmup_steps", cfg.train.warmup_steps},
                  {"rl_steps", cfg.train.rl_steps},
                  {"M", "inf"},
                  {"lr_sft", cfg.train.lr_sft}};
  } else {
    j["train"] = {{"B", cfg.train.batch_size},
                  {"K", cfg.train.group_size},
                  {"warmup_steps", cfg.train.warmup_steps},
                  {"rl_steps", cfg.train.rl_steps},
                  {"M", cfg.train.hard_buffer_trigger},
                  {"lr_sft", cfg.train.lr_sft}};
  }
  j["eval"] = {{"global_probs", cfg.eval.global_probs},
               {"early_steps", cfg.eval.early_steps},
               {"seeds", cfg.eval.seeds}};
  return j;
}

}  // namespace navlab::config
