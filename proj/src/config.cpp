#include "tsrnn/config.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/rng.hpp"

namespace tsrnn {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw_invalid("config: unknown key '" + where + key + "'");
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw_invalid("config: bad value for '" + std::string(key) + "': " + e.what());
    }
  }
}

void apply_profile(RunConfig& cfg) {
  if (cfg.profile == "paper") {
    cfg.train.network.num_layers = 5;
    cfg.train.network.hidden_dim = 512;
    cfg.train.epochs = 350;
  } else if (cfg.profile == "desk") {
    cfg.train.network.num_layers = 2;
    cfg.train.network.hidden_dim = 32;
    cfg.train.epochs = 50;
    // the small network sees ~60x fewer updates than the full run; a larger
    // step keeps the desk profile trainable within its epoch budget
    cfg.train.optimizer.base_rate = 3e-3;
  } else {
    throw_invalid("config: unknown profile '" + cfg.profile + "' (expected desk or paper)");
  }
}

}  // namespace

RunConfig resolve_config(const std::string& json_text) {
  RunConfig cfg;
  json j = json::object();
  if (!json_text.empty()) {
    try {
      j = json::parse(json_text);
    } catch (const json::exception& e) {
      throw_invalid(std::string("config: not valid json: ") + e.what());
    }
    if (!j.is_object()) throw_invalid("config: top level must be a json object");
  }

  reject_unknown(j,
                 {"profile", "seed", "threads", "num_classes", "models", "model", "network",
                  "train", "optimizer", "forest", "logistic", "synth", "prep", "gradcheck"},
                 "");

  get_if_present(j, "profile", cfg.profile);
  apply_profile(cfg);
  get_if_present(j, "seed", cfg.seed);
  get_if_present(j, "threads", cfg.threads);
  get_if_present(j, "num_classes", cfg.num_classes);
  get_if_present(j, "models", cfg.models);
  get_if_present(j, "model", cfg.model);

  if (cfg.threads < 1) throw_invalid("config: threads must be >= 1");
  if (cfg.num_classes < 2) throw_invalid("config: num_classes must be >= 2");
  if (cfg.models.empty()) throw_invalid("config: models must be non-empty");
  std::set<std::string> seen;
  for (const std::string& m : cfg.models) {
    if (m != "lstm" && m != "gru" && m != "rf" && m != "logistic")
      throw_invalid("config: unknown model '" + m + "'");
    if (!seen.insert(m).second) throw_invalid("config: duplicate model '" + m + "'");
  }
  if (cfg.model != "lstm" && cfg.model != "gru" && cfg.model != "rf" && cfg.model != "logistic")
    throw_invalid("config: unknown model '" + cfg.model + "'");

  cfg.train.network.num_classes = cfg.num_classes;

  bool net_seed_set = false, shuffle_seed_set = false, forest_seed_set = false,
       synth_seed_set = false, gradcheck_seed_set = false;

  if (j.contains("network")) {
    const json& n = j.at("network");
    reject_unknown(n, {"cell", "num_layers", "hidden_dim", "num_classes", "seed"}, "network.");
    if (n.contains("cell")) cfg.train.network.cell = cell_kind_from_name(n.at("cell"));
    get_if_present(n, "num_layers", cfg.train.network.num_layers);
    get_if_present(n, "hidden_dim", cfg.train.network.hidden_dim);
    get_if_present(n, "num_classes", cfg.train.network.num_classes);
    if (n.contains("seed")) {
      cfg.train.network.seed = n.at("seed").get<std::uint64_t>();
      net_seed_set = true;
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, {"epochs", "batch_size", "folds", "shuffle_seed", "grad_clip_norm"},
                   "train.");
    get_if_present(t, "epochs", cfg.train.epochs);
    get_if_present(t, "batch_size", cfg.train.batch_size);
    get_if_present(t, "folds", cfg.train.folds);
    get_if_present(t, "grad_clip_norm", cfg.train.grad_clip_norm);
    if (t.contains("shuffle_seed")) {
      cfg.train.shuffle_seed = t.at("shuffle_seed").get<std::uint64_t>();
      shuffle_seed_set = true;
    }
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    reject_unknown(o, {"base_rate", "decay", "rho", "epsilon"}, "optimizer.");
    get_if_present(o, "base_rate", cfg.train.optimizer.base_rate);
    get_if_present(o, "decay", cfg.train.optimizer.decay);
    get_if_present(o, "rho", cfg.train.optimizer.rho);
    get_if_present(o, "epsilon", cfg.train.optimizer.epsilon);
  }
  if (j.contains("forest")) {
    const json& f = j.at("forest");
    reject_unknown(f,
                   {"num_trees", "max_depth", "min_samples_split", "features_per_split", "seed"},
                   "forest.");
    get_if_present(f, "num_trees", cfg.forest.num_trees);
    get_if_present(f, "max_depth", cfg.forest.max_depth);
    get_if_present(f, "min_samples_split", cfg.forest.min_samples_split);
    get_if_present(f, "features_per_split", cfg.forest.features_per_split);
    if (f.contains("seed")) {
      cfg.forest.seed = f.at("seed").get<std::uint64_t>();
      forest_seed_set = true;
    }
  }
  if (j.contains("logistic")) {
    const json& l = j.at("logistic");
    reject_unknown(l, {"rate", "epochs"}, "logistic.");
    get_if_present(l, "rate", cfg.logistic.rate);
    get_if_present(l, "epochs", cfg.logistic.epochs);
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    reject_unknown(s, {"counts", "profiles", "seed"}, "synth.");
    if (s.contains("counts")) {
      cfg.synth.counts.clear();
      for (const auto& [key, value] : s.at("counts").items()) {
        int cls = 0;
        try {
          cls = std::stoi(key);
        } catch (...) {
          throw_invalid("config: synth.counts key '" + key + "' is not a class id");
        }
        cfg.synth.counts[cls] = value.get<int>();
      }
    }
    if (s.contains("profiles") && !s.at("profiles").is_null())
      cfg.synth.profiles_json = s.at("profiles").dump();
    if (s.contains("seed")) {
      cfg.synth.seed = s.at("seed").get<std::uint64_t>();
      synth_seed_set = true;
    }
  }
  if (j.contains("prep")) {
    const json& p = j.at("prep");
    reject_unknown(p, {"window", "floor_db", "low_pct", "high_pct"}, "prep.");
    get_if_present(p, "window", cfg.prep.window);
    get_if_present(p, "floor_db", cfg.prep.floor_db);
    get_if_present(p, "low_pct", cfg.prep.low_pct);
    get_if_present(p, "high_pct", cfg.prep.high_pct);
  }
  if (j.contains("gradcheck")) {
    const json& g = j.at("gradcheck");
    reject_unknown(g,
                   {"cell_instances", "net_instances", "step", "cell_tol", "net_tol", "seed",
                    "inject_fault"},
                   "gradcheck.");
    get_if_present(g, "cell_instances", cfg.gradcheck.cell_instances);
    get_if_present(g, "net_instances", cfg.gradcheck.net_instances);
    get_if_present(g, "step", cfg.gradcheck.step);
    get_if_present(g, "cell_tol", cfg.gradcheck.cell_tol);
    get_if_present(g, "net_tol", cfg.gradcheck.net_tol);
    get_if_present(g, "inject_fault", cfg.gradcheck.inject_fault);
    if (g.contains("seed")) {
      cfg.gradcheck.seed = g.at("seed").get<std::uint64_t>();
      gradcheck_seed_set = true;
    }
  }

  // sub-seeds default to named derivations of the master seed
  if (!net_seed_set) cfg.train.network.seed = derive_seed(cfg.seed, 1);
  if (!shuffle_seed_set) cfg.train.shuffle_seed = derive_seed(cfg.seed, 2);
  if (!forest_seed_set) cfg.forest.seed = derive_seed(cfg.seed, 3);
  if (!synth_seed_set) cfg.synth.seed = derive_seed(cfg.seed, 5);
  if (!gradcheck_seed_set) cfg.gradcheck.seed = derive_seed(cfg.seed, 6);
  cfg.logistic.seed = derive_seed(cfg.seed, 4);

  if (cfg.synth.counts.empty())
    for (int c = 1; c <= cfg.num_classes; ++c) cfg.synth.counts[c] = 1000;

  cfg.train.threads = cfg.threads;
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["profile"] = cfg.profile;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["num_classes"] = cfg.num_classes;
  j["models"] = cfg.models;
  j["model"] = cfg.model;
  j["network"] = {{"cell", cell_kind_name(cfg.train.network.cell)},
                  {"num_layers", cfg.train.network.num_layers},
                  {"hidden_dim", cfg.train.network.hidden_dim},
                  {"num_classes", cfg.train.network.num_classes},
                  {"seed", cfg.train.network.seed}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"folds", cfg.train.folds},
                {"shuffle_seed", cfg.train.shuffle_seed},
                {"grad_clip_norm", cfg.train.grad_clip_norm}};
  j["optimizer"] = {{"base_rate", cfg.train.optimizer.base_rate},
                    {"decay", cfg.train.optimizer.decay},
                    {"rho", cfg.train.optimizer.rho},
                    {"epsilon", cfg.train.optimizer.epsilon}};
  j["forest"] = {{"num_trees", cfg.forest.num_trees},
                 {"max_depth", cfg.forest.max_depth},
                 {"min_samples_split", cfg.forest.min_samples_split},
                 {"features_per_split", cfg.forest.features_per_split},
                 {"seed", cfg.forest.seed}};
  j["logistic"] = {{"rate", cfg.logistic.rate}, {"epochs", cfg.logistic.epochs}};
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [cls, n] : cfg.synth.counts) counts[std::to_string(cls)] = n;
  j["synth"] = {{"counts", counts}, {"seed", cfg.synth.seed}};
  if (cfg.synth.profiles_json.empty())
    j["synth"]["profiles"] = nullptr;
  else
    j["synth"]["profiles"] = nlohmann::ordered_json::parse(cfg.synth.profiles_json);
  j["prep"] = {{"window", cfg.prep.window},
               {"floor_db", cfg.prep.floor_db},
               {"low_pct", cfg.prep.low_pct},
               {"high_pct", cfg.prep.high_pct}};
  j["gradcheck"] = {{"cell_instances", cfg.gradcheck.cell_instances},
                    {"net_instances", cfg.gradcheck.net_instances},
                    {"step", cfg.gradcheck.step},
                    {"cell_tol", cfg.gradcheck.cell_tol},
                    {"net_tol", cfg.gradcheck.net_tol},
                    {"seed", cfg.gradcheck.seed},
                    {"inject_fault", cfg.gradcheck.inject_fault}};
  return j.dump(2) + "\n";
}

}  // namespace tsrnn
