#include "meq/config_io.hpp"

#include <fstream>
#include <set>

namespace meq {

namespace {

nlohmann::json bounds_to_json(const EnvBounds& b) {
  return {{"x", {b.x_min, b.x_max}},
          {"y", {b.y_min, b.y_max}},
          {"z", {b.z_min, b.z_max}},
          {"target", {b.target.x(), b.target.y(), b.target.z()}}};
}

EnvBounds bounds_from_json(const nlohmann::json& j) {
  EnvBounds b;
  b.x_min = j.at("x").at(0);
  b.x_max = j.at("x").at(1);
  b.y_min = j.at("y").at(0);
  b.y_max = j.at("y").at(1);
  b.z_min = j.at("z").at(0);
  b.z_max = j.at("z").at(1);
  b.target = Eigen::Vector3d(j.at("target").at(0).get<double>(),
                             j.at("target").at(1).get<double>(),
                             j.at("target").at(2).get<double>());
  return b;
}

nlohmann::json model_to_json(const QuadModel& m) {
  return {{"mass", m.mass},       {"arm_length", m.arm_length}, {"kf", m.kf},
          {"km", m.km},           {"ixx", m.ixx},               {"iyy", m.iyy},
          {"izz", m.izz},         {"gravity", m.gravity},       {"rpm_max", m.rpm_max},
          {"dt_phys", m.dt_phys}};
}

QuadModel model_from_json(const nlohmann::json& j) {
  QuadModel m;
  m.mass = j.value("mass", m.mass);
  m.arm_length = j.value("arm_length", m.arm_length);
  m.kf = j.value("kf", m.kf);
  m.km = j.value("km", m.km);
  m.ixx = j.value("ixx", m.ixx);
  m.iyy = j.value("iyy", m.iyy);
  m.izz = j.value("izz", m.izz);
  m.gravity = j.value("gravity", m.gravity);
  m.rpm_max = j.value("rpm_max", m.rpm_max);
  m.dt_phys = j.value("dt_phys", m.dt_phys);
  return m;
}

nlohmann::json hp_to_json(const Hyperparams& h) {
  return {{"lr", h.lr},
          {"buffer_capacity", h.buffer_capacity},
          {"warmup_steps", h.warmup_steps},
          {"batch_size", h.batch_size},
          {"tau", h.tau},
          {"gamma", h.gamma},
          {"target_noise", h.target_noise},
          {"explore_noise", h.explore_noise},
          {"noise_clip", h.noise_clip},
          {"agent_hz", h.agent_hz},
          {"max_episode_steps", h.max_episode_steps}};
}

Hyperparams hp_from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.lr = j.value("lr", h.lr);
  h.buffer_capacity = j.value("buffer_capacity", h.buffer_capacity);
  h.warmup_steps = j.value("warmup_steps", h.warmup_steps);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.tau = j.value("tau", h.tau);
  h.gamma = j.value("gamma", h.gamma);
  h.target_noise = j.value("target_noise", h.target_noise);
  h.explore_noise = j.value("explore_noise", h.explore_noise);
  h.noise_clip = j.value("noise_clip", h.noise_clip);
  h.agent_hz = j.value("agent_hz", h.agent_hz);
  h.max_episode_steps = j.value("max_episode_steps", h.max_episode_steps);
  return h;
}

}  // namespace

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["algorithm"] = to_string(cfg.algorithm);
  j["bounds"] = bounds_to_json(cfg.bounds);
  j["explore_noise"] = cfg.explore_noise;
  j["entropy"] = {{"mode", cfg.entropy.mode == EntropyConfig::Mode::dynamic ? "dynamic" : "static"},
                  {"alpha0", cfg.entropy.alpha0},
                  {"target_entropy", cfg.entropy.target_entropy}};
  j["total_steps"] = cfg.total_steps;
  j["seed"] = cfg.seed;
  j["eval_interval"] = cfg.eval_interval;
  j["eval_episodes"] = cfg.eval_episodes;
  j["hyperparams"] = hp_to_json(cfg.hp);
  j["hidden"] = cfg.hidden;
  j["model"] = model_to_json(cfg.model);
  j["policy_delay"] = cfg.policy_delay;
  j["replay_precision"] = cfg.replay_precision == StoragePrecision::f32 ? "f32" : "f64";
  return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "name",       "algorithm",  "bounds",        "explore_noise",   "entropy",
      "total_steps", "seed",      "eval_interval", "eval_episodes",   "hyperparams",
      "hidden",     "model",      "policy_delay",  "replay_precision"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }

  ScenarioConfig cfg;
  cfg.name = j.at("name").get<std::string>();
  cfg.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  if (j.contains("bounds")) cfg.bounds = bounds_from_json(j.at("bounds"));
  cfg.explore_noise = j.value("explore_noise", cfg.explore_noise);
  if (j.contains("entropy")) {
    const auto& e = j.at("entropy");
    const std::string mode = e.value("mode", "dynamic");
    if (mode == "dynamic") {
      cfg.entropy.mode = EntropyConfig::Mode::dynamic;
    } else if (mode == "static") {
      cfg.entropy.mode = EntropyConfig::Mode::static_alpha;
    } else {
      throw std::invalid_argument("unknown entropy mode '" + mode + "'");
    }
    cfg.entropy.alpha0 = e.value("alpha0", cfg.entropy.alpha0);
    cfg.entropy.target_entropy = e.value("target_entropy", cfg.entropy.target_entropy);
  }
  cfg.entropy.explore_noise = cfg.explore_noise;
  cfg.total_steps = j.value("total_steps", cfg.total_steps);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.eval_interval = j.value("eval_interval", cfg.eval_interval);
  cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
  if (j.contains("hyperparams")) cfg.hp = hp_from_json(j.at("hyperparams"));
  if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
  cfg.policy_delay = j.value("policy_delay", cfg.policy_delay);
  if (j.contains("replay_precision")) {
    const std::string p = j.at("replay_precision").get<std::string>();
    if (p == "f32") {
      cfg.replay_precision = StoragePrecision::f32;
    } else if (p == "f64") {
      cfg.replay_precision = StoragePrecision::f64;
    } else {
      throw std::invalid_argument("unknown replay_precision '" + p + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad JSON in " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

void write_scenario_file(const std::filesystem::path& path, const ScenarioConfig& cfg) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write config file " + path.string());
  f << scenario_to_json(cfg).dump(2) << "\n";
}

}  // namespace meq
