#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "meq/checkpoint.hpp"
#include "meq/config_io.hpp"
#include "meq/csv.hpp"
#include "meq/file_sink.hpp"
#include "meq/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUnknownScenario = 2;
constexpr int kExitUnwritableDir = 3;
constexpr int kExitBadCheckpoint = 4;
constexpr int kExitMalformedLog = 5;

bool dir_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return false;
  const fs::path probe = dir / ".write_probe";
  std::ofstream f(probe);
  if (!f) return false;
  f.close();
  fs::remove(probe, ec);
  return true;
}

std::optional<std::uint64_t> seed_from_env() {
  if (const char* v = std::getenv("MEQ_SEED")) {
    try {
      return std::stoull(v);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring unparsable MEQ_SEED='" << v << "'\n";
    }
  }
  return std::nullopt;
}

int run_train(const std::string& scenario, const std::string& config_path,
              std::optional<std::uint64_t> seed, std::optional<std::uint64_t> steps,
              const std::string& out, const std::string& profile_name) {
  meq::ScenarioConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = meq::load_scenario_file(config_path);
    } else {
      cfg = meq::preset(scenario, meq::profile_from_string(profile_name));
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnknownScenario;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (!seed) seed = seed_from_env();
  if (seed) cfg.seed = *seed;
  if (steps) cfg.total_steps = *steps;

  const fs::path out_dir(out);
  if (!dir_writable(out_dir)) {
    std::cerr << "error: output directory '" << out << "' is not writable\n";
    return kExitUnwritableDir;
  }

  try {
    meq::DirLock lock(out_dir);
    meq::FileRunSink sink(out_dir, cfg);
    meq::run_scenario(cfg, sink);
    std::cout << "done: " << cfg.name << " seed=" << cfg.seed << " steps=" << cfg.total_steps
              << " -> " << out_dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "training halted: " << e.what() << "\n";
    return 1;
  }
}

int run_eval(const std::string& checkpoint, const std::vector<std::string>& init_strs,
             const std::string& probes, const std::string& out) {
  meq::LoadedCheckpoint loaded;
  try {
    loaded = meq::load_checkpoint_file(checkpoint);
  } catch (const meq::BadCheckpoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadCheckpoint;
  }

  std::vector<Eigen::Vector3d> inits;
  for (const std::string& s : init_strs) {
    double x, y, z;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3) {
      std::cerr << "error: bad --init '" << s << "', expected x,y,z\n";
      return 1;
    }
    inits.emplace_back(x, y, z);
  }
  if (!probes.empty()) {
    const auto probe_set = probes == "small" ? meq::small_probes() : meq::large_probes();
    inits.insert(inits.end(), probe_set.begin(), probe_set.end());
  }
  if (inits.empty()) {
    std::cerr << "error: provide --init or --probes\n";
    return 1;
  }

  // Rebuild the deterministic policy from the stored actor.
  const meq::MlpParams* actor = nullptr;
  for (const auto& n : loaded.state.nets) {
    if (n.name == "actor") actor = &n.params;
  }
  if (actor == nullptr) {
    std::cerr << "error: checkpoint has no actor network\n";
    return kExitBadCheckpoint;
  }
  meq::Policy policy;
  if (loaded.config.algorithm == meq::Algorithm::td3) {
    const meq::MlpParams net = *actor;
    policy = [net](const Eigen::VectorXd& obs) { return meq::forward(net, obs); };
  } else {
    const meq::MlpParams net = *actor;
    policy = [net](const Eigen::VectorXd& obs) -> Eigen::VectorXd {
      const Eigen::VectorXd head = meq::forward(net, obs);
      return head.head(head.size() / 2).array().tanh();
    };
  }

  const fs::path out_dir(out);
  if (!dir_writable(out_dir)) {
    std::cerr << "error: output directory '" << out << "' is not writable\n";
    return kExitUnwritableDir;
  }

  const meq::EvalReport report =
      meq::evaluate(policy, loaded.config.model, loaded.config.bounds, inits,
                    loaded.config.hp.max_episode_steps, /*record_trajectories=*/true);
  for (std::size_t i = 0; i < report.episodes.size(); ++i) {
    meq::write_trajectory_csv(out_dir / ("trajectory_" + std::to_string(i + 1) + ".csv"),
                              report.episodes[i]);
  }
  meq::write_eval_summary_csv(out_dir / "summary.csv", report.episodes);
  for (const auto& e : report.episodes) {
    std::cout << "init (" << e.init.x() << ", " << e.init.y() << ", " << e.init.z()
              << "): final_error=" << e.final_error << " return=" << e.episode_return
              << (e.crashed ? " CRASHED" : "") << " steps=" << e.steps << "\n";
  }
  return 0;
}

int run_export(const std::string& log_path, const std::string& out_path) {
  std::ifstream log(log_path);
  if (!log) {
    std::cerr << "error: cannot open log " << log_path << "\n";
    return 1;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kExitUnwritableDir;
  }
  try {
    meq::export_curves(log, out);
  } catch (const meq::MalformedLog& e) {
    std::cerr << "error: malformed log at line " << e.line << ": " << e.what() << "\n";
    return kExitMalformedLog;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meq: TD3/SAC quadcopter hover training and evaluation"};
  app.require_subcommand(1);

  // train
  std::string scenario, config_path, out, profile = "desk";
  std::optional<std::uint64_t> seed, steps;
  CLI::App* train = app.add_subcommand("train", "Train a scenario");
  auto* scen_opt = train->add_option("--scenario", scenario, "Preset scenario name");
  train->add_option("--config", config_path, "Scenario config JSON")->excludes(scen_opt);
  train->add_option("--seed", seed, "Root seed (fallback: MEQ_SEED env var)");
  train->add_option("--steps", steps, "Override total env steps");
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--profile", profile, "Network/budget profile")
      ->check(CLI::IsMember({"desk", "paper"}));

  // eval
  std::string checkpoint, probes, eval_out;
  std::vector<std::string> init_strs;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint deterministically");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file (.meq)")->required();
  eval->add_option("--init", init_strs, "Initial position x,y,z (repeatable)");
  eval->add_option("--probes", probes, "Standard probe set")
      ->check(CLI::IsMember({"small", "large"}));
  eval->add_option("--out", eval_out, "Output directory")->required();

  // export-curves
  std::string log_path, export_out;
  CLI::App* exp = app.add_subcommand("export-curves", "Reduce a train log to plot columns");
  exp->add_option("--log", log_path, "train_log.csv path")->required();
  exp->add_option("--out", export_out, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  if (*train) {
    if (scenario.empty() && config_path.empty()) {
      std::cerr << "error: provide --scenario or --config; known scenarios:";
      for (const auto& n : meq::preset_names()) std::cerr << " " << n;
      std::cerr << "\n";
      return kExitUnknownScenario;
    }
    return run_train(scenario, config_path, seed, steps, out, profile);
  }
  if (*eval) return run_eval(checkpoint, init_strs, probes, eval_out);
  if (*exp) return run_export(log_path, export_out);
  return 0;
}
