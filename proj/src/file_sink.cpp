#include "meq/file_sink.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>

#include "meq/checkpoint.hpp"
#include "meq/config_io.hpp"
#include "meq/csv.hpp"

namespace meq {

DirLock::DirLock(const std::filesystem::path& dir) : lock_path_(dir / ".lock") {
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw std::runtime_error("output directory " + dir.string() +
                             " is locked by another run (found " + lock_path_.string() + ")");
  }
  ::close(fd);
  held_ = true;
}

DirLock::~DirLock() {
  if (held_) {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
}

FileRunSink::FileRunSink(std::filesystem::path out_dir, const ScenarioConfig& cfg)
    : out_dir_(std::move(out_dir)), cfg_(cfg) {
  std::filesystem::create_directories(out_dir_);
  write_scenario_file(out_dir_ / "config.json", cfg_);

  train_log_.open(out_dir_ / "train_log.csv", std::ios::trunc);
  if (!train_log_) throw std::runtime_error("cannot write " + (out_dir_ / "train_log.csv").string());
  for (std::size_t i = 0; i < kTrainLogHeader.size(); ++i) {
    train_log_ << (i ? "," : "") << kTrainLogHeader[i];
  }
  train_log_ << "\n";

  eval_log_.open(out_dir_ / ("eval_" + cfg_.name + ".csv"), std::ios::trunc);
  if (!eval_log_) throw std::runtime_error("cannot write eval log in " + out_dir_.string());
  eval_log_ << "env_step,init_x,init_y,init_z,final_error,episode_return,crashed,steps\n";
}

void FileRunSink::on_train_row(const TrainLogRow& row) {
  train_log_ << train_row_to_csv(row) << "\n";
  train_log_.flush();
}

void FileRunSink::on_eval(const EvalReport& report) {
  for (const EvalEpisode& e : report.episodes) {
    eval_log_ << report.env_step << ',' << csv_double(e.init.x()) << ',' << csv_double(e.init.y())
              << ',' << csv_double(e.init.z()) << ',' << csv_double(e.final_error) << ','
              << csv_double(e.episode_return) << ',' << (e.crashed ? 1 : 0) << ',' << e.steps
              << "\n";
  }
  eval_log_.flush();
}

void FileRunSink::on_checkpoint(const CheckpointState& state) {
  char name[48];
  std::snprintf(name, sizeof name, "checkpoint_%010llu.meq",
                static_cast<unsigned long long>(state.env_step));
  const std::filesystem::path path = out_dir_ / name;
  save_checkpoint_file(path, state, cfg_);
  last_checkpoint_ = path;
}

}  // namespace meq
