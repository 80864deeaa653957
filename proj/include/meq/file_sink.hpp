#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "meq/run_io.hpp"
#include "meq/trainer.hpp"

namespace meq {

/// Exclusive-ownership marker for an output directory. Throws if another
/// process already holds it.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path lock_path_;
  bool held_ = false;
};

/// Writes a run's outputs under one directory:
///   train_log.csv, eval_<scenario>.csv, checkpoint_<step>.meq, config.json
class FileRunSink : public RunSink {
 public:
  FileRunSink(std::filesystem::path out_dir, const ScenarioConfig& cfg);

  void on_train_row(const TrainLogRow& row) override;
  void on_eval(const EvalReport& report) override;
  void on_checkpoint(const CheckpointState& state) override;

  const std::filesystem::path& last_checkpoint_path() const { return last_checkpoint_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  std::filesystem::path out_dir_;
  ScenarioConfig cfg_;
  std::ofstream train_log_;
  std::ofstream eval_log_;
  std::filesystem::path last_checkpoint_;
};

}  // namespace meq
