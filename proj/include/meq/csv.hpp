#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "meq/run_io.hpp"

namespace meq {

/// Decimal text with 17 significant digits (lossless for binary64).
std::string csv_double(double v);

/// Thrown by the log parser; line is 1-based.
struct MalformedLog : std::runtime_error {
  int line;
  MalformedLog(int line_, const std::string& what_)
      : std::runtime_error(what_), line(line_) {}
};

extern const std::vector<std::string> kTrainLogHeader;

std::string train_row_to_csv(const TrainLogRow& row);

void write_trajectory_csv(const std::filesystem::path& path, const EvalEpisode& episode);
void write_eval_summary_csv(const std::filesystem::path& path,
                            const std::vector<EvalEpisode>& episodes);

/// Reduce a training log to a plot-ready (env_step, return_mean_100, alpha,
/// mean_entropy) table, evenly downsampled to at most max_rows data rows.
/// Throws MalformedLog with the offending line number.
void export_curves(std::istream& log, std::ostream& out, std::size_t max_rows = 2000);

}  // namespace meq
