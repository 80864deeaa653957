#include "meq/csv.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace meq {

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv_double(*v) : ""; }

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

const std::vector<std::string> kTrainLogHeader = {
    "env_step",     "episode",      "episode_return", "return_mean_100",
    "alpha",        "mean_entropy", "critic1_loss",   "critic2_loss",
    "actor_loss",   "wall_time_s"};

std::string train_row_to_csv(const TrainLogRow& row) {
  return join({std::to_string(row.env_step), std::to_string(row.episode),
               csv_double(row.episode_return), csv_double(row.return_mean_100),
               opt(row.alpha), opt(row.mean_entropy), opt(row.critic1_loss),
               opt(row.critic2_loss), opt(row.actor_loss), csv_double(row.wall_time_s)});
}

void write_trajectory_csv(const std::filesystem::path& path, const EvalEpisode& episode) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "step,t_s,x,y,z,roll,pitch,yaw,vx,vy,vz,wx,wy,wz,a1,a2,a3,a4,reward,error\n";
  for (const TrajectoryPoint& p : episode.trajectory) {
    std::vector<std::string> fields = {std::to_string(p.step), csv_double(p.t)};
    for (int i = 0; i < 3; ++i) fields.push_back(csv_double(p.position(i)));
    for (int i = 0; i < 3; ++i) fields.push_back(csv_double(p.rpy(i)));
    for (int i = 0; i < 3; ++i) fields.push_back(csv_double(p.velocity(i)));
    for (int i = 0; i < 3; ++i) fields.push_back(csv_double(p.angular_velocity(i)));
    for (int i = 0; i < 4; ++i) fields.push_back(csv_double(p.action(i)));
    fields.push_back(csv_double(p.reward));
    fields.push_back(csv_double(p.error));
    f << join(fields) << "\n";
  }
}

void write_eval_summary_csv(const std::filesystem::path& path,
                            const std::vector<EvalEpisode>& episodes) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "init_x,init_y,init_z,final_error,episode_return,crashed,steps\n";
  for (const EvalEpisode& e : episodes) {
    f << join({csv_double(e.init.x()), csv_double(e.init.y()), csv_double(e.init.z()),
               csv_double(e.final_error), csv_double(e.episode_return),
               e.crashed ? "1" : "0", std::to_string(e.steps)})
      << "\n";
  }
}

void export_curves(std::istream& log, std::ostream& out, std::size_t max_rows) {
  std::string line;
  int line_no = 0;

  if (!std::getline(log, line)) throw MalformedLog(1, "empty log");
  line_no = 1;
  const std::vector<std::string> header = split(line);
  if (header != kTrainLogHeader) throw MalformedLog(1, "unexpected header");

  struct Point {
    std::string step, mean, alpha, entropy;
    std::uint64_t step_value;
  };
  std::vector<Point> points;
  std::uint64_t prev_step = 0;
  while (std::getline(log, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line);
    if (f.size() != kTrainLogHeader.size()) {
      throw MalformedLog(line_no, "expected " + std::to_string(kTrainLogHeader.size()) +
                                      " fields, got " + std::to_string(f.size()));
    }
    Point p;
    try {
      p.step_value = std::stoull(f[0]);
      (void)std::stod(f[3]);  // validate numeric
      if (!f[4].empty()) (void)std::stod(f[4]);
      if (!f[5].empty()) (void)std::stod(f[5]);
    } catch (const std::exception&) {
      throw MalformedLog(line_no, "unparsable numeric field");
    }
    if (!points.empty() && p.step_value <= prev_step) {
      throw MalformedLog(line_no, "env_step not increasing");
    }
    prev_step = p.step_value;
    p.step = f[0];
    p.mean = f[3];
    p.alpha = f[4];
    p.entropy = f[5];
    points.push_back(std::move(p));
  }

  out << "env_step,return_mean_100,alpha,mean_entropy\n";
  const std::size_t n = points.size();
  if (n == 0) return;
  if (n <= max_rows) {
    for (const Point& p : points) {
      out << p.step << ',' << p.mean << ',' << p.alpha << ',' << p.entropy << "\n";
    }
    return;
  }
  // Even stride over the index range, always keeping the final point.
  for (std::size_t k = 0; k < max_rows; ++k) {
    const std::size_t idx = (k + 1) * n / max_rows - 1;
    const Point& p = points[idx];
    out << p.step << ',' << p.mean << ',' << p.alpha << ',' << p.entropy << "\n";
  }
}

}  // namespace meq
