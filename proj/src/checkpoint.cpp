#include "meq/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

#include "meq/config_io.hpp"

namespace meq {

namespace {

constexpr char kMagic[4] = {'M', 'E', 'Q', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  std::vector<std::uint8_t> take() { return std::move(buf_); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const char* data, std::size_t n) {
    buf_.insert(buf_.end(), data, data + n);
  }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > buf_.size()) throw BadCheckpoint("checkpoint truncated");
  }
  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

void write_shape(Writer& w, const MlpParams& net) {
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const Layer& l : net.layers) {
    w.u32(static_cast<std::uint32_t>(l.weights.rows()));
    w.u32(static_cast<std::uint32_t>(l.weights.cols()));
    w.u8(static_cast<std::uint8_t>(l.activation));
  }
}

void write_matrix(Writer& w, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
  }
}

void write_vector(Writer& w, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

void write_net(Writer& w, const MlpParams& net) {
  write_shape(w, net);
  for (const Layer& l : net.layers) {
    write_matrix(w, l.weights);
    write_vector(w, l.bias);
  }
}

void read_matrix(Reader& r, Eigen::MatrixXd& m) {
  for (Eigen::Index row = 0; row < m.rows(); ++row) {
    for (Eigen::Index col = 0; col < m.cols(); ++col) m(row, col) = r.f64();
  }
}

void read_vector(Reader& r, Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.f64();
}

MlpParams read_net(Reader& r) {
  MlpParams net;
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 64) throw BadCheckpoint("implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    Layer l;
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::uint8_t act = r.u8();
    if (rows == 0 || cols == 0 || rows > 100'000 || cols > 100'000) {
      throw BadCheckpoint("implausible layer shape");
    }
    if (act > 2) throw BadCheckpoint("unknown activation tag");
    l.weights.resize(rows, cols);
    l.bias.resize(rows);
    l.activation = static_cast<Activation>(act);
    net.layers.push_back(std::move(l));
  }
  for (Layer& l : net.layers) {
    read_matrix(r, l.weights);
    read_vector(r, l.bias);
  }
  return net;
}

void write_adam(Writer& w, const AdamState& s) {
  w.u32(static_cast<std::uint32_t>(s.m_w.size()));
  for (std::size_t i = 0; i < s.m_w.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(s.m_w[i].rows()));
    w.u32(static_cast<std::uint32_t>(s.m_w[i].cols()));
  }
  for (std::size_t i = 0; i < s.m_w.size(); ++i) {
    write_matrix(w, s.m_w[i]);
    write_vector(w, s.m_b[i]);
    write_matrix(w, s.v_w[i]);
    write_vector(w, s.v_b[i]);
  }
  w.u64(static_cast<std::uint64_t>(s.step));
  w.f64(s.beta1);
  w.f64(s.beta2);
  w.f64(s.eps);
}

AdamState read_adam(Reader& r) {
  AdamState s;
  const std::uint32_t n = r.u32();
  if (n > 64) throw BadCheckpoint("implausible Adam layer count");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows == 0 || cols == 0 || rows > 100'000 || cols > 100'000) {
      throw BadCheckpoint("implausible Adam shape");
    }
    shapes.emplace_back(rows, cols);
  }
  for (auto [rows, cols] : shapes) {
    s.m_w.emplace_back(rows, cols);
    s.m_b.emplace_back(rows);
    s.v_w.emplace_back(rows, cols);
    s.v_b.emplace_back(rows);
    read_matrix(r, s.m_w.back());
    read_vector(r, s.m_b.back());
    read_matrix(r, s.v_w.back());
    read_vector(r, s.v_b.back());
  }
  s.step = static_cast<std::int64_t>(r.u64());
  s.beta1 = r.f64();
  s.beta2 = r.f64();
  s.eps = r.f64();
  return s;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const CheckpointState& state,
                                               const ScenarioConfig& config) {
  nlohmann::json meta;
  meta["scenario"] = config.name;
  meta["algorithm"] = to_string(config.algorithm);
  meta["seed"] = config.seed;
  meta["env_step"] = state.env_step;
  meta["episode"] = state.episode;
  meta["agent_update_count"] = state.agent_update_count;
  meta["recent_returns"] = state.recent_returns;
  meta["config"] = scenario_to_json(config);
  const std::string json_text = meta.dump();

  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.str(json_text);

  w.u32(static_cast<std::uint32_t>(state.nets.size()));
  for (const NamedParams& n : state.nets) {
    w.str(n.name);
    write_net(w, n.params);
  }
  w.u32(static_cast<std::uint32_t>(state.adams.size()));
  for (const NamedAdam& a : state.adams) {
    w.str(a.name);
    write_adam(w, a.state);
  }
  w.u8(state.has_log_alpha ? 1 : 0);
  if (state.has_log_alpha) {
    w.f64(state.log_alpha);
    w.f64(state.log_alpha_adam.m);
    w.f64(state.log_alpha_adam.v);
    w.u64(static_cast<std::uint64_t>(state.log_alpha_adam.step));
  }
  w.u32(static_cast<std::uint32_t>(state.rng_streams.size()));
  for (const NamedRngState& r : state.rng_streams) {
    w.str(r.name);
    w.u64(r.key);
    w.u64(r.counter);
  }
  return w.take();
}

LoadedCheckpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadCheckpoint("not a MEQ1 checkpoint (bad magic)");
  }
  Reader r(bytes);
  char magic[4];
  for (auto& c : magic) c = static_cast<char>(r.u8());
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw BadCheckpoint("unsupported checkpoint version " + std::to_string(version));
  }

  LoadedCheckpoint out;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw BadCheckpoint(std::string("bad metadata JSON: ") + e.what());
  }
  try {
    out.config = scenario_from_json(meta.at("config"));
    out.state.env_step = meta.at("env_step").get<std::uint64_t>();
    out.state.episode = meta.at("episode").get<std::uint64_t>();
    out.state.agent_update_count = meta.at("agent_update_count").get<std::uint64_t>();
    out.state.recent_returns = meta.at("recent_returns").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw BadCheckpoint(std::string("incomplete metadata: ") + e.what());
  }

  const std::uint32_t n_nets = r.u32();
  if (n_nets > 64) throw BadCheckpoint("implausible network count");
  for (std::uint32_t i = 0; i < n_nets; ++i) {
    NamedParams n;
    n.name = r.str();
    n.params = read_net(r);
    out.state.nets.push_back(std::move(n));
  }
  const std::uint32_t n_adams = r.u32();
  if (n_adams > 64) throw BadCheckpoint("implausible Adam count");
  for (std::uint32_t i = 0; i < n_adams; ++i) {
    NamedAdam a;
    a.name = r.str();
    a.state = read_adam(r);
    out.state.adams.push_back(std::move(a));
  }
  out.state.has_log_alpha = r.u8() != 0;
  if (out.state.has_log_alpha) {
    out.state.log_alpha = r.f64();
    out.state.log_alpha_adam.m = r.f64();
    out.state.log_alpha_adam.v = r.f64();
    out.state.log_alpha_adam.step = static_cast<std::int64_t>(r.u64());
  }
  const std::uint32_t n_rng = r.u32();
  if (n_rng > 64) throw BadCheckpoint("implausible rng stream count");
  for (std::uint32_t i = 0; i < n_rng; ++i) {
    NamedRngState s;
    s.name = r.str();
    s.key = r.u64();
    s.counter = r.u64();
    out.state.rng_streams.push_back(std::move(s));
  }
  if (!r.done()) throw BadCheckpoint("trailing bytes after checkpoint payload");
  return out;
}

void save_checkpoint_file(const std::filesystem::path& path, const CheckpointState& state,
                          const ScenarioConfig& config) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(state, config);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw BadCheckpoint("cannot open checkpoint file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace meq
