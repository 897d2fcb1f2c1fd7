#include "pdmpclt/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pdmpclt {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("io: short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "n,tau";
  for (int k = 0; k < traj.dim; ++k) out += ",y" + std::to_string(k);
  out += ",regime\n";
  for (std::size_t n = 0; n < traj.jump_count(); ++n) {
    out += std::to_string(n);
    out += ',';
    out += format_double(traj.tau[n]);
    const StateView s = traj.state_at_jump(n);
    for (double c : s.y) {
      out += ',';
      out += format_double(c);
    }
    out += ',';
    out += std::to_string(s.regime);
    out += '\n';
  }
  return out;
}

std::string point_cloud_csv(const EmpiricalMeasure& mu, int dim) {
  std::string out;
  for (int k = 0; k < dim; ++k) out += "y" + std::to_string(k) + ",";
  out += "regime,weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double c : mu.points[i].y) {
      out += format_double(c);
      out += ',';
    }
    out += std::to_string(mu.points[i].regime);
    out += ',';
    out += format_double(mu.weights[i]);
    out += '\n';
  }
  return out;
}

EmpiricalMeasure parse_point_cloud_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("point cloud: empty file");

  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  if (header.size() < 3 || header[header.size() - 2] != "regime" || header.back() != "weight")
    throw std::runtime_error("point cloud: header must be y0,...,regime,weight");
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k)
    if (header[k] != "y" + std::to_string(k))
      throw std::runtime_error("point cloud: header must be y0,...,regime,weight");

  std::vector<HybridState> points;
  std::vector<double> weights;
  double total = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != dim + 2) throw std::runtime_error("point cloud: ragged row");
    HybridState x;
    x.y.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) x.y[k] = std::stod(cells[k]);
    x.regime = std::stoi(cells[dim]);
    const double w = std::stod(cells[dim + 1]);
    if (w < 0.0) throw std::runtime_error("point cloud: negative weight");
    total += w;
    points.push_back(std::move(x));
    weights.push_back(w);
  }
  if (points.empty()) throw std::runtime_error("point cloud: no rows");
  if (std::abs(total - 1.0) > 1e-9)
    throw std::runtime_error("point cloud: weights must sum to 1 (within 1e-9)");
  return EmpiricalMeasure::make(std::move(points), std::move(weights));
}

std::string fnv1a_hex(const std::string& payload) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

nlohmann::json report_envelope(nlohmann::json payload) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j.update(payload);
  return j;
}

nlohmann::json manifest_json(const std::string& command, const std::string& config_hash,
                             std::uint64_t seed, const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["outputs"] = outputs;
  // Everything above is byte-stable across reruns; wall-clock data is
  // confined to this section, which comparisons exclude.
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  j["volatile"] = {
      {"created_unix_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
  return j;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("io: cannot create directory '" + path + "'");
}

}  // namespace pdmpclt
