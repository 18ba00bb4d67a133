#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "albdg/config.hpp"
#include "albdg/error.hpp"
#include "albdg/grid.hpp"

namespace albdg::io {

namespace fs = std::filesystem;

/// Shortest decimal that round-trips to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }

/// Provenance attached to every file as <file>.meta.json.
struct Meta {
  std::string config_hash;
  std::string kind;

  nlohmann::json to_json() const {
    return {{"artifact", "albdg"}, {"version", kVersion}, {"config_hash", config_hash}, {"kind", kind}};
  }
};

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

inline void write_sidecar(const fs::path& path, const Meta& meta, const nlohmann::json& extra = {}) {
  auto j = meta.to_json();
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_text(fs::path(path.string() + ".meta.json"), j.dump(2) + "\n");
}

inline void write_json(const fs::path& path, const nlohmann::json& j, const Meta& meta) {
  write_text(path, j.dump(2) + "\n");
  write_sidecar(path, meta);
}

using Row = std::vector<std::string>;

inline void write_csv(const fs::path& path, const Row& header, const std::vector<Row>& rows, const Meta& meta) {
  std::ostringstream s;
  auto line = [&](const Row& r) {
    for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << r[i];
    s << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  write_text(path, s.str());
  write_sidecar(path, meta, {{"columns", header}, {"rows", rows.size()}});
}

inline std::vector<Row> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    Row r;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) r.push_back(cell);
    rows.push_back(r);
  }
  return rows;
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

/// Raw little-endian float64, first axis fastest, with a sidecar
/// {dims, lengths, dtype, order}.
inline void write_grid(const fs::path& path, const Vec& field, const std::vector<int>& dims,
                       const std::vector<double>& lengths, const Meta& meta) {
  require(static_cast<std::size_t>(field.size()) == product(dims), "write_grid: field size does not match dims");
  std::string bytes(static_cast<std::size_t>(field.size()) * 8, '\0');
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    std::uint64_t u;
    const double v = field[i];
    std::memcpy(&u, &v, 8);
    for (int b = 0; b < 8; ++b) bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] = static_cast<char>((u >> (8 * b)) & 0xff);
  }
  write_text(path, bytes);
  write_sidecar(path, meta, {{"dims", dims}, {"lengths", lengths}, {"dtype", "float64"}, {"order", "x-fastest"},
                             {"endianness", "little"}});
}

struct Grid {
  Vec values;
  std::vector<int> dims;
  std::vector<double> lengths;
};

inline Grid read_grid(const fs::path& path) {
  const auto meta = read_json(fs::path(path.string() + ".meta.json"));
  Grid g;
  g.dims = meta.at("dims").get<std::vector<int>>();
  g.lengths = meta.at("lengths").get<std::vector<double>>();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t n = product(g.dims);
  require(bytes.size() == n * 8, "read_grid: '" + path.string() + "' has the wrong size");
  g.values = Vec(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    double v;
    std::memcpy(&v, &u, 8);
    g.values[static_cast<Eigen::Index>(i)] = v;
  }
  return g;
}

}  // namespace albdg::io
