#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfbgk/fields.hpp"
#include "hfbgk/wiener.hpp"

namespace hfbgk {

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian; big-endian hosts unsupported");

// Binary snapshot: magic "HFBK1", then little-endian u32 Nx, u32 Nxi,
// f64 t, eps, xi_min, xi_max, then Nx*Nxi f64 cell values, x-major.
inline void write_snapshot(const std::string& path, const KineticField& F) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  out.write("HFBK1", 5);
  const std::uint32_t nx = static_cast<std::uint32_t>(F.x_grid.n);
  const std::uint32_t nxi = static_cast<std::uint32_t>(F.xi_grid.n);
  out.write(reinterpret_cast<const char*>(&nx), 4);
  out.write(reinterpret_cast<const char*>(&nxi), 4);
  const double header[4] = {F.t, F.eps, F.xi_grid.xi_min, F.xi_grid.xi_max};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(F.values.data()),
            static_cast<std::streamsize>(F.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

inline KineticField read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, "HFBK1", 5) != 0)
    throw std::runtime_error("read_snapshot: bad magic in " + path);
  std::uint32_t nx = 0, nxi = 0;
  in.read(reinterpret_cast<char*>(&nx), 4);
  in.read(reinterpret_cast<char*>(&nxi), 4);
  double header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || nx == 0 || nxi == 0) throw std::runtime_error("read_snapshot: bad header in " + path);
  KineticField F(header[1], TorusGrid(static_cast<int>(nx)),
                 XiGrid(header[2], header[3], static_cast<int>(nxi)), header[0]);
  in.read(reinterpret_cast<char*>(F.values.data()),
          static_cast<std::streamsize>(F.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("read_snapshot: truncated data in " + path);
  return F;
}

// Wiener path replay format: magic "HFBW1", little-endian u32 d, u32 M,
// u64 seed, i32 level, then M+1 f64 times and (M+1)*d f64 node values.
inline void write_path(const std::string& path, const WienerPath& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_path: cannot open " + path);
  out.write("HFBW1", 5);
  const std::uint32_t d = static_cast<std::uint32_t>(w.d);
  const std::uint32_t M = static_cast<std::uint32_t>(w.steps());
  const std::uint64_t seed = w.seed;
  const std::int32_t level = w.level;
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&M), 4);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  out.write(reinterpret_cast<const char*>(&level), 4);
  out.write(reinterpret_cast<const char*>(w.t_grid.data()),
            static_cast<std::streamsize>(w.t_grid.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(w.values.data()),
            static_cast<std::streamsize>(w.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_path: write failed for " + path);
}

inline WienerPath read_path(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_path: cannot open " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, "HFBW1", 5) != 0)
    throw std::runtime_error("read_path: bad magic in " + path);
  std::uint32_t d = 0, M = 0;
  std::uint64_t seed = 0;
  std::int32_t level = 0;
  in.read(reinterpret_cast<char*>(&d), 4);
  in.read(reinterpret_cast<char*>(&M), 4);
  in.read(reinterpret_cast<char*>(&seed), 8);
  in.read(reinterpret_cast<char*>(&level), 4);
  WienerPath w;
  w.d = static_cast<int>(d);
  w.seed = seed;
  w.level = level;
  w.t_grid.resize(M + 1);
  w.values.resize(static_cast<std::size_t>(M + 1) * d);
  in.read(reinterpret_cast<char*>(w.t_grid.data()),
          static_cast<std::streamsize>(w.t_grid.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(w.values.data()),
          static_cast<std::streamsize>(w.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("read_path: truncated data in " + path);
  return w;
}

// CSV writer with deterministic %.17g formatting so identical runs produce
// identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
  }
  void comment(const std::string& line) { out_ << "# " << line << "\n"; }
  void header(const std::vector<std::string>& cols) { row_strings(cols); }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }
  static std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static std::string num(std::uint64_t v) { return std::to_string(v); }
  static std::string num(int v) { return std::to_string(v); }

 private:
  std::ofstream out_;
};

inline void ensure_directory(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

}  // namespace hfbgk
