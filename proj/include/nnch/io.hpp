// Field snapshot format: little-endian binary with header
//   magic "NNCH", u32 version, u32 nx, u32 ny, u8 field-kind,
// then row-major f64 payload. CSV export for plotting.
#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "nnch/field.hpp"

namespace nnch {

enum class FieldKind : std::uint8_t { c = 0, mu = 1, p = 2, u = 3, v = 4 };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::c: return "c";
    case FieldKind::mu: return "mu";
    case FieldKind::p: return "p";
    case FieldKind::u: return "u";
    case FieldKind::v: return "v";
  }
  return "?";
}

constexpr std::uint32_t kSnapshotVersion = 1;

static_assert(std::endian::native == std::endian::little, "snapshot format is little-endian");

inline void write_snapshot(const std::string& path, FieldKind kind, const Field2D& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open snapshot for writing: " + path);
  out.write("NNCH", 4);
  const std::uint32_t ver = kSnapshotVersion, nx = std::uint32_t(f.nx), ny = std::uint32_t(f.ny);
  const std::uint8_t k = std::uint8_t(kind);
  out.write(reinterpret_cast<const char*>(&ver), 4);
  out.write(reinterpret_cast<const char*>(&nx), 4);
  out.write(reinterpret_cast<const char*>(&ny), 4);
  out.write(reinterpret_cast<const char*>(&k), 1);
  out.write(reinterpret_cast<const char*>(f.a.data()), std::streamsize(f.a.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write: " + path);
}

struct Snapshot {
  FieldKind kind;
  Field2D field;
};

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  char magic[4];
  std::uint32_t ver = 0, nx = 0, ny = 0;
  std::uint8_t k = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&ver), 4);
  in.read(reinterpret_cast<char*>(&nx), 4);
  in.read(reinterpret_cast<char*>(&ny), 4);
  in.read(reinterpret_cast<char*>(&k), 1);
  if (!in || std::memcmp(magic, "NNCH", 4) != 0)
    throw std::runtime_error("not an NNCH snapshot: " + path);
  if (ver != kSnapshotVersion) throw std::runtime_error("unsupported snapshot version in " + path);
  if (k > 4) throw std::runtime_error("bad field kind in " + path);
  Snapshot s{FieldKind(k), Field2D(int(nx), int(ny))};
  in.read(reinterpret_cast<char*>(s.field.a.data()), std::streamsize(s.field.a.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated snapshot: " + path);
  return s;
}

inline void write_csv(const std::string& path, const Field2D& f) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw std::runtime_error("cannot open csv for writing: " + path);
  for (int j = 0; j < f.ny; ++j) {
    for (int i = 0; i < f.nx; ++i) std::fprintf(out, i ? ",%.17g" : "%.17g", f(i, j));
    std::fprintf(out, "\n");
  }
  std::fclose(out);
}

}  // namespace nnch
