#pragma once

// Field checkpoints and diagnostics CSV.
//
// Checkpoint layout (little-endian):
//   "HSTF" | u32 version=1 | u32 kind tag | u32 n | u32 res[n] | f64 side[n]
//   | u64 component count | payload f64[ncomp * npoints] component-major
//   | u32 CRC32(payload bytes)

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "hflow/grid.hpp"

namespace hflow {

namespace detail {

inline const std::array<std::uint32_t, 256>& crc32_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

inline std::uint32_t crc32_update(std::uint32_t crc, const void* buf, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(buf);
  const auto& tab = crc32_table();
  crc ^= 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = tab[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFFu));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFFu));
}
inline void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

struct ByteReader {
  const unsigned char* p;
  std::size_t len, pos = 0;
  void need(std::size_t k) const {
    if (pos + k > len) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[pos + std::size_t(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[pos + std::size_t(i)]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

}  // namespace detail

inline void write_checkpoint(const std::string& path, const StructureField& f) {
  std::string header = "HSTF";
  detail::put_u32(header, 1u);
  detail::put_u32(header, kind_tag(f.model.kind));
  detail::put_u32(header, std::uint32_t(f.grid.n));
  for (int i = 0; i < f.grid.n; ++i) detail::put_u32(header, std::uint32_t(f.grid.res[std::size_t(i)]));
  for (int i = 0; i < f.grid.n; ++i) detail::put_f64(header, f.grid.side[std::size_t(i)]);
  detail::put_u64(header, std::uint64_t(f.ncomp_total()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(header.data(), std::streamsize(header.size()));
  std::uint32_t crc = 0;
  static_assert(sizeof(double) == 8);
  for (const auto& c : f.comp) {
    const char* bytes = reinterpret_cast<const char*>(c.data());
    const std::size_t len = c.size() * 8;
    out.write(bytes, std::streamsize(len));
    crc = detail::crc32_update(crc, bytes, len);
  }
  std::string tail;
  detail::put_u32(tail, crc);
  out.write(tail.data(), std::streamsize(tail.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline StructureField read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
  r.need(4);
  if (std::memcmp(bytes.data(), "HSTF", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != 1u) throw std::runtime_error("checkpoint: unsupported version");
  const HKind kind = kind_from_tag(r.u32());
  const int n = int(r.u32());
  std::vector<int> res(std::size_t(n), 0);
  for (int i = 0; i < n; ++i) res[std::size_t(i)] = int(r.u32());
  std::vector<double> side(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) side[std::size_t(i)] = r.f64();
  const std::uint64_t ncomp = r.u64();

  const int param = (kind == HKind::Trivial) ? n : (kind == HKind::U || kind == HKind::SU) ? n / 2 : 0;
  StructureField f(PeriodicGrid(n, res, side), make_model(kind, param));
  if (std::uint64_t(f.ncomp_total()) != ncomp)
    throw std::runtime_error("checkpoint: component count mismatch");

  std::uint32_t crc = 0;
  for (auto& c : f.comp) {
    const std::size_t len = c.size() * 8;
    r.need(len);
    std::memcpy(c.data(), bytes.data() + r.pos, len);
    crc = detail::crc32_update(crc, bytes.data() + r.pos, len);
    r.pos += len;
  }
  const std::uint32_t stored = r.u32();
  if (stored != crc) throw std::runtime_error("checkpoint: CRC mismatch in " + path);
  return f;
}

// ---------------------------------------------------------------------------

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace hflow
