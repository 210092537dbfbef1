#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "d3q/errors.hpp"
#include "d3q/nn/layers.hpp"
#include "d3q/schema.hpp"

namespace d3q::nn {

// Binary parameter file:
//   magic "D3QCKPT\0" | u32 version | u64 schema hash | u32 tensor count
//   per tensor: u32 name length, name bytes, u32 rows, u32 cols,
//               rows*cols f64 values in row-major order
// Integers and doubles are little-endian.
inline constexpr std::array<char, 8> kCheckpointMagic = {'D', '3', 'Q', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated checkpoint");
  return v;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const ParamRefs& params) {
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put<std::uint32_t>(os, kCheckpointVersion);
  detail::put<std::uint64_t>(os, schema_hash());
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p->value.rows()));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) detail::put<double>(os, p->value(r, c));
  }
}

// Loads into already-shaped parameters; names and shapes must agree.
inline void load_checkpoint(std::istream& is, const ParamRefs& params) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
    throw FormatError("not a checkpoint file");
  if (detail::get<std::uint32_t>(is) != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version");
  if (detail::get<std::uint64_t>(is) != schema_hash())
    throw FormatError("checkpoint written for a different schema");
  const auto count = detail::get<std::uint32_t>(is);
  if (count != params.size()) throw FormatError("checkpoint tensor count mismatch");
  for (Param* p : params) {
    const auto len = detail::get<std::uint32_t>(is);
    std::string n(len, '\0');
    if (!is.read(n.data(), len)) throw FormatError("truncated checkpoint");
    if (n != p->name) throw FormatError("checkpoint tensor " + n + " where " + p->name + " expected");
    const auto rows = detail::get<std::uint32_t>(is);
    const auto cols = detail::get<std::uint32_t>(is);
    if (rows != p->value.rows() || cols != p->value.cols())
      throw FormatError("checkpoint shape mismatch for " + p->name);
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) p->value(r, c) = detail::get<double>(is);
  }
}

inline void save_checkpoint_file(const std::string& path, const ParamRefs& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  save_checkpoint(out, params);
}

inline void load_checkpoint_file(const std::string& path, const ParamRefs& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  load_checkpoint(in, params);
}

}  // namespace d3q::nn
