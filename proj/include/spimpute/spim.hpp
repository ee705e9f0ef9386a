// Copyright 2026 The spimpute Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <Eigen/Core>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "spimpute/error.hpp"

namespace spimpute::spim {

// Layout (all little-endian):
//   0  "SPIM"
//   4  u32 version (1)
//   8  u32 rows
//   12 u32 cols
//   16 rows*cols f64, column-major
inline constexpr char kMagic[4] = {'S', 'P', 'I', 'M'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

inline std::string encode(const Eigen::MatrixXd& m) {
  require(m.allFinite(), ErrorCode::kInvalidArgument, "SPIM payload must be finite");
  require(m.rows() <= 0xffffffffLL && m.cols() <= 0xffffffffLL, ErrorCode::kInvalidArgument,
          "matrix too large for SPIM");
  std::string s;
  s.reserve(kHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
  s.append(kMagic, 4);
  detail::put_u32(s, kVersion);
  detail::put_u32(s, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(s, static_cast<std::uint32_t>(m.cols()));
  const double* d = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) detail::put_u64(s, std::bit_cast<std::uint64_t>(d[i]));
  return s;
}

inline Eigen::MatrixXd decode(const std::string& bytes) {
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  require(bytes.size() >= kHeaderBytes && std::memcmp(b, kMagic, 4) == 0,
          ErrorCode::kMalformedInput, "malformed SPIM: bad magic");
  require(detail::get_u32(b + 4) == kVersion, ErrorCode::kMalformedInput,
          "malformed SPIM: unsupported version");
  const std::uint64_t rows = detail::get_u32(b + 8);
  const std::uint64_t cols = detail::get_u32(b + 12);
  require(bytes.size() - kHeaderBytes == 8 * rows * cols, ErrorCode::kMalformedInput,
          "malformed SPIM: payload length does not match header");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  double* d = m.data();
  for (std::uint64_t i = 0; i < rows * cols; ++i) {
    d[i] = std::bit_cast<double>(detail::get_u64(b + kHeaderBytes + 8 * i));
  }
  require(m.allFinite(), ErrorCode::kMalformedInput, "malformed SPIM: non-finite value");
  return m;
}

inline void write(const std::string& path, const Eigen::MatrixXd& m) {
  const std::string bytes = encode(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path);
}

inline Eigen::MatrixXd read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingPath, "cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace spimpute::spim
