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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "spimpute/error.hpp"
#include "spimpute/features.hpp"

namespace spimpute {

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32le(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16le(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

/// Parses a mono 16-bit PCM RIFF/WAVE image. Samples keep integer scale
/// (no normalization to [-1, 1]).
inline AudioClip parse_wav(const std::string& bytes) {
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  require(n >= 12 && std::memcmp(b, "RIFF", 4) == 0 && std::memcmp(b + 8, "WAVE", 4) == 0,
          ErrorCode::kMalformedInput, "malformed WAV: missing RIFF/WAVE header");

  bool have_fmt = false;
  int rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = detail::read_u32le(b + pos + 4);
    const std::size_t body = pos + 8;
    require(size <= n - body || std::memcmp(b + pos, "data", 4) == 0, ErrorCode::kMalformedInput,
            "malformed WAV: chunk overruns file");
    if (std::memcmp(b + pos, "fmt ", 4) == 0) {
      require(size >= 16, ErrorCode::kMalformedInput, "malformed WAV: short fmt chunk");
      const std::uint16_t format = detail::read_u16le(b + body);
      const std::uint16_t channels = detail::read_u16le(b + body + 2);
      rate = static_cast<int>(detail::read_u32le(b + body + 4));
      const std::uint16_t bits = detail::read_u16le(b + body + 14);
      require(format == 1 && channels == 1 && bits == 16 && rate > 0,
              ErrorCode::kMalformedInput, "malformed WAV: expected mono 16-bit PCM");
      have_fmt = true;
    } else if (std::memcmp(b + pos, "data", 4) == 0) {
      require(have_fmt, ErrorCode::kMalformedInput, "malformed WAV: data before fmt");
      require(size <= n - body, ErrorCode::kMalformedInput, "malformed WAV: truncated data");
      AudioClip clip;
      clip.sample_rate = rate;
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] = static_cast<std::int16_t>(detail::read_u16le(b + body + 2 * i));
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw Error(ErrorCode::kMalformedInput, "malformed WAV: no data chunk");
}

inline AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingPath, "cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

/// Samples are rounded and saturated to int16.
inline std::string encode_wav(const AudioClip& clip) {
  std::string s;
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  s.append("RIFF");
  detail::put_u32le(s, 36 + data_bytes);
  s.append("WAVEfmt ");
  detail::put_u32le(s, 16);
  detail::put_u16le(s, 1);
  detail::put_u16le(s, 1);
  detail::put_u32le(s, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_u32le(s, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  detail::put_u16le(s, 2);
  detail::put_u16le(s, 16);
  s.append("data");
  detail::put_u32le(s, data_bytes);
  for (double v : clip.samples) {
    const double c = std::clamp(std::round(v), -32768.0, 32767.0);
    detail::put_u16le(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(c)));
  }
  return s;
}

inline void write_wav(const std::string& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  const std::string bytes = encode_wav(clip);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path);
}

}  // namespace spimpute
