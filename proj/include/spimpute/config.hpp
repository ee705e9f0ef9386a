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

// Declarative pipeline configuration: one "section.key = value" per line,
// '#' starts a comment, lists are comma separated. Every key is optional;
// an empty file yields the defaults (23 bands, R = 35, 8000 atoms, shift 1).

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spimpute/error.hpp"
#include "spimpute/evaluation.hpp"
#include "spimpute/features.hpp"
#include "spimpute/imputation.hpp"

namespace spimpute {

struct PipelineConfig {
  FrontendConfig frontend{};
  struct {
    Eigen::Index n_atoms = 8000;
    Eigen::Index fragment_frames = 35;
    std::uint64_t seed = 0;
  } dictionary;
  ImputationOptions imputation{};
  struct {
    MaskType type = MaskType::kOracle;
    double threshold_db = 0.0;
  } masks;
  struct {
    std::vector<double> snr_db{10.0, 5.0, 0.0, -5.0};
    std::vector<MaskType> masks{MaskType::kOracle};
    std::vector<Eigen::Index> shifts{1, 5, 10, 15, 20, 25, 30, 35};
    double utterance_fraction = 1.0;
    std::uint64_t seed = 0;
  } sweep;
  struct {
    std::string clean_dir;       // clean utterances (.wav or .spim)
    std::string noise_dir;       // noise recordings (.wav or .spim), one type per file
    std::string dictionary;      // existing dictionary; built from dict_corpus_dir otherwise
    std::string dict_corpus_dir; // defaults to clean_dir
    std::string output;          // sweep CSV
  } paths;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "config: " + key + " expects a number, got '" + v + "'");
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "config: " + key + " expects an integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kInvalidArgument, "config: " + key + " expects true/false");
}

}  // namespace detail

inline void apply_config_value(PipelineConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "frontend.frame_length_ms") c.frontend.frame_length_ms = to_double(key, v);
  else if (key == "frontend.frame_shift_ms") c.frontend.frame_shift_ms = to_double(key, v);
  else if (key == "frontend.band_count") c.frontend.band_count = static_cast<int>(to_int(key, v));
  else if (key == "frontend.fft_size") c.frontend.fft_size = static_cast<int>(to_int(key, v));
  else if (key == "frontend.energy_floor") c.frontend.energy_floor = to_double(key, v);
  else if (key == "frontend.low_freq") c.frontend.low_freq = to_double(key, v);
  else if (key == "frontend.high_freq") c.frontend.high_freq = to_double(key, v);
  else if (key == "dictionary.n_atoms") c.dictionary.n_atoms = to_int(key, v);
  else if (key == "dictionary.fragment_frames" || key == "dictionary.R") c.dictionary.fragment_frames = to_int(key, v);
  else if (key == "dictionary.seed") c.dictionary.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "solver.lambda_rule") {
    if (v == "relative") c.imputation.lambda.kind = LambdaRule::Kind::kRelative;
    else if (v == "absolute") c.imputation.lambda.kind = LambdaRule::Kind::kAbsolute;
    else throw Error(ErrorCode::kInvalidArgument, "config: solver.lambda_rule is relative|absolute");
  } else if (key == "solver.lambda") c.imputation.lambda.value = to_double(key, v);
  else if (key == "solver.tol") c.imputation.tol = to_double(key, v);
  else if (key == "solver.max_iter") c.imputation.max_iter = to_int(key, v);
  else if (key == "imputation.shift_frames") c.imputation.shift_frames = to_int(key, v);
  else if (key == "imputation.bounded_clamp") c.imputation.bounded_clamp = to_bool(key, v);
  else if (key == "imputation.threads") c.imputation.threads = static_cast<int>(to_int(key, v));
  else if (key == "masks.type") c.masks.type = parse_mask_type(v);
  else if (key == "masks.threshold_db") c.masks.threshold_db = to_double(key, v);
  else if (key == "sweep.snr_db") {
    c.sweep.snr_db.clear();
    for (const auto& s : split_list(v)) c.sweep.snr_db.push_back(to_double(key, s));
  } else if (key == "sweep.masks") {
    c.sweep.masks.clear();
    for (const auto& s : split_list(v)) c.sweep.masks.push_back(parse_mask_type(s));
  } else if (key == "sweep.shifts") {
    c.sweep.shifts.clear();
    for (const auto& s : split_list(v)) c.sweep.shifts.push_back(to_int(key, s));
  } else if (key == "sweep.utterance_fraction") c.sweep.utterance_fraction = to_double(key, v);
  else if (key == "sweep.seed") c.sweep.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "paths.clean_dir") c.paths.clean_dir = v;
  else if (key == "paths.noise_dir") c.paths.noise_dir = v;
  else if (key == "paths.dictionary") c.paths.dictionary = v;
  else if (key == "paths.dict_corpus_dir") c.paths.dict_corpus_dir = v;
  else if (key == "paths.output") c.paths.output = v;
  else throw Error(ErrorCode::kInvalidArgument, "config: unknown key '" + key + "'");
}

inline PipelineConfig parse_config(std::istream& in, PipelineConfig c = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidArgument,
            "config line " + std::to_string(lineno) + ": expected key = value");
    apply_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kMissingPath, "cannot open config " + path);
  return parse_config(in);
}

}  // namespace spimpute
