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
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spimpute/error.hpp"
#include "spimpute/spectrogram.hpp"
#include "spimpute/spim.hpp"

namespace spimpute {

/// Where an atom came from: corpus utterance and first frame of the fragment.
struct Provenance {
  std::string utterance;
  Eigen::Index offset = 0;

  bool operator==(const Provenance&) const = default;
};

/// Overcomplete exemplar basis. Column n is a K x R clean fragment flattened
/// frame by frame (frame t fills rows t*K .. t*K+K-1). Atoms keep corpus
/// scale; they are not normalized.
struct Dictionary {
  Eigen::MatrixXd atoms;  // L x N_A
  Eigen::Index bands = 0;
  Eigen::Index frames = 0;  // R
  std::uint64_t seed = 0;
  std::vector<Provenance> provenance;

  Eigen::Index rows() const { return atoms.rows(); }
  Eigen::Index atom_count() const { return atoms.cols(); }
};

inline Eigen::VectorXd flatten_fragment(const Spectrogram& spec, Eigen::Index offset_frame,
                                        Eigen::Index fragment_frames) {
  require(fragment_frames >= 1 && offset_frame >= 0 &&
              offset_frame + fragment_frames <= spec.frames(),
          ErrorCode::kInvalidArgument, "fragment out of range");
  const Eigen::Index k = spec.bands();
  return Eigen::Map<const Eigen::VectorXd>(spec.values.data() + offset_frame * k,
                                           k * fragment_frames);
}

inline Spectrogram unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index bands) {
  require(bands >= 1 && v.size() % bands == 0, ErrorCode::kInvalidArgument,
          "vector length is not a multiple of the band count");
  return Spectrogram(Eigen::Map<const Eigen::MatrixXd>(v.data(), bands, v.size() / bands));
}

namespace detail {

/// Unbiased draw from [0, n) that does not depend on the standard library's
/// distribution implementation.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

}  // namespace detail

/// Samples n_atoms fragments with replacement: a uniformly chosen utterance
/// among those with at least R frames, then a uniform offset within it.
/// ids, when non-empty, names the utterances for provenance; otherwise the
/// corpus index is used.
inline Dictionary build_dictionary(std::span<const Spectrogram> corpus, Eigen::Index n_atoms,
                                   Eigen::Index fragment_frames, std::uint64_t seed,
                                   std::span<const std::string> ids = {}) {
  require(!corpus.empty(), ErrorCode::kInvalidArgument, "corpus is empty");
  require(n_atoms >= 1, ErrorCode::kInvalidArgument, "n_atoms must be >= 1");
  require(fragment_frames >= 1, ErrorCode::kInvalidArgument, "fragment length must be >= 1");
  require(ids.empty() || ids.size() == corpus.size(), ErrorCode::kInvalidArgument,
          "ids must match the corpus size");

  const Eigen::Index bands = corpus.front().bands();
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    require(corpus[i].bands() == bands, ErrorCode::kShapeMismatch,
            "corpus utterances have different band counts");
    if (corpus[i].frames() >= fragment_frames) eligible.push_back(i);
  }
  require(!eligible.empty(), ErrorCode::kNoUsableUtterance, "no utterance long enough");

  Dictionary d;
  d.bands = bands;
  d.frames = fragment_frames;
  d.seed = seed;
  d.atoms.resize(bands * fragment_frames, n_atoms);
  d.provenance.reserve(static_cast<std::size_t>(n_atoms));

  std::mt19937_64 rng(seed);
  for (Eigen::Index n = 0; n < n_atoms; ++n) {
    const std::size_t u = eligible[detail::uniform_below(rng, eligible.size())];
    const auto span = static_cast<std::uint64_t>(corpus[u].frames() - fragment_frames + 1);
    const auto offset = static_cast<Eigen::Index>(detail::uniform_below(rng, span));
    d.atoms.col(n) = flatten_fragment(corpus[u], offset, fragment_frames);
    d.provenance.push_back({ids.empty() ? std::to_string(u) : ids[u], offset});
  }
  return d;
}

inline nlohmann::json dictionary_manifest(const Dictionary& d) {
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : d.provenance) prov.push_back({{"utterance", p.utterance}, {"offset", p.offset}});
  return {{"seed", d.seed}, {"K", d.bands}, {"R", d.frames}, {"N_A", d.atom_count()},
          {"provenance", prov}};
}

inline std::string manifest_path(const std::string& dict_path) { return dict_path + ".json"; }

/// Writes atoms as SPIM at path and the manifest next to it (path + ".json").
inline void save_dictionary(const std::string& path, const Dictionary& d) {
  spim::write(path, d.atoms);
  std::ofstream out(manifest_path(path), std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + manifest_path(path));
  out << dictionary_manifest(d).dump(1) << '\n';
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + manifest_path(path));
}

inline Dictionary load_dictionary(const std::string& path) {
  Dictionary d;
  d.atoms = spim::read(path);
  std::ifstream in(manifest_path(path));
  require(static_cast<bool>(in), ErrorCode::kMissingPath, "cannot open " + manifest_path(path));
  nlohmann::json m;
  try {
    in >> m;
    d.seed = m.at("seed").get<std::uint64_t>();
    d.bands = m.at("K").get<Eigen::Index>();
    d.frames = m.at("R").get<Eigen::Index>();
    for (const auto& p : m.at("provenance")) {
      d.provenance.push_back({p.at("utterance").get<std::string>(), p.at("offset").get<Eigen::Index>()});
    }
    require(m.at("N_A").get<Eigen::Index>() == d.atoms.cols(), ErrorCode::kMalformedInput,
            "manifest N_A does not match atoms");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("malformed manifest: ") + e.what());
  }
  require(d.bands >= 1 && d.frames >= 1 && d.bands * d.frames == d.atoms.rows(),
          ErrorCode::kMalformedInput, "manifest K*R does not match atom length");
  return d;
}

}  // namespace spimpute
