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


// spimpute: sparse imputation of unreliable spectrogram cells.
//
//   spimpute features   --in clip.wav --out clip.spim
//   spimpute mix        --speech s.wav --noise n.wav --snr 0 --out y.wav
//   spimpute mask       --type oracle --clean s.spim --noise n.spim --out m.spim
//   spimpute build-dict --corpus clean/ --out dict.spim
//   spimpute impute     --noisy y.spim --mask m.spim --dict dict.spim --out yhat.spim
//   spimpute sweep      --config sweep.cfg
//   spimpute score      --truth s.spim --imputed yhat.spim --mask m.spim
//
// Exit codes: 0 ok, 1 usage or other error, 2 malformed input, 3 no usable
// utterance, 4 missing path.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spimpute/spimpute.hpp"

namespace fs = std::filesystem;
using namespace spimpute;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kMalformedInput: return 2;
    case ErrorCode::kNoUsableUtterance: return 3;
    case ErrorCode::kMissingPath: return 4;
    default: return 1;
  }
}

bool has_ext(const fs::path& p, const char* ext) { return p.extension() == ext; }

Spectrogram load_spectrogram(const fs::path& p, const FrontendConfig& fe) {
  if (has_ext(p, ".wav")) return log_mel(read_wav(p.string()), fe);
  return Spectrogram(spim::read(p.string()));
}

/// .wav and .spim files of a directory, sorted by name. Entries that fail to
/// load are skipped with a warning.
std::vector<Utterance> load_corpus(const std::string& dir, const FrontendConfig& fe) {
  require(!dir.empty() && fs::is_directory(dir), ErrorCode::kMissingPath,
          "corpus directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && (has_ext(e.path(), ".wav") || has_ext(e.path(), ".spim"))) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Utterance> out;
  for (const auto& f : files) {
    try {
      out.push_back({f.stem().string(), load_spectrogram(f, fe)});
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << f.string() << ": " << e.what() << '\n';
    }
  }
  require(!out.empty(), ErrorCode::kMissingPath, "no readable entries in " + dir);
  return out;
}

std::string resolve(const std::string& path, const fs::path& base) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (base / path).string();
}

Dictionary build_from_dir(const std::string& dir, const PipelineConfig& cfg) {
  const std::vector<Utterance> corpus = load_corpus(dir, cfg.frontend);
  std::vector<Spectrogram> specs;
  std::vector<std::string> ids;
  for (const auto& u : corpus) {
    specs.push_back(u.clean);
    ids.push_back(u.id);
  }
  return build_dictionary(specs, cfg.dictionary.n_atoms, cfg.dictionary.fragment_frames,
                          cfg.dictionary.seed, ids);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse imputation of noise-corrupted spectrogram cells"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool clamp = false;
  app.add_option("--config", config_path, "Pipeline configuration file");
  app.add_option("--seed", seed, "Override every seed in the configuration");
  app.add_option("--threads", threads, "Worker threads for window solves");
  app.add_flag("--bounded-clamp", clamp, "Clamp unreliable estimates to the observation");

  // features
  std::string in_path, out_path;
  auto* features = app.add_subcommand("features", "WAV -> log-mel SPIM");
  features->add_option("--in", in_path)->required();
  features->add_option("--out", out_path)->required();

  // mix
  std::string speech_path, noise_path, noise_out;
  double snr_db = 0.0;
  auto* mix = app.add_subcommand("mix", "Mix speech and noise at a target SNR (WAV or SPIM)");
  mix->add_option("--speech", speech_path)->required();
  mix->add_option("--noise", noise_path)->required();
  mix->add_option("--snr", snr_db, "Target SNR in dB")->required();
  mix->add_option("--out", out_path)->required();
  mix->add_option("--noise-out", noise_out, "SPIM mode: also write the scaled noise");

  // mask
  std::string mask_type = "oracle", clean_path, noisy_path, noise_est_path, est_path, oracle_path;
  std::optional<double> threshold_db;
  auto* mask = app.add_subcommand("mask", "Compute a reliability mask");
  mask->add_option("--type", mask_type)->check(CLI::IsMember({"oracle", "threshold", "corrected"}));
  mask->add_option("--clean", clean_path, "oracle: clean spectrogram");
  mask->add_option("--noise", noise_path, "oracle: noise spectrogram");
  mask->add_option("--noisy", noisy_path, "threshold: noisy spectrogram");
  mask->add_option("--noise-est", noise_est_path, "threshold: noise estimate");
  mask->add_option("--threshold-db", threshold_db);
  mask->add_option("--estimated", est_path, "corrected: estimated mask");
  mask->add_option("--oracle", oracle_path, "corrected: oracle mask");
  mask->add_option("--out", out_path)->required();

  // build-dict
  std::string corpus_dir;
  std::optional<Eigen::Index> n_atoms, frames;
  auto* build = app.add_subcommand("build-dict", "Sample an exemplar dictionary from a corpus");
  build->add_option("--corpus", corpus_dir)->required();
  build->add_option("--out", out_path)->required();
  build->add_option("--atoms", n_atoms, "Number of atoms (default 8000)");
  build->add_option("--frames", frames, "Fragment length R in frames (default 35)");

  // impute
  std::string mask_path, dict_path, log_path;
  std::optional<Eigen::Index> shift;
  std::optional<double> lambda_rel, lambda_abs;
  auto* impute = app.add_subcommand("impute", "Reconstruct unreliable cells");
  impute->add_option("--noisy", noisy_path)->required();
  impute->add_option("--mask", mask_path)->required();
  impute->add_option("--dict", dict_path)->required();
  impute->add_option("--out", out_path)->required();
  impute->add_option("--shift", shift, "Window shift in frames (default 1)");
  impute->add_option("--lambda-rel", lambda_rel, "Lambda as a fraction of lambda_max");
  impute->add_option("--lambda", lambda_abs, "Absolute lambda");
  impute->add_option("--log", log_path, "Per-window diagnostic log (default: stderr)");

  // sweep
  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Run an evaluation sweep and write a CSV report");
  sweep->add_option("config", sweep_config, "Configuration file (or use --config)");
  sweep->add_option("--out", out_path, "CSV output (overrides paths.output)");

  // score
  std::string truth_path, imputed_path;
  auto* score_cmd = app.add_subcommand("score", "Reconstruction metrics against clean truth");
  score_cmd->add_option("--truth", truth_path)->required();
  score_cmd->add_option("--imputed", imputed_path)->required();
  score_cmd->add_option("--mask", mask_path)->required();
  score_cmd->add_option("--out", out_path, "JSON output (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed() && config_path.empty()) config_path = sweep_config;
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    const fs::path config_dir =
        config_path.empty() ? fs::path{} : fs::absolute(config_path).parent_path();
    if (seed) {
      cfg.dictionary.seed = *seed;
      cfg.sweep.seed = *seed;
    }
    if (threads > 0) cfg.imputation.threads = threads;
    if (clamp) cfg.imputation.bounded_clamp = true;

    if (features->parsed()) {
      spim::write(out_path, log_mel(read_wav(in_path), cfg.frontend).values);
    } else if (mix->parsed()) {
      if (has_ext(speech_path, ".wav")) {
        const MixResult r = mix_at_snr(read_wav(speech_path), read_wav(noise_path), snr_db);
        std::cerr << "noise scale " << r.scale << '\n';
        write_wav(out_path, r.mixture);
      } else {
        const Spectrogram s(spim::read(speech_path));
        const Eigen::MatrixXd raw = spim::read(noise_path);
        require(raw.rows() == s.bands() && raw.cols() >= s.frames(), ErrorCode::kShapeMismatch,
                "noise must have the speech band count and at least as many frames");
        const Spectrogram n =
            scale_noise_to_snr(s, Spectrogram(Eigen::MatrixXd(raw.leftCols(s.frames()))), snr_db);
        spim::write(out_path, additive_spectrogram_mix(s, n).values);
        if (!noise_out.empty()) spim::write(noise_out, n.values);
      }
    } else if (mask->parsed()) {
      Mask m;
      if (mask_type == "oracle") {
        m = oracle_mask(Spectrogram(spim::read(clean_path)), Spectrogram(spim::read(noise_path)));
      } else if (mask_type == "threshold") {
        m = threshold_mask(Spectrogram(spim::read(noisy_path)),
                           Spectrogram(spim::read(noise_est_path)),
                           threshold_db.value_or(cfg.masks.threshold_db));
      } else {
        m = remove_false_reliables(Mask(spim::read(est_path)), Mask(spim::read(oracle_path)));
      }
      spim::write(out_path, m.values);
    } else if (build->parsed()) {
      if (n_atoms) cfg.dictionary.n_atoms = *n_atoms;
      if (frames) cfg.dictionary.fragment_frames = *frames;
      const Dictionary d = build_from_dir(corpus_dir, cfg);
      save_dictionary(out_path, d);
      std::cerr << "dictionary: L=" << d.rows() << " N_A=" << d.atom_count() << '\n';
    } else if (impute->parsed()) {
      if (shift) cfg.imputation.shift_frames = *shift;
      if (lambda_rel) cfg.imputation.lambda = LambdaRule::relative(*lambda_rel);
      if (lambda_abs) cfg.imputation.lambda = LambdaRule::absolute(*lambda_abs);
      const Spectrogram y(spim::read(noisy_path));
      const Mask m(spim::read(mask_path));
      const Dictionary d = load_dictionary(dict_path);
      const ImputationResult r = impute_sliding(y, m, d, cfg.imputation);

      std::ofstream log_file;
      if (!log_path.empty()) {
        log_file.open(log_path, std::ios::trunc);
        require(static_cast<bool>(log_file), ErrorCode::kIo, "cannot write " + log_path);
      }
      std::ostream& log = log_path.empty() ? std::cerr : log_file;
      for (const auto& w : r.per_window) log << format_window_log(w) << '\n';
      if (r.solve_calls == 0) std::cerr << "warning: all windows skipped\n";
      if (!r.uncovered_cells.empty()) {
        std::cerr << "warning: " << r.uncovered_cells.size()
                  << " unreliable cells had no imputation candidate\n";
      }
      spim::write(out_path, r.imputed.values);
    } else if (sweep->parsed()) {
      require(!config_path.empty(), ErrorCode::kInvalidArgument, "sweep needs a configuration file");
      const std::string clean_dir = resolve(cfg.paths.clean_dir, config_dir);
      const std::string noise_dir = resolve(cfg.paths.noise_dir, config_dir);
      const std::string csv_path = out_path.empty() ? resolve(cfg.paths.output, config_dir) : out_path;
      require(!csv_path.empty(), ErrorCode::kInvalidArgument, "sweep: no output path");

      const std::vector<Utterance> corpus = load_corpus(clean_dir, cfg.frontend);
      std::vector<NoiseSource> noises;
      for (auto& u : load_corpus(noise_dir, cfg.frontend)) noises.push_back({u.id, std::move(u.clean)});

      Dictionary dict;
      const std::string dict_file = resolve(cfg.paths.dictionary, config_dir);
      if (!dict_file.empty() && fs::exists(dict_file)) {
        dict = load_dictionary(dict_file);
      } else {
        const std::string dc = cfg.paths.dict_corpus_dir.empty()
                                   ? clean_dir
                                   : resolve(cfg.paths.dict_corpus_dir, config_dir);
        dict = build_from_dir(dc, cfg);
        if (!dict_file.empty()) save_dictionary(dict_file, dict);
      }

      SweepConfig sc;
      sc.snr_db = cfg.sweep.snr_db;
      sc.masks = cfg.sweep.masks;
      sc.shifts = cfg.sweep.shifts;
      sc.threshold_db = cfg.masks.threshold_db;
      sc.imputation = cfg.imputation;
      sc.energy_floor = cfg.frontend.energy_floor;
      sc.utterance_fraction = cfg.sweep.utterance_fraction;
      sc.seed = cfg.sweep.seed;
      sc.warn = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
      const SweepReport report = run_sweep(corpus, noises, dict, sc);

      std::ostringstream csv;
      write_sweep_csv(csv, report);
      write_text(csv_path, csv.str());
      std::cerr << "sweep: " << report.rows.size() << " rows -> " << csv_path << '\n';
    } else if (score_cmd->parsed()) {
      const ImputationMetrics m =
          score(Spectrogram(spim::read(truth_path)), Spectrogram(spim::read(imputed_path)),
                Mask(spim::read(mask_path)), cfg.frontend.energy_floor);
      nlohmann::json j{{"overall_rmse", m.overall_rmse},
                       {"unreliable_cells", m.unreliable_cells},
                       {"total_cells", m.total_cells},
                       {"unreliable_rmse", nullptr},
                       {"imputation_snr_db", nullptr}};
      if (m.unreliable_rmse) j["unreliable_rmse"] = *m.unreliable_rmse;
      if (m.imputation_snr_db && std::isfinite(*m.imputation_snr_db)) {
        j["imputation_snr_db"] = *m.imputation_snr_db;
      }
      if (out_path.empty()) {
        std::cout << j.dump(1) << '\n';
      } else {
        write_text(out_path, j.dump(1) + "\n");
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
