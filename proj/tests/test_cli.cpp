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


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "oracles.hpp"
#include "spimpute/spimpute.hpp"
#include "spimpute/synthetic.hpp"

namespace spimpute {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int status = -1;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("spimpute_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args) const {
    const std::string err = path("stderr.txt");
    const std::string cmd = std::string(SPIMPUTE_CLI_PATH) + " " + args + " 2> " + err;
    CliRun r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = slurp(err);
    return r;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  static std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  // clean/ holds synthetic utterances, noise/ one noise spectrogram
  void write_synthetic_corpus(Eigen::Index utterances) {
    fs::create_directories(dir_ / "clean");
    fs::create_directories(dir_ / "noise");
    const synthetic::CorpusSpec spec;
    for (const auto& u : synthetic::corpus(spec, utterances, 11)) {
      spim::write(path("clean/" + u.id + ".spim"), u.clean.values);
    }
    spim::write(path("noise/hum.spim"), synthetic::noise(spec.bands, 200, 8.0, 1.5, 3).values);
  }

  fs::path dir_;
};

AudioClip tone_clip(double seconds) {
  AudioClip clip;
  const auto n = static_cast<std::size_t>(seconds * clip.sample_rate);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples.push_back(std::round(8000.0 * std::sin(2 * M_PI * 440.0 * i / clip.sample_rate)));
  }
  return clip;
}

TEST_F(CliTest, FeaturesFromOneSecondWav) {
  write_wav(path("a.wav"), tone_clip(1.0));
  ASSERT_EQ(run("features --in " + path("a.wav") + " --out " + path("a.spim")).status, 0);
  const Eigen::MatrixXd m = spim::read(path("a.spim"));
  EXPECT_EQ(m.rows(), 23);
  EXPECT_EQ(m.cols(), 98);

  ASSERT_EQ(run("features --in " + path("a.wav") + " --out " + path("b.spim")).status, 0);
  EXPECT_EQ(slurp(path("a.spim")), slurp(path("b.spim")));
}

TEST_F(CliTest, FeaturesRejectsTruncatedWav) {
  const std::string bytes = encode_wav(tone_clip(0.1));
  std::ofstream(path("bad.wav"), std::ios::binary) << bytes.substr(0, 20);
  const CliRun r = run("features --in " + path("bad.wav") + " --out " + path("bad.spim"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("malformed WAV"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("bad.spim")));
}

TEST_F(CliTest, MissingInputIsExitFour) {
  EXPECT_EQ(run("features --in " + path("nope.wav") + " --out " + path("x.spim")).status, 4);
}

TEST_F(CliTest, BuildDictionaryManifestAndDeterminism) {
  write_synthetic_corpus(10);
  const std::string corpus = path("clean");
  ASSERT_EQ(run("build-dict --corpus " + corpus + " --out " + path("d1.spim") +
                " --atoms 100 --frames 8 --seed 4").status, 0);
  ASSERT_EQ(run("build-dict --corpus " + corpus + " --out " + path("d2.spim") +
                " --atoms 100 --frames 8 --seed 4").status, 0);
  EXPECT_EQ(slurp(path("d1.spim")), slurp(path("d2.spim")));
  const auto manifest = nlohmann::json::parse(slurp(path("d1.spim.json")));
  EXPECT_EQ(manifest["provenance"].size(), 100u);
  EXPECT_EQ(manifest["N_A"], 100);
  EXPECT_EQ(manifest["R"], 8);
  EXPECT_EQ(manifest["seed"], 4);
  const Eigen::MatrixXd atoms = spim::read(path("d1.spim"));
  EXPECT_EQ(atoms.rows(), 6 * 8);
  EXPECT_EQ(atoms.cols(), 100);
}

TEST_F(CliTest, BuildDictionaryWithShortCorpus) {
  fs::create_directories(dir_ / "short");
  for (int i = 0; i < 3; ++i) {
    spim::write(path("short/u" + std::to_string(i) + ".spim"), Eigen::MatrixXd::Ones(4, 10));
  }
  const CliRun r = run("build-dict --corpus " + path("short") + " --out " + path("d.spim") +
                    " --atoms 5 --frames 35");
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("no utterance long enough"), std::string::npos) << r.err;
}

class CliImputeTest : public CliTest {
 protected:
  void SetUp() override {
    CliTest::SetUp();
    write_synthetic_corpus(8);
    ASSERT_EQ(run("build-dict --corpus " + path("clean") + " --out " + path("dict.spim") +
                  " --atoms 60 --frames 10").status, 0);
    std::mt19937_64 rng(5);
    noisy_ = oracle::random_matrix(rng, 6, 40, 2, 12);
    spim::write(path("noisy.spim"), noisy_);
  }

  std::string impute_args(const std::string& mask, const std::string& extra = "") const {
    return "impute --noisy " + path("noisy.spim") + " --mask " + path(mask) + " --dict " +
           path("dict.spim") + " --out " + path("out.spim") + " --log " + path("log.txt") + " " +
           extra;
  }

  Eigen::MatrixXd noisy_;
};

TEST_F(CliImputeTest, AllOnesMaskPreservesEveryCell) {
  spim::write(path("ones.spim"), Eigen::MatrixXd::Ones(6, 40));
  ASSERT_EQ(run(impute_args("ones.spim")).status, 0);
  EXPECT_EQ(spim::read(path("out.spim")), noisy_);
}

TEST_F(CliImputeTest, AllZerosMaskSkipsEveryWindow) {
  spim::write(path("zeros.spim"), Eigen::MatrixXd::Zero(6, 40));
  const CliRun r = run(impute_args("zeros.spim"));
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.err.find("all windows skipped"), std::string::npos) << r.err;
  EXPECT_EQ(spim::read(path("out.spim")), noisy_);
  for (const auto& l : lines(slurp(path("log.txt")))) {
    EXPECT_NE(l.find("skipped=1"), std::string::npos) << l;
  }
}

TEST_F(CliImputeTest, LogHasOneLinePerWindow) {
  std::mt19937_64 rng(6);
  Eigen::MatrixXd m(6, 40);
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng) ? 1.0 : 0.0;
  spim::write(path("mask.spim"), m);
  for (int shift : {1, 10}) {
    ASSERT_EQ(run(impute_args("mask.spim", "--shift " + std::to_string(shift))).status, 0);
    const auto expected = oracle::count_windows(6 * 40, 6 * 10, 6 * shift).windows;
    EXPECT_EQ(static_cast<long long>(lines(slurp(path("log.txt"))).size()), expected);
    const Eigen::MatrixXd out = spim::read(path("out.spim"));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (m.data()[i] == 1.0) EXPECT_EQ(out.data()[i], noisy_.data()[i]);
    }
  }
}

TEST_F(CliImputeTest, ScoreReportsJson) {
  spim::write(path("ones.spim"), Eigen::MatrixXd::Ones(6, 40));
  Eigen::MatrixXd half = Eigen::MatrixXd::Ones(6, 40);
  half.leftCols(20).setZero();
  spim::write(path("half.spim"), half);
  Eigen::MatrixXd shifted = noisy_;
  shifted.leftCols(20).array() += 1.0;
  spim::write(path("shifted.spim"), shifted);
  ASSERT_EQ(run("score --truth " + path("noisy.spim") + " --imputed " + path("shifted.spim") +
                " --mask " + path("half.spim") + " --out " + path("score.json")).status, 0);
  const auto j = nlohmann::json::parse(slurp(path("score.json")));
  EXPECT_NEAR(j["unreliable_rmse"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(j["unreliable_cells"], 120);
  EXPECT_EQ(j["total_cells"], 240);
}

TEST_F(CliTest, MaskAndMixPipeline) {
  write_synthetic_corpus(1);
  const std::string clean = path("clean/synth0.spim");
  ASSERT_EQ(run("mix --speech " + clean + " --noise " + path("noise/hum.spim") +
                " --snr 0 --out " + path("noisy.spim") + " --noise-out " + path("n.spim")).status,
            0);
  ASSERT_EQ(run("mask --type oracle --clean " + clean + " --noise " + path("n.spim") +
                " --out " + path("oracle.spim")).status, 0);
  const Mask expected = oracle_mask(Spectrogram(spim::read(clean)),
                                    Spectrogram(spim::read(path("n.spim"))));
  EXPECT_EQ(spim::read(path("oracle.spim")), expected.values);
}

void write_config(const std::string& file, const std::string& body) {
  std::ofstream(file) << "paths.clean_dir = clean\npaths.noise_dir = noise\n" << body;
}

TEST_F(CliTest, SweepMinimalConfig) {
  write_synthetic_corpus(1);
  write_config(path("sweep.cfg"),
               "dictionary.n_atoms = 30\ndictionary.R = 8\nsweep.snr_db = 0\nsweep.shifts = 2\n"
               "paths.output = report.csv\n");
  ASSERT_EQ(run("sweep " + path("sweep.cfg")).status, 0);
  const auto rows = lines(slurp(path("report.csv")));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], kSweepCsvHeader);
}

TEST_F(CliTest, SweepDefaultShiftGrid) {
  write_synthetic_corpus(3);
  write_config(path("sweep.cfg"), "dictionary.n_atoms = 100\nsweep.snr_db = 0\n");
  ASSERT_EQ(run("--config " + path("sweep.cfg") + " sweep --out " + path("r.csv")).status, 0);
  const auto rows = lines(slurp(path("r.csv")));
  ASSERT_EQ(rows.size(), 9u);
  std::vector<std::string> shifts;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string field;
    for (int c = 0; c < 4; ++c) std::getline(in, field, ',');
    shifts.push_back(field);
  }
  EXPECT_EQ(shifts, (std::vector<std::string>{"1", "5", "10", "15", "20", "25", "30", "35"}));
}

TEST_F(CliTest, SweepMissingCorpus) {
  write_config(path("sweep.cfg"), "paths.output = r.csv\n");
  EXPECT_EQ(run("sweep " + path("sweep.cfg")).status, 4);
  EXPECT_FALSE(fs::exists(path("r.csv")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("impute --noisy x").status, 0);
}

}  // namespace
}  // namespace spimpute
