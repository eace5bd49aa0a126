#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "signforge/dataprep.hpp"

namespace fs = std::filesystem;
using testutil::TempDir;

namespace {

struct Run {
  int status = -1;
  std::string output;
};

// Runs the CLI with stdout and stderr captured together.
Run cli(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli.log";
  const std::string cmd = std::string("\"") + SIGNFORGE_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  if (!fs::exists(dir)) return 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty() && line[0] != '#';
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("prep keeps every clean clip") {
    TempDir dir("cli_prep");
    REQUIRE(cli("synth --out " + q(dir / "corpus") + " --clips 3", dir.path).status == 0);
    const Run r = cli("prep --manifest " + q(dir / "corpus/manifest.tsv") + " --keypoints " + q(dir / "corpus/keypoints") +
                          " --out " + q(dir / "prep"),
                      dir.path);
    CHECK(r.status == 0);
    CHECK(count_files(dir / "prep/poses", ".pose") == 3);
    CHECK(r.output.find("retained 3/3") != std::string::npos);
  }

  TEST_CASE("a clip with no detections is dropped and reported") {
    TempDir dir("cli_empty");
    REQUIRE(cli("synth --out " + q(dir / "corpus") + " --clips 3 --empty 1", dir.path).status == 0);
    const Run r = cli("prep --manifest " + q(dir / "corpus/manifest.tsv") + " --keypoints " + q(dir / "corpus/keypoints") +
                          " --out " + q(dir / "prep"),
                      dir.path);
    CHECK(r.status == 0);
    CHECK(count_files(dir / "prep/poses", ".pose") == 2);
    // second manifest row is the empty clip
    std::ifstream manifest(dir / "corpus/manifest.tsv");
    std::string line, id;
    std::size_t row = 0;
    while (std::getline(manifest, line)) {
      if (line.rfind("clip_id", 0) == 0 || line.empty()) continue;
      if (row++ == 1) id = line.substr(0, line.find('\t'));
    }
    REQUIRE_FALSE(id.empty());
    CHECK(r.output.find("dropped " + id) != std::string::npos);
    const std::string report = slurp(dir / "prep/prep_report.tsv");
    CHECK(report.find(id + "\tdropped") != std::string::npos);
  }

  TEST_CASE("missing input exits with 2 and names the path") {
    TempDir dir("cli_missing");
    const fs::path missing = dir / "nope.tsv";
    const Run r = cli("prep --manifest " + q(missing) + " --out " + q(dir / "prep"), dir.path);
    CHECK(r.status == 2);
    CHECK(r.output.find(missing.string()) != std::string::npos);
    CHECK(cli("train-pose --out x", dir.path).status == 2);
    CHECK(cli("no-such-command", dir.path).status == 2);
  }

  TEST_CASE("train, translate, evaluate") {
    TempDir dir("cli_train");
    REQUIRE(cli("synth --out " + q(dir / "corpus") + " --clips 4", dir.path).status == 0);
    REQUIRE(cli("prep --manifest " + q(dir / "corpus/manifest.tsv") + " --keypoints " + q(dir / "corpus/keypoints") +
                    " --out " + q(dir / "prep"),
                dir.path)
                .status == 0);
    const Run t = cli("train-pose --manifest " + q(dir / "prep/manifest.tsv") + " --out " + q(dir / "model") + " --epochs 1",
                      dir.path);
    REQUIRE(t.status == 0);
    CHECK(count_files(dir / "model/checkpoints", ".ckpt") == 1);
    CHECK(count_lines(dir / "model/loss.tsv") == 2);  // header + one epoch

    std::ofstream(dir / "lines.txt") << "hello\nthank you\n";
    const fs::path ckpt = dir / "model/checkpoints/epoch_0001.ckpt";
    CHECK(cli("translate --checkpoint " + q(ckpt) + " --input " + q(dir / "lines.txt") + " --out " + q(dir / "tr"), dir.path)
              .status == 0);
    CHECK(count_files(dir / "tr", ".pose") == 2);

    const Run e = cli("eval-dtw --manifest " + q(dir / "prep/manifest.tsv") + " --oracle identity --split train --out " +
                          q(dir / "eval"),
                      dir.path);
    CHECK(e.status == 0);
    CHECK(e.output.find("mean 0") != std::string::npos);
    CHECK(fs::exists(dir / "eval/dtw_report.tsv"));
  }

  TEST_CASE("fr writes two images per frame") {
    TempDir dir("cli_fr");
    signforge::Rng rng(3);
    signforge::PoseSequence seq = testutil::random_pose(rng, 10, 10);
    signforge::write_pose_file(dir / "clip.pose", seq);
    const Run r = cli("fr --pose " + q(dir / "clip.pose") + " --out " + q(dir / "fr") + " --size 32", dir.path);
    CHECK(r.status == 0);
    CHECK(count_files(dir / "fr", ".pgm") == 20);
    CHECK(fs::exists(dir / "fr/c_0009.pgm"));
    CHECK(fs::exists(dir / "fr/d_0009.pgm"));
  }

  TEST_CASE("metrics on identical frames and repeatable sampling") {
    TempDir dir("cli_diff");
    REQUIRE(cli("train-diff --out " + q(dir / "diff") + " --epochs 1 --per-class 2", dir.path).status == 0);
    const std::string common = "sample --checkpoint " + q(dir / "diff/diffusion.ckpt") + " --c " +
                               q(dir / "diff/conditions/c_class1.pgm") + " --d " + q(dir / "diff/conditions/d_class1.pgm") +
                               " --count 2 --out ";
    REQUIRE(cli(common + q(dir / "s1"), dir.path).status == 0);
    REQUIRE(cli(common + q(dir / "s2"), dir.path).status == 0);
    CHECK(count_files(dir / "s1", ".pgm") == 2);
    CHECK(slurp(dir / "s1/sample_000.pgm") == slurp(dir / "s2/sample_000.pgm"));
    CHECK(slurp(dir / "s1/sample_001.pgm") == slurp(dir / "s2/sample_001.pgm"));
    CHECK(slurp(dir / "s1/sample_000.pgm") != slurp(dir / "s1/sample_001.pgm"));

    const Run m = cli("metrics --pred " + q(dir / "s1") + " --gt " + q(dir / "s1") + " --out " + q(dir / "m"), dir.path);
    CHECK(m.status == 0);
    CHECK(m.output.find("ssim 1") != std::string::npos);
  }
}
