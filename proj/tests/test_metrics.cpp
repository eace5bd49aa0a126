#include <doctest.h>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "signforge/error.hpp"
#include "signforge/metrics.hpp"
#include "signforge/rng.hpp"

using namespace signforge;
using testutil::TempDir;

namespace {

GrayImage random_gray(Rng& rng, std::size_t w, std::size_t h) {
  GrayImage img(w, h);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.uniform_index(256));
  return img;
}

// Straightforward per-window SSIM, written independently of the library.
double reference_ssim(const GrayImage& x, const GrayImage& y) {
  const int n = 11;
  double w[11][11], total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double di = i - 5, dj = j - 5;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += w[i][j];
    }
  }
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double acc = 0.0;
  int count = 0;
  for (std::size_t oy = 0; oy + n <= x.height; ++oy) {
    for (std::size_t ox = 0; ox + n <= x.width; ++ox) {
      double mx = 0, my = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          mx += w[i][j] / total * x.at(ox + j, oy + i);
          my += w[i][j] / total * y.at(ox + j, oy + i);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double a = x.at(ox + j, oy + i) - mx, b = y.at(ox + j, oy + i) - my;
          vx += w[i][j] / total * a * a;
          vy += w[i][j] / total * b * b;
          cxy += w[i][j] / total * a * b;
        }
      }
      acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return acc / count;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("ssim fixed points") {
    Rng rng(1);
    const GrayImage a = random_gray(rng, 20, 17);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const double flat = ssim(GrayImage(11, 11, 0), GrayImage(11, 11, 255));
    CHECK(flat == doctest::Approx(kSsimC1 / (255.0 * 255.0 + kSsimC1)).epsilon(1e-12));
    CHECK(flat == doctest::Approx(9.999e-5).epsilon(1e-3));
  }

  TEST_CASE("ssim matches a scalar reference (property)") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t w = 11 + rng.uniform_index(8), h = 11 + rng.uniform_index(8);
      const GrayImage a = random_gray(rng, w, h);
      GrayImage b = a;
      for (auto& v : b.pixels) v = static_cast<std::uint8_t>(std::clamp<int>(v + int(rng.uniform_index(61)) - 30, 0, 255));
      const double s = ssim(a, b);
      CHECK(std::fabs(s - reference_ssim(a, b)) < 1e-9);
      CHECK(s == doctest::Approx(ssim(b, a)).epsilon(1e-12));
      CHECK(s <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("ssim shape errors") {
    CHECK_THROWS_AS(ssim(GrayImage(12, 12), GrayImage(12, 13)), DimensionError);
    CHECK_THROWS_AS(ssim(GrayImage(10, 12), GrayImage(10, 12)), DimensionError);
  }

  TEST_CASE("hand ssim") {
    Rng rng(3);
    const GrayImage x = random_gray(rng, 40, 30), y = random_gray(rng, 40, 30);
    const HandBox left{2, 3, 14, 12, HandSide::left};
    const HandBox right{20, 10, 15, 16, HandSide::right};
    const double sl = ssim(crop(x, 2, 3, 14, 12), crop(y, 2, 3, 14, 12));
    const double sr = ssim(crop(x, 20, 10, 15, 16), crop(y, 20, 10, 15, 16));
    const HandBox one[] = {left};
    CHECK(hand_ssim(x, y, one) == sl);
    const HandBox both[] = {left, right};
    CHECK(hand_ssim(x, y, both) == doctest::Approx(0.5 * (sl + sr)).epsilon(1e-14));

    std::vector<std::string> warnings;
    const HandBox small[] = {{36, 0, 4, 5, HandSide::right}};
    const double grown = hand_ssim(x, y, small, &warnings);
    CHECK(warnings.size() == 1);
    CHECK(grown == ssim(crop(x, 29, 0, 11, 11), crop(y, 29, 0, 11, 11)));

    const HandBox outside[] = {{35, 0, 11, 11, HandSide::left}};
    CHECK_THROWS_AS(hand_ssim(x, y, outside), DimensionError);
    CHECK_THROWS_AS(hand_ssim(x, y, std::span<const HandBox>{}), InputError);
  }

  TEST_CASE("hand keypoint distance") {
    const Point2 a[] = {{0, 0}};
    const Point2 b[] = {{3, 4}};
    CHECK(hand_keypoint_distance(a, b) == 5.0);
    const Point2 p[] = {{0, 0}, {1, 1}};
    const Point2 q[] = {{3, 4}, {6, 13}};
    CHECK(hand_keypoint_distance(p, q) == 9.0);
    CHECK_THROWS_AS(hand_keypoint_distance(p, b), DimensionError);
    CHECK_THROWS_AS(parse_hand_side("both"), FormatError);
  }

  TEST_CASE("tsv readers") {
    TempDir dir("metrics");
    {
      std::ofstream out(dir / "boxes.tsv");
      out << "# frame side x y w h\n0\tleft\t1\t2\t11\t12\n0\tright\t5\t6\t13\t14\n3\tleft\t0\t0\t11\t11\n";
    }
    const auto boxes = read_hand_boxes(dir / "boxes.tsv");
    CHECK(boxes.size() == 2);
    CHECK(boxes.at(0).size() == 2);
    CHECK(boxes.at(0)[1].side == HandSide::right);
    CHECK(boxes.at(0)[1].height == 14);

    {
      std::ofstream out(dir / "kp.tsv");
      out << "1\tleft\t1\t5.5\t6\n1\tleft\t0\t1\t2\n";
    }
    const auto kp = read_hand_keypoints(dir / "kp.tsv");
    const auto& pts = kp.at(1).at(HandSide::left);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].x == 1.0);
    CHECK(pts[1].x == 5.5);

    {
      std::ofstream out(dir / "bad.tsv");
      out << "0\tleft\t1\t2\n";
    }
    CHECK_THROWS_AS(read_hand_boxes(dir / "bad.tsv"), FormatError);
    {
      std::ofstream out(dir / "dup.tsv");
      out << "0\tleft\t0\t1\t1\n0\tleft\t0\t2\t2\n";
    }
    CHECK_THROWS_AS(read_hand_keypoints(dir / "dup.tsv"), FormatError);
    CHECK_THROWS_AS(read_hand_boxes(dir / "none.tsv"), InputError);
  }
}
