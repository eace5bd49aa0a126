#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "signforge/error.hpp"
#include "signforge/frnet.hpp"
#include "signforge/image.hpp"

using namespace signforge;
using testutil::frame_of;

namespace {

std::size_t white(const GrayImage& img) {
  return static_cast<std::size_t>(std::count_if(img.pixels.begin(), img.pixels.end(), [](auto v) { return v != 0; }));
}

GrayImage random_gray(Rng& rng, std::size_t w, std::size_t h) {
  GrayImage img(w, h);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.uniform_index(256));
  return img;
}

SkeletonTopology two_joint() { return SkeletonTopology({"a", "b"}, {{0, 1}}, {1.0}, 0, 0, 1); }

}  // namespace

TEST_SUITE("frnet") {
  TEST_CASE("adaptive threshold on constant images") {
    const GrayImage flat(12, 9, 77);
    CHECK(white(adaptive_threshold(flat, 11, 2.0)) == flat.pixels.size());
    CHECK(white(adaptive_threshold(flat, 11, 0.0)) == 0);
    CHECK_THROWS_AS(adaptive_threshold(flat, 10, 2.0), ContractError);
    CHECK_THROWS_AS(adaptive_threshold(flat, 1, 2.0), ContractError);
  }

  TEST_CASE("step edge, window 3") {
    // columns 0 | 255: the bright column's window mean is 170
    GrayImage step(2, 3);
    for (std::size_t y = 0; y < 3; ++y) step.at(1, y) = 255;
    const GrayImage t = adaptive_threshold(step, 3, 2.0);
    for (std::size_t y = 0; y < 3; ++y) {
      CHECK(t.at(0, y) == 0);
      CHECK(t.at(1, y) == 255);
    }
  }

  TEST_CASE("threshold is shift invariant (property)") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      GrayImage img(13, 10);
      for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.uniform_index(200));
      GrayImage shifted = img;
      for (auto& v : shifted.pixels) v = static_cast<std::uint8_t>(v + 40);
      CHECK(adaptive_threshold(img, 5, 2.0) == adaptive_threshold(shifted, 5, 2.0));
    }
  }

  TEST_CASE("erosion") {
    CHECK(white(erode(GrayImage(7, 7, 0))) == 0);
    GrayImage square(9, 9);
    for (std::size_t y = 2; y < 7; ++y) {
      for (std::size_t x = 2; x < 7; ++x) square.at(x, y) = 255;
    }
    const GrayImage e = erode(square);
    CHECK(white(e) == 1);
    CHECK(e.at(4, 4) == 255);
    const GrayImage full = erode(GrayImage(10, 8, 255));
    CHECK(white(full) == 6 * 4);
    CHECK(full.at(2, 2) == 255);
    CHECK(full.at(1, 2) == 0);
  }

  TEST_CASE("erosion is anti-extensive and monotone (property)") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      GrayImage a(6 + rng.uniform_index(10), 6 + rng.uniform_index(10));
      for (auto& v : a.pixels) v = rng.uniform() < 0.8 ? 255 : 0;
      GrayImage b = a;
      for (auto& v : b.pixels) v = rng.uniform() < 0.2 ? 255 : v;
      const GrayImage ea = erode(a), eb = erode(b);
      for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        if (ea.pixels[i]) {
          CHECK(a.pixels[i]);
          CHECK(eb.pixels[i]);
        }
      }
    }
  }

  TEST_CASE("fr_condition composes threshold and erosion") {
    const GrayImage d = fr_condition(GrayImage(15, 12, 90));
    CHECK(white(d) == 11 * 8);
    CHECK(white(fr_condition(GrayImage(15, 12, 0))) == white(erode(adaptive_threshold(GrayImage(15, 12, 0), 11, 2))));
    Rng rng(4);
    const GrayImage img = random_gray(rng, 20, 16);
    const GrayImage out = fr_condition(img);
    CHECK(is_binary(out));
    CHECK(white(out) <= white(adaptive_threshold(img, kFrWindow, kFrOffset)));
  }

  TEST_CASE("skeleton rendering") {
    const PoseFrame f = frame_of({{0, 0, 0}, {1, 0, 0}});
    const GrayImage a = render_condition(f, two_joint(), 32, 32);
    CHECK(is_binary(a));
    CHECK(a == render_condition(f, two_joint(), 32, 32));
    // a horizontal bone is one connected row of white between the joints
    std::size_t row = 0, best = 0;
    for (std::size_t y = 0; y < 32; ++y) {
      std::size_t n = 0;
      for (std::size_t x = 0; x < 32; ++x) n += a.at(x, y) != 0;
      if (n > best) best = n, row = y;
    }
    std::size_t first = 32, last = 0;
    for (std::size_t x = 0; x < 32; ++x) {
      if (a.at(x, row)) first = std::min(first, x), last = std::max(last, x);
    }
    for (std::size_t x = first; x <= last; ++x) CHECK(a.at(x, row) == 255);
    CHECK(last - first > 16);

    const PoseFrame moved = frame_of({{5, -3, 2}, {6, -3, 2}});
    CHECK(render_condition(moved, two_joint(), 32, 32) == a);

    const GrayImage dot = render_condition(frame_of({{1, 1, 1}, {1, 1, 1}}), two_joint(), 16, 16);
    CHECK(white(dot) == 1);
  }

  TEST_CASE("pgm round trip and errors") {
    Rng rng(5);
    const GrayImage img = random_gray(rng, 7, 5);
    std::stringstream io;
    write_pgm(io, img);
    CHECK(read_pgm(io) == img);
    std::istringstream comment("P5\n# made by hand\n2 1\n255\nab");
    const GrayImage c = read_pgm(comment);
    CHECK(c.width == 2);
    CHECK(c.at(1, 0) == 'b');
    std::istringstream ascii("P2\n2 1\n255\n1 2\n");
    CHECK_THROWS_AS(read_pgm(ascii), FormatError);
    std::istringstream truncated("P5\n4 4\n255\nab");
    CHECK_THROWS_AS(read_pgm(truncated), FormatError);
  }
}
