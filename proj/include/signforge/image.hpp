#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace signforge {

// 8-bit grayscale, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0);

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  bool empty() const { return pixels.empty(); }
  bool operator==(const GrayImage&) const = default;
};

// Copy of the w x h region at (x, y); the region must lie inside the image.
GrayImage crop(const GrayImage& img, std::size_t x, std::size_t y, std::size_t w, std::size_t h);

// Binary PGM (P5, maxval 255).
void write_pgm(std::ostream& out, const GrayImage& img);
GrayImage read_pgm(std::istream& in, const std::string& source = "<pgm>");
void write_pgm_file(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm_file(const std::filesystem::path& path);

}  // namespace signforge
