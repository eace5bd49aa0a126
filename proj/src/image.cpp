#include "signforge/image.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "signforge/error.hpp"

namespace signforge {

GrayImage::GrayImage(std::size_t w, std::size_t h, std::uint8_t fill) : width(w), height(h), pixels(w * h, fill) {
  if (w == 0 || h == 0) throw InputError("image dimensions must be positive");
}

GrayImage crop(const GrayImage& img, std::size_t x, std::size_t y, std::size_t w, std::size_t h) {
  if (w == 0 || h == 0 || x + w > img.width || y + h > img.height) {
    throw DimensionError("crop " + std::to_string(w) + "x" + std::to_string(h) + "+" + std::to_string(x) + "+" +
                         std::to_string(y) + " outside " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + " image");
  }
  GrayImage out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) out.at(c, r) = img.at(x + c, y + r);
  }
  return out;
}

void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

namespace {

std::size_t read_header_number(std::istream& in, const std::string& source) {
  int ch = in.peek();
  while (ch != EOF) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
    ch = in.peek();
  }
  std::size_t value = 0;
  if (!(in >> value)) throw FormatError(source + ": truncated PGM header");
  return value;
}

}  // namespace

GrayImage read_pgm(std::istream& in, const std::string& source) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw FormatError(source + ": not a binary PGM (P5)");
  const std::size_t w = read_header_number(in, source);
  const std::size_t h = read_header_number(in, source);
  const std::size_t maxval = read_header_number(in, source);
  if (w == 0 || h == 0) throw FormatError(source + ": zero image dimension");
  if (maxval != 255) throw FormatError(source + ": only maxval 255 is supported");
  if (!std::isspace(in.get())) throw FormatError(source + ": malformed PGM header");
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) throw FormatError(source + ": truncated pixel data");
  return img;
}

void write_pgm_file(const std::filesystem::path& path, const GrayImage& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write image: " + path.string());
  write_pgm(out, img);
}

GrayImage read_pgm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image: " + path.string());
  return read_pgm(in, path.string());
}

}  // namespace signforge
