#include "signforge/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "signforge/error.hpp"

namespace signforge {

namespace {

std::array<double, kSsimWindow * kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> g{};
  const double centre = static_cast<double>(kSsimWindow / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - centre;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  std::array<double, kSsimWindow * kSsimWindow> w{};
  for (std::size_t r = 0; r < kSsimWindow; ++r) {
    for (std::size_t c = 0; c < kSsimWindow; ++c) w[r * kSsimWindow + c] = (g[r] / total) * (g[c] / total);
  }
  return w;
}

}  // namespace

double ssim(const GrayImage& x, const GrayImage& y) {
  if (x.width != y.width || x.height != y.height) {
    throw DimensionError("ssim: " + std::to_string(x.width) + "x" + std::to_string(x.height) + " vs " +
                         std::to_string(y.width) + "x" + std::to_string(y.height));
  }
  if (x.width < kSsimWindow || x.height < kSsimWindow) {
    throw DimensionError("ssim: images must be at least 11x11");
  }
  static const auto w = gaussian_window();
  const std::size_t out_w = x.width - kSsimWindow + 1, out_h = x.height - kSsimWindow + 1;
  double total = 0.0;
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      double mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0, mxy = 0.0;
      for (std::size_t r = 0; r < kSsimWindow; ++r) {
        for (std::size_t c = 0; c < kSsimWindow; ++c) {
          const double wt = w[r * kSsimWindow + c];
          const double a = x.at(ox + c, oy + r), b = y.at(ox + c, oy + r);
          mx += wt * a;
          my += wt * b;
          mxx += wt * (a * a);
          myy += wt * (b * b);
          mxy += wt * (a * b);
        }
      }
      const double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
      total += ((2.0 * mx * my + kSsimC1) * (2.0 * cov + kSsimC2)) /
               ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
    }
  }
  return total / static_cast<double>(out_w * out_h);
}

HandSide parse_hand_side(std::string_view name) {
  if (name == "left") return HandSide::left;
  if (name == "right") return HandSide::right;
  throw FormatError("hand side must be 'left' or 'right', got '" + std::string(name) + "'");
}

std::string_view to_string(HandSide side) { return side == HandSide::left ? "left" : "right"; }

double hand_ssim(const GrayImage& x, const GrayImage& y, std::span<const HandBox> boxes,
                 std::vector<std::string>* warnings) {
  if (boxes.empty()) throw InputError("hand_ssim: no boxes");
  if (x.width != y.width || x.height != y.height) throw DimensionError("hand_ssim: image sizes differ");
  double total = 0.0;
  for (HandBox box : boxes) {
    if (box.width == 0 || box.height == 0 || box.x + box.width > x.width || box.y + box.height > x.height) {
      throw DimensionError("hand_ssim: " + std::string(to_string(box.side)) + " box outside the image");
    }
    auto grow = [](std::size_t& pos, std::size_t& len, std::size_t limit) {
      if (len >= kSsimWindow) return;
      if (limit < kSsimWindow) throw DimensionError("hand_ssim: image smaller than 11 pixels");
      const double centre = static_cast<double>(pos) + 0.5 * static_cast<double>(len);
      const double start = std::floor(centre - 0.5 * static_cast<double>(kSsimWindow));
      pos = static_cast<std::size_t>(std::clamp(start, 0.0, static_cast<double>(limit - kSsimWindow)));
      len = kSsimWindow;
    };
    if (box.width < kSsimWindow || box.height < kSsimWindow) {
      if (warnings) {
        warnings->push_back(std::string(to_string(box.side)) + " box " + std::to_string(box.width) + "x" +
                            std::to_string(box.height) + " grown to at least 11x11");
      }
      grow(box.x, box.width, x.width);
      grow(box.y, box.height, x.height);
    }
    total += ssim(crop(x, box.x, box.y, box.width, box.height), crop(y, box.x, box.y, box.width, box.height));
  }
  return total / static_cast<double>(boxes.size());
}

double hand_keypoint_distance(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.size() != b.size()) {
    throw DimensionError("hand_keypoint_distance: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                         " points");
  }
  if (a.empty()) throw InputError("hand_keypoint_distance: no points");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::hypot(a[i].x - b[i].x, a[i].y - b[i].y);
  return total / static_cast<double>(a.size());
}

namespace {

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path, std::size_t fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    if (cells.size() != fields) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(fields) +
                        " fields, got " + std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

template <typename T>
T parse_cell(const std::string& cell, const std::filesystem::path& path) {
  std::istringstream in(cell);
  T v{};
  if (!(in >> v) || !in.eof()) throw FormatError(path.string() + ": bad value '" + cell + "'");
  return v;
}

}  // namespace

std::map<std::size_t, std::vector<HandBox>> read_hand_boxes(const std::filesystem::path& path) {
  std::map<std::size_t, std::vector<HandBox>> out;
  for (const auto& row : read_tsv(path, 6)) {
    HandBox box;
    box.side = parse_hand_side(row[1]);
    box.x = parse_cell<std::size_t>(row[2], path);
    box.y = parse_cell<std::size_t>(row[3], path);
    box.width = parse_cell<std::size_t>(row[4], path);
    box.height = parse_cell<std::size_t>(row[5], path);
    out[parse_cell<std::size_t>(row[0], path)].push_back(box);
  }
  return out;
}

std::map<std::size_t, FrameKeypoints> read_hand_keypoints(const std::filesystem::path& path) {
  std::map<std::size_t, std::map<HandSide, std::map<std::size_t, Point2>>> staged;
  for (const auto& row : read_tsv(path, 5)) {
    const auto frame = parse_cell<std::size_t>(row[0], path);
    const auto k = parse_cell<std::size_t>(row[2], path);
    auto& slot = staged[frame][parse_hand_side(row[1])];
    if (slot.count(k)) throw FormatError(path.string() + ": duplicate keypoint " + std::to_string(k));
    slot[k] = {parse_cell<double>(row[3], path), parse_cell<double>(row[4], path)};
  }
  std::map<std::size_t, FrameKeypoints> out;
  for (const auto& [frame, sides] : staged) {
    for (const auto& [side, points] : sides) {
      auto& dst = out[frame][side];
      for (const auto& [k, p] : points) dst.push_back(p);
    }
  }
  return out;
}

}  // namespace signforge
