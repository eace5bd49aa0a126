#include "signforge/frnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "signforge/error.hpp"

namespace signforge {

GrayImage adaptive_threshold(const GrayImage& img, std::size_t window, double c) {
  if (window < 3 || window % 2 == 0) {
    throw ContractError("adaptive_threshold: window must be odd and >= 3, got " + std::to_string(window));
  }
  const auto w = static_cast<long>(img.width), h = static_cast<long>(img.height);
  const long r = static_cast<long>(window / 2);
  const long n = static_cast<long>(window * window);
  GrayImage out(img.width, img.height);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      long total = 0;
      for (long dy = -r; dy <= r; ++dy) {
        const long yy = std::clamp(y + dy, 0L, h - 1);
        for (long dx = -r; dx <= r; ++dx) total += img.pixels[yy * w + std::clamp(x + dx, 0L, w - 1)];
      }
      // p > total / n - c, compared on integers so that shifting every pixel
      // by a constant gives the same answer.
      const long lhs = n * img.pixels[y * w + x] - total;
      out.pixels[y * w + x] = static_cast<double>(lhs) > -c * static_cast<double>(n) ? 255 : 0;
    }
  }
  return out;
}

GrayImage erode(const GrayImage& binary) {
  const auto w = static_cast<long>(binary.width), h = static_cast<long>(binary.height);
  GrayImage out(binary.width, binary.height);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      bool keep = y >= 2 && x >= 2 && y + 2 < h && x + 2 < w;
      for (long dy = -2; keep && dy <= 2; ++dy) {
        for (long dx = -2; keep && dx <= 2; ++dx) keep = binary.pixels[(y + dy) * w + x + dx] == 255;
      }
      out.pixels[y * w + x] = keep ? 255 : 0;
    }
  }
  return out;
}

GrayImage fr_condition(const GrayImage& img, std::size_t window, double c) {
  return erode(adaptive_threshold(img, window, c));
}

bool is_binary(const GrayImage& img) {
  return std::all_of(img.pixels.begin(), img.pixels.end(), [](std::uint8_t p) { return p == 0 || p == 255; });
}

namespace {

struct Pixel {
  long x, y;
};

struct CanvasFit {
  std::vector<Pixel> joints;
};

CanvasFit fit_to_canvas(const PoseFrame& frame, std::size_t width, std::size_t height) {
  if (frame.joints.empty()) throw InputError("render: pose has no joints");
  double lo_x = frame.joints[0][0], hi_x = lo_x, lo_y = frame.joints[0][1], hi_y = lo_y;
  for (const Vec3& j : frame.joints) {
    if (!std::isfinite(j[0]) || !std::isfinite(j[1])) throw InputError("render: non-finite joint coordinate");
    lo_x = std::min(lo_x, j[0]);
    hi_x = std::max(hi_x, j[0]);
    lo_y = std::min(lo_y, j[1]);
    hi_y = std::max(hi_y, j[1]);
  }
  const double span_x = hi_x - lo_x, span_y = hi_y - lo_y;
  const double usable_w = 0.8 * static_cast<double>(width - 1), usable_h = 0.8 * static_cast<double>(height - 1);
  double s = 0.0;
  if (span_x > 0.0 && span_y > 0.0) {
    s = std::min(usable_w / span_x, usable_h / span_y);
  } else if (span_x > 0.0) {
    s = usable_w / span_x;
  } else if (span_y > 0.0) {
    s = usable_h / span_y;
  }
  const double mid_x = 0.5 * (lo_x + hi_x), mid_y = 0.5 * (lo_y + hi_y);
  const double cx = 0.5 * static_cast<double>(width - 1), cy = 0.5 * static_cast<double>(height - 1);
  CanvasFit fit;
  for (const Vec3& j : frame.joints) {
    fit.joints.push_back({std::lround(cx + (j[0] - mid_x) * s), std::lround(cy + (j[1] - mid_y) * s)});
  }
  return fit;
}

void plot(GrayImage& img, long x, long y, std::uint8_t v) {
  if (x < 0 || y < 0 || x >= static_cast<long>(img.width) || y >= static_cast<long>(img.height)) return;
  img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = v;
}

void draw_line(GrayImage& img, Pixel a, Pixel b, std::uint8_t v) {
  const long dx = std::labs(b.x - a.x), dy = -std::labs(b.y - a.y);
  const long sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    plot(img, a.x, a.y, v);
    if (a.x == b.x && a.y == b.y) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      a.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      a.y += sy;
    }
  }
}

void draw_square(GrayImage& img, Pixel p, long radius, std::uint8_t v) {
  for (long dy = -radius; dy <= radius; ++dy) {
    for (long dx = -radius; dx <= radius; ++dx) plot(img, p.x + dx, p.y + dy, v);
  }
}

void require_canvas(const PoseFrame& frame, const SkeletonTopology& topo, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw InputError("render: canvas must be non-empty");
  if (frame.joints.size() != topo.joint_count()) {
    throw DimensionError("render: frame has " + std::to_string(frame.joints.size()) + " joints, skeleton has " +
                         std::to_string(topo.joint_count()));
  }
}

bool degenerate(const CanvasFit& fit) {
  return std::all_of(fit.joints.begin(), fit.joints.end(), [&](const Pixel& p) {
    return p.x == fit.joints[0].x && p.y == fit.joints[0].y;
  });
}

}  // namespace

GrayImage render_condition(const PoseFrame& frame, const SkeletonTopology& topo, std::size_t width,
                           std::size_t height) {
  require_canvas(frame, topo, width, height);
  GrayImage img(width, height);
  const CanvasFit fit = fit_to_canvas(frame, width, height);
  if (degenerate(fit)) {
    plot(img, fit.joints[0].x, fit.joints[0].y, 255);
    return img;
  }
  for (const Bone& b : topo.bones()) draw_line(img, fit.joints[b.parent], fit.joints[b.child], 255);
  for (const Pixel& p : fit.joints) draw_square(img, p, 1, 255);
  return img;
}

GrayImage render_silhouette(const PoseFrame& frame, const SkeletonTopology& topo, std::size_t width,
                            std::size_t height) {
  require_canvas(frame, topo, width, height);
  GrayImage img(width, height, 40);
  const CanvasFit fit = fit_to_canvas(frame, width, height);
  const long radius = std::max<long>(1, static_cast<long>(std::min(width, height) / 24));
  for (const Bone& b : topo.bones()) {
    const Pixel a = fit.joints[b.parent], c = fit.joints[b.child];
    const long steps = std::max({std::labs(c.x - a.x), std::labs(c.y - a.y), 1L});
    for (long s = 0; s <= steps; ++s) {
      const long x = a.x + (c.x - a.x) * s / steps, y = a.y + (c.y - a.y) * s / steps;
      draw_square(img, {x, y}, radius, 200);
    }
  }
  for (const Pixel& p : fit.joints) draw_square(img, p, radius + 1, 220);
  return img;
}

std::vector<double> to_unit_tensor(const GrayImage& img, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw DimensionError("to_unit_tensor: empty target size");
  std::vector<double> out(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = y * img.height / height;
    for (std::size_t x = 0; x < width; ++x) {
      out[y * width + x] = img.at(x * img.width / width, sy) / 255.0;
    }
  }
  return out;
}

}  // namespace signforge
