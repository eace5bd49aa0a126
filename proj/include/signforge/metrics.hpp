#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signforge/image.hpp"

namespace signforge {

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = (0.01 * 255.0) * (0.01 * 255.0);
inline constexpr double kSsimC2 = (0.03 * 255.0) * (0.03 * 255.0);

// Mean SSIM over every fully contained 11x11 Gaussian window (sigma 1.5).
// Throws DimensionError when sizes differ or are below 11x11.
double ssim(const GrayImage& x, const GrayImage& y);

enum class HandSide { left, right };
HandSide parse_hand_side(std::string_view name);
std::string_view to_string(HandSide side);

struct HandBox {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  HandSide side = HandSide::left;
};

// Mean SSIM over the crops. Boxes narrower or shorter than 11 pixels are
// grown to 11 around their centre (clamped to the image) and a warning is
// appended. Boxes leaving the image are a DimensionError.
double hand_ssim(const GrayImage& x, const GrayImage& y, std::span<const HandBox> boxes,
                 std::vector<std::string>* warnings = nullptr);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Mean Euclidean distance between corresponding points.
double hand_keypoint_distance(std::span<const Point2> a, std::span<const Point2> b);

// frame_index<TAB>side<TAB>x<TAB>y<TAB>w<TAB>h
std::map<std::size_t, std::vector<HandBox>> read_hand_boxes(const std::filesystem::path& path);
// frame_index<TAB>side<TAB>k_index<TAB>x<TAB>y; points per (frame, side) ordered by k_index.
using FrameKeypoints = std::map<HandSide, std::vector<Point2>>;
std::map<std::size_t, FrameKeypoints> read_hand_keypoints(const std::filesystem::path& path);

}  // namespace signforge
