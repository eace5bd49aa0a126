#pragma once

#include <cstddef>
#include <vector>

#include "signforge/image.hpp"
#include "signforge/skeleton.hpp"

namespace signforge {

inline constexpr std::size_t kFrWindow = 11;
inline constexpr double kFrOffset = 2.0;

// 255 where pixel > local window mean - C, else 0. The mean uses edge
// replication past the borders. Throws ContractError for an even or < 3 window.
GrayImage adaptive_threshold(const GrayImage& img, std::size_t window, double c);

// 5x5 all-ones erosion; pixels outside the image count as black.
GrayImage erode(const GrayImage& binary);

// erode(adaptive_threshold(img, window, c)).
GrayImage fr_condition(const GrayImage& img, std::size_t window = kFrWindow, double c = kFrOffset);

bool is_binary(const GrayImage& img);

// Skeleton raster: x, y of the joints fitted to the canvas with a 10% margin
// (image y grows downward, as in the source keypoints), bones as 1-pixel
// lines, joints as 3x3 squares, white on black. A pose whose bounding box is
// a single point becomes one centred pixel.
GrayImage render_condition(const PoseFrame& frame, const SkeletonTopology& topo, std::size_t width,
                           std::size_t height);

// Stand-in video frame for a pose when no footage exists: thickened limbs in
// light gray over a dark background, suitable as FR-Net input.
GrayImage render_silhouette(const PoseFrame& frame, const SkeletonTopology& topo, std::size_t width,
                            std::size_t height);

// Nearest-neighbour resample to width x height, scaled to [0, 1].
std::vector<double> to_unit_tensor(const GrayImage& img, std::size_t width, std::size_t height);

}  // namespace signforge
