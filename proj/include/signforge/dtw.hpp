#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signforge/dataprep.hpp"
#include "signforge/skeleton.hpp"

namespace signforge {

enum class FrameCost { euclidean, manhattan };
FrameCost parse_frame_cost(std::string_view name);

struct DtwConfig {
  FrameCost frame_cost = FrameCost::euclidean;
  bool normalize_by_path_length = true;
};

// Distance between the 3J coordinate vectors of two frames; counters ignored.
double frame_distance(const PoseFrame& a, const PoseFrame& b, FrameCost cost);

struct DtwAlignment {
  double cost = 0.0;         // accumulated, unnormalized
  std::size_t path_length = 0;
  double distance = 0.0;     // cost / path_length when normalizing, else cost
};

// D(i,j) = cost(a_i, b_j) + min(D(i-1,j), D(i,j-1), D(i-1,j-1)). Among
// predecessors of equal cost the longest path wins, which makes the
// normalized value the smallest available for the optimal cost.
DtwAlignment dtw_align(const PoseSequence& a, const PoseSequence& b, const DtwConfig& cfg = {});
double dtw_distance(const PoseSequence& a, const PoseSequence& b, const DtwConfig& cfg = {});

struct ClipDtw {
  std::string clip_id;
  double dtw = 0.0;
  std::size_t frames_pred = 0;
  std::size_t frames_gt = 0;
  bool failed = false;
  std::string error;
};

struct DtwReport {
  double mean = 0.0;
  double median = 0.0;
  std::size_t failed = 0;
  std::vector<ClipDtw> clips;
};

using PosePredictor = std::function<PoseSequence(const PoseExample&)>;

// Runs `predict` on every example (in parallel) and compares to the ground
// truth. Failing clips are kept in the list, flagged, and left out of the
// mean and median.
DtwReport evaluate_dtw(const PosePredictor& predict, std::span<const PoseExample* const> examples,
                       const DtwConfig& cfg = {});

inline constexpr double kHistogramBinWidth = 0.05;

void write_dtw_report(const std::filesystem::path& path, const DtwReport& report);
// bin_low<TAB>count rows from 0 up to the bin holding the largest value.
void write_dtw_histogram(const std::filesystem::path& path, const DtwReport& report);

}  // namespace signforge
