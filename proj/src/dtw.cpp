#include "signforge/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "signforge/error.hpp"
#include "signforge/parallel.hpp"

namespace signforge {

FrameCost parse_frame_cost(std::string_view name) {
  if (name == "euclidean") return FrameCost::euclidean;
  if (name == "manhattan") return FrameCost::manhattan;
  throw InputError("unknown frame cost '" + std::string(name) + "'");
}

double frame_distance(const PoseFrame& a, const PoseFrame& b, FrameCost cost) {
  if (a.joints.size() != b.joints.size()) {
    throw DimensionError("frame_distance: " + std::to_string(a.joints.size()) + " vs " +
                         std::to_string(b.joints.size()) + " joints");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < a.joints.size(); ++j) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = a.joints[j][k] - b.joints[j][k];
      acc += cost == FrameCost::euclidean ? d * d : std::abs(d);
    }
  }
  return cost == FrameCost::euclidean ? std::sqrt(acc) : acc;
}

DtwAlignment dtw_align(const PoseSequence& a, const PoseSequence& b, const DtwConfig& cfg) {
  if (a.empty() || b.empty()) throw InputError("dtw: empty sequence");
  if (a.joint_count() != b.joint_count()) {
    throw DimensionError("dtw: joint counts differ (" + std::to_string(a.joint_count()) + " vs " +
                         std::to_string(b.joint_count()) + ")");
  }
  const std::size_t n = a.size(), m = b.size();
  struct Cell {
    double cost;
    std::size_t length;
  };
  std::vector<Cell> dp(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = frame_distance(a.frames[i], b.frames[j], cfg.frame_cost);
      if (i == 0 && j == 0) {
        dp[0] = {c, 1};
        continue;
      }
      Cell best{std::numeric_limits<double>::infinity(), 0};
      auto consider = [&](const Cell& p) {
        if (p.cost < best.cost || (p.cost == best.cost && p.length > best.length)) best = p;
      };
      if (i > 0) consider(dp[(i - 1) * m + j]);
      if (j > 0) consider(dp[i * m + j - 1]);
      if (i > 0 && j > 0) consider(dp[(i - 1) * m + j - 1]);
      dp[i * m + j] = {best.cost + c, best.length + 1};
    }
  }
  const Cell end = dp.back();
  DtwAlignment out{end.cost, end.length, end.cost};
  if (cfg.normalize_by_path_length) out.distance = end.cost / static_cast<double>(end.length);
  return out;
}

double dtw_distance(const PoseSequence& a, const PoseSequence& b, const DtwConfig& cfg) {
  return dtw_align(a, b, cfg).distance;
}

DtwReport evaluate_dtw(const PosePredictor& predict, std::span<const PoseExample* const> examples,
                       const DtwConfig& cfg) {
  DtwReport report;
  report.clips.resize(examples.size());
  parallel_for(examples.size(), [&](std::size_t i) {
    const PoseExample& ex = *examples[i];
    ClipDtw& clip = report.clips[i];
    clip.clip_id = ex.clip_id;
    clip.frames_gt = ex.pose.size();
    try {
      const PoseSequence pred = predict(ex);
      clip.frames_pred = pred.size();
      clip.dtw = dtw_distance(pred, ex.pose, cfg);
    } catch (const std::exception& e) {
      clip.failed = true;
      clip.error = e.what();
    }
  });
  std::vector<double> values;
  for (const ClipDtw& c : report.clips) {
    if (c.failed) {
      ++report.failed;
    } else {
      values.push_back(c.dtw);
    }
  }
  if (!values.empty()) {
    double total = 0.0;
    for (double v : values) total += v;
    report.mean = total / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    report.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  }
  return report;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_dtw_report(const std::filesystem::path& path, const DtwReport& report) {
  std::ofstream out = open_out(path);
  out << "clip_id\tdtw\tframes_pred\tframes_gt\n";
  for (const ClipDtw& c : report.clips) {
    out << c.clip_id << '\t' << (c.failed ? std::string("failed") : fmt(c.dtw)) << '\t' << c.frames_pred << '\t'
        << c.frames_gt << '\n';
  }
  out << "# mean\t" << fmt(report.mean) << "\n# median\t" << fmt(report.median) << "\n# failed\t" << report.failed
      << '\n';
}

void write_dtw_histogram(const std::filesystem::path& path, const DtwReport& report) {
  std::vector<std::size_t> counts;
  for (const ClipDtw& c : report.clips) {
    if (c.failed) continue;
    const auto bin = static_cast<std::size_t>(std::floor(c.dtw / kHistogramBinWidth));
    if (bin >= counts.size()) counts.resize(bin + 1, 0);
    ++counts[bin];
  }
  std::ofstream out = open_out(path);
  out << "bin_low\tcount\n";
  for (std::size_t b = 0; b < counts.size(); ++b) {
    out << fmt(static_cast<double>(b) * kHistogramBinWidth) << '\t' << counts[b] << '\n';
  }
}

}  // namespace signforge
