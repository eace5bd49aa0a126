#include "signforge/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "signforge/error.hpp"

namespace signforge {

void Joints2D::sanitize() {
  for (auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.confidence)) {
      p = Keypoint2D{};
      continue;
    }
    p.confidence = std::clamp(p.confidence, 0.0, 1.0);
  }
}

double Joints2D::total_confidence() const {
  double total = 0.0;
  for (const auto& p : points) total += p.confidence;
  return total;
}

bool LiftResult::warning() const {
  return std::any_of(not_converged.begin(), not_converged.end(), [](bool b) { return b; });
}

namespace {

Vec3 minus(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double objective(const PoseFrame& x, const Joints2D& obs, const PoseFrame* prev, double depth_weight) {
  double e = 0.0;
  for (std::size_t j = 0; j < x.joints.size(); ++j) {
    const auto& p = obs.points[j];
    const double dx = x.joints[j][0] - p.x, dy = x.joints[j][1] - p.y;
    e += p.confidence * (dx * dx + dy * dy);
    if (prev) {
      const double dz = x.joints[j][2] - prev->joints[j][2];
      e += depth_weight * dz * dz;
    }
  }
  return e;
}

PoseFrame initialize(const Joints2D& obs, const PoseFrame* prev, const SkeletonTopology& topo) {
  const std::size_t root = topo.root();
  PoseFrame x;
  x.joints.assign(topo.joint_count(), Vec3{0.0, 0.0, 0.0});
  const auto& rp = obs.points[root];
  if (rp.confidence > 0.0) {
    x.joints[root] = {rp.x, rp.y, prev ? prev->joints[root][2] : 0.0};
  } else if (prev) {
    x.joints[root] = prev->joints[root];
  }

  for (std::size_t b : topo.bones_root_outward()) {
    const auto [p, c] = topo.bones()[b];
    const double length = topo.canonical_lengths()[b];
    const auto& cp = obs.points[c];
    Vec3 offset{0.0, 0.0, 0.0};
    if (cp.confidence > 0.0) {
      const double dx = cp.x - x.joints[p][0], dy = cp.y - x.joints[p][1];
      const double planar = std::hypot(dx, dy);
      if (planar >= length) {
        offset = {dx / planar * length, dy / planar * length, 0.0};
      } else {
        double sign = 1.0;
        if (prev && prev->joints[c][2] < prev->joints[p][2]) sign = -1.0;
        offset = {dx, dy, sign * std::sqrt(length * length - planar * planar)};
      }
    } else if (prev) {
      offset = minus(prev->joints[c], prev->joints[p]);
    } else if (auto pb = topo.parent_bone(p)) {
      offset = minus(x.joints[p], x.joints[topo.bones()[*pb].parent]);
    }
    const double n = norm(offset);
    if (n > 0.0) {
      for (int k = 0; k < 3; ++k) x.joints[c][k] = x.joints[p][k] + offset[k] / n * length;
    } else {
      x.joints[c] = x.joints[p];
      x.joints[c][2] += length;
    }
  }
  return x;
}

struct FrameSolve {
  PoseFrame pose;
  std::vector<double> history;
  bool converged = false;
};

FrameSolve solve_frame(const Joints2D& obs, const PoseFrame* prev, const SkeletonTopology& topo,
                       const LiftConfig& cfg) {
  FrameSolve out;
  out.pose = initialize(obs, prev, topo);
  double energy = objective(out.pose, obs, prev, cfg.depth_prior_weight);
  out.history.push_back(energy);
  double step = cfg.step_size;
  const std::size_t joints = topo.joint_count();

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (energy == 0.0) {
      out.converged = true;
      return out;
    }
    std::vector<Vec3> grad(joints, Vec3{0.0, 0.0, 0.0});
    for (std::size_t j = 0; j < joints; ++j) {
      const auto& p = obs.points[j];
      grad[j][0] = 2.0 * p.confidence * (out.pose.joints[j][0] - p.x);
      grad[j][1] = 2.0 * p.confidence * (out.pose.joints[j][1] - p.y);
      if (prev) grad[j][2] = 2.0 * cfg.depth_prior_weight * (out.pose.joints[j][2] - prev->joints[j][2]);
    }
    bool accepted = false;
    for (int halving = 0; halving < 40 && !accepted; ++halving) {
      PoseFrame trial = out.pose;
      for (std::size_t j = 0; j < joints; ++j) {
        for (int k = 0; k < 3; ++k) trial.joints[j][k] -= step * grad[j][k];
      }
      trial = ik_refine(trial, topo);
      const double trial_energy = objective(trial, obs, prev, cfg.depth_prior_weight);
      if (trial_energy < energy) {
        const double gain = energy - trial_energy;
        out.pose = std::move(trial);
        energy = trial_energy;
        out.history.push_back(energy);
        accepted = true;
        if (gain <= cfg.convergence_tol * (1.0 + energy)) {
          out.converged = true;
          return out;
        }
        step = std::min(step * 1.5, cfg.step_size);
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) {
      // No descent direction survives projection: a constrained stationary point.
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace

PoseFrame ik_refine(const PoseFrame& frame, const SkeletonTopology& topo) {
  if (frame.joints.size() != topo.joint_count()) {
    throw DimensionError("frame has " + std::to_string(frame.joints.size()) + " joints, skeleton has " +
                         std::to_string(topo.joint_count()));
  }
  PoseFrame out = frame;
  for (std::size_t b : topo.bones_root_outward()) {
    const auto [p, c] = topo.bones()[b];
    const double length = topo.canonical_lengths()[b];
    Vec3 dir = minus(frame.joints[c], frame.joints[p]);
    double n = norm(dir);
    if (n == 0.0) {
      if (auto pb = topo.parent_bone(p)) {
        dir = minus(out.joints[p], out.joints[topo.bones()[*pb].parent]);
        n = norm(dir);
      }
      if (n == 0.0) {
        dir = {0.0, 0.0, 1.0};
        n = 1.0;
      }
    }
    for (int k = 0; k < 3; ++k) out.joints[c][k] = out.joints[p][k] + dir[k] / n * length;
  }
  return out;
}

double max_bone_length_error(const PoseFrame& frame, const SkeletonTopology& topo) {
  const auto lengths = compute_bone_lengths(frame, topo);
  double worst = 0.0;
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    const double canonical = topo.canonical_lengths()[b];
    worst = std::max(worst, std::abs(lengths[b] - canonical) / canonical);
  }
  return worst;
}

LiftResult lift_2d_to_3d(std::span<const Joints2D> frames, const SkeletonTopology& topo, const LiftConfig& cfg,
                         double fps) {
  if (cfg.max_iterations < 1 || !(cfg.convergence_tol > 0.0) || !(cfg.step_size > 0.0) ||
      cfg.depth_prior_weight < 0.0) {
    throw ContractError("invalid lift configuration");
  }
  if (frames.empty()) throw InputError("no frames to lift");
  std::vector<Joints2D> obs(frames.begin(), frames.end());
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (obs[t].points.size() != topo.joint_count()) {
      throw DimensionError("frame " + std::to_string(t) + " has " + std::to_string(obs[t].points.size()) +
                           " keypoints, skeleton has " + std::to_string(topo.joint_count()));
    }
    obs[t].sanitize();
  }

  LiftResult result;
  const std::size_t count = obs.size();
  result.interpolated.assign(count, false);
  result.not_converged.assign(count, false);
  result.objective_history.assign(count, {});
  result.sequence.fps = fps;
  result.sequence.frames.resize(count);

  std::vector<std::size_t> solved;
  std::optional<std::size_t> last;
  for (std::size_t t = 0; t < count; ++t) {
    if (obs[t].total_confidence() <= 0.0) {
      result.interpolated[t] = true;
      continue;
    }
    const PoseFrame* prev = last ? &result.sequence.frames[*last] : nullptr;
    FrameSolve s = solve_frame(obs[t], prev, topo, cfg);
    result.sequence.frames[t] = std::move(s.pose);
    result.objective_history[t] = std::move(s.history);
    result.not_converged[t] = !s.converged;
    solved.push_back(t);
    last = t;
  }
  if (solved.empty()) {
    throw DegenerateError("every frame has zero confidence; nothing to interpolate from");
  }

  for (std::size_t t = 0; t < count; ++t) {
    if (!result.interpolated[t]) continue;
    auto after = std::lower_bound(solved.begin(), solved.end(), t);
    const PoseFrame* lo = after == solved.begin() ? nullptr : &result.sequence.frames[*std::prev(after)];
    const PoseFrame* hi = after == solved.end() ? nullptr : &result.sequence.frames[*after];
    PoseFrame f;
    if (lo && hi) {
      const double t0 = static_cast<double>(*std::prev(after)), t1 = static_cast<double>(*after);
      const double w = (static_cast<double>(t) - t0) / (t1 - t0);
      f.joints.resize(topo.joint_count());
      for (std::size_t j = 0; j < f.joints.size(); ++j) {
        for (int k = 0; k < 3; ++k) f.joints[j][k] = (1.0 - w) * lo->joints[j][k] + w * hi->joints[j][k];
      }
    } else {
      f = lo ? *lo : *hi;
    }
    result.sequence.frames[t] = ik_refine(f, topo);
  }

  // Depth-sign convention: hands in front of (or level with) the root.
  double hand_minus_root = 0.0;
  for (const auto& f : result.sequence.frames) {
    double hand_z = 0.0;
    for (std::size_t j : topo.hand_joints()) hand_z += f.joints[j][2];
    hand_minus_root += hand_z / static_cast<double>(topo.hand_joints().size()) - f.joints[topo.root()][2];
  }
  if (hand_minus_root < 0.0) {
    result.depth_flipped = true;
    for (auto& f : result.sequence.frames) {
      const double root_z = f.joints[topo.root()][2];
      for (auto& j : f.joints) j[2] = 2.0 * root_z - j[2];
    }
  }
  assign_counters(result.sequence);
  return result;
}

}  // namespace signforge

namespace signforge {

std::vector<double> estimate_bone_lengths(std::span<const Joints2D> frames, const SkeletonTopology& topo) {
  const auto& bones = topo.bones();
  std::vector<double> longest(bones.size(), 0.0);
  for (const Joints2D& f : frames) {
    if (f.points.size() != topo.joint_count()) {
      throw DimensionError("estimate_bone_lengths: frame has " + std::to_string(f.points.size()) +
                           " points, skeleton has " + std::to_string(topo.joint_count()));
    }
    for (std::size_t b = 0; b < bones.size(); ++b) {
      const Keypoint2D& p = f.points[bones[b].parent];
      const Keypoint2D& c = f.points[bones[b].child];
      if (!(p.confidence > 0.0 && c.confidence > 0.0)) continue;
      const double len = std::hypot(c.x - p.x, c.y - p.y);
      if (std::isfinite(len)) longest[b] = std::max(longest[b], len);
    }
  }
  std::vector<double> ratios;
  for (std::size_t b = 0; b < bones.size(); ++b) {
    if (longest[b] > 0.0) ratios.push_back(longest[b] / topo.canonical_lengths()[b]);
  }
  if (ratios.empty()) throw DegenerateError("estimate_bone_lengths: no bone was ever detected");
  std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2), ratios.end());
  const double ratio = ratios[ratios.size() / 2];
  for (std::size_t b = 0; b < bones.size(); ++b) {
    if (!(longest[b] > 0.0)) longest[b] = topo.canonical_lengths()[b] * ratio;
  }
  return longest;
}

}  // namespace signforge
