#pragma once

#include <span>
#include <vector>

#include "signforge/skeleton.hpp"

namespace signforge {

struct Keypoint2D {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
};

// One frame of 2D detections. Confidence is clamped to [0, 1] and any point
// with a non-finite coordinate is treated as undetected.
struct Joints2D {
  std::vector<Keypoint2D> points;

  void sanitize();
  double total_confidence() const;
};

struct LiftConfig {
  int max_iterations = 200;
  double step_size = 0.25;
  double convergence_tol = 1e-12;
  double depth_prior_weight = 0.1;
};

struct LiftResult {
  PoseSequence sequence;
  // Per frame: rebuilt from neighbours because every confidence was zero.
  std::vector<bool> interpolated;
  // Per frame: iteration budget ran out before the objective settled.
  std::vector<bool> not_converged;
  // Per frame objective after initialization and after each accepted step.
  std::vector<std::vector<double>> objective_history;
  bool depth_flipped = false;

  bool warning() const;
};

// Lifts 2D detections to 3D under an orthographic camera (projection drops z).
//
// Each frame minimizes
//   sum_j conf_j * |xy_j - observed_j|^2 + depth_prior_weight * |z - z_prev|^2
// by projected gradient descent, projecting onto the bone-length constraint
// with ik_refine after every step. Steps that do not lower the objective are
// halved until they do, so the recorded objective never increases.
//
// Depth signs are initialized with every bone pointing toward the camera
// (+z); later frames keep the previous frame's sign per bone. After solving,
// the clip is mirrored in depth if its hand joints sit behind the root on
// average. Frames with zero total confidence are interpolated between the
// nearest lifted neighbours and re-projected onto the constraint.
//
// Throws DimensionError on a joint count mismatch and DegenerateError when
// no frame carries any confidence.
LiftResult lift_2d_to_3d(std::span<const Joints2D> frames, const SkeletonTopology& topo, const LiftConfig& cfg,
                         double fps = 25.0);

// Projects a frame onto the canonical bone lengths: from the root outward,
// each child is re-placed along its original bone direction at canonical
// length, which carries its subtree along rigidly. A zero-length input bone
// takes the direction of its parent bone (+z for bones leaving the root).
PoseFrame ik_refine(const PoseFrame& frame, const SkeletonTopology& topo);

// Per-bone lengths in the units of the 2D detections: the longest projected
// length seen over frames where both endpoints were detected (orthographic
// projection never lengthens a bone). Bones never seen take the canonical
// length times the median observed/canonical ratio. DegenerateError when no
// bone is ever seen.
std::vector<double> estimate_bone_lengths(std::span<const Joints2D> frames, const SkeletonTopology& topo);

// max over bones of |length - canonical| / canonical.
double max_bone_length_error(const PoseFrame& frame, const SkeletonTopology& topo);

}  // namespace signforge
