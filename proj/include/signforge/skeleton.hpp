#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace signforge {

using Vec3 = std::array<double, 3>;

struct Bone {
  std::size_t parent = 0;
  std::size_t child = 0;
};

// Joint tree with per-bone canonical lengths in normalized units.
class SkeletonTopology {
 public:
  // Validates the tree invariants: J joints, J-1 bones, every non-root joint
  // has exactly one parent, the graph is connected from `root`, lengths > 0.
  SkeletonTopology(std::vector<std::string> joint_names, std::vector<Bone> bones,
                   std::vector<double> canonical_lengths, std::size_t root, std::size_t left_shoulder,
                   std::size_t right_shoulder, std::vector<std::size_t> hand_joints = {});

  std::size_t joint_count() const { return joint_names_.size(); }
  std::size_t bone_count() const { return bones_.size(); }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  const std::vector<Bone>& bones() const { return bones_; }
  const std::vector<double>& canonical_lengths() const { return canonical_lengths_; }
  std::size_t root() const { return root_; }
  std::size_t left_shoulder() const { return left_shoulder_; }
  std::size_t right_shoulder() const { return right_shoulder_; }
  // Joints used for the depth-sign convention; all non-root joints when none were given.
  const std::vector<std::size_t>& hand_joints() const { return hand_joints_; }

  // Bone indices ordered so every parent joint is placed before its children.
  const std::vector<std::size_t>& bones_root_outward() const { return order_; }
  // Index of the bone ending at `joint`, or nullopt for the root.
  std::optional<std::size_t> parent_bone(std::size_t joint) const;

  SkeletonTopology with_lengths(std::vector<double> lengths) const;

 private:
  std::vector<std::string> joint_names_;
  std::vector<Bone> bones_;
  std::vector<double> canonical_lengths_;
  std::size_t root_;
  std::size_t left_shoulder_;
  std::size_t right_shoulder_;
  std::vector<std::size_t> hand_joints_;
  std::vector<std::size_t> order_;
  std::vector<std::optional<std::size_t>> parent_bone_;
};

// 50 joints: the first eight OpenPose BODY_25 points (nose, neck, right arm,
// left arm) followed by 21 left-hand and 21 right-hand points. Rooted at the neck.
SkeletonTopology default_topology();

struct PoseFrame {
  std::vector<Vec3> joints;
  double counter = 0.0;
};

struct PoseSequence {
  std::vector<PoseFrame> frames;
  double fps = 25.0;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  // Joint count of the first frame (0 when empty).
  std::size_t joint_count() const { return frames.empty() ? 0 : frames.front().joints.size(); }
};

// counter_t = (t + 1) / T.
void assign_counters(PoseSequence& seq);

std::vector<double> compute_bone_lengths(const PoseFrame& frame, const SkeletonTopology& topo);

// Root at the origin in every frame, scaled so the mean shoulder-to-shoulder
// distance is 1. Counters are kept.
PoseSequence normalize_sequence(const PoseSequence& seq, const SkeletonTopology& topo);

struct ValidityReport {
  enum Flag : unsigned { ok = 0, has_nan = 1, has_inf = 2, all_zero = 4 };
  std::vector<unsigned> frame_flags;
  std::size_t nan_frames = 0;
  std::size_t inf_frames = 0;
  std::size_t zero_frames = 0;
  std::size_t flagged_frames = 0;

  bool flagged(std::size_t frame) const { return frame_flags.at(frame) != ok; }
};

ValidityReport validate_sequence(const PoseSequence& seq);

// Pose text format: "J <n> FPS <fps>" header, then one line per frame of
// 3*J coordinates followed by the counter, written with 9 significant digits.
// Lines starting with '#' are comments.
void write_pose(std::ostream& out, const PoseSequence& seq);
PoseSequence read_pose(std::istream& in, const std::string& source = "<stream>");
void write_pose_file(const std::filesystem::path& path, const PoseSequence& seq);
PoseSequence read_pose_file(const std::filesystem::path& path);

}  // namespace signforge
