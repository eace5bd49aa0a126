#include "signforge/skeleton.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "signforge/error.hpp"

namespace signforge {

SkeletonTopology::SkeletonTopology(std::vector<std::string> joint_names, std::vector<Bone> bones,
                                   std::vector<double> canonical_lengths, std::size_t root,
                                   std::size_t left_shoulder, std::size_t right_shoulder,
                                   std::vector<std::size_t> hand_joints)
    : joint_names_(std::move(joint_names)),
      bones_(std::move(bones)),
      canonical_lengths_(std::move(canonical_lengths)),
      root_(root),
      left_shoulder_(left_shoulder),
      right_shoulder_(right_shoulder),
      hand_joints_(std::move(hand_joints)) {
  const std::size_t joints = joint_names_.size();
  if (joints == 0) throw ContractError("skeleton needs at least one joint");
  if (bones_.size() + 1 != joints) {
    throw ContractError("skeleton with " + std::to_string(joints) + " joints needs " + std::to_string(joints - 1) +
                        " bones, got " + std::to_string(bones_.size()));
  }
  if (canonical_lengths_.size() != bones_.size()) throw ContractError("one canonical length per bone required");
  if (root_ >= joints || left_shoulder_ >= joints || right_shoulder_ >= joints) {
    throw ContractError("root/shoulder index out of range");
  }
  parent_bone_.assign(joints, std::nullopt);
  std::vector<std::vector<std::size_t>> children(joints);
  for (std::size_t b = 0; b < bones_.size(); ++b) {
    const auto [p, c] = bones_[b];
    if (p >= joints || c >= joints || p == c) throw ContractError("bone " + std::to_string(b) + " is invalid");
    if (c == root_) throw ContractError("root joint cannot have a parent");
    if (parent_bone_[c]) throw ContractError("joint " + joint_names_[c] + " has two parents");
    if (!(canonical_lengths_[b] > 0.0)) throw ContractError("canonical bone lengths must be positive");
    parent_bone_[c] = b;
    children[p].push_back(b);
  }
  // Breadth-first from the root; reaching every joint proves connectivity and,
  // with J-1 single-parent bones, acyclicity.
  std::vector<std::size_t> frontier{root_};
  std::size_t reached = 1;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    for (std::size_t b : children[frontier[i]]) {
      order_.push_back(b);
      frontier.push_back(bones_[b].child);
      ++reached;
    }
  }
  if (reached != joints) throw ContractError("bone graph is not a tree rooted at " + joint_names_[root_]);
  if (hand_joints_.empty()) {
    for (std::size_t j = 0; j < joints; ++j) {
      if (j != root_) hand_joints_.push_back(j);
    }
  }
  for (std::size_t j : hand_joints_) {
    if (j >= joints) throw ContractError("hand joint index out of range");
  }
}

std::optional<std::size_t> SkeletonTopology::parent_bone(std::size_t joint) const { return parent_bone_.at(joint); }

SkeletonTopology SkeletonTopology::with_lengths(std::vector<double> lengths) const {
  return SkeletonTopology(joint_names_, bones_, std::move(lengths), root_, left_shoulder_, right_shoulder_,
                          hand_joints_);
}

SkeletonTopology default_topology() {
  std::vector<std::string> names = {"nose",       "neck",      "r_shoulder", "r_elbow",
                                    "r_wrist",    "l_shoulder", "l_elbow",    "l_wrist"};
  std::vector<Bone> bones = {{1, 0}, {1, 2}, {2, 3}, {3, 4}, {1, 5}, {5, 6}, {6, 7}};
  std::vector<double> lengths = {0.6, 0.5, 0.75, 0.65, 0.5, 0.75, 0.65};
  std::vector<std::size_t> hands;

  // OpenPose hand model: wrist then four joints per finger, thumb first.
  const double finger_lengths[5][4] = {{0.10, 0.10, 0.08, 0.07},
                                       {0.25, 0.12, 0.08, 0.07},
                                       {0.25, 0.13, 0.09, 0.07},
                                       {0.24, 0.12, 0.08, 0.07},
                                       {0.22, 0.10, 0.07, 0.06}};
  auto add_hand = [&](const std::string& side, std::size_t body_wrist) {
    const std::size_t base = names.size();
    names.push_back(side + "_hand_0");
    bones.push_back({body_wrist, base});
    lengths.push_back(0.05);
    hands.push_back(base);
    for (std::size_t f = 0; f < 5; ++f) {
      std::size_t parent = base;
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t joint = names.size();
        names.push_back(side + "_hand_" + std::to_string(1 + f * 4 + k));
        bones.push_back({parent, joint});
        lengths.push_back(finger_lengths[f][k]);
        hands.push_back(joint);
        parent = joint;
      }
    }
  };
  add_hand("l", 7);
  add_hand("r", 4);
  return SkeletonTopology(std::move(names), std::move(bones), std::move(lengths), 1, 5, 2, std::move(hands));
}

void assign_counters(PoseSequence& seq) {
  const double total = static_cast<double>(seq.frames.size());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) seq.frames[t].counter = static_cast<double>(t + 1) / total;
}

namespace {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void require_joints(const PoseFrame& frame, const SkeletonTopology& topo) {
  if (frame.joints.size() != topo.joint_count()) {
    throw DimensionError("frame has " + std::to_string(frame.joints.size()) + " joints, skeleton has " +
                         std::to_string(topo.joint_count()));
  }
}

}  // namespace

std::vector<double> compute_bone_lengths(const PoseFrame& frame, const SkeletonTopology& topo) {
  require_joints(frame, topo);
  std::vector<double> lengths;
  lengths.reserve(topo.bone_count());
  for (const Bone& b : topo.bones()) lengths.push_back(distance(frame.joints[b.parent], frame.joints[b.child]));
  return lengths;
}

PoseSequence normalize_sequence(const PoseSequence& seq, const SkeletonTopology& topo) {
  if (seq.empty()) throw InputError("cannot normalize an empty sequence");
  double shoulder_sum = 0.0;
  for (const auto& frame : seq.frames) {
    require_joints(frame, topo);
    shoulder_sum += distance(frame.joints[topo.left_shoulder()], frame.joints[topo.right_shoulder()]);
  }
  const double mean_shoulder = shoulder_sum / static_cast<double>(seq.size());
  if (!(mean_shoulder > 0.0) || !std::isfinite(mean_shoulder)) {
    throw DegenerateError("degenerate scale: shoulder distance is zero in every frame");
  }
  const double factor = 1.0 / mean_shoulder;
  PoseSequence out = seq;
  for (auto& frame : out.frames) {
    const Vec3 root = frame.joints[topo.root()];
    for (auto& j : frame.joints) {
      for (int k = 0; k < 3; ++k) j[k] = (j[k] - root[k]) * factor;
    }
  }
  return out;
}

ValidityReport validate_sequence(const PoseSequence& seq) {
  ValidityReport report;
  report.frame_flags.reserve(seq.size());
  for (const auto& frame : seq.frames) {
    unsigned flags = ValidityReport::ok;
    bool all_zero = !frame.joints.empty();
    for (const auto& j : frame.joints) {
      for (double v : j) {
        if (std::isnan(v)) flags |= ValidityReport::has_nan;
        if (std::isinf(v)) flags |= ValidityReport::has_inf;
        if (v != 0.0) all_zero = false;
      }
    }
    if (all_zero) flags |= ValidityReport::all_zero;
    if (flags & ValidityReport::has_nan) ++report.nan_frames;
    if (flags & ValidityReport::has_inf) ++report.inf_frames;
    if (flags & ValidityReport::all_zero) ++report.zero_frames;
    if (flags != ValidityReport::ok) ++report.flagged_frames;
    report.frame_flags.push_back(flags);
  }
  return report;
}

namespace {

void append_number(std::string& line, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
  line.append(buf, static_cast<std::size_t>(n));
}

double parse_number(std::string_view token, const std::string& source, std::size_t line_no) {
  double value = 0.0;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw FormatError(source + ":" + std::to_string(line_no) + ": bad number '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

void write_pose(std::ostream& out, const PoseSequence& seq) {
  const std::size_t joints = seq.joint_count();
  std::string line = "J " + std::to_string(joints) + " FPS ";
  append_number(line, seq.fps);
  out << line << '\n';
  for (const auto& frame : seq.frames) {
    if (frame.joints.size() != joints) throw DimensionError("frames disagree on joint count");
    line.clear();
    for (const auto& j : frame.joints) {
      for (double v : j) {
        append_number(line, v);
        line.push_back(' ');
      }
    }
    append_number(line, frame.counter);
    out << line << '\n';
  }
}

PoseSequence read_pose(std::istream& in, const std::string& source) {
  PoseSequence seq;
  std::string line;
  std::size_t line_no = 0;
  std::size_t joints = 0;
  bool have_header = false;
  std::vector<std::string_view> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    tokens.clear();
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(" \t");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find_first_of(" \t");
      tokens.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (tokens.empty()) continue;
    if (!have_header) {
      if (tokens.size() != 4 || tokens[0] != "J" || tokens[2] != "FPS") {
        throw FormatError(source + ":" + std::to_string(line_no) + ": expected 'J <count> FPS <fps>' header");
      }
      const double j = parse_number(tokens[1], source, line_no);
      seq.fps = parse_number(tokens[3], source, line_no);
      if (!(j >= 1.0) || j != std::floor(j) || !(seq.fps > 0.0)) {
        throw FormatError(source + ":" + std::to_string(line_no) + ": invalid joint count or fps");
      }
      joints = static_cast<std::size_t>(j);
      have_header = true;
      continue;
    }
    if (tokens.size() != 3 * joints + 1) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(3 * joints + 1) +
                        " values, got " + std::to_string(tokens.size()));
    }
    PoseFrame frame;
    frame.joints.resize(joints);
    for (std::size_t j = 0; j < joints; ++j) {
      for (std::size_t k = 0; k < 3; ++k) frame.joints[j][k] = parse_number(tokens[3 * j + k], source, line_no);
    }
    frame.counter = parse_number(tokens.back(), source, line_no);
    seq.frames.push_back(std::move(frame));
  }
  if (!have_header) throw FormatError(source + ": missing pose header");
  return seq;
}

void write_pose_file(const std::filesystem::path& path, const PoseSequence& seq) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write pose file: " + path.string());
  write_pose(out, seq);
}

PoseSequence read_pose_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open pose file: " + path.string());
  return read_pose(in, path.string());
}

}  // namespace signforge
