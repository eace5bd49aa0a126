#include "signforge/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

#include "signforge/error.hpp"
#include "signforge/frnet.hpp"
#include "signforge/rng.hpp"

namespace signforge {

SkeletonTopology toy_topology() {
  std::vector<std::string> names = {"neck",    "head",       "r_shoulder", "r_elbow", "r_wrist",
                                    "r_hand",  "l_shoulder", "l_elbow",    "l_wrist", "l_hand"};
  std::vector<Bone> bones = {{0, 1}, {0, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 6}, {6, 7}, {7, 8}, {8, 9}};
  std::vector<double> lengths = {0.6, 0.5, 0.7, 0.6, 0.2, 0.5, 0.7, 0.6, 0.2};
  return SkeletonTopology(std::move(names), std::move(bones), std::move(lengths), 0, 6, 2, {4, 5, 8, 9});
}

namespace {

// Upper-arm and forearm angles for each arm, radians in the image plane
// (y down, so pi/2 points the arm straight down). The right arm is mirrored.
struct ArmPose {
  double r_upper, r_fore, l_upper, l_fore;
};

constexpr double kPi = std::numbers::pi;
const ArmPose kRest{kPi / 2 - 0.2, kPi / 2, kPi / 2 - 0.2, kPi / 2};

ArmPose lerp(const ArmPose& a, const ArmPose& b, double f) {
  const double s = 0.5 - 0.5 * std::cos(kPi * f);
  return {a.r_upper + s * (b.r_upper - a.r_upper), a.r_fore + s * (b.r_fore - a.r_fore),
          a.l_upper + s * (b.l_upper - a.l_upper), a.l_fore + s * (b.l_fore - a.l_fore)};
}

Vec3 dir(double angle, double z = 0.0) {
  const double n = std::sqrt(1.0 + z * z);
  return {std::cos(angle) / n, std::sin(angle) / n, z / n};
}

Vec3 step(const Vec3& from, const Vec3& d, double len) {
  return {from[0] + len * d[0], from[1] + len * d[1], from[2] + len * d[2]};
}

PoseFrame toy_frame(const ArmPose& p, const std::vector<double>& len) {
  PoseFrame f;
  f.joints.assign(10, Vec3{0.0, 0.0, 0.0});
  f.joints[1] = step(f.joints[0], {0.0, -1.0, 0.0}, len[0]);
  f.joints[2] = step(f.joints[0], {-1.0, 0.0, 0.0}, len[1]);
  f.joints[3] = step(f.joints[2], dir(kPi - p.r_upper, 0.1), len[2]);
  f.joints[4] = step(f.joints[3], dir(kPi - p.r_fore, 0.2), len[3]);
  f.joints[5] = step(f.joints[4], dir(kPi - p.r_fore, 0.2), len[4]);
  f.joints[6] = step(f.joints[0], {1.0, 0.0, 0.0}, len[5]);
  f.joints[7] = step(f.joints[6], dir(p.l_upper, 0.1), len[6]);
  f.joints[8] = step(f.joints[7], dir(p.l_fore, 0.2), len[7]);
  f.joints[9] = step(f.joints[8], dir(p.l_fore, 0.2), len[8]);
  return f;
}

const char* const kWords[] = {"hello", "thank", "you",   "good",  "morning", "please", "help",  "me",
                              "where", "house", "water", "friend", "school", "eat",     "sleep", "happy",
                              "family", "work", "today", "tomorrow"};

std::vector<ArmPose> word_poses(std::size_t words, Rng& rng) {
  std::vector<ArmPose> poses;
  for (std::size_t w = 0; w < words; ++w) {
    poses.push_back({rng.uniform(0.6, 2.6), rng.uniform(-0.8, 2.2), rng.uniform(0.6, 2.6), rng.uniform(-0.8, 2.2)});
  }
  return poses;
}

}  // namespace

std::vector<const PoseExample*> ToyCorpus::pointers(std::size_t begin, std::size_t end) const {
  std::vector<const PoseExample*> out;
  for (std::size_t i = begin; i < std::min(end, examples.size()); ++i) out.push_back(&examples[i]);
  return out;
}

ToyCorpus make_toy_corpus(std::size_t pairs, std::uint64_t seed, const ToyCorpusOptions& options) {
  const std::size_t vocab_words = std::size(kWords);
  if (options.words == 0 || options.words > vocab_words) {
    throw InputError("toy corpus supports 1.." + std::to_string(vocab_words) + " words");
  }
  if (options.max_words_per_text == 0 || options.frames_per_word == 0) throw InputError("toy corpus options must be positive");
  Rng rng(seed);
  const std::vector<ArmPose> keys = word_poses(options.words, rng);
  const std::vector<double> lengths = toy_topology().canonical_lengths();

  ToyCorpus corpus;
  std::set<std::vector<std::size_t>> seen;
  std::size_t attempts = 0;
  while (corpus.texts.size() < pairs) {
    if (++attempts > 100000) throw InputError("toy corpus: not enough distinct texts");
    const std::size_t n = 1 + rng.uniform_index(options.max_words_per_text);
    std::vector<std::size_t> words;
    while (words.size() < n) {
      const std::size_t w = rng.uniform_index(options.words);
      if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    }
    if (!seen.insert(words).second) continue;

    std::string text;
    PoseSequence pose;
    ArmPose from = kRest;
    for (std::size_t w : words) {
      if (!text.empty()) text += ' ';
      text += kWords[w];
      for (std::size_t k = 1; k <= options.frames_per_word; ++k) {
        pose.frames.push_back(toy_frame(lerp(from, keys[w], static_cast<double>(k) / options.frames_per_word), lengths));
      }
      from = keys[w];
    }
    pose.frames.push_back(pose.frames.back());
    assign_counters(pose);
    corpus.texts.push_back(text);
    corpus.examples.push_back({"toy" + std::to_string(corpus.texts.size() - 1), options.split, {}, std::move(pose)});
  }
  corpus.vocab = Vocabulary::from_texts(corpus.texts);
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    corpus.examples[i].tokens = encode_text(corpus.texts[i], corpus.vocab);
  }
  return corpus;
}

namespace {

// Default skeleton frame: body from arm angles, fingers fanned along the forearm.
PoseFrame full_frame(const ArmPose& p, double curl, const SkeletonTopology& topo) {
  const auto& len = topo.canonical_lengths();
  PoseFrame f;
  f.joints.assign(topo.joint_count(), Vec3{0.0, 0.0, 0.0});
  std::vector<Vec3> d(topo.bone_count());
  const auto& bones = topo.bones();
  for (std::size_t b = 0; b < bones.size(); ++b) {
    const std::size_t child = bones[b].child;
    if (child == 0) d[b] = {0.0, -1.0, 0.0};
    else if (child == 2) d[b] = {-1.0, 0.0, 0.0};
    else if (child == 5) d[b] = {1.0, 0.0, 0.0};
    else if (child == 3) d[b] = dir(kPi - p.r_upper, 0.1);
    else if (child == 4) d[b] = dir(kPi - p.r_fore, 0.15);
    else if (child == 6) d[b] = dir(p.l_upper, 0.1);
    else if (child == 7) d[b] = dir(p.l_fore, 0.15);
    else {
      // Hand joints 8..28 (left) and 29..49 (right).
      const bool left = child < 29;
      const std::size_t local = child - (left ? 8 : 29);
      const double fore = left ? p.l_fore : kPi - p.r_fore;
      if (local == 0) {
        d[b] = dir(fore, 0.15);
      } else {
        const std::size_t finger = (local - 1) / 4, k = (local - 1) % 4;
        const double spread = (static_cast<double>(finger) - 2.0) * 0.3 * (left ? 1.0 : -1.0);
        d[b] = dir(fore + spread + curl * static_cast<double>(k) * (left ? 1.0 : -1.0), 0.2);
      }
    }
  }
  for (std::size_t b : topo.bones_root_outward()) {
    f.joints[bones[b].child] = step(f.joints[bones[b].parent], d[b], len[b]);
  }
  return f;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

void write_toy_keypoint_corpus(const std::filesystem::path& dir, std::size_t clips, std::uint64_t seed,
                               const std::vector<std::size_t>& empty_clips) {
  const SkeletonTopology topo = default_topology();
  Rng rng(seed);
  const std::vector<ArmPose> keys = word_poses(8, rng);
  const std::filesystem::path kp_dir = dir / "keypoints";
  std::filesystem::create_directories(kp_dir);
  DatasetManifest manifest;
  for (std::size_t c = 0; c < clips; ++c) {
    const std::string clip = "clip" + std::to_string(c);
    const std::size_t a = rng.uniform_index(keys.size()), b = rng.uniform_index(keys.size());
    const bool empty = std::find(empty_clips.begin(), empty_clips.end(), c) != empty_clips.end();
    const std::size_t frames = 8 + rng.uniform_index(5);
    for (std::size_t t = 0; t < frames; ++t) {
      const double f = static_cast<double>(t) / static_cast<double>(frames - 1);
      const ArmPose pose = f < 0.5 ? lerp(keys[a], keys[b], 2.0 * f) : lerp(keys[b], keys[a], 2.0 * f - 1.0);
      const PoseFrame frame = full_frame(pose, 0.1 + 0.2 * f, topo);
      nlohmann::ordered_json person;
      auto points = [&](std::size_t first, std::size_t count, std::size_t padded) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < padded; ++i) {
          if (i < count) {
            const Vec3& j = frame.joints[first + i];
            arr.push_back(std::stod(fixed(320.0 + 100.0 * j[0])));
            arr.push_back(std::stod(fixed(240.0 + 100.0 * j[1])));
            arr.push_back(0.9);
          } else {
            for (int k = 0; k < 3; ++k) arr.push_back(0.0);
          }
        }
        return arr;
      };
      person["pose_keypoints_2d"] = points(0, 8, 25);
      person["hand_left_keypoints_2d"] = points(8, 21, 21);
      person["hand_right_keypoints_2d"] = points(29, 21, 21);
      nlohmann::ordered_json doc;
      doc["version"] = 1.3;
      doc["people"] = empty ? nlohmann::ordered_json::array() : nlohmann::ordered_json::array({person});
      char name[64];
      std::snprintf(name, sizeof(name), "_%012zu_keypoints.json", t);
      std::ofstream out(kp_dir / (clip + name), std::ios::binary | std::ios::trunc);
      if (!out) throw InputError("cannot write keypoints under " + kp_dir.string());
      out << doc.dump() << '\n';
    }
    std::string text = kWords[a];
    text += ' ';
    text += kWords[b];
    manifest.entries.push_back({clip, c % 5 == 4 ? "test" : "train", "poses/" + clip + ".pose", text});
  }
  write_manifest(dir / "manifest.tsv", manifest);
}

namespace {

GrayImage class_stub_frame(int label, std::size_t size, Rng& rng) {
  GrayImage img(size, size, 160);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const bool textured = (label == 0) != (x < size / 2);
      if (textured) img.at(x, y) = static_cast<std::uint8_t>(rng.uniform_index(2) ? 200 : 40);
    }
  }
  return img;
}

PoseFrame class_stub_pose(int label) {
  // Toy skeleton with one arm raised: right arm for class 0, left for class 1.
  ArmPose p = kRest;
  if (label == 0) {
    p.r_upper = -0.4;
    p.r_fore = -0.9;
  } else {
    p.l_upper = -0.4;
    p.l_fore = -0.9;
  }
  return toy_frame(p, toy_topology().canonical_lengths());
}

}  // namespace

ToyDiffusionSet make_toy_diffusion_set(std::size_t per_class, std::size_t size, std::uint64_t seed) {
  if (per_class == 0 || size < 11) throw InputError("toy diffusion set needs per_class >= 1 and size >= 11");
  Rng rng(seed);
  const SkeletonTopology topo = toy_topology();
  ToyDiffusionSet set;
  GrayImage c_img[2];
  for (int label = 0; label < 2; ++label) {
    // The stub signer stands on the class's bright half.
    const GrayImage half = render_condition(class_stub_pose(label), topo, size / 2, size);
    c_img[label] = GrayImage(size, size);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size / 2; ++x) c_img[label].at(label == 0 ? x : size - size / 2 + x, y) = half.at(x, y);
    }
    std::vector<double> template_px(size * size);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) template_px[y * size + x] = ((label == 0) == (x < size / 2)) ? 1.0 : -1.0;
    }
    set.centroid[label] = Tensor::from({1, size, size}, template_px);
    set.condition[label] = {set.centroid[label], condition_tensor(c_img[label], size),
                            condition_tensor(fr_condition(class_stub_frame(label, size, rng)), size)};
  }
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int label = 0; label < 2; ++label) {
      std::vector<double> px(size * size);
      for (std::size_t k = 0; k < px.size(); ++k) px[k] = std::clamp(set.centroid[label][k] + 0.05 * rng.normal(), -1.0, 1.0);
      set.examples.push_back({Tensor::from({1, size, size}, std::move(px)), condition_tensor(c_img[label], size),
                              condition_tensor(fr_condition(class_stub_frame(label, size, rng)), size)});
      set.labels.push_back(label);
    }
  }
  return set;
}

int nearest_centroid(const Tensor& image, const Tensor& centroid0, const Tensor& centroid1) {
  if (image.shape() != centroid0.shape() || image.shape() != centroid1.shape()) {
    throw DimensionError("nearest_centroid: shape mismatch");
  }
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    d0 += (image[i] - centroid0[i]) * (image[i] - centroid0[i]);
    d1 += (image[i] - centroid1[i]) * (image[i] - centroid1[i]);
  }
  return d1 < d0 ? 1 : 0;
}

}  // namespace signforge
