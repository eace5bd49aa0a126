#pragma once
// Synthetic corpora for tests, experiments and the `synth` command.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "signforge/dataprep.hpp"
#include "signforge/diffusion.hpp"
#include "signforge/skeleton.hpp"

namespace signforge {

// 10 joints: neck (root), head, right shoulder/elbow/wrist/hand, left
// shoulder/elbow/wrist/hand.
SkeletonTopology toy_topology();

struct ToyCorpusOptions {
  std::size_t words = 12;
  std::size_t max_words_per_text = 3;
  std::size_t frames_per_word = 10;
  std::string split = "train";
};

struct ToyCorpus {
  Vocabulary vocab;
  std::vector<std::string> texts;
  std::vector<PoseExample> examples;

  std::vector<const PoseExample*> pointers(std::size_t begin, std::size_t end) const;
};

// Each word owns a key pose of the arms; a text of n distinct-word sentences
// moves smoothly from a rest pose through the key poses of its words,
// frames_per_word frames each, then holds for one frame. Texts are distinct.
// Poses use toy_topology and are already root-centred with unit shoulder width.
ToyCorpus make_toy_corpus(std::size_t pairs, std::uint64_t seed, const ToyCorpusOptions& options = {});

// Writes OpenPose-style keypoint files for `clips` clips animated on the
// default 50-joint skeleton, plus `manifest.tsv` (pose_path = poses/<clip>.pose).
// Clip i of clips with index in `empty_clips` has every frame without people.
void write_toy_keypoint_corpus(const std::filesystem::path& dir, std::size_t clips, std::uint64_t seed,
                               const std::vector<std::size_t>& empty_clips = {});

// Two-class image set: class 0 is bright on the left half, class 1 on the
// right. c is a class-specific stub skeleton drawn inside the bright half;
// d is fr_condition of a stub frame that is flat on the bright half and
// textured on the dark half, so it comes out white on the bright side.
struct ToyDiffusionSet {
  std::vector<DiffusionExample> examples;
  std::vector<int> labels;
  Tensor centroid[2];
  // One fixed (c, d) pair per class for conditional sampling.
  DiffusionExample condition[2];
};
ToyDiffusionSet make_toy_diffusion_set(std::size_t per_class, std::size_t size, std::uint64_t seed);

// Index of the nearer centroid (squared distance; ties go to class 0).
int nearest_centroid(const Tensor& image, const Tensor& centroid0, const Tensor& centroid1);

}  // namespace signforge
