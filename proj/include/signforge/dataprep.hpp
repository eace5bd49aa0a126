#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signforge/lifting.hpp"
#include "signforge/skeleton.hpp"

namespace signforge {

// Token <-> index map with four reserved entries.
class Vocabulary {
 public:
  static constexpr int pad = 0;
  static constexpr int bos = 1;
  static constexpr int eos = 2;
  static constexpr int unk = 3;

  Vocabulary();

  // Reserved entries plus the sorted set of tokens found in `texts`.
  static Vocabulary from_texts(std::span<const std::string> texts);

  // Returns the existing index when the token is already present.
  int add(const std::string& token);
  int index(std::string_view token) const;  // unk for out-of-vocabulary tokens
  const std::string& token(int index) const;
  std::size_t size() const { return tokens_.size(); }

  // One token per line; line number is the index.
  void write(const std::filesystem::path& path) const;
  static Vocabulary read(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

// Lowercases, splits on whitespace and strips punctuation from token edges.
std::vector<std::string> tokenize(std::string_view text);
// bos, tokens..., eos.
std::vector<int> encode_text(std::string_view text, const Vocabulary& vocab);

struct ManifestEntry {
  std::string clip_id;
  std::string split;  // train | dev | test
  std::string pose_path;
  std::string text;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

// TSV rows `clip_id<TAB>split<TAB>pose_path<TAB>text`. Clip ids must be
// unique and splits one of train/dev/test. Blank and '#' lines are skipped.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
// Rewrites relative pose paths as `base_dir / pose_path`.
DatasetManifest resolve_pose_paths(DatasetManifest manifest, const std::filesystem::path& base_dir);

struct KeypointLayout {
  std::size_t body_points = 8;
  std::size_t hand_points = 21;
  std::size_t joint_count() const { return body_points + 2 * hand_points; }
};

// One frame file: the first person's body, then left-hand, then right-hand
// points. An empty `people` array, or a missing hand array, yields zero
// confidence for the affected points.
Joints2D ingest_keypoint_json(const std::filesystem::path& path, const KeypointLayout& layout = {});

// Frame files named `<clip>_<12-digit index>_keypoints.json` in `dir`, in index order.
std::vector<std::filesystem::path> find_clip_frames(const std::filesystem::path& dir, const std::string& clip_id);
std::vector<Joints2D> ingest_clip(const std::filesystem::path& dir, const std::string& clip_id,
                                  const KeypointLayout& layout = {});

enum class CleanPolicy { drop, median_replace };
CleanPolicy parse_clean_policy(std::string_view name);

// drop: flagged frames removed and counters recomputed.
// median_replace: non-finite coordinates (every coordinate of an all-zero
// frame) replaced by that joint coordinate's median over unflagged frames.
// Throws DegenerateError when every frame is flagged.
PoseSequence clean_sequence(const PoseSequence& seq, CleanPolicy policy);

struct PoseExample {
  std::string clip_id;
  std::string split;
  std::vector<int> tokens;
  PoseSequence pose;
};

struct DatasetStats {
  std::size_t entries = 0;
  std::size_t missing_pose = 0;
  std::size_t empty_after_cleaning = 0;
  std::size_t too_long = 0;
  std::size_t retained = 0;
  std::vector<std::string> discarded_ids;
};

struct Dataset {
  std::vector<PoseExample> examples;
  DatasetStats stats;

  std::vector<const PoseExample*> split(std::string_view name) const;
  std::size_t joint_count() const { return examples.empty() ? 0 : examples.front().pose.joint_count(); }
};

struct BuildOptions {
  CleanPolicy policy = CleanPolicy::median_replace;
  std::size_t max_frames = 400;
};

// Entries whose pose file is missing, that clean to nothing, or that exceed
// max_frames are discarded and counted. Any split named in the manifest that
// ends up empty is an InputError.
Dataset build_dataset(const DatasetManifest& manifest, const Vocabulary& vocab, const BuildOptions& options = {});

void write_dataset(std::ostream& out, const Dataset& dataset);
void write_dataset_file(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset_file(const std::filesystem::path& path);

}  // namespace signforge
