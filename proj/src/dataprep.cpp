#include "signforge/dataprep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "signforge/error.hpp"

namespace signforge {

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
}

Vocabulary Vocabulary::from_texts(std::span<const std::string> texts) {
  std::set<std::string> unique;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(text)) unique.insert(std::move(tok));
  }
  Vocabulary vocab;
  for (const auto& tok : unique) vocab.add(tok);
  return vocab;
}

int Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const int idx = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, idx);
  return idx;
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk : it->second;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw ContractError("token index " + std::to_string(index) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(index)];
}

void Vocabulary::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write vocabulary: " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary: " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no < 4) {
      if (line != vocab.tokens_[line_no]) throw FormatError(path.string() + ": reserved tokens out of place");
    } else if (vocab.add(line) != static_cast<int>(line_no)) {
      throw FormatError(path.string() + ": duplicate token '" + line + "'");
    }
    ++line_no;
  }
  return vocab;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    std::size_t b = 0, e = current.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(current[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(current[e - 1]))) --e;
    if (e > b) tokens.push_back(current.substr(b, e - b));
    current.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  flush();
  return tokens;
}

std::vector<int> encode_text(std::string_view text, const Vocabulary& vocab) {
  std::vector<int> ids{Vocabulary::bos};
  for (const auto& tok : tokenize(text)) ids.push_back(vocab.index(tok));
  ids.push_back(Vocabulary::eos);
  return ids;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

bool valid_split(std::string_view s) { return s == "train" || s == "dev" || s == "test"; }

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest: " + path.string());
  DatasetManifest manifest;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) throw FormatError(where + ": expected 4 tab-separated fields");
    ManifestEntry e{fields[0], fields[1], fields[2], fields[3]};
    if (e.clip_id.empty() || e.clip_id.find_first_of(" \t") != std::string::npos) {
      throw FormatError(where + ": clip id must be non-empty without whitespace");
    }
    if (!valid_split(e.split)) throw FormatError(where + ": split must be train, dev or test");
    if (!seen.insert(e.clip_id).second) throw FormatError(where + ": duplicate clip id " + e.clip_id);
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write manifest: " + path.string());
  for (const auto& e : manifest.entries) {
    out << e.clip_id << '\t' << e.split << '\t' << e.pose_path << '\t' << e.text << '\n';
  }
}

DatasetManifest resolve_pose_paths(DatasetManifest manifest, const std::filesystem::path& base_dir) {
  for (auto& e : manifest.entries) {
    std::filesystem::path p(e.pose_path);
    if (p.is_relative()) e.pose_path = (base_dir / p).string();
  }
  return manifest;
}

namespace {

void read_points(const nlohmann::json& person, const char* key, std::size_t count, std::vector<Keypoint2D>& out,
                 const std::filesystem::path& path) {
  const std::size_t base = out.size();
  out.resize(base + count);
  if (!person.contains(key) || person[key].is_null()) return;
  const auto& arr = person[key];
  if (!arr.is_array()) throw FormatError(path.string() + ": '" + key + "' is not an array");
  if (arr.size() % 3 != 0) {
    throw FormatError(path.string() + ": '" + key + "' has " + std::to_string(arr.size()) +
                      " values, not a multiple of 3");
  }
  if (arr.empty()) return;
  if (arr.size() / 3 < count) {
    throw FormatError(path.string() + ": '" + key + "' has " + std::to_string(arr.size() / 3) + " points, need " +
                      std::to_string(count));
  }
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (!arr[3 * i + k].is_number()) throw FormatError(path.string() + ": non-numeric entry in '" + key + "'");
    }
    out[base + i] = {arr[3 * i].get<double>(), arr[3 * i + 1].get<double>(), arr[3 * i + 2].get<double>()};
  }
}

}  // namespace

Joints2D ingest_keypoint_json(const std::filesystem::path& path, const KeypointLayout& layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open keypoint file: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("people") || !doc["people"].is_array()) {
    throw FormatError(path.string() + ": missing 'people' array");
  }
  Joints2D frame;
  if (doc["people"].empty()) {
    frame.points.assign(layout.joint_count(), Keypoint2D{});
    return frame;
  }
  const auto& person = doc["people"][0];
  if (!person.is_object()) throw FormatError(path.string() + ": person entry is not an object");
  read_points(person, "pose_keypoints_2d", layout.body_points, frame.points, path);
  read_points(person, "hand_left_keypoints_2d", layout.hand_points, frame.points, path);
  read_points(person, "hand_right_keypoints_2d", layout.hand_points, frame.points, path);
  frame.sanitize();
  return frame;
}

std::vector<std::filesystem::path> find_clip_frames(const std::filesystem::path& dir, const std::string& clip_id) {
  if (!std::filesystem::is_directory(dir)) throw InputError("keypoint directory not found: " + dir.string());
  static const std::regex pattern(R"(^(.+)_(\d{12})_keypoints\.json$)");
  std::vector<std::pair<std::string, std::filesystem::path>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, pattern) && m[1] == clip_id) found.emplace_back(m[2], entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<std::filesystem::path> paths;
  for (auto& [_, p] : found) paths.push_back(std::move(p));
  return paths;
}

std::vector<Joints2D> ingest_clip(const std::filesystem::path& dir, const std::string& clip_id,
                                  const KeypointLayout& layout) {
  std::vector<Joints2D> frames;
  for (const auto& p : find_clip_frames(dir, clip_id)) frames.push_back(ingest_keypoint_json(p, layout));
  return frames;
}

CleanPolicy parse_clean_policy(std::string_view name) {
  if (name == "drop") return CleanPolicy::drop;
  if (name == "median_replace" || name == "median") return CleanPolicy::median_replace;
  throw InputError("unknown clean policy '" + std::string(name) + "'");
}

PoseSequence clean_sequence(const PoseSequence& seq, CleanPolicy policy) {
  if (seq.empty()) throw InputError("cannot clean an empty sequence");
  const ValidityReport report = validate_sequence(seq);
  if (report.flagged_frames == seq.size()) throw DegenerateError("every frame is flagged; nothing left after cleaning");
  if (report.flagged_frames == 0) return seq;

  PoseSequence out;
  out.fps = seq.fps;
  if (policy == CleanPolicy::drop) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (!report.flagged(t)) out.frames.push_back(seq.frames[t]);
    }
    assign_counters(out);
    return out;
  }

  out = seq;
  const std::size_t joints = seq.joint_count();
  std::vector<double> column;
  for (std::size_t j = 0; j < joints; ++j) {
    for (std::size_t k = 0; k < 3; ++k) {
      column.clear();
      for (std::size_t t = 0; t < seq.size(); ++t) {
        if (!report.flagged(t)) column.push_back(seq.frames[t].joints[j][k]);
      }
      std::sort(column.begin(), column.end());
      const std::size_t n = column.size();
      const double median = n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
      for (std::size_t t = 0; t < seq.size(); ++t) {
        if (!report.flagged(t)) continue;
        double& v = out.frames[t].joints[j][k];
        if (!std::isfinite(v) || (report.frame_flags[t] & ValidityReport::all_zero)) v = median;
      }
    }
  }
  return out;
}

std::vector<const PoseExample*> Dataset::split(std::string_view name) const {
  std::vector<const PoseExample*> out;
  for (const auto& e : examples) {
    if (e.split == name) out.push_back(&e);
  }
  return out;
}

Dataset build_dataset(const DatasetManifest& manifest, const Vocabulary& vocab, const BuildOptions& options) {
  Dataset ds;
  std::set<std::string> splits;
  for (const auto& entry : manifest.entries) {
    ++ds.stats.entries;
    splits.insert(entry.split);
    if (!std::filesystem::is_regular_file(entry.pose_path)) {
      ++ds.stats.missing_pose;
      ds.stats.discarded_ids.push_back(entry.clip_id);
      continue;
    }
    PoseSequence pose = read_pose_file(entry.pose_path);
    if (!pose.empty()) {
      try {
        pose = clean_sequence(pose, options.policy);
      } catch (const DegenerateError&) {
        pose.frames.clear();
      }
    }
    if (pose.empty()) {
      ++ds.stats.empty_after_cleaning;
      ds.stats.discarded_ids.push_back(entry.clip_id);
      continue;
    }
    if (pose.size() > options.max_frames) {
      ++ds.stats.too_long;
      ds.stats.discarded_ids.push_back(entry.clip_id);
      continue;
    }
    ds.examples.push_back({entry.clip_id, entry.split, encode_text(entry.text, vocab), std::move(pose)});
    ++ds.stats.retained;
  }
  for (const auto& s : splits) {
    if (ds.split(s).empty()) throw InputError("split '" + s + "' is empty after discarding unusable entries");
  }
  const std::size_t joints = ds.joint_count();
  for (const auto& e : ds.examples) {
    if (e.pose.joint_count() != joints) throw DimensionError("clip " + e.clip_id + " has a different joint count");
  }
  return ds;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << "SGNDATASET 1\n";
  out << "examples " << dataset.examples.size() << '\n';
  for (const auto& e : dataset.examples) {
    out << "example " << e.clip_id << ' ' << e.split << ' ' << e.tokens.size() << '\n';
    for (std::size_t i = 0; i < e.tokens.size(); ++i) out << (i ? " " : "") << e.tokens[i];
    out << '\n';
    std::ostringstream pose;
    write_pose(pose, e.pose);
    const std::string text = pose.str();
    out << "frames " << e.pose.size() << '\n' << text;
  }
}

void write_dataset_file(const std::filesystem::path& path, const Dataset& dataset) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write dataset: " + path.string());
  write_dataset(out, dataset);
}

Dataset read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset: " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || line != "SGNDATASET 1") throw FormatError(where + ": not a dataset file");
  std::string word;
  std::size_t count = 0;
  if (!std::getline(in, line)) throw FormatError(where + ": truncated");
  std::istringstream(line) >> word >> count;
  if (word != "examples") throw FormatError(where + ": expected example count");
  Dataset ds;
  for (std::size_t i = 0; i < count; ++i) {
    PoseExample e;
    std::size_t tokens = 0, frames = 0;
    if (!std::getline(in, line)) throw FormatError(where + ": truncated");
    std::istringstream header(line);
    header >> word >> e.clip_id >> e.split >> tokens;
    if (word != "example" || !header) throw FormatError(where + ": bad example header '" + line + "'");
    if (!std::getline(in, line)) throw FormatError(where + ": truncated");
    std::istringstream ids(line);
    e.tokens.resize(tokens);
    for (auto& t : e.tokens) {
      if (!(ids >> t)) throw FormatError(where + ": bad token list for " + e.clip_id);
    }
    if (!std::getline(in, line)) throw FormatError(where + ": truncated");
    std::istringstream(line) >> word >> frames;
    if (word != "frames") throw FormatError(where + ": expected frame count for " + e.clip_id);
    std::string block;
    for (std::size_t f = 0; f <= frames; ++f) {
      if (!std::getline(in, line)) throw FormatError(where + ": truncated pose for " + e.clip_id);
      block += line;
      block += '\n';
    }
    std::istringstream pose_in(block);
    e.pose = read_pose(pose_in, where + "#" + e.clip_id);
    ds.examples.push_back(std::move(e));
  }
  ds.stats.entries = ds.stats.retained = ds.examples.size();
  return ds;
}

}  // namespace signforge
