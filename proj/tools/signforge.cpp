// signforge: command-line front end for the text-to-pose and rendering pipeline.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <memory>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "signforge/dataprep.hpp"
#include "signforge/diffusion.hpp"
#include "signforge/dtw.hpp"
#include "signforge/error.hpp"
#include "signforge/frnet.hpp"
#include "signforge/lifting.hpp"
#include "signforge/metrics.hpp"
#include "signforge/parallel.hpp"
#include "signforge/toy.hpp"
#include "signforge/translator.hpp"

namespace fs = std::filesystem;
using namespace signforge;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string numbered(const char* prefix, std::size_t i, const char* suffix, int width = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*zu%s", prefix, width, i, suffix);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  return resolve_pose_paths(read_manifest(path), path.parent_path());
}

SkeletonTopology topology_for(std::size_t joints) {
  if (joints == 50) return default_topology();
  if (joints == 10) return toy_topology();
  throw DimensionError("no skeleton with " + std::to_string(joints) + " joints (expected 50 or 10)");
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw InputError(what + " not found: " + path.string());
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  fs::path out;
  std::size_t clips = 5;
  std::uint64_t seed = 42;
  std::vector<std::size_t> empty;
};

void cmd_synth(const SynthArgs& a) {
  write_toy_keypoint_corpus(a.out, a.clips, a.seed, a.empty);
  std::cout << "wrote " << a.clips << " clips to " << a.out.string() << '\n';
}

// ---------------------------------------------------------------- prep

struct PrepArgs {
  fs::path manifest;
  fs::path keypoints;
  fs::path out;
  std::string policy = "median_replace";
  std::size_t max_frames = 400;
  double fps = 25.0;
};

struct ClipOutcome {
  bool retained = false;
  bool ingested = false;
  std::string stage;
  std::string detail;
  std::size_t frames = 0;
  std::size_t flagged = 0;
  PoseSequence pose;
};

void cmd_prep(const PrepArgs& a) {
  const DatasetManifest raw = read_manifest(a.manifest);
  const CleanPolicy policy = parse_clean_policy(a.policy);
  const bool from_keypoints = !a.keypoints.empty();
  if (from_keypoints && !fs::is_directory(a.keypoints)) {
    throw InputError("keypoint directory not found: " + a.keypoints.string());
  }
  const DatasetManifest resolved = resolve_pose_paths(raw, a.manifest.parent_path());
  std::vector<ClipOutcome> outcomes(raw.entries.size());

  parallel_for(raw.entries.size(), [&](std::size_t i) {
    const ManifestEntry& entry = resolved.entries[i];
    ClipOutcome& o = outcomes[i];
    o.stage = "ingest";
    try {
      PoseSequence seq;
      if (from_keypoints) {
        const std::vector<Joints2D> frames = ingest_clip(a.keypoints, entry.clip_id);
        if (frames.empty()) throw InputError("no keypoint files for clip");
        o.ingested = true;
        o.stage = "lift";
        const SkeletonTopology base = default_topology();
        const SkeletonTopology topo = base.with_lengths(estimate_bone_lengths(frames, base));
        seq = lift_2d_to_3d(frames, topo, LiftConfig{}, a.fps).sequence;
      } else {
        seq = read_pose_file(entry.pose_path);
        o.ingested = true;
      }
      o.frames = seq.size();
      o.stage = "clean";
      o.flagged = validate_sequence(seq).flagged_frames;
      seq = clean_sequence(seq, policy);
      o.stage = "normalize";
      seq = normalize_sequence(seq, topology_for(seq.joint_count()));
      assign_counters(seq);
      o.stage = "filter";
      if (seq.size() > a.max_frames) {
        throw InputError(std::to_string(seq.size()) + " frames exceed the limit of " + std::to_string(a.max_frames));
      }
      o.pose = std::move(seq);
      o.retained = true;
      o.stage = "done";
    } catch (const Error& e) {
      o.detail = e.what();
    }
  });

  DatasetManifest processed;
  std::ofstream report = open_out(a.out / "prep_report.tsv");
  report << "clip_id\tstatus\tstage\tframes\tflagged_frames\tdetail\n";
  std::size_t ingested = 0, flagged = 0, retained = 0;
  std::vector<std::string> dropped;
  for (std::size_t i = 0; i < raw.entries.size(); ++i) {
    const ManifestEntry& entry = raw.entries[i];
    const ClipOutcome& o = outcomes[i];
    ingested += o.ingested;
    flagged += o.flagged;
    report << entry.clip_id << '\t' << (o.retained ? "retained" : "dropped") << '\t' << o.stage << '\t' << o.frames
           << '\t' << o.flagged << '\t' << o.detail << '\n';
    if (!o.retained) {
      dropped.push_back(entry.clip_id + " (" + o.stage + ": " + o.detail + ")");
      continue;
    }
    ++retained;
    const std::string rel = "poses/" + entry.clip_id + ".pose";
    write_pose_file(a.out / rel, o.pose);
    processed.entries.push_back({entry.clip_id, entry.split, rel, entry.text});
  }
  report.close();
  std::cout << "ingested " << ingested << " flagged " << flagged << " dropped " << dropped.size() << " retained "
            << retained << '/' << raw.entries.size() << '\n';
  for (const auto& d : dropped) std::cout << "dropped " << d << '\n';
  if (processed.entries.empty()) throw InputError("prep: no clip survived preprocessing");
  write_manifest(a.out / "manifest.tsv", processed);

  std::vector<std::string> texts;
  for (const auto& e : processed.entries) {
    if (e.split == "train") texts.push_back(e.text);
  }
  if (texts.empty()) {
    for (const auto& e : processed.entries) texts.push_back(e.text);
  }
  const Vocabulary vocab = Vocabulary::from_texts(texts);
  vocab.write(a.out / "vocab.txt");
  const Dataset ds = build_dataset(resolve_pose_paths(processed, a.out), vocab);
  write_dataset_file(a.out / "dataset.txt", ds);
}

// ---------------------------------------------------------------- train-pose

struct TrainPoseArgs {
  fs::path manifest;
  fs::path config;
  fs::path out;
  std::string split = "train";
  std::size_t epochs = 30;
  std::uint64_t seed = 42;
};

TranslatorConfig load_translator_config(const fs::path& path) {
  if (path.empty()) return TranslatorConfig{};
  return TranslatorConfig::from_config(KeyValueConfig::read(path));
}

void cmd_train_pose(const TrainPoseArgs& a) {
  const TranslatorConfig cfg = load_translator_config(a.config);
  const DatasetManifest manifest = load_manifest(a.manifest);
  std::vector<std::string> texts;
  for (const auto& e : manifest.entries) {
    if (e.split == a.split) texts.push_back(e.text);
  }
  if (texts.empty()) throw InputError("split '" + a.split + "' has no entries in " + a.manifest.string());
  const Vocabulary vocab = Vocabulary::from_texts(texts);
  const Dataset ds = build_dataset(manifest, vocab);
  const std::vector<const PoseExample*> data = ds.split(a.split);

  Translator model(cfg, vocab.size(), ds.joint_count(), a.seed);
  TranslatorTrainer trainer(model);
  Rng rng(a.seed + 1);
  fs::create_directories(a.out / "checkpoints");
  vocab.write(a.out / "vocab.txt");
  {
    std::ofstream cfg_out = open_out(a.out / "translator.cfg");
    cfg.write(cfg_out);
  }
  std::ofstream loss = open_out(a.out / "loss.tsv");
  loss << "epoch\tmasked_loss\ttotal_loss\n";
  for (std::size_t e = 1; e <= a.epochs; ++e) {
    const EpochMetrics m = trainer.train_epoch(data, rng);
    loss << e << '\t' << fmt(m.masked_loss) << '\t' << fmt(m.total_loss) << '\n';
    loss.flush();
    write_checkpoint(a.out / "checkpoints" / numbered("epoch_", e, ".ckpt"), model.parameters());
    std::cout << "epoch " << e << " masked " << fmt(m.masked_loss) << " total " << fmt(m.total_loss) << '\n';
  }
  if (!trainer.warnings().empty()) std::cerr << trainer.warnings().size() << " training warnings\n";
}

// ---------------------------------------------------------------- translate / eval-dtw

struct ModelArgs {
  fs::path checkpoint;
  fs::path config;
  fs::path vocab;
};

struct LoadedTranslator {
  Vocabulary vocab;
  std::unique_ptr<Translator> model;
};

LoadedTranslator load_translator(const ModelArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  const fs::path model_dir = a.checkpoint.parent_path().parent_path();
  const fs::path config = a.config.empty() ? model_dir / "translator.cfg" : a.config;
  const fs::path vocab_path = a.vocab.empty() ? model_dir / "vocab.txt" : a.vocab;
  require_file(config, "translator config");
  require_file(vocab_path, "vocabulary");
  LoadedTranslator out;
  out.vocab = Vocabulary::read(vocab_path);
  std::size_t features = 0;
  for (const NamedArray& arr : read_checkpoint(a.checkpoint)) {
    if (arr.name == "head.weight" && !arr.shape.empty()) features = arr.shape[0];
  }
  if (features < 4 || (features - 1) % 3 != 0) throw FormatError("checkpoint has no usable head.weight: " + a.checkpoint.string());
  out.model = std::make_unique<Translator>(load_translator_config(config), out.vocab.size(), (features - 1) / 3, 0);
  load_checkpoint(a.checkpoint, out.model->parameters());
  return out;
}

struct TranslateArgs {
  ModelArgs model;
  fs::path input;
  fs::path out;
  double fps = 25.0;
};

void cmd_translate(const TranslateArgs& a) {
  const LoadedTranslator loaded = load_translator(a.model);
  require_file(a.input, "input text file");
  std::ifstream in(a.input, std::ios::binary);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!tokenize(line).empty()) lines.push_back(line);
  }
  if (lines.empty()) throw InputError("no text lines in " + a.input.string());
  std::vector<PoseSequence> poses(lines.size());
  parallel_for(lines.size(), [&](std::size_t i) { poses[i] = translate_text(*loaded.model, loaded.vocab, lines[i], a.fps); });
  std::ofstream index = open_out(a.out / "index.tsv");
  index << "file\tframes\ttext\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string name = numbered("line_", i + 1, ".pose");
    write_pose_file(a.out / name, poses[i]);
    index << name << '\t' << poses[i].size() << '\t' << lines[i] << '\n';
  }
  std::cout << "wrote " << lines.size() << " pose files\n";
}

struct EvalArgs {
  ModelArgs model;
  fs::path manifest;
  fs::path out;
  std::string split = "test";
  std::string oracle;
  std::string cost = "euclidean";
  bool raw = false;
};

void cmd_eval_dtw(const EvalArgs& a) {
  DtwConfig cfg;
  cfg.frame_cost = parse_frame_cost(a.cost);
  cfg.normalize_by_path_length = !a.raw;
  const DatasetManifest manifest = load_manifest(a.manifest);
  LoadedTranslator loaded;
  PosePredictor predict;
  if (a.oracle.empty()) {
    loaded = load_translator(a.model);
    const Translator& model = *loaded.model;
    predict = [&model](const PoseExample& ex) { return model.translate(ex.tokens, ex.pose.fps); };
  } else if (a.oracle == "identity") {
    predict = [](const PoseExample& ex) { return ex.pose; };
  } else if (a.oracle == "constant") {
    predict = [](const PoseExample& ex) {
      PoseSequence s = ex.pose;
      for (auto& f : s.frames) f.joints = ex.pose.frames.front().joints;
      return s;
    };
  } else {
    throw InputError("unknown oracle '" + a.oracle + "' (expected identity or constant)");
  }
  if (a.oracle.empty() == false) {
    std::vector<std::string> texts;
    for (const auto& e : manifest.entries) texts.push_back(e.text);
    loaded.vocab = Vocabulary::from_texts(texts);
  }
  const Dataset ds = build_dataset(manifest, loaded.vocab);
  const std::vector<const PoseExample*> examples = ds.split(a.split);
  if (examples.empty()) throw InputError("split '" + a.split + "' has no clips in " + a.manifest.string());
  const DtwReport report = evaluate_dtw(predict, examples, cfg);
  write_dtw_report(a.out / "dtw_report.tsv", report);
  write_dtw_histogram(a.out / "dtw_histogram.tsv", report);
  std::cout << "clips " << report.clips.size() << " mean " << fmt(report.mean) << " median " << fmt(report.median)
            << " failed " << report.failed << '\n';
}

// ---------------------------------------------------------------- fr

struct FrArgs {
  fs::path pose;
  fs::path frames;
  fs::path out;
  std::size_t size = 64;
  std::size_t window = kFrWindow;
  double offset = kFrOffset;
};

void cmd_fr(const FrArgs& a) {
  if (a.window < 3 || a.window % 2 == 0) throw InputError("--window must be odd and at least 3");
  if (a.size < 8) throw InputError("--size must be at least 8");
  const PoseSequence seq = read_pose_file(a.pose);
  if (seq.empty()) throw InputError("pose file has no frames: " + a.pose.string());
  const SkeletonTopology topo = topology_for(seq.joint_count());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    try {
      const GrayImage c = render_condition(seq.frames[t], topo, a.size, a.size);
      GrayImage gray;
      if (!a.frames.empty()) {
        gray = read_pgm_file(a.frames / numbered("frame_", t, ".pgm"));
        if (gray.width != a.size || gray.height != a.size) {
          throw DimensionError("video frame is " + std::to_string(gray.width) + "x" + std::to_string(gray.height) +
                               ", expected " + std::to_string(a.size) + "x" + std::to_string(a.size));
        }
      } else {
        gray = render_silhouette(seq.frames[t], topo, a.size, a.size);
      }
      write_pgm_file(a.out / numbered("c_", t, ".pgm"), c);
      write_pgm_file(a.out / numbered("d_", t, ".pgm"), fr_condition(gray, a.window, a.offset));
    } catch (const DimensionError& e) {
      throw DimensionError("frame " + std::to_string(t) + ": " + e.what());
    }
  }
  std::cout << "wrote " << 2 * seq.size() << " condition images\n";
}

// ---------------------------------------------------------------- train-diff / sample

struct TrainDiffArgs {
  fs::path config;
  fs::path out;
  std::size_t epochs = 0;
  std::size_t per_class = 32;
  std::uint64_t seed = 42;
};

DiffusionConfig load_diffusion_config(const fs::path& path) {
  if (path.empty()) return DiffusionConfig{};
  return DiffusionConfig::from_config(KeyValueConfig::read(path));
}

void cmd_train_diff(const TrainDiffArgs& a) {
  DiffusionConfig cfg = load_diffusion_config(a.config);
  if (a.epochs > 0) cfg.epochs = a.epochs;
  const ToyDiffusionSet set = make_toy_diffusion_set(a.per_class, cfg.image_size, a.seed);
  Denoiser model(cfg, a.seed);
  Rng rng(a.seed + 1);
  fs::create_directories(a.out);
  std::ofstream loss = open_out(a.out / "loss.tsv");
  loss << "epoch\tloss\n";
  train_diffusion(model, set.examples, rng, [&](std::size_t epoch, double value) {
    loss << epoch << '\t' << fmt(value) << '\n';
    loss.flush();
    std::cout << "epoch " << epoch << " loss " << fmt(value) << '\n';
  });
  write_checkpoint(a.out / "diffusion.ckpt", model.parameters());
  std::ofstream cfg_out = open_out(a.out / "diffusion.cfg");
  cfg.write(cfg_out);
  for (int label = 0; label < 2; ++label) {
    const std::string tag = "class" + std::to_string(label);
    auto to_gray = [](const Tensor& unit) {
      GrayImage img(unit.dim(2), unit.dim(1));
      for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(std::lround(unit[i] * 255.0));
      return img;
    };
    write_pgm_file(a.out / "conditions" / ("c_" + tag + ".pgm"), to_gray(set.condition[label].c));
    write_pgm_file(a.out / "conditions" / ("d_" + tag + ".pgm"), to_gray(set.condition[label].d));
  }
}

struct SampleArgs {
  fs::path checkpoint;
  fs::path config;
  fs::path c;
  fs::path d;
  fs::path out;
  std::size_t count = 4;
  std::uint64_t seed = 42;
};

void cmd_sample(const SampleArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  const fs::path config = a.config.empty() ? a.checkpoint.parent_path() / "diffusion.cfg" : a.config;
  require_file(config, "diffusion config");
  const DiffusionConfig cfg = load_diffusion_config(config);
  Denoiser model(cfg, 0);
  load_checkpoint(a.checkpoint, model.parameters());
  const Tensor c = condition_tensor(read_pgm_file(a.c), cfg.image_size);
  const Tensor d = condition_tensor(read_pgm_file(a.d), cfg.image_size);
  const NoiseSchedule sched = cfg.schedule();
  Rng base(a.seed);
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < a.count; ++i) rngs.push_back(base.split());
  std::vector<GrayImage> images(a.count);
  const EpsModel eps = eps_model(model);
  parallel_for(a.count, [&](std::size_t i) { images[i] = tensor_to_image(sample(eps, sched, c, d, rngs[i])); });
  for (std::size_t i = 0; i < a.count; ++i) write_pgm_file(a.out / numbered("sample_", i, ".pgm", 3), images[i]);
  std::cout << "wrote " << a.count << " samples\n";
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  fs::path pred;
  fs::path gt;
  fs::path boxes;
  fs::path pred_keypoints;
  fs::path gt_keypoints;
  fs::path out;
};

void cmd_metrics(const MetricsArgs& a) {
  if (!fs::is_directory(a.gt)) throw InputError("ground-truth directory not found: " + a.gt.string());
  if (!fs::is_directory(a.pred)) throw InputError("prediction directory not found: " + a.pred.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a.gt)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw InputError("no .pgm files in " + a.gt.string());
  const bool have_boxes = !a.boxes.empty();
  const bool have_kp = !a.pred_keypoints.empty() || !a.gt_keypoints.empty();
  if (have_kp && (a.pred_keypoints.empty() || a.gt_keypoints.empty())) {
    throw InputError("--pred-keypoints and --gt-keypoints must be given together");
  }
  const auto boxes = have_boxes ? read_hand_boxes(a.boxes) : std::map<std::size_t, std::vector<HandBox>>{};
  const auto pred_kp = have_kp ? read_hand_keypoints(a.pred_keypoints) : std::map<std::size_t, FrameKeypoints>{};
  const auto gt_kp = have_kp ? read_hand_keypoints(a.gt_keypoints) : std::map<std::size_t, FrameKeypoints>{};

  struct Row {
    double ssim = 0.0;
    double hand = 0.0;
    bool has_hand = false;
    double dist = 0.0;
    bool has_dist = false;
    std::vector<std::string> warnings;
  };
  std::vector<Row> rows(names.size());
  parallel_for(names.size(), [&](std::size_t i) {
    try {
      const GrayImage g = read_pgm_file(a.gt / names[i]);
      const GrayImage p = read_pgm_file(a.pred / names[i]);
      Row& r = rows[i];
      r.ssim = ssim(p, g);
      if (auto it = boxes.find(i); it != boxes.end()) {
        r.hand = hand_ssim(p, g, it->second, &r.warnings);
        r.has_hand = true;
      }
      auto pit = pred_kp.find(i);
      auto git = gt_kp.find(i);
      if (pit != pred_kp.end() && git != gt_kp.end()) {
        std::vector<Point2> pa, ga;
        for (const auto& [side, pts] : git->second) {
          auto match = pit->second.find(side);
          if (match == pit->second.end()) throw DimensionError(std::string(to_string(side)) + " hand missing in prediction");
          if (match->second.size() != pts.size()) {
            throw DimensionError(std::string(to_string(side)) + " hand has " + std::to_string(match->second.size()) +
                                 " predicted vs " + std::to_string(pts.size()) + " reference keypoints");
          }
          pa.insert(pa.end(), match->second.begin(), match->second.end());
          ga.insert(ga.end(), pts.begin(), pts.end());
        }
        r.dist = hand_keypoint_distance(pa, ga);
        r.has_dist = true;
      }
    } catch (const DimensionError& e) {
      throw DimensionError("frame " + std::to_string(i) + " (" + names[i] + "): " + e.what());
    }
  });

  std::ofstream out = open_out(a.out / "metrics.tsv");
  out << "frame\tfile\tssim\thand_ssim\thand_distance\n";
  double s_sum = 0.0, h_sum = 0.0, d_sum = 0.0;
  std::size_t h_n = 0, d_n = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Row& r = rows[i];
    out << i << '\t' << names[i] << '\t' << fmt(r.ssim) << '\t' << (r.has_hand ? fmt(r.hand) : "NA") << '\t'
        << (r.has_dist ? fmt(r.dist) : "NA") << '\n';
    s_sum += r.ssim;
    if (r.has_hand) h_sum += r.hand, ++h_n;
    if (r.has_dist) d_sum += r.dist, ++d_n;
    for (const auto& w : r.warnings) std::cerr << "frame " << i << ": " << w << '\n';
  }
  const double s_mean = s_sum / static_cast<double>(names.size());
  out << "mean\t-\t" << fmt(s_mean) << '\t' << (h_n ? fmt(h_sum / static_cast<double>(h_n)) : "NA") << '\t'
      << (d_n ? fmt(d_sum / static_cast<double>(d_n)) : "NA") << '\n';
  std::cout << "frames " << names.size() << " ssim " << fmt(s_mean);
  if (h_n) std::cout << " hand_ssim " << fmt(h_sum / static_cast<double>(h_n));
  if (d_n) std::cout << " hand_distance " << fmt(d_sum / static_cast<double>(d_n));
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-pose translation, condition rendering and evaluation"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  app.add_option("--seed", seed, "Random seed for every stochastic step")->capture_default_str();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a small synthetic keypoint corpus and manifest");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--clips", synth.clips, "Number of clips")->capture_default_str();
  c_synth->add_option("--empty", synth.empty, "Indices of clips written without any detections");

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep", "Ingest, lift, clean and normalize clips into pose files");
  c_prep->add_option("--manifest", prep.manifest, "clip_id/split/pose_path/text TSV")->required();
  c_prep->add_option("--keypoints", prep.keypoints, "Directory of per-frame keypoint JSON files");
  c_prep->add_option("--out", prep.out, "Output directory")->required();
  c_prep->add_option("--policy", prep.policy, "median_replace or drop")->capture_default_str();
  c_prep->add_option("--max-frames", prep.max_frames, "Discard clips longer than this")->capture_default_str();
  c_prep->add_option("--fps", prep.fps, "Frame rate of keypoint clips")->capture_default_str();

  TrainPoseArgs train;
  auto* c_train = app.add_subcommand("train-pose", "Train the text-to-pose translator");
  c_train->add_option("--manifest", train.manifest, "Processed manifest")->required();
  c_train->add_option("--config", train.config, "key = value translator config");
  c_train->add_option("--out", train.out, "Output directory")->required();
  c_train->add_option("--split", train.split, "Training split")->capture_default_str();
  c_train->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();

  auto add_model = [](CLI::App* cmd, ModelArgs& m, bool required) {
    auto* opt = cmd->add_option("--checkpoint", m.checkpoint, "Translator checkpoint");
    if (required) opt->required();
    cmd->add_option("--config", m.config, "Translator config (default: ../translator.cfg of the checkpoint)");
    cmd->add_option("--vocab", m.vocab, "Vocabulary (default: ../vocab.txt of the checkpoint)");
  };

  TranslateArgs tr;
  auto* c_tr = app.add_subcommand("translate", "Translate text lines to pose files");
  add_model(c_tr, tr.model, true);
  c_tr->add_option("--input", tr.input, "Text file, one sentence per line")->required();
  c_tr->add_option("--out", tr.out, "Output directory")->required();
  c_tr->add_option("--fps", tr.fps, "Frame rate written to pose files")->capture_default_str();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval-dtw", "DTW between translations and ground truth");
  add_model(c_ev, ev.model, false);
  c_ev->add_option("--manifest", ev.manifest, "Processed manifest")->required();
  c_ev->add_option("--out", ev.out, "Output directory")->required();
  c_ev->add_option("--split", ev.split, "Evaluation split")->capture_default_str();
  c_ev->add_option("--oracle", ev.oracle, "identity or constant instead of a model");
  c_ev->add_option("--cost", ev.cost, "euclidean or manhattan")->capture_default_str();
  c_ev->add_flag("--raw", ev.raw, "Do not normalize by path length");

  FrArgs fr;
  auto* c_fr = app.add_subcommand("fr", "Render skeleton (c) and FR-Net (d) condition images per frame");
  c_fr->add_option("--pose", fr.pose, "Pose file")->required();
  c_fr->add_option("--frames", fr.frames, "Directory of frame_NNNN.pgm video frames");
  c_fr->add_option("--out", fr.out, "Output directory")->required();
  c_fr->add_option("--size", fr.size, "Square image size")->capture_default_str();
  c_fr->add_option("--window", fr.window, "Adaptive threshold window")->capture_default_str();
  c_fr->add_option("--offset", fr.offset, "Adaptive threshold constant C")->capture_default_str();

  TrainDiffArgs td;
  auto* c_td = app.add_subcommand("train-diff", "Train the conditioned denoiser on the two-class toy set");
  c_td->add_option("--config", td.config, "key = value diffusion config");
  c_td->add_option("--out", td.out, "Output directory")->required();
  c_td->add_option("--epochs", td.epochs, "Override the configured epoch count");
  c_td->add_option("--per-class", td.per_class, "Training images per class")->capture_default_str();

  SampleArgs sa;
  auto* c_sa = app.add_subcommand("sample", "Draw conditional samples");
  c_sa->add_option("--checkpoint", sa.checkpoint, "Denoiser checkpoint")->required();
  c_sa->add_option("--config", sa.config, "Diffusion config (default: next to the checkpoint)");
  c_sa->add_option("--c", sa.c, "Skeleton condition PGM")->required();
  c_sa->add_option("--d", sa.d, "FR-Net condition PGM")->required();
  c_sa->add_option("--out", sa.out, "Output directory")->required();
  c_sa->add_option("--count", sa.count, "Number of samples")->capture_default_str();

  MetricsArgs me;
  auto* c_me = app.add_subcommand("metrics", "SSIM, hand SSIM and hand keypoint distance per frame");
  c_me->add_option("--pred", me.pred, "Directory of generated PGM frames")->required();
  c_me->add_option("--gt", me.gt, "Directory of reference PGM frames")->required();
  c_me->add_option("--boxes", me.boxes, "Hand box TSV");
  c_me->add_option("--pred-keypoints", me.pred_keypoints, "Predicted hand keypoint TSV");
  c_me->add_option("--gt-keypoints", me.gt_keypoints, "Reference hand keypoint TSV");
  c_me->add_option("--out", me.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_synth) synth.seed = seed, cmd_synth(synth);
    else if (*c_prep) cmd_prep(prep);
    else if (*c_train) train.seed = seed, cmd_train_pose(train);
    else if (*c_tr) cmd_translate(tr);
    else if (*c_ev) cmd_eval_dtw(ev);
    else if (*c_fr) cmd_fr(fr);
    else if (*c_td) td.seed = seed, cmd_train_diff(td);
    else if (*c_sa) sa.seed = seed, cmd_sample(sa);
    else if (*c_me) cmd_metrics(me);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
