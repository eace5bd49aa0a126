// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "signforge/diffusion.hpp"
#include "signforge/dtw.hpp"
#include "signforge/frnet.hpp"
#include "signforge/lifting.hpp"
#include "signforge/metrics.hpp"
#include "signforge/parameters.hpp"
#include "signforge/rng.hpp"
#include "signforge/skeleton.hpp"
#include "signforge/toy.hpp"
#include "signforge/translator.hpp"

#ifndef SIGNFORGE_CLI
#define SIGNFORGE_CLI "signforge"
#endif

namespace fs = std::filesystem;
using namespace signforge;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome mask_loss_suite() {
  Rng rng(101);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(6), cols = 1 + rng.uniform_index(9);
    const double pad = static_cast<double>(rng.uniform_index(4));
    std::vector<double> v(rows * cols);
    for (double& x : v) x = static_cast<double>(rng.uniform_index(5));
    const Tensor m = make_mask(Tensor::from({rows, cols}, v), pad);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double expect = v[i * cols + j] != pad ? 1.0 : 0.0;
        if (m[i * cols + j] != expect) ++mismatches;
      }
    }
  }

  std::size_t variant_failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = 1 + rng.uniform_index(3), t = 2 + rng.uniform_index(6), f = 1 + rng.uniform_index(5);
    std::vector<double> p(b * t * f), q(b * t * f), m(b * t);
    for (double& x : p) x = rng.normal();
    for (double& x : q) x = rng.normal();
    for (double& x : m) x = rng.uniform() < 0.6 ? 1.0 : 0.0;
    m[0] = 1.0;
    const double base = masked_regression_loss(Tensor::from({b, t, f}, p), Tensor::from({b, t, f}, q),
                                               Tensor::from({b, t}, m))
                            .item();
    for (std::size_t i = 0; i < b * t; ++i) {
      if (m[i] != 0.0) continue;
      for (std::size_t k = 0; k < f; ++k) {
        p[i * f + k] = rng.normal(0.0, 1e6);
        q[i * f + k] = rng.normal(0.0, 1e6);
      }
    }
    const double changed = masked_regression_loss(Tensor::from({b, t, f}, p), Tensor::from({b, t, f}, q),
                                                  Tensor::from({b, t}, m))
                               .item();
    if (changed != base) ++variant_failures;
  }

  const double hand = masked_regression_loss(Tensor::from({1, 3, 1}, {1, 2, 3}), Tensor::from({1, 3, 1}, {0.5, 7, 2}),
                                             Tensor::from({1, 3}, {1, 0, 1}))
                          .item();
  Outcome o;
  o.pass = mismatches == 0 && variant_failures == 0 && hand == 0.625;
  o.detail = "mask mismatches " + std::to_string(mismatches) + ", masked-entry variance " +
             std::to_string(variant_failures) + "/200, hand example " + fmt("%.17g", hand);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome long_video_suite() {
  ParameterStore store;
  store.add("w.weight", Tensor::from({1, 2}, {3, 4}, true));
  auto lv = [&](double s, double lambda) { return long_video_loss(Tensor::scalar(0.5), store, s, lambda).item(); };
  const double value = lv(1.0, 0.01);
  bool ok = std::fabs(value - 0.55) <= 1e-12;
  for (double s : {0.5, 2.0, 3.0}) ok = ok && std::fabs(lv(s, 0.01) - (0.5 * s + 0.05)) <= 1e-12;
  double prev = -std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.01, 0.1}) {
    const double v = lv(1.0, lambda);
    ok = ok && v > prev && std::fabs(v - (0.5 + 5.0 * lambda)) <= 1e-12;
    prev = v;
  }
  return {ok, "L(1, 0.01) = " + fmt("%.17g", value)};
}

// ---------------------------------------------------------------- 3

Outcome gradient_suite() {
  TranslatorConfig cfg;
  cfg.model_dim = 32;
  cfg.feedforward_dim = 64;
  ToyCorpus corpus = make_toy_corpus(3, 5);
  Translator model(cfg, corpus.vocab.size(), 10, 7);
  const auto data = corpus.pointers(0, 3);
  const PaddedBatch batch = build_batch(data, cfg);
  auto translator_loss = [&] {
    return long_video_loss(masked_regression_loss(model.forward(batch), batch.tgt_out, batch.tgt_mask),
                           model.parameters(), cfg.loss_scale, cfg.lv_lambda);
  };
  Rng rng(11);
  const FiniteDiffReport tr = finite_diff_check(translator_loss, model.parameters(), 64, rng);

  DiffusionConfig dcfg;
  dcfg.image_size = 12;
  dcfg.channels = 6;
  Denoiser den(dcfg, 3);
  // Wake the zero convolutions so every branch carries gradient.
  Rng wake(4);
  for (auto& [name, t] : den.parameters()) {
    if (Denoiser::is_zero_conv(name)) {
      for (double& v : t.mutable_values()) v = wake.normal(0.0, 0.1);
    }
  }
  const ToyDiffusionSet set = make_toy_diffusion_set(2, dcfg.image_size, 9);
  const NoiseSchedule sched = dcfg.schedule();
  const EpsModel eps = eps_model(den);
  auto diffusion_loss = [&] {
    Rng r(21);
    return dm_loss(eps, set.examples, sched, r);
  };
  const FiniteDiffReport df = finite_diff_check(diffusion_loss, den.parameters(), 64, rng);
  Outcome o;
  o.pass = tr.max_relative_error < 1e-3 && df.max_relative_error < 1e-3 && tr.samples == 64 && df.samples == 64;
  o.detail = "translator max rel err " + fmt("%.3g", tr.max_relative_error) + " (" + tr.worst_parameter +
             "), diffusion " + fmt("%.3g", df.max_relative_error) + " (" + df.worst_parameter + ")";
  return o;
}

// ---------------------------------------------------------------- 4

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

Outcome zero_conv_suite() {
  DiffusionConfig cfg;
  Denoiser model(cfg, 17);
  const std::size_t s = cfg.image_size, c = cfg.channels;
  Rng rng(5);
  double worst = 0.0;
  {
    NoGradGuard guard;
    for (int i = 0; i < 100; ++i) {
      const Tensor x = random_tensor({c, s, s}, rng, -2.0, 2.0);
      const Tensor cc = random_tensor({1, s, s}, rng, 0.0, 1.0);
      const Tensor dd = random_tensor({1, s, s}, rng, 0.0, 1.0);
      const Tensor a = model.block_forward(x, cc, dd);
      const Tensor b = model.locked_body(x);
      for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::fabs(a[k] - b[k]));
    }
  }
  std::vector<std::pair<std::string, std::vector<double>>> locked;
  for (const auto& [name, t] : model.parameters()) {
    if (Denoiser::is_locked(name)) locked.emplace_back(name, std::vector<double>(t.values().begin(), t.values().end()));
  }
  const ToyDiffusionSet set = make_toy_diffusion_set(4, s, 2);
  Optimizer opt(cfg.optimizer);
  model.parameters().zero_grad();
  Rng step_rng(8);
  dm_loss(eps_model(model), set.examples, cfg.schedule(), step_rng).backward();
  opt.step(model.parameters());
  bool zero_moved = false;
  for (const auto& [name, t] : model.parameters()) {
    if (!Denoiser::is_zero_conv(name)) continue;
    for (double v : t.values()) zero_moved = zero_moved || v != 0.0;
  }
  bool locked_same = !locked.empty();
  for (const auto& [name, before] : locked) {
    const auto after = model.parameters().at(name).values();
    locked_same = locked_same && std::equal(before.begin(), before.end(), after.begin(), after.end());
  }
  Outcome o;
  o.pass = worst == 0.0 && zero_moved && locked_same;
  o.detail = "max |block - locked| " + fmt("%.3g", worst) + ", zero conv moved " + (zero_moved ? "yes" : "no") +
             ", locked unchanged " + (locked_same ? "yes" : "no");
  return o;
}

// ---------------------------------------------------------------- 5

double teacher_forced_mse(const Translator& model, std::span<const PoseExample* const> data) {
  NoGradGuard guard;
  const PaddedBatch batch = build_batch(data, model.config());
  return masked_regression_loss(model.forward(batch), batch.tgt_out, batch.tgt_mask).item();
}

Outcome overfit_suite() {
  const ToyCorpus corpus = make_toy_corpus(10, 7);
  const auto data = corpus.pointers(0, 10);
  std::size_t longest = 0;
  for (const auto* ex : data) longest = std::max(longest, ex->pose.size());
  const TranslatorConfig cfg;
  Translator model(cfg, corpus.vocab.size(), 10, 1);
  TranslatorTrainer trainer(model);
  Rng rng(3);
  for (int e = 0; e < 300; ++e) trainer.train_epoch(data, rng);
  const double mse = teacher_forced_mse(model, data);
  const DtwReport rep = evaluate_dtw([&](const PoseExample& ex) { return model.translate(ex.tokens, ex.pose.fps); }, data);
  std::size_t terminated = 0;
  for (const auto& c : rep.clips) terminated += c.frames_pred < cfg.max_frames;
  Outcome o;
  o.pass = longest <= 40 && mse < 0.01 && rep.failed == 0 && rep.mean < 0.05;
  o.detail = "masked MSE " + fmt("%.3g", mse) + " (< 0.01), mean DTW " + fmt("%.4g", rep.mean) +
             " (< 0.05), rollouts ending before max_frames " + std::to_string(terminated) + "/10";
  return o;
}

// ---------------------------------------------------------------- 6

Outcome ablation_suite() {
  int wins = 0;
  std::string values;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ToyCorpus corpus = make_toy_corpus(50, 100 + seed);
    const auto train = corpus.pointers(0, 40);
    const auto held = corpus.pointers(40, 50);
    double dtw[2] = {0.0, 0.0};
    for (int noise = 0; noise < 2; ++noise) {
      TranslatorConfig cfg;
      cfg.augment.gaussian_noise = noise == 1;
      Translator model(cfg, corpus.vocab.size(), 10, seed);
      TranslatorTrainer trainer(model);
      Rng rng(seed * 7);
      for (int e = 0; e < 60; ++e) trainer.train_epoch(train, rng);
      dtw[noise] = evaluate_dtw([&](const PoseExample& ex) { return model.translate(ex.tokens, ex.pose.fps); }, held).mean;
    }
    wins += dtw[1] <= dtw[0];
    values += fmt(" %.3f/%.3f", dtw[1], dtw[0]);
  }
  return {wins >= 3, "noise wins " + std::to_string(wins) + "/5 (noise/base:" + values + ")"};
}

// ---------------------------------------------------------------- 7

struct PathBest {
  double cost = std::numeric_limits<double>::infinity();
  std::size_t length = 0;
};

void enumerate_paths(const PoseSequence& a, const PoseSequence& b, FrameCost kind, std::size_t i, std::size_t j,
                     double acc, std::size_t len, PathBest& best) {
  acc = acc + frame_distance(a.frames[i], b.frames[j], kind);
  ++len;
  if (i + 1 == a.size() && j + 1 == b.size()) {
    if (acc < best.cost || (acc == best.cost && len > best.length)) best = {acc, len};
    return;
  }
  if (i + 1 < a.size()) enumerate_paths(a, b, kind, i + 1, j, acc, len, best);
  if (j + 1 < b.size()) enumerate_paths(a, b, kind, i, j + 1, acc, len, best);
  if (i + 1 < a.size() && j + 1 < b.size()) enumerate_paths(a, b, kind, i + 1, j + 1, acc, len, best);
}

PoseSequence random_sequence(Rng& rng, std::size_t frames, std::size_t joints, bool integer) {
  PoseSequence s;
  for (std::size_t t = 0; t < frames; ++t) {
    PoseFrame f;
    f.joints.resize(joints);
    for (auto& j : f.joints) {
      for (double& v : j) v = integer ? static_cast<double>(rng.uniform_index(3)) : rng.normal();
    }
    s.frames.push_back(f);
  }
  assign_counters(s);
  return s;
}

Outcome dtw_suite() {
  Rng rng(77);
  std::size_t mismatches = 0, asym = 0, nonzero_self = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const bool integer = trial % 2 == 1;
    const FrameCost kind = trial % 4 < 2 ? FrameCost::euclidean : FrameCost::manhattan;
    const PoseSequence a = random_sequence(rng, 1 + rng.uniform_index(6), 2, integer);
    const PoseSequence b = random_sequence(rng, 1 + rng.uniform_index(6), 2, integer);
    DtwConfig cfg;
    cfg.frame_cost = kind;
    const DtwAlignment al = dtw_align(a, b, cfg);
    PathBest best;
    enumerate_paths(a, b, kind, 0, 0, 0.0, 0, best);
    if (al.cost != best.cost || al.path_length != best.length ||
        al.distance != best.cost / static_cast<double>(best.length)) {
      ++mismatches;
    }
    if (dtw_distance(a, b, cfg) != dtw_distance(b, a, cfg)) ++asym;
    if (dtw_distance(a, a, cfg) != 0.0) ++nonzero_self;
  }
  return {mismatches == 0 && asym == 0 && nonzero_self == 0,
          "DP vs enumeration mismatches " + std::to_string(mismatches) + "/500, asymmetric " + std::to_string(asym) +
              ", nonzero self " + std::to_string(nonzero_self)};
}

// ---------------------------------------------------------------- 8

GrayImage random_binary(Rng& rng, std::size_t w, std::size_t h, double p) {
  GrayImage img(w, h);
  for (auto& v : img.pixels) v = rng.uniform() < p ? 255 : 0;
  return img;
}

bool subset(const GrayImage& a, const GrayImage& b) {
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    if (a.pixels[i] && !b.pixels[i]) return false;
  }
  return true;
}

Outcome morphology_suite() {
  Rng rng(31);
  std::size_t anti = 0, mono = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 5 + rng.uniform_index(20), h = 5 + rng.uniform_index(20);
    const GrayImage a = random_binary(rng, w, h, 0.85);
    GrayImage b = a;
    for (auto& v : b.pixels) {
      if (rng.uniform() < 0.3) v = 255;
    }
    const GrayImage ea = erode(a), eb = erode(b);
    if (!subset(ea, a)) ++anti;
    if (!subset(ea, eb)) ++mono;
  }
  GrayImage square(9, 9);
  for (std::size_t y = 2; y < 7; ++y) {
    for (std::size_t x = 2; x < 7; ++x) square.at(x, y) = 255;
  }
  const GrayImage e = erode(square);
  std::size_t white = 0;
  for (auto v : e.pixels) white += v != 0;
  const bool centre = white == 1 && e.at(4, 4) == 255;
  const GrayImage flat(16, 16, 128);
  const GrayImage t2 = adaptive_threshold(flat, kFrWindow, 2.0);
  const GrayImage t0 = adaptive_threshold(flat, kFrWindow, 0.0);
  const bool all_white = std::all_of(t2.pixels.begin(), t2.pixels.end(), [](auto v) { return v == 255; });
  const bool all_black = std::all_of(t0.pixels.begin(), t0.pixels.end(), [](auto v) { return v == 0; });
  return {anti == 0 && mono == 0 && centre && all_white && all_black,
          "anti-extensive violations " + std::to_string(anti) + ", monotonicity violations " + std::to_string(mono) +
              ", square -> " + std::to_string(white) + " px, C=2 white " + (all_white ? "yes" : "no") +
              ", C=0 black " + (all_black ? "yes" : "no")};
}

// ---------------------------------------------------------------- 9

Outcome diffusion_suite() {
  const DiffusionConfig cfg;
  const ToyDiffusionSet set = make_toy_diffusion_set(32, cfg.image_size, 13);
  Denoiser model(cfg, 13);
  Rng rng(14);
  const DiffusionTrainResult res = train_diffusion(model, set.examples, rng);
  const double first = res.epoch_loss.front(), last = res.epoch_loss.back();
  const NoiseSchedule sched = cfg.schedule();
  const EpsModel eps = eps_model(model);
  int correct = 0;
  Rng srng(15);
  for (int i = 0; i < 50; ++i) {
    const int label = i % 2;
    const Tensor x = sample(eps, sched, set.condition[label].c, set.condition[label].d, srng);
    correct += nearest_centroid(x, set.centroid[0], set.centroid[1]) == label;
  }
  Outcome o;
  o.pass = res.epoch_loss.size() == 30 && last <= 0.5 * first && correct >= 45;
  o.detail = "epochs " + std::to_string(res.epoch_loss.size()) + ", loss " + fmt("%.4f -> %.4f", first, last) +
             ", samples on class " + std::to_string(correct) + "/50";
  return o;
}

// ---------------------------------------------------------------- 10

double reference_ssim(const GrayImage& x, const GrayImage& y) {
  const int n = 11;
  double w[11][11];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * 1.5 * 1.5));
      total += w[i][j];
    }
  }
  const double c1 = 6.5025, c2 = 58.5225;
  double acc = 0.0;
  int windows = 0;
  for (std::size_t oy = 0; oy + n <= x.height; ++oy) {
    for (std::size_t ox = 0; ox + n <= x.width; ++ox) {
      double mx = 0, my = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          mx += w[i][j] / total * x.at(ox + j, oy + i);
          my += w[i][j] / total * y.at(ox + j, oy + i);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double dx = x.at(ox + j, oy + i) - mx, dy = y.at(ox + j, oy + i) - my;
          vx += w[i][j] / total * dx * dx;
          vy += w[i][j] / total * dy * dy;
          cxy += w[i][j] / total * dx * dy;
        }
      }
      acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return acc / windows;
}

Outcome metrics_suite() {
  Rng rng(41);
  GrayImage x(20, 17);
  for (auto& v : x.pixels) v = static_cast<std::uint8_t>(rng.uniform_index(256));
  const double self = ssim(x, x);
  const double extreme = ssim(GrayImage(16, 16, 0), GrayImage(16, 16, 255));
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w = 11 + rng.uniform_index(15), h = 11 + rng.uniform_index(15);
    GrayImage a(w, h), b(w, h);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
      a.pixels[i] = static_cast<std::uint8_t>(rng.uniform_index(256));
      const int noisy = a.pixels[i] + static_cast<int>(rng.normal(0.0, 40.0));
      b.pixels[i] = static_cast<std::uint8_t>(std::clamp(noisy, 0, 255));
    }
    worst = std::max(worst, std::fabs(ssim(a, b) - reference_ssim(a, b)));
  }
  const Point2 p0{0, 0}, p1{3, 4};
  const double dist = hand_keypoint_distance(std::span(&p0, 1), std::span(&p1, 1));
  Outcome o;
  o.pass = self == 1.0 && std::fabs(extreme - 9.999e-5) <= 1e-7 && worst <= 1e-9 && dist == 5.0;
  o.detail = "ssim(x,x) " + fmt("%.17g", self) + ", 0 vs 255 " + fmt("%.6g", extreme) + ", max ref diff " +
             fmt("%.3g", worst) + ", (0,0)-(3,4) " + fmt("%.17g", dist);
  return o;
}

// ---------------------------------------------------------------- 11

Outcome lifting_suite() {
  const SkeletonTopology topo = default_topology();
  Rng rng(51);
  double worst_bone = 0.0, worst_joint = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 100; ++trial) {
    PoseFrame truth;
    truth.joints.assign(topo.joint_count(), Vec3{0, 0, 0});
    truth.joints[topo.root()] = {rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0};
    for (std::size_t b : topo.bones_root_outward()) {
      const Bone bone = topo.bones()[b];
      // Random direction with non-negative depth, matching the lifter's sign convention.
      double d[3] = {rng.normal(), rng.normal(), std::fabs(rng.normal())};
      const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      const double len = topo.canonical_lengths()[b];
      for (int k = 0; k < 3; ++k) truth.joints[bone.child][k] = truth.joints[bone.parent][k] + len * d[k] / n;
    }
    Joints2D obs;
    for (const auto& j : truth.joints) obs.points.push_back({j[0], j[1], 1.0});
    const LiftResult res = lift_2d_to_3d(std::span(&obs, 1), topo, LiftConfig{});
    const PoseFrame& got = res.sequence.frames.front();
    const auto lengths = compute_bone_lengths(got, topo);
    for (std::size_t b = 0; b < lengths.size(); ++b) {
      worst_bone = std::max(worst_bone, std::fabs(lengths[b] - topo.canonical_lengths()[b]) / topo.canonical_lengths()[b]);
    }
    // Depth is recovered up to a global offset and sign.
    double best = std::numeric_limits<double>::infinity();
    for (double sign : {1.0, -1.0}) {
      const double dz = got.joints[topo.root()][2] - sign * truth.joints[topo.root()][2];
      double err = 0.0;
      for (std::size_t j = 0; j < got.joints.size(); ++j) {
        const double ex = got.joints[j][0] - truth.joints[j][0];
        const double ey = got.joints[j][1] - truth.joints[j][1];
        const double ez = got.joints[j][2] - sign * truth.joints[j][2] - dz;
        err = std::max(err, std::sqrt(ex * ex + ey * ey + ez * ez));
      }
      best = std::min(best, err);
    }
    worst_joint = std::max(worst_joint, best);
    for (const auto& hist : res.objective_history) {
      for (std::size_t k = 1; k < hist.size(); ++k) monotone = monotone && hist[k] <= hist[k - 1];
    }
  }
  return {worst_bone < 1e-3 && worst_joint < 1e-2 && monotone,
          "max bone rel err " + fmt("%.3g", worst_bone) + ", max joint err " + fmt("%.3g", worst_joint) +
              ", objective monotone " + (monotone ? "yes" : "no")};
}

// ---------------------------------------------------------------- 12

int run(const std::string& cmd) {
  const std::string full = cmd + " > /dev/null 2>&1";
  return std::system(full.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool pipeline(const fs::path& root, std::string& failed) {
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = std::string("\"") + SIGNFORGE_CLI + "\" --seed 7 ";
  const std::string r = "\"" + root.string() + "/";
  std::ofstream(root / "lines.txt") << "hello good\nthank you\n";
  const std::vector<std::string> steps = {
      "synth --out " + r + "corpus\" --clips 8 --empty 3",
      "prep --manifest " + r + "corpus/manifest.tsv\" --keypoints " + r + "corpus/keypoints\" --out " + r + "prep\"",
      "train-pose --manifest " + r + "prep/manifest.tsv\" --out " + r + "model\" --epochs 3",
      "translate --checkpoint " + r + "model/checkpoints/epoch_0003.ckpt\" --input " + r + "lines.txt\" --out " + r +
          "translated\"",
      "eval-dtw --manifest " + r + "prep/manifest.tsv\" --checkpoint " + r + "model/checkpoints/epoch_0003.ckpt\" --split train --out " +
          r + "eval\"",
      "fr --pose " + r + "translated/line_0001.pose\" --out " + r + "fr\" --size 32",
      "train-diff --out " + r + "diff\" --epochs 2 --per-class 4",
      "sample --checkpoint " + r + "diff/diffusion.ckpt\" --c " + r + "diff/conditions/c_class0.pgm\" --d " + r +
          "diff/conditions/d_class0.pgm\" --count 2 --out " + r + "samples\"",
      "metrics --pred " + r + "fr\" --gt " + r + "fr\" --out " + r + "metrics\"",
  };
  for (const auto& s : steps) {
    if (run(cli + s) != 0) {
      failed = s.substr(0, s.find(' '));
      return false;
    }
  }
  return true;
}

Outcome determinism_suite() {
  const fs::path base = fs::temp_directory_path() / "signforge_acceptance";
  std::string failed;
  if (!pipeline(base / "a", failed) || !pipeline(base / "b", failed)) return {false, "pipeline step failed: " + failed};
  std::vector<std::string> files_a, files_b;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (e.is_regular_file()) files_a.push_back(fs::relative(e.path(), base / "a").string());
  }
  for (const auto& e : fs::recursive_directory_iterator(base / "b")) {
    if (e.is_regular_file()) files_b.push_back(fs::relative(e.path(), base / "b").string());
  }
  std::sort(files_a.begin(), files_a.end());
  std::sort(files_b.begin(), files_b.end());
  std::size_t differing = 0;
  if (files_a == files_b) {
    for (const auto& f : files_a) differing += slurp(base / "a" / f) != slurp(base / "b" / f);
  }
  const bool ok = files_a == files_b && differing == 0 && files_a.size() > 20;
  fs::remove_all(base);
  return {ok, std::to_string(files_a.size()) + " files, " + std::to_string(differing) + " differ"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "mask/loss suite", 5, mask_loss_suite},
      {2, "long video loss", 1, long_video_suite},
      {3, "gradient integrity", 120, gradient_suite},
      {4, "zero-conv identity", 30, zero_conv_suite},
      {5, "translator overfit", 600, overfit_suite},
      {6, "augmentation ablation", 1800, ablation_suite},
      {7, "DTW oracle", 10, dtw_suite},
      {8, "FR-Net morphology", 5, morphology_suite},
      {9, "diffusion toy", 1200, diffusion_suite},
      {10, "metrics", 10, metrics_suite},
      {11, "IK lifting", 120, lifting_suite},
      {12, "end-to-end determinism", 300, determinism_suite},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < c.limit_s;
    failures += !pass;
    std::printf("%s %2d %s: %s [%.1f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.limit_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
