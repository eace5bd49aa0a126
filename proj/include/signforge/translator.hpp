#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signforge/config.hpp"
#include "signforge/dataprep.hpp"
#include "signforge/parameters.hpp"
#include "signforge/rng.hpp"
#include "signforge/skeleton.hpp"
#include "signforge/tensor.hpp"

namespace signforge {

struct AugmentationConfig {
  bool future_prediction = false;
  std::size_t future_horizon = 10;
  bool just_counter = false;
  bool gaussian_noise = false;
  double noise_sigma = 0.01;
};

struct TranslatorConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 128;
  std::size_t feedforward_dim = 256;
  double dropout = 0.0;
  std::size_t max_src_len = 32;
  std::size_t max_frames = 64;
  AugmentationConfig augment;
  double loss_scale = 1.0;
  double lv_lambda = 0.01;
  // Divide the masked squared error by every element instead of the unmasked ones.
  bool literal_mean_loss = false;
  double counter_threshold = 0.98;
  std::size_t batch_size = 4;
  OptimizerConfig optimizer;

  void validate() const;
  // Every field maps to a key of the same name; optimizer fields are
  // `optimizer`, `learning_rate` and `clip_norm`. Unknown keys are rejected.
  static TranslatorConfig from_config(const KeyValueConfig& kv);
  void write(std::ostream& out) const;
};

inline std::size_t frame_features(std::size_t joints) { return 3 * joints + 1; }

// Fixed-width training batch. Every field is one pre-allocated tensor:
//   src       [B, S]     token indices, pad_index beyond each sentence
//   src_mask  [B, S]     make_mask(src, pad_index)
//   tgt_in    [B, T, F]  row 0 is a zero placeholder for the learned start
//                        frame, row t holds frame t-1
//   tgt_out   [B, T, F]  frame t (3J coordinates then the counter)
//   tgt_mask  [B, T]     make_mask over the counter channel of tgt_out with
//                        pad value 0 (real frames have counters > 0)
struct PaddedBatch {
  Tensor src;
  Tensor src_mask;
  Tensor tgt_in;
  Tensor tgt_out;
  Tensor tgt_mask;
  double pad_index = 0.0;
  std::vector<std::size_t> lengths;
  std::vector<std::string> clip_ids;
  std::size_t allocations = 0;

  std::size_t batch_size() const { return src.dim(0); }
  std::size_t src_len() const { return src.dim(1); }
  std::size_t tgt_len() const { return tgt_out.dim(1); }
  std::size_t features() const { return tgt_out.dim(2); }
};

// M = 1 where t != pad_index, else 0; same shape as t.
Tensor make_mask(const Tensor& t, double pad_index);

// Examples longer than max_src_len / max_frames are truncated and a warning
// is appended to `warnings` when given.
PaddedBatch build_batch(std::span<const PoseExample* const> examples, const TranslatorConfig& cfg,
                        std::vector<std::string>* warnings = nullptr);

// sum(M * (P - T)^2) / (sum(M) * F), with M [B, T] broadcast over the F
// features of [B, T, F] predictions. Predictions and targets are masked
// before differencing. With literal_mean the divisor is B * T * F.
// Throws InputError when the mask is empty.
Tensor masked_regression_loss(const Tensor& preds, const Tensor& targets, const Tensor& mask,
                              bool literal_mean = false);

// base * loss_scale + lv_lambda * weight_norm_sum(store, "weight").
Tensor long_video_loss(const Tensor& base, const ParameterStore& store, double loss_scale, double lv_lambda);

// Training-time batch augmentation, applied in place:
//   gaussian_noise    adds N(0, (noise_sigma * sd)^2) to unmasked tgt_in
//                     coordinates, sd being the standard deviation of the
//                     batch's real coordinates (counter channel and start
//                     row untouched)
//   just_counter      zeroes all tgt_in coordinates, keeping counters
//   future_prediction moves tgt_out so row t holds frame t+k and masks the
//                     last k rows; clips with length <= k are left as they are
void apply_augmentations(PaddedBatch& batch, const TranslatorConfig& cfg, Rng& rng,
                         std::vector<std::string>* warnings = nullptr);

// Text-to-pose encoder-decoder transformer with a counter channel.
class Translator {
 public:
  Translator(const TranslatorConfig& cfg, std::size_t vocab_size, std::size_t joints, std::uint64_t seed);

  const TranslatorConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t joint_count() const { return joints_; }
  std::size_t features() const { return frame_features(joints_); }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  // Source features [S, model_dim]. Positions with mask 0 are excluded as
  // attention keys. Throws ContractError for indices outside the vocabulary.
  Tensor encode(std::span<const int> src, std::span<const double> src_mask, Rng* dropout = nullptr) const;

  // Outputs [W, F] for decoder inputs [W, F]; row 0 of `inputs` is replaced
  // by the learned start frame. Row w only sees inputs 0..w.
  Tensor decode(const Tensor& inputs, const Tensor& features, std::span<const double> src_mask,
                Rng* dropout = nullptr) const;

  // Next frame [F] given the inputs so far (row 0 is the start placeholder).
  Tensor decode_step(const Tensor& prev_frames, const Tensor& features, std::span<const double> src_mask) const;

  // Predictions [B, T, F] for a batch under teacher forcing.
  Tensor forward(const PaddedBatch& batch, Rng* dropout = nullptr) const;

  // Greedy rollout until the predicted counter reaches counter_threshold or
  // max_frames frames exist; counters are then rewritten as (t+1)/T.
  // `tokens` is a bos..eos sequence with at least one word in between.
  PoseSequence translate(std::span<const int> tokens, double fps = 25.0) const;

 private:
  Tensor attention(const std::string& prefix, const Tensor& query_in, const Tensor& key_in,
                   const Tensor& additive_mask, Rng* dropout) const;
  Tensor feed_forward(const std::string& prefix, const Tensor& x, Rng* dropout) const;
  Tensor norm(const std::string& prefix, const Tensor& x) const;
  const Tensor& p(const std::string& name) const { return params_.at(name); }

  TranslatorConfig cfg_;
  std::size_t vocab_size_;
  std::size_t joints_;
  ParameterStore params_;
};

PoseSequence translate_text(const Translator& model, const Vocabulary& vocab, std::string_view text,
                            double fps = 25.0);

struct EpochMetrics {
  double masked_loss = 0.0;
  double total_loss = 0.0;
  std::size_t batches = 0;
};

// Minibatch training loop: shuffle, build_batch, apply_augmentations,
// forward, masked loss, long-video loss, backward, clip and update.
class TranslatorTrainer {
 public:
  explicit TranslatorTrainer(Translator& model);

  // Throws NumericError naming the epoch, batch and step on a non-finite loss.
  EpochMetrics train_epoch(std::span<const PoseExample* const> data, Rng& rng);

  std::size_t steps() const { return steps_; }
  std::size_t epochs() const { return epochs_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  Translator& model_;
  Optimizer optimizer_;
  std::size_t steps_ = 0;
  std::size_t epochs_ = 0;
  std::vector<std::string> warnings_;
};

}  // namespace signforge
