#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "signforge/config.hpp"
#include "signforge/image.hpp"
#include "signforge/parameters.hpp"
#include "signforge/rng.hpp"
#include "signforge/tensor.hpp"

namespace signforge {

// Variance-preserving chain. Steps are numbered 1..T; entry t-1 of each
// vector belongs to step t.
struct NoiseSchedule {
  std::size_t steps = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  // Linear betas from beta_start to beta_end. With rescale, both ends are
  // multiplied by 1000 / T (capped at 0.999) so a short chain still ends
  // close to pure noise.
  static NoiseSchedule linear(std::size_t steps, double beta_start = 1e-4, double beta_end = 0.02,
                              bool rescale = true);
  static NoiseSchedule from_betas(std::vector<double> betas);

  double beta(std::size_t t) const;
  double alpha(std::size_t t) const;
  double alpha_bar(std::size_t t) const;
};

// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps. ContractError unless 1 <= t <= T.
Tensor forward_diffuse(const Tensor& x0, std::size_t t, const Tensor& eps, const NoiseSchedule& sched);

struct DiffusionConfig {
  std::size_t steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  bool rescale_betas = true;
  std::size_t image_size = 16;
  std::size_t channels = 16;
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  OptimizerConfig optimizer{.learning_rate = 3e-3};

  void validate() const;
  NoiseSchedule schedule() const;
  // Keys match the field names plus `optimizer`, `learning_rate`, `clip_norm`.
  static DiffusionConfig from_config(const KeyValueConfig& kv);
  void write(std::ostream& out) const;
};

// One training item; every tensor is [1, S, S]. image in [-1, 1], c and d in [0, 1].
struct DiffusionExample {
  Tensor image;
  Tensor c;
  Tensor d;
};

// [1, S, S] tensor in [-1, 1] from an S x S image, and back (rounded, clamped).
Tensor image_to_tensor(const GrayImage& img);
GrayImage tensor_to_image(const Tensor& t);
// Condition map [1, S, S] in [0, 1], nearest-neighbour resampled to S x S.
Tensor condition_tensor(const GrayImage& img, std::size_t size);

// Small convolutional noise predictor:
//   conv_in (+ time embedding in its bias) -> conv1 -> dual-condition block
//   -> conv2 -> conv_out, 3x3 kernels, GELU between layers.
// The block computes
//   y = F(x; locked) + Z_out(F(x + Z_in(e); copy)),  e = clamp(c + d, 0, 1)
// where F is a 3x3 conv + GELU, `locked` is frozen, `copy` starts equal to
// it, and the 1x1 zero convolutions Z_in, Z_out start at exactly zero.
class Denoiser {
 public:
  Denoiser(const DiffusionConfig& cfg, std::uint64_t seed);

  const DiffusionConfig& config() const { return cfg_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  Tensor locked_body(const Tensor& x) const;
  // x [C, S, S], c and d [1, S, S]. DimensionError on spatial mismatch.
  Tensor block_forward(const Tensor& x, const Tensor& c, const Tensor& d) const;
  // Predicted noise, same shape as x_t [1, S, S].
  Tensor forward(const Tensor& x_t, std::size_t t, const Tensor& c, const Tensor& d) const;

  static bool is_locked(const std::string& name) { return name.rfind("block.locked.", 0) == 0; }
  static bool is_zero_conv(const std::string& name) {
    return name.rfind("block.zero_in.", 0) == 0 || name.rfind("block.zero_out.", 0) == 0;
  }

 private:
  const Tensor& p(const std::string& name) const { return params_.at(name); }

  DiffusionConfig cfg_;
  ParameterStore params_;
};

// Predicts eps from (x_t, t, c, d).
using EpsModel = std::function<Tensor(const Tensor&, std::size_t, const Tensor&, const Tensor&)>;
EpsModel eps_model(const Denoiser& model);

// Mean over the batch of mean((eps - eps_hat)^2). Per item, in order:
// t = 1 + rng.uniform_index(T), then one rng.normal() per pixel for eps.
Tensor dm_loss(const EpsModel& model, std::span<const DiffusionExample> batch, const NoiseSchedule& sched,
               Rng& rng);

// Ancestral sampling from x_T ~ N(0, I) with sigma_t = sqrt(beta_t) and no
// noise on the final step; result clamped to [-1, 1].
Tensor sample(const EpsModel& model, const NoiseSchedule& sched, const Tensor& c, const Tensor& d, Rng& rng);

struct DiffusionTrainResult {
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
};

// Shuffled minibatch training of every parameter except the locked body.
// Throws NumericError on a non-finite loss and ContractError if a locked
// value changed.
DiffusionTrainResult train_diffusion(Denoiser& model, std::span<const DiffusionExample> data, Rng& rng,
                                     const std::function<void(std::size_t, double)>& on_epoch = {});

}  // namespace signforge
