#include "signforge/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "signforge/error.hpp"
#include "signforge/frnet.hpp"

namespace signforge {

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw InputError("noise schedule needs at least one step");
  NoiseSchedule s;
  s.steps = betas.size();
  double bar = 1.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0)) throw InputError("betas must lie in (0, 1)");
    if (i > 0 && betas[i] < betas[i - 1]) throw InputError("betas must be non-decreasing");
    s.alphas.push_back(1.0 - betas[i]);
    bar *= s.alphas.back();
    s.alpha_bars.push_back(bar);
  }
  s.betas = std::move(betas);
  return s;
}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end, bool rescale) {
  if (steps == 0) throw InputError("noise schedule needs at least one step");
  if (rescale) {
    const double factor = 1000.0 / static_cast<double>(steps);
    beta_start = std::min(beta_start * factor, 0.999);
    beta_end = std::min(beta_end * factor, 0.999);
  }
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double f = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = beta_start + f * (beta_end - beta_start);
  }
  return from_betas(std::move(betas));
}

namespace {

void check_step(const NoiseSchedule& s, std::size_t t) {
  if (t < 1 || t > s.steps) {
    throw ContractError("diffusion step " + std::to_string(t) + " outside 1.." + std::to_string(s.steps));
  }
}

}  // namespace

double NoiseSchedule::beta(std::size_t t) const {
  check_step(*this, t);
  return betas[t - 1];
}
double NoiseSchedule::alpha(std::size_t t) const {
  check_step(*this, t);
  return alphas[t - 1];
}
double NoiseSchedule::alpha_bar(std::size_t t) const {
  check_step(*this, t);
  return alpha_bars[t - 1];
}

Tensor forward_diffuse(const Tensor& x0, std::size_t t, const Tensor& eps, const NoiseSchedule& sched) {
  const double abar = sched.alpha_bar(t);
  if (x0.shape() != eps.shape()) {
    throw DimensionError("forward_diffuse: x0 " + shape_string(x0.shape()) + " vs eps " + shape_string(eps.shape()));
  }
  return add(scale(x0, std::sqrt(abar)), scale(eps, std::sqrt(1.0 - abar)));
}

void DiffusionConfig::validate() const {
  if (steps == 0) throw InputError("steps must be positive");
  if (!(beta_start > 0.0 && beta_end >= beta_start && beta_end < 1.0)) {
    throw InputError("need 0 < beta_start <= beta_end < 1");
  }
  if (image_size < 4) throw InputError("image_size must be at least 4");
  if (channels == 0 || batch_size == 0) throw InputError("channels and batch_size must be positive");
  if (!(optimizer.learning_rate > 0.0)) throw InputError("learning_rate must be positive");
}

NoiseSchedule DiffusionConfig::schedule() const { return NoiseSchedule::linear(steps, beta_start, beta_end, rescale_betas); }

DiffusionConfig DiffusionConfig::from_config(const KeyValueConfig& kv) {
  DiffusionConfig c;
  auto size = [&](const char* key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw InputError(std::string(key) + " must be nonnegative");
    return static_cast<std::size_t>(v);
  };
  c.steps = size("steps", c.steps);
  c.beta_start = kv.get_double("beta_start", c.beta_start);
  c.beta_end = kv.get_double("beta_end", c.beta_end);
  c.rescale_betas = kv.get_bool("rescale_betas", c.rescale_betas);
  c.image_size = size("image_size", c.image_size);
  c.channels = size("channels", c.channels);
  c.epochs = size("epochs", c.epochs);
  c.batch_size = size("batch_size", c.batch_size);
  c.optimizer.kind = parse_optimizer_kind(kv.get_string("optimizer", std::string(to_string(c.optimizer.kind))));
  c.optimizer.learning_rate = kv.get_double("learning_rate", c.optimizer.learning_rate);
  c.optimizer.clip_norm = kv.get_double("clip_norm", c.optimizer.clip_norm);
  kv.reject_unused();
  c.validate();
  return c;
}

void DiffusionConfig::write(std::ostream& out) const {
  out << "steps = " << steps << '\n'
      << "beta_start = " << beta_start << '\n'
      << "beta_end = " << beta_end << '\n'
      << "rescale_betas = " << (rescale_betas ? "true" : "false") << '\n'
      << "image_size = " << image_size << '\n'
      << "channels = " << channels << '\n'
      << "epochs = " << epochs << '\n'
      << "batch_size = " << batch_size << '\n'
      << "optimizer = " << to_string(optimizer.kind) << '\n'
      << "learning_rate = " << optimizer.learning_rate << '\n'
      << "clip_norm = " << optimizer.clip_norm << '\n';
}

Tensor image_to_tensor(const GrayImage& img) {
  if (img.width != img.height) throw DimensionError("diffusion images must be square");
  std::vector<double> v(img.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = img.pixels[i] / 127.5 - 1.0;
  return Tensor::from({1, img.height, img.width}, std::move(v));
}

GrayImage tensor_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1) throw DimensionError("tensor_to_image: expected [1, H, W], got " + shape_string(t.shape()));
  GrayImage img(t.dim(2), t.dim(1));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp((t[i] + 1.0) * 127.5, 0.0, 255.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return img;
}

Tensor condition_tensor(const GrayImage& img, std::size_t size) {
  return Tensor::from({1, size, size}, to_unit_tensor(img, size, size));
}

namespace {

Tensor random_conv(std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in * k * k));
  std::vector<double> w(out * in * k * k);
  for (double& v : w) v = rng.uniform(-bound, bound);
  return Tensor::from({out, in, k, k}, std::move(w), true);
}

void add_conv(ParameterStore& store, const std::string& name, std::size_t out, std::size_t in, std::size_t k,
              Rng& rng) {
  store.add(name + ".weight", random_conv(out, in, k, rng));
  store.add(name + ".bias", Tensor::zeros({out}, true));
}

Tensor time_embedding(std::size_t t, std::size_t dim) {
  std::vector<double> e(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
    e[i] = i % 2 == 0 ? std::sin(static_cast<double>(t) * rate) : std::cos(static_cast<double>(t) * rate);
  }
  return Tensor::from({1, dim}, std::move(e));
}

}  // namespace

Denoiser::Denoiser(const DiffusionConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t C = cfg_.channels;
  add_conv(params_, "conv_in", C, 1, 3, rng);
  add_conv(params_, "conv1", C, C, 3, rng);
  add_conv(params_, "conv2", C, C, 3, rng);
  add_conv(params_, "conv_out", 1, C, 3, rng);
  {
    const double bound = std::sqrt(6.0 / static_cast<double>(2 * C));
    std::vector<double> w(C * C);
    for (double& v : w) v = rng.uniform(-bound, bound);
    params_.add("time.weight", Tensor::from({C, C}, std::move(w), true));
    params_.add("time.bias", Tensor::zeros({C}, true));
  }
  Tensor& locked_w = params_.add("block.locked.weight", random_conv(C, C, 3, rng));
  Tensor& locked_b = params_.add("block.locked.bias", Tensor::zeros({C}));
  locked_w.set_requires_grad(false);
  locked_b.set_requires_grad(false);
  params_.add("block.copy.weight", locked_w.clone(true));
  params_.add("block.copy.bias", locked_b.clone(true));
  params_.add("block.zero_in.weight", Tensor::zeros({C, 1, 1, 1}, true));
  params_.add("block.zero_in.bias", Tensor::zeros({C}, true));
  params_.add("block.zero_out.weight", Tensor::zeros({C, C, 1, 1}, true));
  params_.add("block.zero_out.bias", Tensor::zeros({C}, true));
}

Tensor Denoiser::locked_body(const Tensor& x) const {
  return gelu(conv2d(x, p("block.locked.weight"), p("block.locked.bias"), 1));
}

Tensor Denoiser::block_forward(const Tensor& x, const Tensor& c, const Tensor& d) const {
  if (x.rank() != 3 || x.dim(0) != cfg_.channels) {
    throw DimensionError("block_forward: x " + shape_string(x.shape()) + ", expected [" +
                         std::to_string(cfg_.channels) + ", H, W]");
  }
  const Shape cond{1, x.dim(1), x.dim(2)};
  if (c.shape() != cond || d.shape() != cond) {
    throw DimensionError("block_forward: conditions " + shape_string(c.shape()) + " and " + shape_string(d.shape()) +
                         " do not match " + shape_string(cond));
  }
  const Tensor e = clamp(add(c, d), 0.0, 1.0);
  const Tensor injected = add(x, conv2d(e, p("block.zero_in.weight"), p("block.zero_in.bias"), 0));
  const Tensor branch = gelu(conv2d(injected, p("block.copy.weight"), p("block.copy.bias"), 1));
  return add(locked_body(x), conv2d(branch, p("block.zero_out.weight"), p("block.zero_out.bias"), 0));
}

Tensor Denoiser::forward(const Tensor& x_t, std::size_t t, const Tensor& c, const Tensor& d) const {
  const std::size_t S = cfg_.image_size, C = cfg_.channels;
  if (x_t.shape() != Shape{1, S, S}) {
    throw DimensionError("denoiser input " + shape_string(x_t.shape()) + ", expected " + shape_string({1, S, S}));
  }
  const Tensor temb = reshape(linear(time_embedding(t, C), p("time.weight"), p("time.bias")), {C});
  Tensor h = gelu(conv2d(x_t, p("conv_in.weight"), add(p("conv_in.bias"), temb), 1));
  h = gelu(conv2d(h, p("conv1.weight"), p("conv1.bias"), 1));
  h = block_forward(h, c, d);
  h = gelu(conv2d(h, p("conv2.weight"), p("conv2.bias"), 1));
  return conv2d(h, p("conv_out.weight"), p("conv_out.bias"), 1);
}

EpsModel eps_model(const Denoiser& model) {
  return [&model](const Tensor& x, std::size_t t, const Tensor& c, const Tensor& d) { return model.forward(x, t, c, d); };
}

Tensor dm_loss(const EpsModel& model, std::span<const DiffusionExample> batch, const NoiseSchedule& sched, Rng& rng) {
  if (batch.empty()) throw InputError("dm_loss: empty batch");
  Tensor total;
  for (const DiffusionExample& ex : batch) {
    const std::size_t t = 1 + rng.uniform_index(sched.steps);
    std::vector<double> noise(ex.image.size());
    for (double& v : noise) v = rng.normal();
    const Tensor eps = Tensor::from(ex.image.shape(), std::move(noise));
    const Tensor x_t = forward_diffuse(ex.image, t, eps, sched);
    const Tensor item = mean(square(sub(model(x_t, t, ex.c, ex.d), eps)));
    total = total.defined() ? add(total, item) : item;
  }
  return div_scalar(total, static_cast<double>(batch.size()));
}

Tensor sample(const EpsModel& model, const NoiseSchedule& sched, const Tensor& c, const Tensor& d, Rng& rng) {
  NoGradGuard guard;
  const Shape shape = c.shape();
  std::vector<double> x(shape_size(shape));
  for (double& v : x) v = rng.normal();
  for (std::size_t t = sched.steps; t >= 1; --t) {
    const Tensor eps_hat = model(Tensor::from(shape, x), t, c, d);
    const double a = sched.alpha(t), abar = sched.alpha_bar(t);
    const double coef = (1.0 - a) / std::sqrt(1.0 - abar), inv = 1.0 / std::sqrt(a);
    const double sigma = std::sqrt(sched.beta(t));
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = (x[i] - coef * eps_hat[i]) * inv;
      if (t > 1) x[i] += sigma * rng.normal();
    }
  }
  for (double& v : x) v = std::clamp(v, -1.0, 1.0);
  return Tensor::from(shape, std::move(x));
}

DiffusionTrainResult train_diffusion(Denoiser& model, std::span<const DiffusionExample> data, Rng& rng,
                                     const std::function<void(std::size_t, double)>& on_epoch) {
  if (data.empty()) throw InputError("train_diffusion: empty dataset");
  const DiffusionConfig& cfg = model.config();
  const NoiseSchedule sched = cfg.schedule();
  ParameterStore& params = model.parameters();
  std::vector<std::pair<std::string, std::vector<double>>> frozen;
  for (const auto& [name, t] : params) {
    if (Denoiser::is_locked(name)) frozen.emplace_back(name, std::vector<double>(t.values().begin(), t.values().end()));
  }
  Optimizer optimizer(cfg.optimizer);
  const EpsModel eps = eps_model(model);
  DiffusionTrainResult result;
  std::vector<std::size_t> order(data.size());
  std::vector<DiffusionExample> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) batch.push_back(data[order[i]]);
      params.zero_grad();
      const Tensor loss = dm_loss(eps, batch, sched, rng);
      if (!std::isfinite(loss.item())) {
        throw NumericError("non-finite diffusion loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(result.steps + 1));
      }
      loss.backward();
      optimizer.step(params);
      ++result.steps;
      ++batches;
      total += loss.item();
    }
    result.epoch_loss.push_back(total / static_cast<double>(batches));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }
  for (const auto& [name, values] : frozen) {
    const auto now = params.at(name).values();
    if (!std::equal(values.begin(), values.end(), now.begin(), now.end())) {
      throw ContractError("locked parameter " + name + " changed during training");
    }
  }
  return result;
}

}  // namespace signforge
