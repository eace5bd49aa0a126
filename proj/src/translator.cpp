#include "signforge/translator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "signforge/error.hpp"

namespace signforge {

void TranslatorConfig::validate() const {
  if (layers == 0 || heads == 0 || model_dim == 0 || feedforward_dim == 0) {
    throw InputError("translator dimensions must be positive");
  }
  if (model_dim % heads != 0) throw InputError("model_dim must be divisible by heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must lie in [0, 1)");
  if (max_src_len < 3 || max_frames == 0) throw InputError("max_src_len >= 3 and max_frames >= 1 required");
  if (augment.future_prediction && augment.future_horizon == 0) throw InputError("future_horizon must be >= 1");
  if (augment.noise_sigma < 0.0) throw InputError("noise_sigma must be nonnegative");
  if (!(loss_scale > 0.0)) throw InputError("loss_scale must be positive");
  if (lv_lambda < 0.0) throw InputError("lv_lambda must be nonnegative");
  if (!(counter_threshold > 0.0 && counter_threshold < 1.0)) throw InputError("counter_threshold must lie in (0, 1)");
  if (batch_size == 0) throw InputError("batch_size must be positive");
  if (!(optimizer.learning_rate > 0.0)) throw InputError("learning_rate must be positive");
}

TranslatorConfig TranslatorConfig::from_config(const KeyValueConfig& kv) {
  TranslatorConfig c;
  auto size = [&](const char* key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw InputError(std::string(key) + " must be nonnegative");
    return static_cast<std::size_t>(v);
  };
  c.layers = size("layers", c.layers);
  c.heads = size("heads", c.heads);
  c.model_dim = size("model_dim", c.model_dim);
  c.feedforward_dim = size("feedforward_dim", c.feedforward_dim);
  c.dropout = kv.get_double("dropout", c.dropout);
  c.max_src_len = size("max_src_len", c.max_src_len);
  c.max_frames = size("max_frames", c.max_frames);
  c.augment.future_prediction = kv.get_bool("future_prediction", c.augment.future_prediction);
  c.augment.future_horizon = size("future_horizon", c.augment.future_horizon);
  c.augment.just_counter = kv.get_bool("just_counter", c.augment.just_counter);
  c.augment.gaussian_noise = kv.get_bool("gaussian_noise", c.augment.gaussian_noise);
  c.augment.noise_sigma = kv.get_double("noise_sigma", c.augment.noise_sigma);
  c.loss_scale = kv.get_double("loss_scale", c.loss_scale);
  c.lv_lambda = kv.get_double("lv_lambda", c.lv_lambda);
  c.literal_mean_loss = kv.get_bool("literal_mean_loss", c.literal_mean_loss);
  c.counter_threshold = kv.get_double("counter_threshold", c.counter_threshold);
  c.batch_size = size("batch_size", c.batch_size);
  c.optimizer.kind = parse_optimizer_kind(kv.get_string("optimizer", std::string(to_string(c.optimizer.kind))));
  c.optimizer.learning_rate = kv.get_double("learning_rate", c.optimizer.learning_rate);
  c.optimizer.clip_norm = kv.get_double("clip_norm", c.optimizer.clip_norm);
  kv.reject_unused();
  c.validate();
  return c;
}

void TranslatorConfig::write(std::ostream& out) const {
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "layers = " << layers << '\n'
      << "heads = " << heads << '\n'
      << "model_dim = " << model_dim << '\n'
      << "feedforward_dim = " << feedforward_dim << '\n'
      << "dropout = " << dropout << '\n'
      << "max_src_len = " << max_src_len << '\n'
      << "max_frames = " << max_frames << '\n'
      << "future_prediction = " << b(augment.future_prediction) << '\n'
      << "future_horizon = " << augment.future_horizon << '\n'
      << "just_counter = " << b(augment.just_counter) << '\n'
      << "gaussian_noise = " << b(augment.gaussian_noise) << '\n'
      << "noise_sigma = " << augment.noise_sigma << '\n'
      << "loss_scale = " << loss_scale << '\n'
      << "lv_lambda = " << lv_lambda << '\n'
      << "literal_mean_loss = " << b(literal_mean_loss) << '\n'
      << "counter_threshold = " << counter_threshold << '\n'
      << "batch_size = " << batch_size << '\n'
      << "optimizer = " << to_string(optimizer.kind) << '\n'
      << "learning_rate = " << optimizer.learning_rate << '\n'
      << "clip_norm = " << optimizer.clip_norm << '\n';
}

Tensor make_mask(const Tensor& t, double pad_index) {
  std::vector<double> m(t.size());
  const auto v = t.values();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = v[i] != pad_index ? 1.0 : 0.0;
  return Tensor::from(t.shape(), std::move(m));
}

PaddedBatch build_batch(std::span<const PoseExample* const> examples, const TranslatorConfig& cfg,
                        std::vector<std::string>* warnings) {
  if (examples.empty()) throw ContractError("build_batch: no examples");
  const std::size_t joints = examples.front()->pose.joint_count();
  const std::size_t features = frame_features(joints);
  std::size_t src_len = 0, tgt_len = 0;
  for (const PoseExample* e : examples) {
    if (e->pose.empty() || e->tokens.empty()) throw InputError("build_batch: empty example " + e->clip_id);
    if (e->pose.joint_count() != joints) throw DimensionError("build_batch: mixed joint counts in batch");
    if (warnings && e->tokens.size() > cfg.max_src_len) {
      warnings->push_back("truncated source of " + e->clip_id + " to " + std::to_string(cfg.max_src_len) + " tokens");
    }
    if (warnings && e->pose.size() > cfg.max_frames) {
      warnings->push_back("truncated pose of " + e->clip_id + " to " + std::to_string(cfg.max_frames) + " frames");
    }
    src_len = std::max(src_len, std::min(e->tokens.size(), cfg.max_src_len));
    tgt_len = std::max(tgt_len, std::min(e->pose.size(), cfg.max_frames));
  }

  const std::size_t batch = examples.size();
  PaddedBatch out;
  out.pad_index = Vocabulary::pad;
  out.src = Tensor::full({batch, src_len}, out.pad_index);
  out.tgt_in = Tensor::zeros({batch, tgt_len, features});
  out.tgt_out = Tensor::zeros({batch, tgt_len, features});
  out.tgt_mask = Tensor::zeros({batch, tgt_len});
  out.allocations = 4;

  auto src = out.src.mutable_values();
  auto tin = out.tgt_in.mutable_values();
  auto tout = out.tgt_out.mutable_values();
  auto tmask = out.tgt_mask.mutable_values();
  for (std::size_t b = 0; b < batch; ++b) {
    const PoseExample& e = *examples[b];
    const std::size_t n_src = std::min(e.tokens.size(), cfg.max_src_len);
    for (std::size_t s = 0; s < n_src; ++s) src[b * src_len + s] = e.tokens[s];
    const std::size_t frames = std::min(e.pose.size(), cfg.max_frames);
    out.lengths.push_back(frames);
    out.clip_ids.push_back(e.clip_id);
    for (std::size_t t = 0; t < frames; ++t) {
      double* row = tout.data() + (b * tgt_len + t) * features;
      const PoseFrame& f = e.pose.frames[t];
      for (std::size_t j = 0; j < joints; ++j) {
        for (std::size_t k = 0; k < 3; ++k) row[3 * j + k] = f.joints[j][k];
      }
      row[features - 1] = f.counter;
      if (t + 1 < tgt_len) std::copy_n(row, features, tin.data() + (b * tgt_len + t + 1) * features);
    }
    for (std::size_t t = 0; t < tgt_len; ++t) {
      tmask[b * tgt_len + t] = tout[(b * tgt_len + t) * features + features - 1] != 0.0 ? 1.0 : 0.0;
    }
  }
  out.src_mask = make_mask(out.src, out.pad_index);
  ++out.allocations;
  return out;
}

Tensor masked_regression_loss(const Tensor& preds, const Tensor& targets, const Tensor& mask, bool literal_mean) {
  if (preds.shape() != targets.shape()) {
    throw DimensionError("masked_regression_loss: predictions " + shape_string(preds.shape()) + " vs targets " +
                         shape_string(targets.shape()));
  }
  const std::size_t features = preds.shape().back();
  const bool per_frame = mask.size() * features == preds.size() && mask.rank() + 1 == preds.rank();
  if (!per_frame && mask.shape() != preds.shape()) {
    throw DimensionError("masked_regression_loss: mask " + shape_string(mask.shape()) + " does not cover " +
                         shape_string(preds.shape()));
  }
  std::vector<double> full(preds.size());
  double active = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    full[i] = per_frame ? mask[i / features] : mask[i];
    active += full[i];
  }
  if (active == 0.0) throw InputError("masked_regression_loss: mask selects no elements");
  const Tensor m = Tensor::from(preds.shape(), std::move(full));
  const Tensor diff = sub(masked_mul(preds, m), masked_mul(targets.detach(), m));
  const double denom = literal_mean ? static_cast<double>(preds.size()) : active;
  return div_scalar(sum(square(diff)), denom);
}

Tensor long_video_loss(const Tensor& base, const ParameterStore& store, double loss_scale, double lv_lambda) {
  return add(scale(base, loss_scale), scale(weight_norm_sum(store, "weight"), lv_lambda));
}

void apply_augmentations(PaddedBatch& batch, const TranslatorConfig& cfg, Rng& rng, std::vector<std::string>* warnings) {
  const std::size_t B = batch.batch_size(), T = batch.tgt_len(), F = batch.features();
  auto tin = batch.tgt_in.mutable_values();
  auto tout = batch.tgt_out.mutable_values();
  auto tmask = batch.tgt_mask.mutable_values();
  const auto& aug = cfg.augment;

  // Noise scale follows the spread of the real (unpadded) coordinates.
  double total = 0.0, total_sq = 0.0, count = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < std::min(batch.lengths[b], T); ++t) {
      const double* row = tout.data() + (b * T + t) * F;
      for (std::size_t f = 0; f + 1 < F; ++f) {
        total += row[f];
        total_sq += row[f] * row[f];
        count += 1.0;
      }
    }
  }
  const double mu = count > 0.0 ? total / count : 0.0;
  const double sd = count > 0.0 ? std::sqrt(std::max(0.0, total_sq / count - mu * mu)) : 0.0;

  if (aug.future_prediction) {
    const std::size_t k = aug.future_horizon;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t len = batch.lengths[b];
      if (k >= len) {
        if (warnings) {
          warnings->push_back("future prediction skipped for " + batch.clip_ids[b] + ": horizon " + std::to_string(k) +
                              " >= length " + std::to_string(len));
        }
        continue;
      }
      double* rows = tout.data() + b * T * F;
      for (std::size_t t = 0; t + k < len; ++t) std::copy_n(rows + (t + k) * F, F, rows + t * F);
      for (std::size_t t = len - k; t < len; ++t) {
        std::fill_n(rows + t * F, F, 0.0);
        tmask[b * T + t] = 0.0;
      }
    }
  }
  if (aug.just_counter) {
    for (std::size_t r = 0; r < B * T; ++r) std::fill_n(tin.data() + r * F, F - 1, 0.0);
  }
  if (aug.gaussian_noise) {
    const double sigma = aug.noise_sigma * sd;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t t = 1; t < std::min(batch.lengths[b], T); ++t) {
        double* row = tin.data() + (b * T + t) * F;
        for (std::size_t f = 0; f + 1 < F; ++f) row[f] += sigma * rng.normal();
      }
    }
  }
}

namespace {

constexpr double kMasked = -1e9;

Tensor positional_encoding(std::size_t rows, std::size_t dim) {
  std::vector<double> pe(rows * dim);
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      pe[pos * dim + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::from({rows, dim}, std::move(pe));
}

Tensor key_padding_mask(std::size_t queries, std::span<const double> key_mask) {
  std::vector<double> m(queries * key_mask.size());
  for (std::size_t q = 0; q < queries; ++q) {
    for (std::size_t k = 0; k < key_mask.size(); ++k) m[q * key_mask.size() + k] = key_mask[k] != 0.0 ? 0.0 : kMasked;
  }
  return Tensor::from({queries, key_mask.size()}, std::move(m));
}

Tensor causal_mask(std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t k = q + 1; k < n; ++k) m[q * n + k] = kMasked;
  }
  return Tensor::from({n, n}, std::move(m));
}

Tensor dropout(const Tensor& x, double rate, Rng* rng) {
  if (!rng || rate <= 0.0) return x;
  std::vector<double> keep(x.size());
  for (double& k : keep) k = rng->uniform() < rate ? 0.0 : 1.0 / (1.0 - rate);
  return masked_mul(x, Tensor::from(x.shape(), std::move(keep)));
}

void add_linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (double& v : w) v = rng.uniform(-bound, bound);
  store.add(name + ".weight", Tensor::from({out, in}, std::move(w), true));
  store.add(name + ".bias", Tensor::zeros({out}, true));
}

void add_norm(ParameterStore& store, const std::string& name, std::size_t dim) {
  store.add(name + ".weight", Tensor::full({dim}, 1.0, true));
  store.add(name + ".bias", Tensor::zeros({dim}, true));
}

void add_attention(ParameterStore& store, const std::string& name, std::size_t dim, Rng& rng) {
  for (const char* proj : {"q", "k", "v", "o"}) add_linear(store, name + "." + proj, dim, dim, rng);
}

}  // namespace

Translator::Translator(const TranslatorConfig& cfg, std::size_t vocab_size, std::size_t joints, std::uint64_t seed)
    : cfg_(cfg), vocab_size_(vocab_size), joints_(joints) {
  cfg_.validate();
  if (vocab_size < 5) throw InputError("vocabulary too small for a translator");
  if (joints == 0) throw InputError("translator needs at least one joint");
  Rng rng(seed);
  const std::size_t D = cfg_.model_dim, F = features();

  std::vector<double> table(vocab_size * D);
  for (double& v : table) v = rng.normal() / std::sqrt(static_cast<double>(D));
  params_.add("src_embed.weight", Tensor::from({vocab_size, D}, std::move(table), true));
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "encoder." + std::to_string(l);
    add_attention(params_, pre + ".self_attn", D, rng);
    add_norm(params_, pre + ".norm1", D);
    add_norm(params_, pre + ".norm2", D);
    add_linear(params_, pre + ".ff1", D, cfg_.feedforward_dim, rng);
    add_linear(params_, pre + ".ff2", cfg_.feedforward_dim, D, rng);
  }
  add_norm(params_, "encoder.norm", D);

  add_linear(params_, "tgt_embed", F, D, rng);
  params_.add("start_frame", Tensor::zeros({1, F}, true));
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "decoder." + std::to_string(l);
    add_attention(params_, pre + ".self_attn", D, rng);
    add_attention(params_, pre + ".cross_attn", D, rng);
    add_norm(params_, pre + ".norm1", D);
    add_norm(params_, pre + ".norm2", D);
    add_norm(params_, pre + ".norm3", D);
    add_linear(params_, pre + ".ff1", D, cfg_.feedforward_dim, rng);
    add_linear(params_, pre + ".ff2", cfg_.feedforward_dim, D, rng);
  }
  add_norm(params_, "decoder.norm", D);
  add_linear(params_, "head", D, F, rng);
}

Tensor Translator::norm(const std::string& prefix, const Tensor& x) const {
  return layer_norm(x, p(prefix + ".weight"), p(prefix + ".bias"));
}

Tensor Translator::attention(const std::string& prefix, const Tensor& query_in, const Tensor& key_in,
                             const Tensor& additive_mask, Rng* drop) const {
  const std::size_t D = cfg_.model_dim, H = cfg_.heads, dh = D / H;
  const Tensor q = linear(query_in, p(prefix + ".q.weight"), p(prefix + ".q.bias"));
  const Tensor k = linear(key_in, p(prefix + ".k.weight"), p(prefix + ".k.bias"));
  const Tensor v = linear(key_in, p(prefix + ".v.weight"), p(prefix + ".v.bias"));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> heads;
  heads.reserve(H);
  for (std::size_t h = 0; h < H; ++h) {
    const Tensor qh = slice(q, 1, h * dh, (h + 1) * dh);
    const Tensor kh = slice(k, 1, h * dh, (h + 1) * dh);
    const Tensor vh = slice(v, 1, h * dh, (h + 1) * dh);
    Tensor weights = softmax(add(scale(matmul_nt(qh, kh), inv_sqrt), additive_mask));
    weights = dropout(weights, cfg_.dropout, drop);
    heads.push_back(matmul(weights, vh));
  }
  const Tensor merged = H == 1 ? heads.front() : concat(heads, 1);
  return linear(merged, p(prefix + ".o.weight"), p(prefix + ".o.bias"));
}

Tensor Translator::feed_forward(const std::string& prefix, const Tensor& x, Rng* drop) const {
  const Tensor h = gelu(linear(x, p(prefix + ".ff1.weight"), p(prefix + ".ff1.bias")));
  return linear(dropout(h, cfg_.dropout, drop), p(prefix + ".ff2.weight"), p(prefix + ".ff2.bias"));
}

Tensor Translator::encode(std::span<const int> src, std::span<const double> src_mask, Rng* drop) const {
  if (src.empty() || src.size() != src_mask.size()) {
    throw DimensionError("encode: " + std::to_string(src.size()) + " tokens with " + std::to_string(src_mask.size()) +
                         " mask entries");
  }
  if (std::none_of(src_mask.begin(), src_mask.end(), [](double m) { return m != 0.0; })) {
    throw InputError("encode: source mask selects no tokens");
  }
  for (int t : src) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_) {
      throw ContractError("encode: token index " + std::to_string(t) + " outside vocabulary of " +
                          std::to_string(vocab_size_));
    }
  }
  const std::size_t D = cfg_.model_dim;
  Tensor x = scale(embedding(p("src_embed.weight"), src), std::sqrt(static_cast<double>(D)));
  x = dropout(add(x, positional_encoding(src.size(), D)), cfg_.dropout, drop);
  const Tensor mask = key_padding_mask(src.size(), src_mask);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "encoder." + std::to_string(l);
    const Tensor h = norm(pre + ".norm1", x);
    x = add(x, dropout(attention(pre + ".self_attn", h, h, mask, drop), cfg_.dropout, drop));
    x = add(x, dropout(feed_forward(pre, norm(pre + ".norm2", x), drop), cfg_.dropout, drop));
  }
  return norm("encoder.norm", x);
}

Tensor Translator::decode(const Tensor& inputs, const Tensor& features, std::span<const double> src_mask,
                          Rng* drop) const {
  const std::size_t F = this->features(), D = cfg_.model_dim;
  if (inputs.rank() != 2 || inputs.dim(1) != F) {
    throw DimensionError("decode: inputs " + shape_string(inputs.shape()) + ", expected [W, " + std::to_string(F) + "]");
  }
  if (features.rank() != 2 || features.dim(1) != D || features.dim(0) != src_mask.size()) {
    throw DimensionError("decode: source features " + shape_string(features.shape()) + " with " +
                         std::to_string(src_mask.size()) + " mask entries");
  }
  const std::size_t W = inputs.dim(0);
  const Tensor frames = W == 1 ? p("start_frame") : concat({p("start_frame"), slice(inputs, 0, 1, W)}, 0);
  Tensor x = linear(frames, p("tgt_embed.weight"), p("tgt_embed.bias"));
  x = dropout(add(x, positional_encoding(W, D)), cfg_.dropout, drop);
  const Tensor self_mask = causal_mask(W);
  const Tensor cross_mask = key_padding_mask(W, src_mask);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "decoder." + std::to_string(l);
    const Tensor h1 = norm(pre + ".norm1", x);
    x = add(x, dropout(attention(pre + ".self_attn", h1, h1, self_mask, drop), cfg_.dropout, drop));
    x = add(x, dropout(attention(pre + ".cross_attn", norm(pre + ".norm2", x), features, cross_mask, drop),
                       cfg_.dropout, drop));
    x = add(x, dropout(feed_forward(pre, norm(pre + ".norm3", x), drop), cfg_.dropout, drop));
  }
  const Tensor out = linear(norm("decoder.norm", x), p("head.weight"), p("head.bias"));
  const Tensor coords = slice(out, 1, 0, F - 1);
  const Tensor counter = sigmoid(slice(out, 1, F - 1, F));
  return concat({coords, counter}, 1);
}

Tensor Translator::decode_step(const Tensor& prev_frames, const Tensor& features,
                               std::span<const double> src_mask) const {
  const Tensor out = decode(prev_frames, features, src_mask);
  const std::size_t W = out.dim(0);
  return reshape(slice(out, 0, W - 1, W), {out.dim(1)});
}

Tensor Translator::forward(const PaddedBatch& batch, Rng* drop) const {
  const std::size_t B = batch.batch_size(), S = batch.src_len(), T = batch.tgt_len(), F = batch.features();
  if (F != features()) {
    throw DimensionError("forward: batch has " + std::to_string(F) + " features, model expects " +
                         std::to_string(features()));
  }
  const auto src = batch.src.values();
  const auto src_mask = batch.src_mask.values();
  const auto tin = batch.tgt_in.values();
  std::vector<Tensor> outputs;
  outputs.reserve(B);
  std::vector<int> tokens(S);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t s = 0; s < S; ++s) tokens[s] = static_cast<int>(src[b * S + s]);
    const auto mask = src_mask.subspan(b * S, S);
    const Tensor feats = encode(tokens, mask, drop);
    const Tensor inputs =
        Tensor::from({T, F}, std::vector<double>(tin.begin() + b * T * F, tin.begin() + (b + 1) * T * F));
    outputs.push_back(reshape(decode(inputs, feats, mask, drop), {1, T, F}));
  }
  return B == 1 ? outputs.front() : concat(outputs, 0);
}

PoseSequence Translator::translate(std::span<const int> tokens, double fps) const {
  if (tokens.size() < 3) throw InputError("translate: need at least one word between bos and eos");
  NoGradGuard guard;
  const std::size_t n = std::min(tokens.size(), cfg_.max_src_len);
  const std::span<const int> src = tokens.first(n);
  const std::vector<double> mask(n, 1.0);
  const Tensor feats = encode(src, mask);
  const std::size_t F = features();
  std::vector<double> rows(F, 0.0);
  PoseSequence seq;
  seq.fps = fps;
  for (std::size_t step = 0; step < cfg_.max_frames; ++step) {
    const Tensor out = decode_step(Tensor::from({step + 1, F}, rows), feats, mask);
    const auto v = out.values();
    PoseFrame frame;
    frame.joints.resize(joints_);
    for (std::size_t j = 0; j < joints_; ++j) {
      for (std::size_t k = 0; k < 3; ++k) frame.joints[j][k] = v[3 * j + k];
    }
    frame.counter = v[F - 1];
    seq.frames.push_back(frame);
    if (frame.counter >= cfg_.counter_threshold) break;
    const std::size_t at = rows.size();
    rows.insert(rows.end(), v.begin(), v.end());
    if (cfg_.augment.just_counter) std::fill_n(rows.begin() + static_cast<std::ptrdiff_t>(at), F - 1, 0.0);
  }
  assign_counters(seq);
  return seq;
}

PoseSequence translate_text(const Translator& model, const Vocabulary& vocab, std::string_view text, double fps) {
  const std::vector<int> tokens = encode_text(text, vocab);
  return model.translate(tokens, fps);
}

TranslatorTrainer::TranslatorTrainer(Translator& model) : model_(model), optimizer_(model.config().optimizer) {}

EpochMetrics TranslatorTrainer::train_epoch(std::span<const PoseExample* const> data, Rng& rng) {
  if (data.empty()) throw InputError("train_epoch: empty training set");
  const TranslatorConfig& cfg = model_.config();
  std::vector<const PoseExample*> order(data.begin(), data.end());
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  EpochMetrics metrics;
  double masked_total = 0.0, total = 0.0;
  ParameterStore& params = model_.parameters();
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    PaddedBatch batch = build_batch(std::span(order).subspan(start, end - start), cfg, &warnings_);
    apply_augmentations(batch, cfg, rng, &warnings_);
    params.zero_grad();
    const Tensor preds = model_.forward(batch, cfg.dropout > 0.0 ? &rng : nullptr);
    const Tensor base = masked_regression_loss(preds, batch.tgt_out, batch.tgt_mask, cfg.literal_mean_loss);
    const Tensor loss = long_video_loss(base, params, cfg.loss_scale, cfg.lv_lambda);
    if (!std::isfinite(loss.item())) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epochs_ + 1) + ", batch " +
                         std::to_string(metrics.batches + 1) + ", step " + std::to_string(steps_ + 1));
    }
    loss.backward();
    optimizer_.step(params);
    ++steps_;
    ++metrics.batches;
    masked_total += base.item();
    total += loss.item();
  }
  ++epochs_;
  metrics.masked_loss = masked_total / static_cast<double>(metrics.batches);
  metrics.total_loss = total / static_cast<double>(metrics.batches);
  return metrics;
}

}  // namespace signforge
