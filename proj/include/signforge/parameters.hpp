#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "signforge/rng.hpp"
#include "signforge/tensor.hpp"

namespace signforge {

// Named tensors of a model. Names are dot-separated paths ("decoder.0.ff1.weight")
// and iteration follows sorted name order.
class ParameterStore {
 public:
  // Registers `tensor` under `name`; duplicate names are a contract error.
  Tensor& add(const std::string& name, Tensor tensor);

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  void zero_grad();
  // Global L2 norm over all gradients of trainable tensors.
  double grad_norm() const;
  // Rescales gradients so their global norm is at most max_norm; returns the norm before clipping.
  double clip_grad_norm(double max_norm);

 private:
  std::map<std::string, Tensor> tensors_;
};

// Sum over parameters whose name contains `name_filter` of their Frobenius
// norm (not squared). Differentiable; 0.0 when nothing matches.
Tensor weight_norm_sum(const ParameterStore& store, std::string_view name_filter);

struct FiniteDiffReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t samples = 0;
};

// Compares analytic gradients against central differences at `samples`
// randomly drawn scalar entries of the trainable tensors in `store`.
// Error per entry is |a - n| / max(|a|, |n|), or |a - n| when both
// magnitudes are below 1e-8. `loss_fn` must be deterministic.
FiniteDiffReport finite_diff_check(const std::function<Tensor()>& loss_fn, ParameterStore& store,
                                   std::size_t samples, Rng& rng, double step = 1e-4);

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

// Updates every tensor with requires_grad set. Moment buffers are keyed by name.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}
  // Clips (if configured) then applies one update; returns the pre-clip gradient norm.
  double step(ParameterStore& store);
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::uint64_t steps_ = 0;
  std::map<std::string, std::vector<double>> first_moment_;
  std::map<std::string, std::vector<double>> second_moment_;
};

// Binary little-endian checkpoint: magic "SGNF", u32 version, u32 count, then
// per tensor u16 name length, UTF-8 name, u8 rank, u32 dims, f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store);
std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path);
// Copies checkpoint values into the matching tensors; names and shapes must agree exactly.
void load_checkpoint(const std::filesystem::path& path, ParameterStore& store);

}  // namespace signforge
