#include "signforge/parameters.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "signforge/error.hpp"

namespace signforge {

Tensor& ParameterStore::add(const std::string& name, Tensor tensor) {
  if (name.empty()) throw ContractError("parameter name must not be empty");
  auto [it, inserted] = tensors_.emplace(name, std::move(tensor));
  if (!inserted) throw ContractError("duplicate parameter name: " + name);
  return it->second;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : tensors_) t.zero_grad();
}

double ParameterStore::grad_norm() const {
  double total = 0.0;
  for (const auto& [_, t] : tensors_) {
    if (!t.requires_grad()) continue;
    for (double g : t.grad()) total += g * g;
  }
  return std::sqrt(total);
}

double ParameterStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& [_, t] : tensors_) {
      if (!t.requires_grad() || t.grad().empty()) continue;
      for (double& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

Tensor weight_norm_sum(const ParameterStore& store, std::string_view name_filter) {
  Tensor total = Tensor::scalar(0.0);
  for (const auto& [name, t] : store) {
    if (name.find(name_filter) == std::string::npos) continue;
    total = add(total, frobenius_norm(t));
  }
  return total;
}

FiniteDiffReport finite_diff_check(const std::function<Tensor()>& loss_fn, ParameterStore& store,
                                   std::size_t samples, Rng& rng, double step) {
  std::vector<std::pair<std::string, std::size_t>> tensors;  // name, cumulative end offset
  std::size_t total = 0;
  for (const auto& [name, t] : store) {
    if (!t.requires_grad()) continue;
    total += t.size();
    tensors.emplace_back(name, total);
  }
  FiniteDiffReport report;
  if (total == 0) return report;

  store.zero_grad();
  loss_fn().backward();

  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t flat = rng.uniform_index(total);
    auto it = std::upper_bound(tensors.begin(), tensors.end(), flat,
                               [](std::size_t v, const auto& entry) { return v < entry.second; });
    const std::size_t start = it == tensors.begin() ? 0 : std::prev(it)->second;
    Tensor& param = store.at(it->first);
    const std::size_t index = flat - start;
    const double analytic = param.grad().empty() ? 0.0 : param.grad()[index];

    const double original = param.mutable_values()[index];
    double plus = 0.0, minus = 0.0;
    {
      NoGradGuard guard;
      param.mutable_values()[index] = original + step;
      plus = loss_fn().item();
      param.mutable_values()[index] = original - step;
      minus = loss_fn().item();
      param.mutable_values()[index] = original;
    }
    const double numeric = (plus - minus) / (2.0 * step);
    const double magnitude = std::max(std::abs(analytic), std::abs(numeric));
    const double err = magnitude < 1e-8 ? std::abs(analytic - numeric) : std::abs(analytic - numeric) / magnitude;
    ++report.samples;
    if (err >= report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_parameter = it->first;
      report.worst_index = index;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw InputError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

double Optimizer::step(ParameterStore& store) {
  const double norm = store.clip_grad_norm(cfg_.clip_norm);
  ++steps_;
  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (auto& [name, t] : store) {
    if (!t.requires_grad() || t.grad().empty()) continue;
    auto values = t.mutable_values();
    auto grad = t.grad();
    if (cfg_.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= cfg_.learning_rate * grad[i];
      continue;
    }
    auto& m = first_moment_[name];
    auto& v = second_moment_[name];
    if (m.size() != values.size()) {
      m.assign(values.size(), 0.0);
      v.assign(values.size(), 0.0);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      values[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
  return norm;
}

namespace {

constexpr char kMagic[4] = {'S', 'G', 'N', 'F'};

template <class T>
void put_le(std::ostream& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int byte = in.get();
    if (byte == EOF) throw FormatError("truncated checkpoint: " + path.string());
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(byte)) << (8 * i);
  }
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    if (name.size() > 0xFFFF) throw ContractError("parameter name too long: " + name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.values()) put_le<double>(out, v);
  }
  if (!out) throw InputError("failed writing checkpoint: " + path.string());
}

std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("missing checkpoint: " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw FormatError("not a checkpoint file: " + path.string());
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  }
  const auto count = get_le<std::uint32_t>(in, path);
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto len = get_le<std::uint16_t>(in, path);
    a.name.resize(len);
    in.read(a.name.data(), len);
    if (!in) throw FormatError("truncated checkpoint: " + path.string());
    const auto rank = get_le<std::uint8_t>(in, path);
    for (std::uint8_t d = 0; d < rank; ++d) a.shape.push_back(get_le<std::uint32_t>(in, path));
    a.values.resize(shape_size(a.shape));
    for (double& v : a.values) v = get_le<double>(in, path);
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& store) {
  const auto arrays = read_checkpoint(path);
  if (arrays.size() != store.size()) {
    throw FormatError("checkpoint " + path.string() + " holds " + std::to_string(arrays.size()) +
                      " tensors, model expects " + std::to_string(store.size()));
  }
  for (const auto& a : arrays) {
    if (!store.contains(a.name)) throw FormatError("checkpoint tensor not in model: " + a.name);
    Tensor& t = store.at(a.name);
    if (t.shape() != a.shape) {
      throw FormatError("checkpoint tensor " + a.name + " has shape " + shape_string(a.shape) + ", model expects " +
                        shape_string(t.shape()));
    }
    std::copy(a.values.begin(), a.values.end(), t.mutable_values().begin());
  }
}

}  // namespace signforge
