#include "swem/parameter_store.hpp"

#include <cmath>

#include "swem/common.hpp"

namespace swem {

Tensor2& ParameterStore::create(const std::string& name, int rows, int cols, bool trainable) {
  if (entries_.count(name)) {
    throw ConfigError("parameter '" + name + "' already registered");
  }
  ParamEntry e;
  e.value = Tensor2(rows, cols);
  e.grad = Tensor2(rows, cols);
  e.adam_m = Tensor2(rows, cols);
  e.adam_v = Tensor2(rows, cols);
  e.trainable = trainable;
  auto [it, inserted] = entries_.emplace(name, std::move(e));
  (void)inserted;
  return it->second.value;
}

ParamEntry& ParameterStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

const ParamEntry& ParameterStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::param_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) {
    if (trainable_only && !e.trainable) continue;
    n += e.value.size();
  }
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.zero();
}

void adam_step(ParameterStore& store, const AdamConfig& cfg) {
  const std::int64_t t = store.step_count() + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& [name, e] : store.entries()) {
    if (!e.trainable || e.subspace_owned) continue;
    const std::size_t n = e.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = e.grad.data[i];
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + name + "'");
      }
      e.value.data[i] -= detail::adam_delta(e.adam_m.data[i], e.adam_v.data[i], g, cfg, bc1, bc2);
    }
    e.grad.zero();
  }
  store.set_step_count(t);
}

}  // namespace swem
