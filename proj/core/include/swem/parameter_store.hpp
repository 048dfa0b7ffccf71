#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "swem/tensor.hpp"

namespace swem {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct ParamEntry {
  Tensor2 value;
  Tensor2 grad;
  Tensor2 adam_m;
  Tensor2 adam_v;
  bool trainable = true;
  // Entries owned by a subspace reparameterization: their gradients are
  // consumed by the subspace optimizer and adam_step must leave them alone.
  bool subspace_owned = false;
};

// Flat registry of named parameter tensors with gradients and Adam moment
// state. Iteration order is the lexicographic name order, which keeps every
// optimizer sweep and checkpoint layout deterministic.
class ParameterStore {
 public:
  Tensor2& create(const std::string& name, int rows, int cols, bool trainable = true);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  ParamEntry& entry(const std::string& name);
  const ParamEntry& entry(const std::string& name) const;
  Tensor2& value(const std::string& name) { return entry(name).value; }
  const Tensor2& value(const std::string& name) const { return entry(name).value; }
  Tensor2& grad(const std::string& name) { return entry(name).grad; }

  std::map<std::string, ParamEntry>& entries() { return entries_; }
  const std::map<std::string, ParamEntry>& entries() const { return entries_; }

  std::vector<std::string> names() const;
  std::size_t param_count(bool trainable_only = false) const;
  void zero_grads();

  std::int64_t step_count() const { return step_count_; }
  void set_step_count(std::int64_t t) { step_count_ = t; }

 private:
  std::map<std::string, ParamEntry> entries_;
  std::int64_t step_count_ = 0;
};

namespace detail {

// One Adam element update. Mutates the moment estimates and returns the step
// that the caller subtracts from the parameter. Shared between adam_step and
// the subspace optimizer so the two paths apply bit-identical arithmetic.
inline double adam_delta(double& m, double& v, double g, const AdamConfig& cfg,
                         double bias_correction1, double bias_correction2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double m_hat = m / bias_correction1;
  const double v_hat = v / bias_correction2;
  return cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
}

}  // namespace detail

// Applies one Adam step to every trainable, non-subspace-owned entry, then
// zeroes the gradients it consumed. Frozen entries are untouched. Throws
// NumericError naming the entry when a gradient is not finite.
void adam_step(ParameterStore& store, const AdamConfig& cfg);

}  // namespace swem
