#pragma once

#include <functional>
#include <string>
#include <vector>

#include "swem/parameter_store.hpp"

namespace swem {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;

  bool passes(double tolerance) const { return max_rel_err < tolerance; }
};

// Central finite differences against the analytic gradients already stored in
// the ParameterStore. Protocol: the caller zeroes gradients, runs one
// backward pass (populating entry.grad), then calls this with a closure that
// recomputes the loss from the current parameter values without touching
// gradients. The closure must be deterministic.
//
// The per-element error is |analytic - numeric| / max(|analytic| + |numeric|,
// 0.01); the floor keeps near-zero gradients from inflating the ratio with
// finite-difference noise while still flagging any real mismatch at the 1e-4
// working tolerance.
//
// Kink handling: when the probe interval [x-step, x+step] straddles a
// ReLU/max breakpoint the central difference mixes two slopes and disagrees
// with the (correct) analytic one-sided gradient. A suspicious element is
// re-differenced at step/128; a genuine gradient bug fails at both scales,
// while a straddled kink agrees at the smaller one. The per-element error is
// the smaller of the two.
GradCheckReport gradient_check(ParameterStore& store, const std::function<double()>& loss,
                               double step = 1e-5);

}  // namespace swem
