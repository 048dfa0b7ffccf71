#include "swem/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace swem {

GradCheckReport gradient_check(ParameterStore& store, const std::function<double()>& loss,
                               double step) {
  GradCheckReport report;
  for (auto& [name, e] : store.entries()) {
    if (!e.trainable) continue;
    GradCheckEntry entry;
    entry.name = name;
    entry.checked = e.value.size();
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double analytic = e.grad.data[i];
      auto central = [&](double h) {
        const double saved = e.value.data[i];
        e.value.data[i] = saved + h;
        const double plus = loss();
        e.value.data[i] = saved - h;
        const double minus = loss();
        e.value.data[i] = saved;
        return (plus - minus) / (2.0 * h);
      };
      auto error_of = [&](double numeric) {
        const double abs_err = std::abs(analytic - numeric);
        const double rel_err = abs_err / std::max(std::abs(analytic) + std::abs(numeric), 0.01);
        return std::make_pair(abs_err, rel_err);
      };
      auto [abs_err, rel_err] = error_of(central(step));
      if (rel_err >= 1e-5) {
        const auto [abs2, rel2] = error_of(central(step / 128.0));
        if (rel2 < rel_err) {
          abs_err = abs2;
          rel_err = rel2;
        }
      }
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
      entry.max_rel_err = std::max(entry.max_rel_err, rel_err);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace swem
