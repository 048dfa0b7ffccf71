#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swem/parameter_store.hpp"
#include "swem/rng.hpp"
#include "swem/tensor.hpp"

namespace swem {

enum class SubspaceScope { kModelParamsOnly, kModelPlusEmbeddings };

SubspaceScope parse_subspace_scope(const std::string& name);
std::string to_string(SubspaceScope scope);

struct SubspaceConfig {
  int dim = 0;  // d; 0 freezes the scoped parameters at their initialization
  std::uint64_t projection_seed = 1;
  SubspaceScope scope = SubspaceScope::kModelParamsOnly;
  bool normalize_columns = true;
};

// Fixed random projection [N x d]: i.i.d. standard normal entries, columns
// optionally scaled to unit Euclidean norm.
Tensor2 build_projection(std::size_t total_params, int dim, Rng rng, bool normalize_columns);
Tensor2 build_projection(std::size_t total_params, int dim, std::uint64_t seed,
                         bool normalize_columns);

// Reparameterizes the scoped trainable parameters as theta0 + P.theta_d and
// optimizes theta_d with Adam. Scoped entries are flagged subspace_owned so
// adam_step skips them; everything else (for example a trainable embedding
// table outside the scope) keeps training directly.
//
// Optimizer steps update the effective parameters incrementally
// (theta_eff -= P . adam_update), which makes a full-dimension identity
// projection reproduce direct training bit-for-bit; apply() re-scatters the
// algebraic form theta0 + P.theta_d.
class SubspaceState {
 public:
  // Snapshots theta0 from the store's current values and builds P.
  static SubspaceState attach(ParameterStore& store, const SubspaceConfig& config);

  // Consumes the gradients of the scoped entries: theta_d gets an Adam step
  // on P^T . grad, the effective parameters move by -P . update, and the
  // scoped gradients are zeroed.
  void step(ParameterStore& store, const AdamConfig& adam);

  // Scatters theta0 + P . theta_d back into the scoped entries.
  void apply(ParameterStore& store) const;

  // Gathers the scoped gradients into one flat column, in entry-name order.
  Tensor2 gather_grads(const ParameterStore& store) const;

  int dim() const { return config_.dim; }
  std::size_t scoped_param_count() const { return total_; }
  const std::vector<std::string>& scoped_names() const { return scoped_; }
  const Tensor2& projection() const { return projection_; }
  const Tensor2& theta0() const { return theta0_; }
  const Tensor2& theta_d() const { return theta_d_; }
  Tensor2& mutable_theta_d() { return theta_d_; }

  // Test hook: replaces P (shape-checked). Used to inject an identity
  // projection for the direct-training equivalence check.
  void set_projection_for_test(Tensor2 projection);

 private:
  SubspaceConfig config_;
  std::vector<std::string> scoped_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  Tensor2 projection_;  // [N x d]
  Tensor2 theta0_;      // [N x 1]
  Tensor2 theta_d_;     // [d x 1]
  Tensor2 adam_m_;      // [d x 1]
  Tensor2 adam_v_;      // [d x 1]
  std::int64_t step_count_ = 0;
};

struct SweepRow {
  int dim = 0;
  double test_accuracy = 0.0;
  double seconds = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double threshold_accuracy = 0.0;
  // Smallest swept d whose test accuracy reaches the threshold.
  std::optional<int> intrinsic_dim;
};

struct ClassifierConfig;
struct LabeledDataset;
struct GloveLoadResult;

// Trains one model per subspace dimension (same seed, so theta0 and the data
// pipeline match across d) and reports accuracy per d plus the intrinsic
// dimension estimate.
SweepReport sweep_subspace(const ClassifierConfig& config, const SubspaceConfig& base,
                           const std::vector<int>& d_list, double threshold_accuracy,
                           const LabeledDataset& dataset, const GloveLoadResult* pretrained);

}  // namespace swem
