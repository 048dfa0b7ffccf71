#include "swem/subspace.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>

#include "swem/common.hpp"
#include "swem/trainer.hpp"

namespace swem {

namespace {

using EigenMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenMat>;
using VecMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>;
using ConstVecMap = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, 1>>;

constexpr const char* kEmbeddingTable = "embedding/table";

}  // namespace

SubspaceScope parse_subspace_scope(const std::string& name) {
  if (name == "model-params-only") return SubspaceScope::kModelParamsOnly;
  if (name == "model-plus-embeddings") return SubspaceScope::kModelPlusEmbeddings;
  throw ConfigError("unknown subspace scope '" + name +
                    "' (expected model-params-only|model-plus-embeddings)");
}

std::string to_string(SubspaceScope scope) {
  return scope == SubspaceScope::kModelParamsOnly ? "model-params-only" : "model-plus-embeddings";
}

Tensor2 build_projection(std::size_t total_params, int dim, Rng rng, bool normalize_columns) {
  if (dim < 0 || static_cast<std::size_t>(dim) > total_params) {
    throw ConfigError("subspace dim " + std::to_string(dim) + " exceeds scoped parameter count " +
                      std::to_string(total_params));
  }
  Tensor2 p(static_cast<int>(total_params), dim);
  for (Real& v : p.data) v = rng.normal();
  if (normalize_columns && dim > 0) {
    for (int j = 0; j < dim; ++j) {
      double norm_sq = 0.0;
      for (int i = 0; i < p.rows; ++i) norm_sq += p(i, j) * p(i, j);
      const double norm = std::sqrt(norm_sq);
      if (norm > 0.0) {
        for (int i = 0; i < p.rows; ++i) p(i, j) /= norm;
      }
    }
  }
  return p;
}

Tensor2 build_projection(std::size_t total_params, int dim, std::uint64_t seed,
                         bool normalize_columns) {
  return build_projection(total_params, dim, Rng(seed).split("projection"), normalize_columns);
}

SubspaceState SubspaceState::attach(ParameterStore& store, const SubspaceConfig& config) {
  SubspaceState state;
  state.config_ = config;
  for (auto& [name, e] : store.entries()) {
    if (!e.trainable) continue;
    if (config.scope == SubspaceScope::kModelParamsOnly && name == kEmbeddingTable) continue;
    state.scoped_.push_back(name);
    state.offsets_.push_back(state.total_);
    state.total_ += e.value.size();
    e.subspace_owned = true;
  }
  if (state.scoped_.empty()) {
    throw ConfigError("subspace scope selects no trainable parameters");
  }
  state.theta0_ = Tensor2(static_cast<int>(state.total_), 1);
  for (std::size_t s = 0; s < state.scoped_.size(); ++s) {
    const auto& value = store.value(state.scoped_[s]);
    std::copy(value.data.begin(), value.data.end(), state.theta0_.data.begin() + state.offsets_[s]);
  }
  state.projection_ =
      build_projection(state.total_, config.dim, config.projection_seed, config.normalize_columns);
  state.theta_d_ = Tensor2(config.dim, 1);
  state.adam_m_ = Tensor2(config.dim, 1);
  state.adam_v_ = Tensor2(config.dim, 1);
  return state;
}

void SubspaceState::set_projection_for_test(Tensor2 projection) {
  if (projection.rows != static_cast<int>(total_) || projection.cols != config_.dim) {
    throw ConfigError("projection shape mismatch");
  }
  projection_ = std::move(projection);
}

Tensor2 SubspaceState::gather_grads(const ParameterStore& store) const {
  Tensor2 flat(static_cast<int>(total_), 1);
  for (std::size_t s = 0; s < scoped_.size(); ++s) {
    const auto& grad = store.entry(scoped_[s]).grad;
    std::copy(grad.data.begin(), grad.data.end(), flat.data.begin() + offsets_[s]);
  }
  return flat;
}

void SubspaceState::step(ParameterStore& store, const AdamConfig& adam) {
  const int d = config_.dim;
  Tensor2 flat_grad = gather_grads(store);
  for (std::size_t s = 0; s < scoped_.size(); ++s) {
    const std::size_t begin = offsets_[s];
    const std::size_t end = begin + store.entry(scoped_[s]).grad.size();
    for (std::size_t i = begin; i < end; ++i) {
      if (!std::isfinite(flat_grad.data[i])) {
        throw NumericError("non-finite gradient in subspace-scoped parameter '" + scoped_[s] + "'");
      }
    }
  }
  if (d > 0) {
    // g_d = P^T g
    Tensor2 g_d(d, 1);
    VecMap(g_d.data.data(), d).noalias() =
        ConstMap(projection_.data.data(), projection_.rows, projection_.cols).transpose() *
        ConstVecMap(flat_grad.data.data(), flat_grad.rows);

    const std::int64_t t = step_count_ + 1;
    const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(t));
    Tensor2 update(d, 1);
    for (int i = 0; i < d; ++i) {
      update.data[i] =
          detail::adam_delta(adam_m_.data[i], adam_v_.data[i], g_d.data[i], adam, bc1, bc2);
      theta_d_.data[i] -= update.data[i];
    }

    // Incremental effective-parameter update: theta_eff -= P . update. With
    // an identity projection this reproduces the direct Adam update stream
    // exactly, which the equivalence tests rely on.
    Tensor2 delta(static_cast<int>(total_), 1);
    VecMap(delta.data.data(), delta.rows).noalias() =
        ConstMap(projection_.data.data(), projection_.rows, projection_.cols) *
        ConstVecMap(update.data.data(), d);
    for (std::size_t s = 0; s < scoped_.size(); ++s) {
      auto& value = store.value(scoped_[s]);
      const Real* src = delta.data.data() + offsets_[s];
      for (std::size_t i = 0; i < value.size(); ++i) value.data[i] -= src[i];
    }
  }
  step_count_ += 1;
  for (const auto& name : scoped_) store.entry(name).grad.zero();
}

void SubspaceState::apply(ParameterStore& store) const {
  Tensor2 effective = theta0_;
  if (config_.dim > 0) {
    VecMap(effective.data.data(), effective.rows).noalias() +=
        ConstMap(projection_.data.data(), projection_.rows, projection_.cols) *
        ConstVecMap(theta_d_.data.data(), config_.dim);
  }
  for (std::size_t s = 0; s < scoped_.size(); ++s) {
    auto& value = store.value(scoped_[s]);
    std::copy(effective.data.begin() + offsets_[s],
              effective.data.begin() + offsets_[s] + value.size(), value.data.begin());
  }
}

SweepReport sweep_subspace(const ClassifierConfig& config, const SubspaceConfig& base,
                           const std::vector<int>& d_list, double threshold_accuracy,
                           const LabeledDataset& dataset, const GloveLoadResult* pretrained) {
  SweepReport report;
  report.threshold_accuracy = threshold_accuracy;
  std::vector<int> dims = d_list;
  std::sort(dims.begin(), dims.end());
  for (int d : dims) {
    SubspaceConfig sub = base;
    sub.dim = d;
    const auto start = std::chrono::steady_clock::now();
    FitResult result = fit(config, dataset, pretrained, &sub);
    SweepRow row;
    row.dim = d;
    row.test_accuracy = result.report.test.accuracy;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!report.intrinsic_dim && row.test_accuracy >= threshold_accuracy) {
      report.intrinsic_dim = d;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace swem
