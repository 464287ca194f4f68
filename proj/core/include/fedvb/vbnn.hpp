#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedvb/gaussian.hpp"

namespace fedvb {

enum class Activation { kNone, kRelu };

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::kNone;
};

/// Builds the layer chain input -> hidden... -> classes with ReLU between
/// layers and raw logits at the end.
std::vector<LayerSpec> make_mlp_spec(std::size_t input_dim,
                                     std::span<const std::size_t> hidden_dims,
                                     std::size_t num_classes);

enum class ModelMode { kDeterministic, kVariational };

/// One dense layer: weights [out_dim x in_dim] row-major, biases [out_dim],
/// each a factorized Gaussian over its scalar entries. Deterministic models
/// carry the same layout with alpha pinned to the all-zeros sentinel.
struct VbnnLayer {
    LayerSpec spec;
    GaussianParams weights;
    GaussianParams biases;
};

struct VbnnModel {
    ModelMode mode = ModelMode::kVariational;
    std::vector<VbnnLayer> layers;
    /// Bumped on every parameter mutation; forward caches record it so a
    /// stale cache handed to backward() is rejected.
    std::uint64_t revision = 0;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;  // scalar (mu, alpha) pairs
};

/// mu ~ U[-1/sqrt(in_dim), +1/sqrt(in_dim)], alpha = -5 everywhere.
/// Deterministic given the seed. Throws on a broken dimension chain.
VbnnModel init_model(std::span<const LayerSpec> specs, ModelMode mode,
                     std::uint64_t rng_seed);

/// One point-weight draw per scalar parameter, w = mu + sigma * eps, with the
/// eps values retained for the backward pass.
struct WeightSnapshot {
    struct LayerDraw {
        std::vector<double> weights;
        std::vector<double> biases;
        std::vector<double> eps_w;
        std::vector<double> eps_b;
    };
    std::vector<LayerDraw> layers;
};

/// Reparameterized draw; variational mode only (throws otherwise).
WeightSnapshot sample_weights(const VbnnModel& model, std::uint64_t rng_seed);

/// Snapshot with eps forced to zero: the weights are exactly mu. This is the
/// point-weight path for deterministic models and doubles as a test hook.
WeightSnapshot mean_snapshot(const VbnnModel& model);

/// Rebuilds a snapshot from externally supplied eps arrays (same layout as
/// the model). Lets tests evaluate the loss as a function of (mu, alpha) with
/// the noise held fixed.
WeightSnapshot snapshot_from_eps(const VbnnModel& model,
                                 const WeightSnapshot& eps_source);

struct BatchView {
    std::span<const double> inputs;  // count x dim, row-major
    std::span<const int> labels;     // count entries; empty for pure forward
    std::size_t count = 0;
    std::size_t dim = 0;
};

/// Affine + ReLU chain; the last layer emits raw logits [count x classes].
std::vector<double> forward(const VbnnModel& model,
                            const WeightSnapshot& snapshot,
                            const BatchView& batch);

/// Closed-form KL(q || N(0,1)) summed over all scalar parameters:
/// 0.5 (mu^2 + sigma^2 - alpha - 1). Variational mode only.
double kl_to_prior(const VbnnModel& model);

/// Intermediates retained by elbo_loss for the exact backward pass.
struct ForwardCache {
    std::vector<std::vector<double>> activations;      // [0]=input, then per layer
    std::vector<std::vector<double>> pre_activations;  // per layer, count x out
    std::vector<int> labels;
    double kl_scale = 0.0;
    std::size_t batch = 0;
    std::uint64_t model_revision = 0;
};

/// loss = kl_scale * kl_to_prior + mean_i -log softmax(logits_i)[y_i].
/// Deterministic models skip the KL term. Throws on labels outside
/// [0, classes).
std::pair<double, ForwardCache> elbo_loss(const VbnnModel& model,
                                          const WeightSnapshot& snapshot,
                                          const BatchView& batch,
                                          double kl_scale);

struct ModelGrads {
    struct LayerGrads {
        std::vector<double> mu_w;
        std::vector<double> alpha_w;
        std::vector<double> mu_b;
        std::vector<double> alpha_b;
    };
    std::vector<LayerGrads> layers;
};

/// Exact gradients of elbo_loss w.r.t. every mu and alpha. The cache must
/// come from an elbo_loss call on the current model revision.
ModelGrads backward(const VbnnModel& model, const WeightSnapshot& snapshot,
                    const ForwardCache& cache);

/// SGD with momentum: v <- momentum v + g + wd theta; theta <- theta - lr v.
/// Weight decay applies to mu only, never to alpha.
struct OptimizerState {
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    std::vector<ModelGrads::LayerGrads> velocity;

    static OptimizerState for_model(const VbnnModel& model, double lr,
                                    double momentum, double weight_decay);
};

void sgd_step(VbnnModel& model, OptimizerState& state, const ModelGrads& grads);

/// Monte Carlo predictive distribution: mean over `mc_samples` snapshot draws
/// of softmax(forward). Deterministic models ignore mc_samples and use the
/// point weights. Rows sum to 1 within 1e-6.
std::vector<double> predict_proba(const VbnnModel& model,
                                  const BatchView& batch,
                                  std::size_t mc_samples,
                                  std::uint64_t rng_seed);

}  // namespace fedvb
