#include "fedvb/vbnn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fedvb/rng.hpp"

namespace fedvb {

namespace {

constexpr double kInitAlpha = -5.0;

void check_variational(const VbnnModel& model, const char* op) {
    if (model.mode != ModelMode::kVariational) {
        throw std::invalid_argument(std::string(op) +
                                    ": requires a variational model");
    }
}

/// Row-major logits of one dense layer: out[b][o] = sum_i in[b][i] w[o][i] + b[o].
void dense_forward(const std::vector<double>& in, std::size_t batch,
                   std::size_t in_dim, const std::vector<double>& w,
                   const std::vector<double>& b, std::size_t out_dim,
                   std::vector<double>& out) {
    out.assign(batch * out_dim, 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
        const double* x = in.data() + r * in_dim;
        double* y = out.data() + r * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double* wrow = w.data() + o * in_dim;
            double acc = b[o];
            for (std::size_t i = 0; i < in_dim; ++i) acc += wrow[i] * x[i];
            y[o] = acc;
        }
    }
}

void softmax_rows(std::vector<double>& logits, std::size_t batch,
                  std::size_t classes) {
    for (std::size_t r = 0; r < batch; ++r) {
        double* row = logits.data() + r * classes;
        double mx = row[0];
        for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < classes; ++c) row[c] /= sum;
    }
}

void check_batch(const VbnnModel& model, const BatchView& batch) {
    if (batch.count == 0) {
        throw std::invalid_argument("vbnn: empty batch");
    }
    if (batch.dim != model.input_dim()) {
        throw std::invalid_argument("vbnn: input dim does not match model");
    }
    if (batch.inputs.size() != batch.count * batch.dim) {
        throw std::invalid_argument("vbnn: input array size mismatch");
    }
}

}  // namespace

std::vector<LayerSpec> make_mlp_spec(std::size_t input_dim,
                                     std::span<const std::size_t> hidden_dims,
                                     std::size_t num_classes) {
    std::vector<LayerSpec> specs;
    std::size_t in = input_dim;
    for (std::size_t h : hidden_dims) {
        specs.push_back({in, h, Activation::kRelu});
        in = h;
    }
    specs.push_back({in, num_classes, Activation::kNone});
    return specs;
}

std::size_t VbnnModel::input_dim() const {
    return layers.empty() ? 0 : layers.front().spec.in_dim;
}

std::size_t VbnnModel::output_dim() const {
    return layers.empty() ? 0 : layers.back().spec.out_dim;
}

std::size_t VbnnModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
}

VbnnModel init_model(std::span<const LayerSpec> specs, ModelMode mode,
                     std::uint64_t rng_seed) {
    if (specs.empty()) {
        throw std::invalid_argument("init_model: empty layer spec");
    }
    for (std::size_t l = 0; l + 1 < specs.size(); ++l) {
        if (specs[l].out_dim != specs[l + 1].in_dim) {
            throw std::invalid_argument("init_model: layer dims do not chain");
        }
    }
    for (const auto& s : specs) {
        if (s.in_dim == 0 || s.out_dim == 0) {
            throw std::invalid_argument("init_model: zero layer dimension");
        }
    }

    VbnnModel model;
    model.mode = mode;
    std::mt19937_64 engine = make_engine(rng_seed);
    const double init_alpha =
        mode == ModelMode::kVariational ? kInitAlpha : 0.0;
    for (const auto& s : specs) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.in_dim));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        VbnnLayer layer;
        layer.spec = s;
        layer.weights = GaussianParams::zeros({s.out_dim, s.in_dim});
        layer.biases = GaussianParams::zeros({s.out_dim});
        for (double& m : layer.weights.mu) m = uniform(engine);
        for (double& m : layer.biases.mu) m = uniform(engine);
        std::fill(layer.weights.alpha.begin(), layer.weights.alpha.end(),
                  init_alpha);
        std::fill(layer.biases.alpha.begin(), layer.biases.alpha.end(),
                  init_alpha);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

WeightSnapshot sample_weights(const VbnnModel& model, std::uint64_t rng_seed) {
    check_variational(model, "sample_weights");
    WeightSnapshot snap;
    snap.layers.resize(model.layers.size());
    std::mt19937_64 engine = make_engine(rng_seed);
    std::normal_distribution<double> unit;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        auto& draw = snap.layers[l];
        draw.weights.resize(layer.weights.size());
        draw.eps_w.resize(layer.weights.size());
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            const double eps = unit(engine);
            draw.eps_w[i] = eps;
            draw.weights[i] =
                layer.weights.mu[i] +
                std::exp(0.5 * layer.weights.alpha[i]) * eps;
        }
        draw.biases.resize(layer.biases.size());
        draw.eps_b.resize(layer.biases.size());
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
            const double eps = unit(engine);
            draw.eps_b[i] = eps;
            draw.biases[i] =
                layer.biases.mu[i] + std::exp(0.5 * layer.biases.alpha[i]) * eps;
        }
    }
    return snap;
}

WeightSnapshot mean_snapshot(const VbnnModel& model) {
    WeightSnapshot snap;
    snap.layers.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        auto& draw = snap.layers[l];
        draw.weights = layer.weights.mu;
        draw.biases = layer.biases.mu;
        draw.eps_w.assign(layer.weights.size(), 0.0);
        draw.eps_b.assign(layer.biases.size(), 0.0);
    }
    return snap;
}

WeightSnapshot snapshot_from_eps(const VbnnModel& model,
                                 const WeightSnapshot& eps_source) {
    if (eps_source.layers.size() != model.layers.size()) {
        throw std::invalid_argument("snapshot_from_eps: layer count mismatch");
    }
    WeightSnapshot snap;
    snap.layers.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        const auto& src = eps_source.layers[l];
        if (src.eps_w.size() != layer.weights.size() ||
            src.eps_b.size() != layer.biases.size()) {
            throw std::invalid_argument("snapshot_from_eps: eps size mismatch");
        }
        auto& draw = snap.layers[l];
        draw.eps_w = src.eps_w;
        draw.eps_b = src.eps_b;
        draw.weights.resize(layer.weights.size());
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            draw.weights[i] =
                layer.weights.mu[i] +
                std::exp(0.5 * layer.weights.alpha[i]) * draw.eps_w[i];
        }
        draw.biases.resize(layer.biases.size());
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
            draw.biases[i] =
                layer.biases.mu[i] +
                std::exp(0.5 * layer.biases.alpha[i]) * draw.eps_b[i];
        }
    }
    return snap;
}

std::vector<double> forward(const VbnnModel& model,
                            const WeightSnapshot& snapshot,
                            const BatchView& batch) {
    check_batch(model, batch);
    if (snapshot.layers.size() != model.layers.size()) {
        throw std::invalid_argument("forward: snapshot layer count mismatch");
    }
    std::vector<double> current(batch.inputs.begin(), batch.inputs.end());
    std::vector<double> next;
    std::size_t dim = batch.dim;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& spec = model.layers[l].spec;
        dense_forward(current, batch.count, dim, snapshot.layers[l].weights,
                      snapshot.layers[l].biases, spec.out_dim, next);
        if (spec.activation == Activation::kRelu) {
            for (double& v : next) v = std::max(v, 0.0);
        }
        current.swap(next);
        dim = spec.out_dim;
    }
    return current;
}

double kl_to_prior(const VbnnModel& model) {
    check_variational(model, "kl_to_prior");
    double kl = 0.0;
    auto accumulate = [&kl](const GaussianParams& p) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double mu = p.mu[i];
            const double a = p.alpha[i];
            kl += 0.5 * (mu * mu + std::exp(a) - a - 1.0);
        }
    };
    for (const auto& layer : model.layers) {
        accumulate(layer.weights);
        accumulate(layer.biases);
    }
    return kl;
}

std::pair<double, ForwardCache> elbo_loss(const VbnnModel& model,
                                          const WeightSnapshot& snapshot,
                                          const BatchView& batch,
                                          double kl_scale) {
    check_batch(model, batch);
    if (batch.labels.size() != batch.count) {
        throw std::invalid_argument("elbo_loss: label count mismatch");
    }
    const std::size_t classes = model.output_dim();
    for (int y : batch.labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw std::invalid_argument("elbo_loss: label outside [0, classes)");
        }
    }

    ForwardCache cache;
    cache.batch = batch.count;
    cache.labels.assign(batch.labels.begin(), batch.labels.end());
    cache.kl_scale = kl_scale;
    cache.model_revision = model.revision;
    cache.activations.reserve(model.layers.size() + 1);
    cache.pre_activations.resize(model.layers.size());

    cache.activations.emplace_back(batch.inputs.begin(), batch.inputs.end());
    std::size_t dim = batch.dim;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& spec = model.layers[l].spec;
        dense_forward(cache.activations.back(), batch.count, dim,
                      snapshot.layers[l].weights, snapshot.layers[l].biases,
                      spec.out_dim, cache.pre_activations[l]);
        std::vector<double> act = cache.pre_activations[l];
        if (spec.activation == Activation::kRelu) {
            for (double& v : act) v = std::max(v, 0.0);
        }
        cache.activations.push_back(std::move(act));
        dim = spec.out_dim;
    }

    // Mean negative log softmax of the true class, computed from shifted
    // logits for stability.
    const std::vector<double>& logits = cache.pre_activations.back();
    double nll = 0.0;
    for (std::size_t r = 0; r < batch.count; ++r) {
        const double* row = logits.data() + r * classes;
        double mx = row[0];
        for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
        nll += -(row[batch.labels[r]] - mx - std::log(sum));
    }
    nll /= static_cast<double>(batch.count);

    double loss = nll;
    if (model.mode == ModelMode::kVariational && kl_scale != 0.0) {
        loss += kl_scale * kl_to_prior(model);
    }
    return {loss, std::move(cache)};
}

ModelGrads backward(const VbnnModel& model, const WeightSnapshot& snapshot,
                    const ForwardCache& cache) {
    if (cache.model_revision != model.revision ||
        cache.pre_activations.size() != model.layers.size()) {
        throw std::invalid_argument(
            "backward: cache is stale for this model revision");
    }
    const std::size_t batch = cache.batch;
    const std::size_t classes = model.output_dim();

    ModelGrads grads;
    grads.layers.resize(model.layers.size());

    // dZ of the last layer: (softmax - onehot) / batch.
    std::vector<double> dz = cache.pre_activations.back();
    softmax_rows(dz, batch, classes);
    for (std::size_t r = 0; r < batch; ++r) {
        dz[r * classes + cache.labels[r]] -= 1.0;
    }
    for (double& v : dz) v /= static_cast<double>(batch);

    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const auto& layer = model.layers[li];
        const std::size_t in_dim = layer.spec.in_dim;
        const std::size_t out_dim = layer.spec.out_dim;
        const std::vector<double>& input = cache.activations[li];
        auto& lg = grads.layers[li];

        // Point-weight gradients of the likelihood term.
        lg.mu_w.assign(in_dim * out_dim, 0.0);
        lg.mu_b.assign(out_dim, 0.0);
        for (std::size_t r = 0; r < batch; ++r) {
            const double* dzr = dz.data() + r * out_dim;
            const double* x = input.data() + r * in_dim;
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double d = dzr[o];
                if (d == 0.0) continue;
                double* wrow = lg.mu_w.data() + o * in_dim;
                for (std::size_t i = 0; i < in_dim; ++i) wrow[i] += d * x[i];
                lg.mu_b[o] += d;
            }
        }

        if (model.mode == ModelMode::kVariational) {
            // Reparameterization: dw/dalpha = 0.5 sigma eps.
            const auto& draw = snapshot.layers[li];
            lg.alpha_w.resize(in_dim * out_dim);
            for (std::size_t i = 0; i < lg.alpha_w.size(); ++i) {
                const double sigma = std::exp(0.5 * layer.weights.alpha[i]);
                lg.alpha_w[i] = lg.mu_w[i] * 0.5 * sigma * draw.eps_w[i];
            }
            lg.alpha_b.resize(out_dim);
            for (std::size_t i = 0; i < out_dim; ++i) {
                const double sigma = std::exp(0.5 * layer.biases.alpha[i]);
                lg.alpha_b[i] = lg.mu_b[i] * 0.5 * sigma * draw.eps_b[i];
            }
            // KL term: d/dmu = mu, d/dalpha = 0.5 (sigma^2 - 1).
            if (cache.kl_scale != 0.0) {
                const double s = cache.kl_scale;
                for (std::size_t i = 0; i < lg.mu_w.size(); ++i) {
                    lg.mu_w[i] += s * layer.weights.mu[i];
                    lg.alpha_w[i] +=
                        s * 0.5 * (std::exp(layer.weights.alpha[i]) - 1.0);
                }
                for (std::size_t i = 0; i < out_dim; ++i) {
                    lg.mu_b[i] += s * layer.biases.mu[i];
                    lg.alpha_b[i] +=
                        s * 0.5 * (std::exp(layer.biases.alpha[i]) - 1.0);
                }
            }
        } else {
            lg.alpha_w.assign(in_dim * out_dim, 0.0);
            lg.alpha_b.assign(out_dim, 0.0);
        }

        if (li == 0) break;

        // dA of the previous layer, then through its ReLU.
        const std::vector<double>& w = snapshot.layers[li].weights;
        std::vector<double> dprev(batch * in_dim, 0.0);
        for (std::size_t r = 0; r < batch; ++r) {
            const double* dzr = dz.data() + r * out_dim;
            double* dp = dprev.data() + r * in_dim;
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double d = dzr[o];
                if (d == 0.0) continue;
                const double* wrow = w.data() + o * in_dim;
                for (std::size_t i = 0; i < in_dim; ++i) dp[i] += d * wrow[i];
            }
        }
        if (model.layers[li - 1].spec.activation == Activation::kRelu) {
            const std::vector<double>& z = cache.pre_activations[li - 1];
            for (std::size_t i = 0; i < dprev.size(); ++i) {
                if (z[i] <= 0.0) dprev[i] = 0.0;
            }
        }
        dz.swap(dprev);
    }
    return grads;
}

OptimizerState OptimizerState::for_model(const VbnnModel& model, double lr,
                                         double momentum, double weight_decay) {
    OptimizerState state;
    state.lr = lr;
    state.momentum = momentum;
    state.weight_decay = weight_decay;
    state.velocity.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        state.velocity[l].mu_w.assign(layer.weights.size(), 0.0);
        state.velocity[l].alpha_w.assign(layer.weights.size(), 0.0);
        state.velocity[l].mu_b.assign(layer.biases.size(), 0.0);
        state.velocity[l].alpha_b.assign(layer.biases.size(), 0.0);
    }
    return state;
}

void sgd_step(VbnnModel& model, OptimizerState& state,
              const ModelGrads& grads) {
    if (grads.layers.size() != model.layers.size() ||
        state.velocity.size() != model.layers.size()) {
        throw std::invalid_argument("sgd_step: layout mismatch");
    }
    const bool variational = model.mode == ModelMode::kVariational;
    auto update = [&](std::vector<double>& theta, std::vector<double>& v,
                      const std::vector<double>& g, bool decay) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double grad = g[i];
            if (decay) grad += state.weight_decay * theta[i];
            v[i] = state.momentum * v[i] + grad;
            theta[i] -= state.lr * v[i];
        }
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        auto& vel = state.velocity[l];
        update(layer.weights.mu, vel.mu_w, grads.layers[l].mu_w, true);
        update(layer.biases.mu, vel.mu_b, grads.layers[l].mu_b, true);
        if (variational) {
            update(layer.weights.alpha, vel.alpha_w, grads.layers[l].alpha_w,
                   false);
            update(layer.biases.alpha, vel.alpha_b, grads.layers[l].alpha_b,
                   false);
        }
    }
    ++model.revision;
}

std::vector<double> predict_proba(const VbnnModel& model,
                                  const BatchView& batch,
                                  std::size_t mc_samples,
                                  std::uint64_t rng_seed) {
    check_batch(model, batch);
    if (mc_samples == 0) {
        throw std::invalid_argument("predict_proba: mc_samples must be >= 1");
    }
    const std::size_t classes = model.output_dim();
    if (model.mode == ModelMode::kDeterministic) {
        std::vector<double> probs = forward(model, mean_snapshot(model), batch);
        softmax_rows(probs, batch.count, classes);
        return probs;
    }
    std::vector<double> acc(batch.count * classes, 0.0);
    for (std::size_t s = 0; s < mc_samples; ++s) {
        WeightSnapshot snap = sample_weights(model, derive_seed(rng_seed, {s}));
        std::vector<double> probs = forward(model, snap, batch);
        softmax_rows(probs, batch.count, classes);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += probs[i];
    }
    const double inv = 1.0 / static_cast<double>(mc_samples);
    for (double& v : acc) v *= inv;
    return acc;
}

}  // namespace fedvb
