#include "fedvb/fed_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedvb/parallel.hpp"
#include "fedvb/rng.hpp"

namespace fedvb {

std::string beta_mode_tag(BetaMode mode) {
    return mode == BetaMode::kUniform ? "uniform" : "proportional";
}

BetaMode parse_beta_mode(const std::string& tag) {
    if (tag == "uniform") return BetaMode::kUniform;
    if (tag == "proportional") return BetaMode::kProportional;
    throw std::invalid_argument("fed: unknown beta_mode '" + tag + "'");
}

std::size_t RoundConfig::active_count() const {
    const auto k = static_cast<std::size_t>(
        std::llround(static_cast<double>(total_clients) * fraction));
    return std::max<std::size_t>(1, k);
}

ModelMode RoundConfig::model_mode() const {
    return aggregation.rule == AggregationRule::kPoint
               ? ModelMode::kDeterministic
               : ModelMode::kVariational;
}

void RoundConfig::validate() const {
    if (total_clients == 0) {
        throw std::invalid_argument("round config: total_clients must be >= 1");
    }
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("round config: fraction must be in (0, 1]");
    }
    if (rounds == 0) {
        throw std::invalid_argument("round config: rounds must be >= 1");
    }
    if (local_epochs == 0) {
        throw std::invalid_argument("round config: local_epochs must be >= 1");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("round config: batch_size must be >= 1");
    }
    if (!(lr > 0.0)) {
        throw std::invalid_argument("round config: lr must be > 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("round config: momentum must be in [0, 1)");
    }
    if (weight_decay < 0.0) {
        throw std::invalid_argument("round config: weight_decay must be >= 0");
    }
    if (aggregation.rule == AggregationRule::kPpa &&
        aggregation.ppa_population == 0) {
        throw std::invalid_argument(
            "round config: ppa requires a positive sample population");
    }
}

std::vector<std::size_t> sample_active_clients(std::size_t total_clients,
                                               double fraction,
                                               std::size_t round,
                                               std::uint64_t master_seed) {
    if (total_clients == 0) {
        throw std::invalid_argument("sample_active_clients: no clients");
    }
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument(
            "sample_active_clients: fraction must be in (0, 1]");
    }
    const auto wanted = static_cast<std::size_t>(
        std::llround(static_cast<double>(total_clients) * fraction));
    const std::size_t k =
        std::min(total_clients, std::max<std::size_t>(1, wanted));

    std::vector<std::size_t> ids(total_clients);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    if (k < total_clients) {
        std::mt19937_64 engine = make_engine(
            derive_seed(master_seed, {stream::kActiveClients, round}));
        // Partial Fisher-Yates: the first k slots become the sample.
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
            std::swap(ids[i], ids[pick(engine)]);
        }
        ids.resize(k);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

AggregationWeights compute_betas(std::span<const std::size_t> active_sizes,
                                 BetaMode mode) {
    if (active_sizes.empty()) {
        throw std::invalid_argument("compute_betas: no active clients");
    }
    if (mode == BetaMode::kUniform) {
        return AggregationWeights::uniform(active_sizes.size());
    }
    double total = 0.0;
    for (std::size_t s : active_sizes) {
        if (s == 0) {
            throw std::invalid_argument("compute_betas: empty partition");
        }
        total += static_cast<double>(s);
    }
    AggregationWeights w;
    w.betas.resize(active_sizes.size());
    for (std::size_t i = 0; i < active_sizes.size(); ++i) {
        w.betas[i] = static_cast<double>(active_sizes[i]) / total;
    }
    w.validate();
    return w;
}

VbnnModel client_update(const VbnnModel& global, const ClientState& client,
                        const Dataset& train, const RoundConfig& config,
                        std::uint64_t update_seed) {
    if (client.indices.empty()) {
        throw std::invalid_argument("client_update: empty partition");
    }
    VbnnModel local = global;
    if (config.local_epochs == 0) return local;

    const std::size_t m = client.indices.size();
    const std::size_t batch =
        std::min<std::size_t>(config.batch_size == 0 ? m : config.batch_size,
                              m);
    const std::size_t num_minibatches = (m + batch - 1) / batch;
    const double kl_scale =
        local.mode == ModelMode::kVariational
            ? 1.0 / static_cast<double>(num_minibatches)
            : 0.0;

    OptimizerState opt = OptimizerState::for_model(
        local, config.lr, config.momentum, config.weight_decay);
    std::mt19937_64 order_engine =
        make_engine(derive_seed(update_seed, {0}));

    std::vector<std::size_t> order(client.indices);
    std::vector<std::size_t> batch_indices;
    std::vector<double> batch_inputs;
    std::vector<int> batch_labels;

    for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_engine);
        for (std::size_t step = 0; step < num_minibatches; ++step) {
            const std::size_t begin = step * batch;
            const std::size_t end = std::min(begin + batch, m);
            batch_indices.assign(order.begin() + begin, order.begin() + end);
            train.gather(batch_indices, batch_inputs, batch_labels);
            const BatchView view{batch_inputs, batch_labels,
                                 batch_indices.size(), train.dim};

            const WeightSnapshot snapshot =
                local.mode == ModelMode::kVariational
                    ? sample_weights(local, derive_seed(update_seed,
                                                        {1, epoch, step}))
                    : mean_snapshot(local);
            auto [loss, cache] = elbo_loss(local, snapshot, view, kl_scale);
            (void)loss;
            const ModelGrads grads = backward(local, snapshot, cache);
            sgd_step(local, opt, grads);
        }
    }
    return local;
}

double run_round(ServerState& server, std::span<const ClientState> clients,
                 const Dataset& train, const RoundConfig& config) {
    config.validate();
    if (clients.size() != config.total_clients) {
        throw std::invalid_argument("run_round: client count mismatch");
    }
    for (std::size_t i = 0; i < clients.size(); ++i) {
        if (clients[i].id != i) {
            throw std::invalid_argument(
                "run_round: clients must be indexed by ascending id");
        }
    }

    Stopwatch watch;
    const std::size_t round = server.round;
    const std::vector<std::size_t> actives = sample_active_clients(
        config.total_clients, config.fraction, round, config.seed);

    std::vector<VbnnModel> locals(actives.size());
    parallel_for(actives.size(), config.processes, [&](std::size_t slot) {
        const std::size_t id = actives[slot];
        try {
            locals[slot] = client_update(
                server.global, clients[id], train, config,
                derive_seed(config.seed, {stream::kClientUpdate, round, id}));
        } catch (const std::exception& e) {
            throw std::runtime_error("round " + std::to_string(round + 1) +
                                     ", client " + std::to_string(id) + ": " +
                                     e.what());
        }
    });

    std::vector<std::size_t> sizes(actives.size());
    for (std::size_t i = 0; i < actives.size(); ++i) {
        sizes[i] = clients[actives[i]].indices.size();
    }
    const AggregationWeights betas = compute_betas(sizes, config.beta_mode);

    // Aggregate per tensor, clients gathered in ascending id order (actives
    // is sorted, locals is slot-aligned with it).
    std::vector<GaussianParams> gathered;
    gathered.reserve(locals.size());
    std::size_t tensor_index = 0;
    for (std::size_t l = 0; l < server.global.layers.size(); ++l) {
        for (const bool weights : {true, false}) {
            gathered.clear();
            for (auto& local : locals) {
                auto& tensor = weights ? local.layers[l].weights
                                       : local.layers[l].biases;
                gathered.push_back(std::move(tensor));
            }
            const std::uint64_t agg_seed = derive_seed(
                config.seed, {stream::kAggregation, round, tensor_index});
            GaussianParams merged =
                aggregate(config.aggregation, gathered, betas, agg_seed);
            auto& target = weights ? server.global.layers[l].weights
                                   : server.global.layers[l].biases;
            target = std::move(merged);
            ++tensor_index;
        }
    }
    ++server.global.revision;
    ++server.round;

    RoundRecord record;
    record.round = server.round;
    record.tpc_seconds = watch.seconds();
    server.history.push_back(record);
    return server.history.back().tpc_seconds;
}

double model_spread_norm(const VbnnModel& model) {
    if (model.mode == ModelMode::kDeterministic) return 0.0;
    double sum = 0.0;
    for (const auto& layer : model.layers) {
        for (double a : layer.weights.alpha) sum += std::exp(a);
        for (double a : layer.biases.alpha) sum += std::exp(a);
    }
    return std::sqrt(sum);
}

MetricsReport evaluate_model(const VbnnModel& model, const Dataset& test,
                             const EvalConfig& eval, std::uint64_t eval_seed) {
    const std::vector<double> probs =
        predict_proba(model, test.view(),
                      std::max<std::size_t>(1, eval.mc_samples), eval_seed);
    MetricsReport report =
        evaluate_probs(probs, test.labels, test.num_classes, eval.ece_bins);
    report.spread_norm = model_spread_norm(model);
    return report;
}

ServerState run_federated(const RoundConfig& config, const PartitionSpec& spec,
                          std::span<const std::size_t> hidden_dims,
                          const Dataset& train, const Dataset& test,
                          const EvalConfig& eval) {
    config.validate();
    spec.validate();
    if (spec.num_clients != config.total_clients) {
        throw std::invalid_argument(
            "run_federated: partition and round configs disagree on the "
            "client count");
    }
    if (train.count < config.total_clients) {
        throw std::invalid_argument(
            "run_federated: more clients than training samples");
    }
    if (test.dim != train.dim) {
        throw std::invalid_argument(
            "run_federated: train/test input dims differ");
    }
    if (eval.stride == 0) {
        throw std::invalid_argument("run_federated: eval stride must be >= 1");
    }

    const auto partition = make_partition(
        train.labels, spec, derive_seed(config.seed, {stream::kPartition}));
    std::vector<ClientState> clients(partition.size());
    for (std::size_t k = 0; k < partition.size(); ++k) {
        clients[k].id = k;
        clients[k].indices = partition[k];
    }

    const std::vector<LayerSpec> layout =
        make_mlp_spec(train.dim, hidden_dims, train.num_classes);
    ServerState server;
    server.global = init_model(layout, config.model_mode(),
                               derive_seed(config.seed, {stream::kInit}));

    for (std::size_t t = 1; t <= config.rounds; ++t) {
        run_round(server, clients, train, config);
        if (t % eval.stride == 0 || t == config.rounds) {
            RoundRecord& record = server.history.back();
            record.metrics = evaluate_model(
                server.global, test, eval,
                derive_seed(config.seed, {stream::kEval, t}));
            record.evaluated = true;
        }
    }
    return server;
}

}  // namespace fedvb
