// Microbenchmarks for the aggregation rules and the client training step,
// sized around a realistic MLP (tens of thousands of parameters).
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fedvb/aggregation.hpp"
#include "fedvb/dataset.hpp"
#include "fedvb/fed_sim.hpp"
#include "fedvb/rng.hpp"
#include "fedvb/vbnn.hpp"

namespace {

using namespace fedvb;

std::vector<GaussianParams> make_clients(std::size_t num_clients,
                                         std::size_t num_params) {
    std::mt19937_64 engine(1234);
    std::normal_distribution<double> mu;
    std::uniform_real_distribution<double> alpha(-6.0, 0.0);
    std::vector<GaussianParams> clients;
    clients.reserve(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        GaussianParams tensor = GaussianParams::zeros({num_params});
        for (std::size_t i = 0; i < num_params; ++i) {
            tensor.mu[i] = mu(engine);
            tensor.alpha[i] = alpha(engine);
        }
        clients.push_back(std::move(tensor));
    }
    return clients;
}

AggregationWeights uniform_weights(std::size_t num_clients) {
    AggregationWeights w;
    w.betas.assign(num_clients, 1.0 / static_cast<double>(num_clients));
    return w;
}

void bench_rule(benchmark::State& state, AggregationMethod method) {
    const auto clients = make_clients(10, 60'000);
    const auto betas = uniform_weights(10);
    for (auto _ : state) {
        GaussianParams out =
            aggregate(method, clients, betas, state.range(0));
        benchmark::DoNotOptimize(out.mu.data());
        benchmark::DoNotOptimize(out.alpha.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            60'000);
}

void BM_AggregateEaa(benchmark::State& state) {
    bench_rule(state, AggregationMethod::eaa());
}
void BM_AggregateGaa(benchmark::State& state) {
    bench_rule(state, AggregationMethod::gaa());
}
void BM_AggregateAalv(benchmark::State& state) {
    bench_rule(state, AggregationMethod::aalv());
}
void BM_AggregateCf(benchmark::State& state) {
    bench_rule(state, AggregationMethod::cf());
}
void BM_AggregatePpa(benchmark::State& state) {
    bench_rule(state, AggregationMethod::ppa(state.range(1)));
}

void BM_ClientUpdate(benchmark::State& state) {
    const Dataset train = generate_synthetic(10, 64, 100, 0.25, 99);
    const std::vector<std::size_t> hidden = {128, 64};
    const auto layout = make_mlp_spec(train.dim, hidden, 10);
    const VbnnModel global = init_model(layout, ModelMode::kVariational, 1);
    ClientState client;
    client.id = 0;
    client.indices.resize(train.count);
    for (std::size_t i = 0; i < train.count; ++i) client.indices[i] = i;
    RoundConfig config;
    config.local_epochs = 1;
    config.batch_size = 64;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        VbnnModel updated = client_update(global, client, train, config,
                                          seed++);
        benchmark::DoNotOptimize(updated.layers.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(train.count));
}

void BM_SampleWeights(benchmark::State& state) {
    const std::vector<std::size_t> hidden = {128, 64};
    const auto layout = make_mlp_spec(64, hidden, 10);
    const VbnnModel model = init_model(layout, ModelMode::kVariational, 1);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        WeightSnapshot snap = sample_weights(model, seed++);
        benchmark::DoNotOptimize(snap.layers.data());
    }
}

BENCHMARK(BM_AggregateEaa)->Arg(0);
BENCHMARK(BM_AggregateGaa)->Arg(0);
BENCHMARK(BM_AggregateAalv)->Arg(0);
BENCHMARK(BM_AggregateCf)->Arg(0);
BENCHMARK(BM_AggregatePpa)->Args({0, 100})->Args({0, 1000});
BENCHMARK(BM_ClientUpdate)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleWeights);

}  // namespace

BENCHMARK_MAIN();
