#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedvb/aggregation.hpp"
#include "fedvb/dataset.hpp"
#include "fedvb/gaussian.hpp"
#include "fedvb/metrics.hpp"
#include "fedvb/partition.hpp"
#include "fedvb/vbnn.hpp"

namespace fedvb {

enum class BetaMode { kUniform, kProportional };

std::string beta_mode_tag(BetaMode mode);
BetaMode parse_beta_mode(const std::string& tag);

struct RoundConfig {
    std::size_t total_clients = 10;
    double fraction = 1.0;
    std::size_t rounds = 50;
    std::size_t local_epochs = 10;
    std::size_t batch_size = 64;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    AggregationMethod aggregation = AggregationMethod::gaa();
    BetaMode beta_mode = BetaMode::kUniform;
    std::uint64_t seed = 0;
    std::size_t processes = 1;

    /// Active clients per round: max(1, round(C * fraction)).
    std::size_t active_count() const;
    /// Point aggregation trains deterministic models; the Gaussian rules
    /// train variational ones.
    ModelMode model_mode() const;
    void validate() const;
};

struct ClientState {
    std::size_t id = 0;
    std::vector<std::size_t> indices;
};

struct RoundRecord {
    std::size_t round = 0;  // 1-based, after the round completed
    double tpc_seconds = 0.0;
    bool evaluated = false;
    MetricsReport metrics;
};

struct ServerState {
    VbnnModel global;
    std::size_t round = 0;
    std::vector<RoundRecord> history;
};

struct EvalConfig {
    std::size_t mc_samples = 10;
    std::size_t stride = 1;  // evaluate every `stride` rounds plus the final
    std::size_t ece_bins = 15;
};

/// Uniform sample of K = max(1, round(C*fraction)) distinct ids, deterministic
/// per (master_seed, round). Returned ascending.
std::vector<std::size_t> sample_active_clients(std::size_t total_clients,
                                               double fraction,
                                               std::size_t round,
                                               std::uint64_t master_seed);

/// Uniform: 1/K each. Proportional: partition sizes renormalized over the
/// active set so the weights always sum to one.
AggregationWeights compute_betas(std::span<const std::size_t> active_sizes,
                                 BetaMode mode);

/// Copies the global model and runs `local_epochs` epochs of minibatch SGD on
/// the client's partition. local_epochs = 0 returns the copy untouched.
VbnnModel client_update(const VbnnModel& global, const ClientState& client,
                        const Dataset& train, const RoundConfig& config,
                        std::uint64_t update_seed);

/// One communication round: samples actives, fans client updates across the
/// worker pool, aggregates per tensor in ascending client-id order, installs
/// the result, and returns the wall-clock cost of the round.
double run_round(ServerState& server, std::span<const ClientState> clients,
                 const Dataset& train, const RoundConfig& config);

/// Model spread reported per evaluation: sqrt(sum of all parameter variances)
/// for variational models, 0 for deterministic ones.
double model_spread_norm(const VbnnModel& model);

MetricsReport evaluate_model(const VbnnModel& model, const Dataset& test,
                             const EvalConfig& eval, std::uint64_t eval_seed);

/// Full T-round loop: partition, init, rounds with periodic evaluation on the
/// test set. The caller persists the final model if it wants a checkpoint.
ServerState run_federated(const RoundConfig& config, const PartitionSpec& spec,
                          std::span<const std::size_t> hidden_dims,
                          const Dataset& train, const Dataset& test,
                          const EvalConfig& eval);

}  // namespace fedvb
