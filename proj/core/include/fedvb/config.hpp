#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedvb/fed_sim.hpp"
#include "fedvb/partition.hpp"

namespace fedvb {

enum class DatasetKind { kSynthetic, kIdx };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::kSynthetic;
    // synthetic blobs
    std::size_t classes = 0;
    std::size_t dims = 0;
    std::size_t samples = 0;  // per class
    double spread = 0.25;
    // idx file pairs
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;

    bool operator==(const DatasetConfig&) const = default;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    PartitionSpec partition;  // num_clients mirrors round.total_clients
    std::vector<std::size_t> model = {400, 120, 84};
    RoundConfig round;
    std::size_t eval_mc_samples = 10;
    std::size_t eval_stride = 1;
    std::size_t ece_bins = 15;
    std::string output = "results";
    // When false, rows report tpc_seconds as 0 so reruns of the same config
    // and seed produce byte-identical files.
    bool record_timing = true;

    EvalConfig eval_config() const {
        return EvalConfig{eval_mc_samples, eval_stride, ece_bins};
    }
    bool operator==(const ExperimentConfig& other) const;
};

/// Parses and validates a config object. Defaults are applied for absent
/// keys; unknown keys are rejected with their full path.
ExperimentConfig parse_config(const nlohmann::json& root);

ExperimentConfig load_config(const std::string& path);

/// Canonical JSON form; parse_config(serialize(c)) == c.
nlohmann::json serialize(const ExperimentConfig& config);

/// FNV-1a 64 over the canonical serialized form, as 16 hex digits.
/// Execution-only keys (processes, output, record_timing) are excluded, so
/// the hash identifies the experiment rather than how it was run.
std::string config_hash(const ExperimentConfig& config);

/// Materializes the train set for one run. Synthetic data derives from the
/// run seed, so different seeds are independent replications.
Dataset build_train_set(const ExperimentConfig& config, std::uint64_t seed);
Dataset build_test_set(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace fedvb
