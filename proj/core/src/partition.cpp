#include "fedvb/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "fedvb/rng.hpp"

namespace fedvb {

namespace {

void check_inputs(std::span<const int> labels, std::size_t num_clients) {
    if (num_clients == 0) {
        throw std::invalid_argument("partition: num_clients must be >= 1");
    }
    if (labels.size() < num_clients) {
        throw std::invalid_argument(
            "partition: fewer samples than clients, cannot give every client "
            "at least one");
    }
}

/// Indices of each label value, keyed in ascending label order.
std::map<int, std::vector<std::size_t>> group_by_label(
    std::span<const int> labels) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        groups[labels[i]].push_back(i);
    }
    return groups;
}

/// Moves one sample from the largest client (ties to the lowest id) into each
/// empty client. Guarantees every client ends non-empty when N >= C.
void repair_empty_clients(std::vector<std::vector<std::size_t>>& parts) {
    for (std::size_t k = 0; k < parts.size(); ++k) {
        while (parts[k].empty()) {
            std::size_t donor = parts.size();
            std::size_t donor_size = 1;
            for (std::size_t j = 0; j < parts.size(); ++j) {
                if (parts[j].size() > donor_size) {
                    donor = j;
                    donor_size = parts[j].size();
                }
            }
            if (donor == parts.size()) {
                throw std::logic_error("partition: repair found no donor");
            }
            parts[k].push_back(parts[donor].back());
            parts[donor].pop_back();
        }
    }
}

void sort_partitions(std::vector<std::vector<std::size_t>>& parts) {
    for (auto& p : parts) std::sort(p.begin(), p.end());
}

}  // namespace

void PartitionSpec::validate() const {
    if (num_clients == 0) {
        throw std::invalid_argument("partition spec: num_clients must be >= 1");
    }
    if (kind == PartitionKind::kDirichlet &&
        !(concentration > 0.0 && std::isfinite(concentration))) {
        throw std::invalid_argument(
            "partition spec: concentration must be a positive finite value");
    }
}

std::string PartitionSpec::tag() const {
    return kind == PartitionKind::kIid ? "iid" : "dirichlet";
}

PartitionKind parse_partition_kind(const std::string& tag) {
    if (tag == "iid") return PartitionKind::kIid;
    if (tag == "dirichlet") return PartitionKind::kDirichlet;
    throw std::invalid_argument("partition: unknown kind '" + tag + "'");
}

std::vector<std::vector<std::size_t>> partition_iid(std::span<const int> labels,
                                                    std::size_t num_clients,
                                                    std::uint64_t rng_seed) {
    check_inputs(labels, num_clients);
    std::mt19937_64 engine = make_engine(rng_seed);
    std::vector<std::vector<std::size_t>> parts(num_clients);
    for (auto& [label, indices] : group_by_label(labels)) {
        std::shuffle(indices.begin(), indices.end(), engine);
        // Rotate the dealing start per label so remainders spread across
        // clients instead of piling onto low ids.
        const std::size_t start =
            static_cast<std::size_t>(label) % num_clients;
        for (std::size_t i = 0; i < indices.size(); ++i) {
            parts[(start + i) % num_clients].push_back(indices[i]);
        }
    }
    repair_empty_clients(parts);
    sort_partitions(parts);
    return parts;
}

std::vector<std::vector<std::size_t>> partition_dirichlet(
    std::span<const int> labels, std::size_t num_clients, double concentration,
    std::uint64_t rng_seed) {
    check_inputs(labels, num_clients);
    if (!(concentration > 0.0 && std::isfinite(concentration))) {
        throw std::invalid_argument(
            "partition: concentration must be a positive finite value");
    }
    std::mt19937_64 engine = make_engine(rng_seed);
    std::gamma_distribution<double> gamma(concentration, 1.0);
    std::vector<std::vector<std::size_t>> parts(num_clients);
    std::vector<double> weights(num_clients);
    for (auto& [label, indices] : group_by_label(labels)) {
        std::shuffle(indices.begin(), indices.end(), engine);
        double total = 0.0;
        for (double& w : weights) {
            w = gamma(engine);
            total += w;
        }
        if (total <= 0.0) {
            // All draws underflowed (tiny concentration); fall back to even.
            std::fill(weights.begin(), weights.end(), 1.0);
            total = static_cast<double>(num_clients);
        }
        // Slice the shuffled label block at cumulative-proportion boundaries.
        const double n = static_cast<double>(indices.size());
        double cumulative = 0.0;
        std::size_t begin = 0;
        for (std::size_t k = 0; k < num_clients; ++k) {
            cumulative += weights[k] / total;
            std::size_t end =
                k + 1 == num_clients
                    ? indices.size()
                    : static_cast<std::size_t>(std::llround(cumulative * n));
            end = std::clamp(end, begin, indices.size());
            for (std::size_t i = begin; i < end; ++i) {
                parts[k].push_back(indices[i]);
            }
            begin = end;
        }
    }
    repair_empty_clients(parts);
    sort_partitions(parts);
    return parts;
}

std::vector<std::vector<std::size_t>> make_partition(
    std::span<const int> labels, const PartitionSpec& spec,
    std::uint64_t rng_seed) {
    spec.validate();
    switch (spec.kind) {
        case PartitionKind::kIid:
            return partition_iid(labels, spec.num_clients, rng_seed);
        case PartitionKind::kDirichlet:
            return partition_dirichlet(labels, spec.num_clients,
                                       spec.concentration, rng_seed);
    }
    throw std::logic_error("partition: unreachable kind");
}

}  // namespace fedvb
