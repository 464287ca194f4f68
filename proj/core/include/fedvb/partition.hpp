#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedvb {

enum class PartitionKind { kIid, kDirichlet };

struct PartitionSpec {
    PartitionKind kind = PartitionKind::kIid;
    double concentration = 0.5;  // dirichlet only
    std::size_t num_clients = 0;

    void validate() const;
    std::string tag() const;
};

PartitionKind parse_partition_kind(const std::string& tag);

/// Per-label shuffled round-robin split. Client class counts per label differ
/// by at most one; the round-robin start rotates per label so remainders do
/// not pile onto low client ids.
std::vector<std::vector<std::size_t>> partition_iid(std::span<const int> labels,
                                                    std::size_t num_clients,
                                                    std::uint64_t rng_seed);

/// For each label, proportions drawn from Dirichlet(concentration * 1_C)
/// allocate that label's indices across clients. Clients left empty by an
/// extreme draw are repaired by moving one sample from the largest client.
std::vector<std::vector<std::size_t>> partition_dirichlet(
    std::span<const int> labels, std::size_t num_clients, double concentration,
    std::uint64_t rng_seed);

std::vector<std::vector<std::size_t>> make_partition(
    std::span<const int> labels, const PartitionSpec& spec,
    std::uint64_t rng_seed);

}  // namespace fedvb
