#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedvb/gaussian.hpp"

namespace fedvb {

/// Variance floor applied before re-expressing aggregated variances as
/// alpha = ln(sigma^2), so conflation of tiny variances cannot produce -inf.
inline constexpr double kVarianceFloor = 1e-12;

/// Empirical arithmetic aggregation:
///   mu = sum_k beta_k mu_k,  sigma^2 = sum_k beta_k sigma^2_k.
GaussianParams aggregate_eaa(std::span<const GaussianParams> clients,
                             const AggregationWeights& w);

/// Gaussian arithmetic aggregation (sum rule of independent Gaussians):
///   mu = sum_k beta_k mu_k,  sigma^2 = sum_k beta_k^2 sigma^2_k.
GaussianParams aggregate_gaa(std::span<const GaussianParams> clients,
                             const AggregationWeights& w);

/// Arithmetic aggregation in log-variance space:
///   mu = sum_k beta_k mu_k,  alpha = sum_k beta_k alpha_k
/// (the geometric mean of the client variances).
GaussianParams aggregate_aalv(std::span<const GaussianParams> clients,
                              const AggregationWeights& w);

/// Population pooling: per scalar parameter draws max(1, round(n beta_k))
/// samples from each client's Gaussian, pools them, and returns the pooled
/// sample mean and biased (1/N) population variance. Deterministic for a
/// fixed rng_seed. Requires population >= number of clients.
GaussianParams aggregate_ppa(std::span<const GaussianParams> clients,
                             const AggregationWeights& w,
                             std::size_t population, std::uint64_t rng_seed);

/// Conflation of weighted Gaussians:
///   mu = (sum_k beta_k mu_k / sigma^2_k) / (sum_k beta_k / sigma^2_k),
///   sigma^2 = beta_max / (sum_k beta_k / sigma^2_k).
GaussianParams aggregate_cf(std::span<const GaussianParams> clients,
                            const AggregationWeights& w);

/// Deterministic point average: element-wise sum_k beta_k theta_k.
std::vector<double> aggregate_point(
    std::span<const std::vector<double>> client_points,
    const AggregationWeights& w);

/// Single dispatch surface for the server's AGG step. kPoint averages the
/// client means and keeps alpha as the all-zeros sentinel of deterministic
/// models; rng_seed is consumed only by kPpa.
GaussianParams aggregate(const AggregationMethod& method,
                         std::span<const GaussianParams> clients,
                         const AggregationWeights& w, std::uint64_t rng_seed);

}  // namespace fedvb
