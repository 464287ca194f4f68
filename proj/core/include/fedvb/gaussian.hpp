#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fedvb {

/// Per-tensor variational parameters: flat means and log-variances.
/// alpha = ln(sigma^2); keeping the log form guarantees sigma^2 > 0 as long
/// as every alpha entry is finite.
struct GaussianParams {
    std::vector<std::size_t> shape;
    std::vector<double> mu;
    std::vector<double> alpha;

    GaussianParams() = default;
    GaussianParams(std::vector<std::size_t> shape_, std::vector<double> mu_,
                   std::vector<double> alpha_);

    /// Zero means, zero log-variances (sigma^2 = 1).
    static GaussianParams zeros(std::vector<std::size_t> shape);
    /// Convenience for scalar fixtures: a single N(mu, sigma2) parameter.
    static GaussianParams scalar(double mu, double sigma2);

    std::size_t size() const { return mu.size(); }
    std::size_t shape_elements() const;
    bool same_shape(const GaussianParams& other) const;

    double sigma2(std::size_t i) const;

    /// Throws std::invalid_argument if sizes disagree with the shape or any
    /// alpha entry is non-finite.
    void validate() const;
};

/// Convex weights over the clients being aggregated.
/// Invariant: each beta in (0, 1], sum = 1 within 1e-9.
struct AggregationWeights {
    std::vector<double> betas;

    static AggregationWeights uniform(std::size_t count);

    std::size_t size() const { return betas.size(); }
    double max_beta() const;
    void validate() const;
};

enum class AggregationRule { kEaa, kGaa, kAalv, kPpa, kCf, kPoint };

/// Aggregation rule plus the population size PPA needs.
struct AggregationMethod {
    AggregationRule rule = AggregationRule::kEaa;
    std::size_t ppa_population = 0;  // only meaningful for kPpa

    static AggregationMethod eaa() { return {AggregationRule::kEaa, 0}; }
    static AggregationMethod gaa() { return {AggregationRule::kGaa, 0}; }
    static AggregationMethod aalv() { return {AggregationRule::kAalv, 0}; }
    static AggregationMethod ppa(std::size_t population) {
        return {AggregationRule::kPpa, population};
    }
    static AggregationMethod cf() { return {AggregationRule::kCf, 0}; }
    static AggregationMethod point() { return {AggregationRule::kPoint, 0}; }

    /// Lowercase wire tag: eaa|gaa|aalv|ppa|cf|point.
    std::string tag() const;
    /// Parses a lowercase tag. Throws std::invalid_argument on unknown tags.
    static AggregationRule parse_rule(const std::string& tag);

    bool is_gaussian() const { return rule != AggregationRule::kPoint; }
    bool operator==(const AggregationMethod&) const = default;
};

}  // namespace fedvb
