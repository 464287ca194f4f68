#include "fedvb/aggregation.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "fedvb/rng.hpp"

namespace fedvb {

namespace {

void check_inputs(std::span<const GaussianParams> clients,
                  const AggregationWeights& w) {
    if (clients.empty()) {
        throw std::invalid_argument("aggregate: no client inputs");
    }
    if (clients.size() != w.size()) {
        throw std::invalid_argument(
            "aggregate: client count does not match beta count");
    }
    w.validate();
    for (std::size_t k = 1; k < clients.size(); ++k) {
        if (!clients[k].same_shape(clients[0])) {
            throw std::invalid_argument("aggregate: client shape mismatch");
        }
    }
}

double floored_log(double variance) {
    return std::log(std::max(variance, kVarianceFloor));
}

}  // namespace

GaussianParams aggregate_eaa(std::span<const GaussianParams> clients,
                             const AggregationWeights& w) {
    check_inputs(clients, w);
    if (clients.size() == 1) return clients[0];  // beta = (1): exact identity
    const std::size_t n = clients[0].size();
    GaussianParams out = GaussianParams::zeros(clients[0].shape);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.0, var = 0.0;
        for (std::size_t k = 0; k < clients.size(); ++k) {
            mu += w.betas[k] * clients[k].mu[i];
            var += w.betas[k] * clients[k].sigma2(i);
        }
        out.mu[i] = mu;
        out.alpha[i] = floored_log(var);
    }
    return out;
}

GaussianParams aggregate_gaa(std::span<const GaussianParams> clients,
                             const AggregationWeights& w) {
    check_inputs(clients, w);
    if (clients.size() == 1) return clients[0];
    const std::size_t n = clients[0].size();
    GaussianParams out = GaussianParams::zeros(clients[0].shape);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.0, var = 0.0;
        for (std::size_t k = 0; k < clients.size(); ++k) {
            mu += w.betas[k] * clients[k].mu[i];
            var += w.betas[k] * w.betas[k] * clients[k].sigma2(i);
        }
        out.mu[i] = mu;
        out.alpha[i] = floored_log(var);
    }
    return out;
}

GaussianParams aggregate_aalv(std::span<const GaussianParams> clients,
                              const AggregationWeights& w) {
    check_inputs(clients, w);
    if (clients.size() == 1) return clients[0];
    const std::size_t n = clients[0].size();
    GaussianParams out = GaussianParams::zeros(clients[0].shape);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.0, alpha = 0.0;
        for (std::size_t k = 0; k < clients.size(); ++k) {
            mu += w.betas[k] * clients[k].mu[i];
            alpha += w.betas[k] * clients[k].alpha[i];
        }
        out.mu[i] = mu;
        out.alpha[i] = alpha;
    }
    return out;
}

GaussianParams aggregate_ppa(std::span<const GaussianParams> clients,
                             const AggregationWeights& w,
                             std::size_t population, std::uint64_t rng_seed) {
    check_inputs(clients, w);
    if (population < clients.size()) {
        throw std::invalid_argument(
            "aggregate_ppa: population smaller than client count");
    }
    // Every client contributes at least one sample; the pooled count is the
    // actual N used in the mean/variance below.
    std::vector<std::size_t> counts(clients.size());
    std::size_t pooled = 0;
    for (std::size_t k = 0; k < clients.size(); ++k) {
        const double exact = static_cast<double>(population) * w.betas[k];
        counts[k] = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(exact)));
        pooled += counts[k];
    }

    const std::size_t n = clients[0].size();
    GaussianParams out = GaussianParams::zeros(clients[0].shape);
    std::mt19937_64 engine = make_engine(rng_seed);
    std::normal_distribution<double> unit;
    for (std::size_t i = 0; i < n; ++i) {
        // Welford over the pooled population: mean and M2 in one pass.
        double mean = 0.0, m2 = 0.0;
        std::size_t seen = 0;
        for (std::size_t k = 0; k < clients.size(); ++k) {
            const double mu = clients[k].mu[i];
            const double sigma = std::exp(0.5 * clients[k].alpha[i]);
            for (std::size_t s = 0; s < counts[k]; ++s) {
                const double x = mu + sigma * unit(engine);
                ++seen;
                const double delta = x - mean;
                mean += delta / static_cast<double>(seen);
                m2 += delta * (x - mean);
            }
        }
        out.mu[i] = mean;
        out.alpha[i] = floored_log(m2 / static_cast<double>(pooled));
    }
    return out;
}

GaussianParams aggregate_cf(std::span<const GaussianParams> clients,
                            const AggregationWeights& w) {
    check_inputs(clients, w);
    if (clients.size() == 1) return clients[0];
    const double beta_max = w.max_beta();
    const std::size_t n = clients[0].size();
    GaussianParams out = GaussianParams::zeros(clients[0].shape);
    for (std::size_t i = 0; i < n; ++i) {
        double weighted_mean = 0.0, precision = 0.0;
        for (std::size_t k = 0; k < clients.size(); ++k) {
            const double inv_var = w.betas[k] / clients[k].sigma2(i);
            weighted_mean += inv_var * clients[k].mu[i];
            precision += inv_var;
        }
        out.mu[i] = weighted_mean / precision;
        out.alpha[i] = floored_log(beta_max / precision);
    }
    return out;
}

std::vector<double> aggregate_point(
    std::span<const std::vector<double>> client_points,
    const AggregationWeights& w) {
    if (client_points.empty()) {
        throw std::invalid_argument("aggregate_point: no client inputs");
    }
    if (client_points.size() != w.size()) {
        throw std::invalid_argument(
            "aggregate_point: client count does not match beta count");
    }
    w.validate();
    const std::size_t n = client_points[0].size();
    for (const auto& p : client_points) {
        if (p.size() != n) {
            throw std::invalid_argument("aggregate_point: length mismatch");
        }
    }
    if (client_points.size() == 1) return client_points[0];
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < client_points.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += w.betas[k] * client_points[k][i];
        }
    }
    return out;
}

GaussianParams aggregate(const AggregationMethod& method,
                         std::span<const GaussianParams> clients,
                         const AggregationWeights& w, std::uint64_t rng_seed) {
    switch (method.rule) {
        case AggregationRule::kEaa: return aggregate_eaa(clients, w);
        case AggregationRule::kGaa: return aggregate_gaa(clients, w);
        case AggregationRule::kAalv: return aggregate_aalv(clients, w);
        case AggregationRule::kPpa:
            return aggregate_ppa(clients, w, method.ppa_population, rng_seed);
        case AggregationRule::kCf: return aggregate_cf(clients, w);
        case AggregationRule::kPoint: {
            check_inputs(clients, w);
            std::vector<std::vector<double>> points;
            points.reserve(clients.size());
            for (const auto& c : clients) points.push_back(c.mu);
            GaussianParams out = GaussianParams::zeros(clients[0].shape);
            out.mu = aggregate_point(points, w);
            return out;  // alpha stays the all-zeros sentinel
        }
    }
    throw std::logic_error("aggregate: corrupt method tag");
}

}  // namespace fedvb
