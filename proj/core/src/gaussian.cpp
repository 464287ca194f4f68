#include "fedvb/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedvb {

GaussianParams::GaussianParams(std::vector<std::size_t> shape_,
                               std::vector<double> mu_,
                               std::vector<double> alpha_)
    : shape(std::move(shape_)), mu(std::move(mu_)), alpha(std::move(alpha_)) {}

GaussianParams GaussianParams::zeros(std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return GaussianParams(std::move(shape), std::vector<double>(n, 0.0),
                          std::vector<double>(n, 0.0));
}

GaussianParams GaussianParams::scalar(double mu, double sigma2) {
    if (!(sigma2 > 0.0)) {
        throw std::invalid_argument("GaussianParams::scalar: sigma2 must be > 0");
    }
    return GaussianParams({1}, {mu}, {std::log(sigma2)});
}

std::size_t GaussianParams::shape_elements() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

bool GaussianParams::same_shape(const GaussianParams& other) const {
    return shape == other.shape;
}

double GaussianParams::sigma2(std::size_t i) const {
    return std::exp(alpha[i]);
}

void GaussianParams::validate() const {
    if (mu.size() != alpha.size()) {
        throw std::invalid_argument("GaussianParams: mu/alpha length mismatch");
    }
    if (mu.size() != shape_elements()) {
        throw std::invalid_argument(
            "GaussianParams: array length does not match shape");
    }
    for (double a : alpha) {
        if (!std::isfinite(a)) {
            throw std::invalid_argument("GaussianParams: non-finite alpha entry");
        }
    }
}

AggregationWeights AggregationWeights::uniform(std::size_t count) {
    if (count == 0) {
        throw std::invalid_argument("AggregationWeights::uniform: empty");
    }
    return AggregationWeights{
        std::vector<double>(count, 1.0 / static_cast<double>(count))};
}

double AggregationWeights::max_beta() const {
    if (betas.empty()) {
        throw std::invalid_argument("AggregationWeights: empty beta vector");
    }
    return *std::max_element(betas.begin(), betas.end());
}

void AggregationWeights::validate() const {
    if (betas.empty()) {
        throw std::invalid_argument("AggregationWeights: empty beta vector");
    }
    double sum = 0.0;
    for (double b : betas) {
        if (!(b > 0.0) || b > 1.0) {
            throw std::invalid_argument(
                "AggregationWeights: every beta must lie in (0, 1]");
        }
        sum += b;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("AggregationWeights: betas must sum to 1");
    }
}

std::string AggregationMethod::tag() const {
    switch (rule) {
        case AggregationRule::kEaa: return "eaa";
        case AggregationRule::kGaa: return "gaa";
        case AggregationRule::kAalv: return "aalv";
        case AggregationRule::kPpa: return "ppa";
        case AggregationRule::kCf: return "cf";
        case AggregationRule::kPoint: return "point";
    }
    throw std::logic_error("AggregationMethod: corrupt rule tag");
}

AggregationRule AggregationMethod::parse_rule(const std::string& tag) {
    if (tag == "eaa") return AggregationRule::kEaa;
    if (tag == "gaa") return AggregationRule::kGaa;
    if (tag == "aalv") return AggregationRule::kAalv;
    if (tag == "ppa") return AggregationRule::kPpa;
    if (tag == "cf") return AggregationRule::kCf;
    if (tag == "point") return AggregationRule::kPoint;
    throw std::invalid_argument("unknown aggregation tag: " + tag);
}

}  // namespace fedvb
