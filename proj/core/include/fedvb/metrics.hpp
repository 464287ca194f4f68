#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <vector>

#include "fedvb/gaussian.hpp"

namespace fedvb {

/// Fraction of rows whose argmax class matches the label. Ties resolve to the
/// lowest class index so that results do not depend on scan order.
double accuracy(std::span<const double> probs, std::span<const int> labels,
                std::size_t num_classes);

/// Per-bin tallies behind the calibration error: equal-width confidence bins
/// over (0, 1], keyed by each row's top predicted probability.
struct ReliabilityBins {
    std::vector<std::size_t> counts;
    std::vector<double> confidence_sums;
    std::vector<double> accuracy_sums;

    std::size_t total() const;
};

ReliabilityBins reliability_bins(std::span<const double> probs,
                                 std::span<const int> labels,
                                 std::size_t num_classes, std::size_t num_bins);

/// Expected calibration error: sum over bins of |bin accuracy - bin
/// confidence| weighted by the fraction of samples in the bin.
double ece(std::span<const double> probs, std::span<const int> labels,
           std::size_t num_classes, std::size_t num_bins = 15);

/// Mean negative log predicted probability of the true class. Probabilities
/// are clipped below at 1e-12 before the log.
double nll(std::span<const double> probs, std::span<const int> labels,
           std::size_t num_classes);

/// L2 norm of the per-parameter standard deviations, sqrt(sum exp(alpha)),
/// over every Gaussian tensor passed in.
double spread_norm(std::span<const GaussianParams> tensors);

struct MetricsReport {
    double accuracy = 0.0;
    double ece = 0.0;
    double nll = 0.0;
    double spread_norm = 0.0;
};

MetricsReport evaluate_probs(std::span<const double> probs,
                             std::span<const int> labels,
                             std::size_t num_classes, std::size_t num_bins);

/// Wall-clock stopwatch for per-round cost reporting.
class Stopwatch {
  public:
    Stopwatch() : start_(clock::now()) {}
    void reset() { start_ = clock::now(); }
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

  private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

}  // namespace fedvb
