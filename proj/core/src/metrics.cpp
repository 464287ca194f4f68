#include "fedvb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedvb {

namespace {

constexpr double kProbFloor = 1e-12;

void check_rows(std::span<const double> probs, std::span<const int> labels,
                std::size_t num_classes) {
    if (num_classes == 0) {
        throw std::invalid_argument("metrics: num_classes must be >= 1");
    }
    if (labels.empty()) {
        throw std::invalid_argument("metrics: empty label set");
    }
    if (probs.size() != labels.size() * num_classes) {
        throw std::invalid_argument("metrics: probs size mismatch");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw std::invalid_argument("metrics: label outside [0, classes)");
        }
    }
}

std::size_t argmax_lowest(const double* row, std::size_t num_classes) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < num_classes; ++c) {
        if (row[c] > row[best]) best = c;
    }
    return best;
}

}  // namespace

double accuracy(std::span<const double> probs, std::span<const int> labels,
                std::size_t num_classes) {
    check_rows(probs, labels, num_classes);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const double* row = probs.data() + r * num_classes;
        if (argmax_lowest(row, num_classes) ==
            static_cast<std::size_t>(labels[r])) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::size_t ReliabilityBins::total() const {
    std::size_t n = 0;
    for (std::size_t c : counts) n += c;
    return n;
}

ReliabilityBins reliability_bins(std::span<const double> probs,
                                 std::span<const int> labels,
                                 std::size_t num_classes,
                                 std::size_t num_bins) {
    check_rows(probs, labels, num_classes);
    if (num_bins == 0) {
        throw std::invalid_argument("metrics: num_bins must be >= 1");
    }
    ReliabilityBins bins;
    bins.counts.assign(num_bins, 0);
    bins.confidence_sums.assign(num_bins, 0.0);
    bins.accuracy_sums.assign(num_bins, 0.0);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const double* row = probs.data() + r * num_classes;
        const std::size_t pred = argmax_lowest(row, num_classes);
        const double conf = row[pred];
        // Bins cover (i/M, (i+1)/M]. Start from the ceil estimate, then nudge
        // so membership is exact against the edge values i/M as doubles.
        const double m = static_cast<double>(num_bins);
        std::size_t bin = 0;
        if (conf > 0.0) {
            bin = static_cast<std::size_t>(std::ceil(conf * m)) - 1;
        }
        bin = std::min(bin, num_bins - 1);
        while (bin > 0 && conf <= static_cast<double>(bin) / m) --bin;
        while (bin + 1 < num_bins &&
               conf > static_cast<double>(bin + 1) / m) {
            ++bin;
        }
        bins.counts[bin]++;
        bins.confidence_sums[bin] += conf;
        bins.accuracy_sums[bin] +=
            pred == static_cast<std::size_t>(labels[r]) ? 1.0 : 0.0;
    }
    return bins;
}

double ece(std::span<const double> probs, std::span<const int> labels,
           std::size_t num_classes, std::size_t num_bins) {
    const ReliabilityBins bins =
        reliability_bins(probs, labels, num_classes, num_bins);
    const double n = static_cast<double>(labels.size());
    double total = 0.0;
    for (std::size_t b = 0; b < bins.counts.size(); ++b) {
        if (bins.counts[b] == 0) continue;
        const double count = static_cast<double>(bins.counts[b]);
        const double avg_conf = bins.confidence_sums[b] / count;
        const double avg_acc = bins.accuracy_sums[b] / count;
        total += (count / n) * std::abs(avg_acc - avg_conf);
    }
    return total;
}

double nll(std::span<const double> probs, std::span<const int> labels,
           std::size_t num_classes) {
    check_rows(probs, labels, num_classes);
    double total = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const double p = probs[r * num_classes +
                               static_cast<std::size_t>(labels[r])];
        total += -std::log(std::max(p, kProbFloor));
    }
    return total / static_cast<double>(labels.size());
}

double spread_norm(std::span<const GaussianParams> tensors) {
    double sum = 0.0;
    for (const auto& t : tensors) {
        for (double a : t.alpha) sum += std::exp(a);
    }
    return std::sqrt(sum);
}

MetricsReport evaluate_probs(std::span<const double> probs,
                             std::span<const int> labels,
                             std::size_t num_classes, std::size_t num_bins) {
    MetricsReport report;
    report.accuracy = accuracy(probs, labels, num_classes);
    report.ece = ece(probs, labels, num_classes, num_bins);
    report.nll = nll(probs, labels, num_classes);
    return report;
}

}  // namespace fedvb
