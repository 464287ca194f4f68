#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedvb/config.hpp"

namespace fedvb {

/// One evaluated round of one run, as persisted to the results CSV.
struct ResultsRow {
    std::string run_id;
    std::uint64_t seed = 0;
    std::size_t round = 0;
    double accuracy = 0.0;
    double ece = 0.0;
    double nll = 0.0;
    double spread_norm = 0.0;
    double tpc_seconds = 0.0;
    std::string aggregation;
    std::string beta_mode;
    std::string partition;
};

std::string results_csv_header();
/// One CSV line, floats at 17 significant digits so re-parsing is lossless.
std::string to_csv_line(const ResultsRow& row);
ResultsRow parse_csv_line(const std::string& line);

struct ExperimentOutput {
    std::vector<ResultsRow> rows;
    std::filesystem::path results_csv;
    std::filesystem::path manifest;
    std::vector<std::filesystem::path> checkpoints;
    /// Final-round mean +/- standard error per metric across the seeds.
    std::string summary;
};

/// Runs the configured experiment once per seed, writing results.csv, a run
/// manifest, and one final-model checkpoint per seed under config.output.
ExperimentOutput run_experiment(const ExperimentConfig& config,
                                std::span<const std::uint64_t> seeds);

}  // namespace fedvb
