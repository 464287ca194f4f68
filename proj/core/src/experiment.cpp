#include "fedvb/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedvb/checkpoint.hpp"

namespace fedvb {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStderr summarize(const std::vector<double>& values) {
    MeanStderr s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return s;
}

}  // namespace

std::string results_csv_header() {
    return "run_id,seed,round,accuracy,ece,nll,spread_norm,tpc_seconds,"
           "aggregation,beta_mode,partition";
}

std::string to_csv_line(const ResultsRow& row) {
    std::string line;
    line += row.run_id;
    line += ',';
    line += std::to_string(row.seed);
    line += ',';
    line += std::to_string(row.round);
    line += ',';
    line += fmt_double(row.accuracy);
    line += ',';
    line += fmt_double(row.ece);
    line += ',';
    line += fmt_double(row.nll);
    line += ',';
    line += fmt_double(row.spread_norm);
    line += ',';
    line += fmt_double(row.tpc_seconds);
    line += ',';
    line += row.aggregation;
    line += ',';
    line += row.beta_mode;
    line += ',';
    line += row.partition;
    return line;
}

ResultsRow parse_csv_line(const std::string& line) {
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 11) {
        throw std::invalid_argument("results csv: expected 11 fields, got " +
                                    std::to_string(fields.size()));
    }
    ResultsRow row;
    row.run_id = fields[0];
    row.seed = std::stoull(fields[1]);
    row.round = std::stoull(fields[2]);
    row.accuracy = std::stod(fields[3]);
    row.ece = std::stod(fields[4]);
    row.nll = std::stod(fields[5]);
    row.spread_norm = std::stod(fields[6]);
    row.tpc_seconds = std::stod(fields[7]);
    row.aggregation = fields[8];
    row.beta_mode = fields[9];
    row.partition = fields[10];
    return row;
}

ExperimentOutput run_experiment(const ExperimentConfig& config,
                                std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) {
        throw std::invalid_argument("experiment: seed list is empty");
    }
    const std::string hash = config_hash(config);
    const std::filesystem::path out_dir(config.output);
    std::filesystem::create_directories(out_dir);

    ExperimentOutput output;
    output.results_csv = out_dir / "results.csv";
    output.manifest = out_dir / "manifest.json";

    std::vector<ResultsRow> final_rows;
    for (const std::uint64_t seed : seeds) {
        ExperimentConfig run_config = config;
        run_config.round.seed = seed;
        const std::string run_id =
            hash.substr(0, 8) + "-s" + std::to_string(seed);

        Dataset train;
        Dataset test;
        ServerState server;
        try {
            train = build_train_set(run_config, seed);
            test = build_test_set(run_config, seed);
            server = run_federated(run_config.round, run_config.partition,
                                   run_config.model, train, test,
                                   run_config.eval_config());
        } catch (const std::exception& e) {
            throw std::runtime_error("experiment: run " + run_id + ": " +
                                     e.what());
        }

        for (const RoundRecord& record : server.history) {
            if (!record.evaluated) continue;
            ResultsRow row;
            row.run_id = run_id;
            row.seed = seed;
            row.round = record.round;
            row.accuracy = record.metrics.accuracy;
            row.ece = record.metrics.ece;
            row.nll = record.metrics.nll;
            row.spread_norm = record.metrics.spread_norm;
            row.tpc_seconds =
                config.record_timing ? record.tpc_seconds : 0.0;
            row.aggregation = config.round.aggregation.tag();
            row.beta_mode = beta_mode_tag(config.round.beta_mode);
            row.partition = config.partition.tag();
            output.rows.push_back(row);
        }
        final_rows.push_back(output.rows.back());

        const std::filesystem::path ckpt =
            out_dir / ("model-s" + std::to_string(seed) + ".fvbn");
        save_checkpoint(server.global, ckpt.string());
        output.checkpoints.push_back(ckpt);
    }

    std::ofstream csv(output.results_csv, std::ios::trunc);
    if (!csv) {
        throw std::runtime_error("experiment: cannot write " +
                                 output.results_csv.string());
    }
    csv << results_csv_header() << '\n';
    for (const ResultsRow& row : output.rows) csv << to_csv_line(row) << '\n';
    csv.close();

    nlohmann::json manifest;
    manifest["config"] = serialize(config);
    manifest["config_hash"] = hash;
    manifest["seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
    manifest["version"] = "0.1.0";
    std::ofstream mf(output.manifest, std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    mf.close();

    std::vector<double> acc, ece_v, nll_v, spread;
    for (const ResultsRow& row : final_rows) {
        acc.push_back(row.accuracy);
        ece_v.push_back(row.ece);
        nll_v.push_back(row.nll);
        spread.push_back(row.spread_norm);
    }
    std::ostringstream summary;
    summary << "final round " << final_rows.front().round << " across "
            << seeds.size() << " seed(s):\n";
    const auto line = [&](const char* name, const std::vector<double>& v) {
        const MeanStderr s = summarize(v);
        summary << "  " << name << " " << s.mean << " +/- " << s.stderr_
                << "\n";
    };
    line("accuracy   ", acc);
    line("ece        ", ece_v);
    line("nll        ", nll_v);
    line("spread_norm", spread);
    output.summary = summary.str();
    return output;
}

}  // namespace fedvb
