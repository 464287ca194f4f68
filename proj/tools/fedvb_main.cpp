// Command-line front end: `run` executes a configured federated experiment,
// `agg-demo` prints the closed-form aggregation rules on inline Gaussians,
// `partition-stats` prints per-client label histograms for a config.
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedvb/aggregation.hpp"
#include "fedvb/config.hpp"
#include "fedvb/experiment.hpp"
#include "fedvb/partition.hpp"
#include "fedvb/rng.hpp"

namespace {

// Worker-pool size precedence: --processes flag, then FEDVB_PROCESSES env
// var, then the config file value.
void apply_process_override(fedvb::ExperimentConfig& config,
                            const std::optional<std::size_t>& flag) {
    if (flag) {
        config.round.processes = *flag;
        return;
    }
    if (const char* env = std::getenv("FEDVB_PROCESSES")) {
        try {
            const unsigned long long v = std::stoull(env);
            if (v == 0) throw std::invalid_argument("zero");
            config.round.processes = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw CLI::ValidationError(
                "FEDVB_PROCESSES must be a positive integer");
        }
    }
}

fedvb::GaussianParams parse_client_arg(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw CLI::ValidationError("--client expects 'mu,sigma2'");
    }
    try {
        const double mu = std::stod(text.substr(0, comma));
        const double sigma2 = std::stod(text.substr(comma + 1));
        return fedvb::GaussianParams::scalar(mu, sigma2);
    } catch (const std::exception& e) {
        throw CLI::ValidationError(std::string("--client: ") + e.what());
    }
}

int run_command(const std::string& config_path,
                const std::vector<std::uint64_t>& seeds_flag,
                const std::optional<std::uint64_t>& seed_flag,
                const std::optional<std::size_t>& processes_flag,
                const std::optional<std::string>& output_flag) {
    fedvb::ExperimentConfig config = fedvb::load_config(config_path);
    apply_process_override(config, processes_flag);
    if (output_flag) config.output = *output_flag;
    if (seed_flag) config.round.seed = *seed_flag;

    std::vector<std::uint64_t> seeds = seeds_flag;
    if (seeds.empty()) seeds.push_back(config.round.seed);

    const fedvb::ExperimentOutput out = fedvb::run_experiment(config, seeds);
    std::cout << "wrote " << out.results_csv.string() << " ("
              << out.rows.size() << " rows), " << out.manifest.string()
              << ", " << out.checkpoints.size() << " checkpoint(s)\n";
    std::cout << out.summary;
    return 0;
}

int agg_demo_command(const std::string& method_tag,
                     const std::vector<std::string>& client_args,
                     const std::vector<double>& beta_flag,
                     std::size_t ppa_population) {
    std::vector<fedvb::GaussianParams> clients;
    clients.reserve(client_args.size());
    for (const std::string& text : client_args) {
        clients.push_back(parse_client_arg(text));
    }

    fedvb::AggregationWeights betas;
    if (beta_flag.empty()) {
        betas = fedvb::AggregationWeights::uniform(clients.size());
    } else {
        betas.betas = beta_flag;
        if (betas.betas.size() != clients.size()) {
            throw CLI::ValidationError("--beta count must match --client count");
        }
        betas.validate();
    }

    std::vector<fedvb::AggregationMethod> methods;
    if (method_tag == "all") {
        methods = {fedvb::AggregationMethod::eaa(),
                   fedvb::AggregationMethod::gaa(),
                   fedvb::AggregationMethod::aalv(),
                   fedvb::AggregationMethod::ppa(ppa_population),
                   fedvb::AggregationMethod::cf(),
                   fedvb::AggregationMethod::point()};
    } else {
        const fedvb::AggregationRule rule = fedvb::AggregationMethod::parse_rule(method_tag);
        methods = {rule == fedvb::AggregationRule::kPpa
                       ? fedvb::AggregationMethod::ppa(ppa_population)
                       : fedvb::AggregationMethod{rule, 0}};
    }

    std::cout.precision(12);
    for (const auto& method : methods) {
        const fedvb::GaussianParams merged =
            fedvb::aggregate(method, clients, betas, /*rng_seed=*/0);
        std::cout << method.tag() << ": mu = " << merged.mu[0];
        if (method.rule == fedvb::AggregationRule::kPoint) {
            std::cout << " (point estimate)\n";
        } else {
            std::cout << ", sigma2 = " << merged.sigma2(0) << "\n";
        }
    }
    return 0;
}

int partition_stats_command(const std::string& config_path,
                            const std::optional<std::uint64_t>& seed_flag) {
    fedvb::ExperimentConfig config = fedvb::load_config(config_path);
    if (seed_flag) config.round.seed = *seed_flag;

    const fedvb::Dataset train =
        fedvb::build_train_set(config, config.round.seed);
    const auto parts = fedvb::make_partition(
        train.labels, config.partition,
        fedvb::derive_seed(config.round.seed, {fedvb::stream::kPartition}));

    std::cout << config.partition.tag() << " partition of " << train.count
              << " samples over " << parts.size() << " clients\n";
    for (std::size_t k = 0; k < parts.size(); ++k) {
        std::map<int, std::size_t> histogram;
        for (std::size_t idx : parts[k]) histogram[train.labels[idx]]++;
        std::cout << "client " << k << " (" << parts[k].size() << "):";
        for (const auto& [label, count] : histogram) {
            std::cout << " " << label << ":" << count;
        }
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated training simulator for variational and "
                 "deterministic MLPs"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a configured experiment");
    std::string run_config;
    std::vector<std::uint64_t> seeds_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::size_t> processes_flag;
    std::optional<std::string> output_flag;
    run->add_option("--config", run_config, "Config file path")->required();
    run->add_option("--seeds", seeds_flag,
                    "Seed list; one full run per seed");
    run->add_option("--seed", seed_flag, "Single seed override");
    run->add_option("--processes", processes_flag, "Worker pool size");
    run->add_option("--output", output_flag, "Output directory override");

    // agg-demo
    auto* demo = app.add_subcommand(
        "agg-demo", "Aggregate inline scalar Gaussians and print the result");
    std::string method_tag = "all";
    std::vector<std::string> client_args;
    std::vector<double> beta_flag;
    std::size_t ppa_population = 100000;
    demo->add_option("--method", method_tag,
                     "eaa|gaa|aalv|ppa|cf|point|all (default all)");
    demo->add_option("--client", client_args, "Client Gaussian as 'mu,sigma2'")
        ->required();
    demo->add_option("--beta", beta_flag,
                     "Aggregation weights (default uniform)");
    demo->add_option("--ppa-population", ppa_population,
                     "Pooled sample count for ppa");

    // partition-stats
    auto* stats = app.add_subcommand(
        "partition-stats", "Print per-client label histograms for a config");
    std::string stats_config;
    std::optional<std::uint64_t> stats_seed;
    stats->add_option("--config", stats_config, "Config file path")->required();
    stats->add_option("--seed", stats_seed, "Seed override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(run_config, seeds_flag, seed_flag,
                               processes_flag, output_flag);
        }
        if (demo->parsed()) {
            return agg_demo_command(method_tag, client_args, beta_flag,
                                    ppa_population);
        }
        if (stats->parsed()) {
            return partition_stats_command(stats_config, stats_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
