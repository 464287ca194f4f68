#include "fedvb/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "fedvb/rng.hpp"

namespace fedvb {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config: " + path + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            fail(path.empty() ? key : path + "." + key, "unknown key");
        }
    }
}

template <typename T>
T get_or(const json& obj, const std::string& path, const std::string& key,
         T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path.empty() ? key : path + "." + key, e.what());
    }
}

template <typename T>
T require(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) {
        fail(path.empty() ? key : path + "." + key, "missing required key");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path.empty() ? key : path + "." + key, e.what());
    }
}

DatasetConfig parse_dataset(const json& obj) {
    if (!obj.is_object()) fail("dataset", "must be an object");
    DatasetConfig ds;
    const std::string kind = require<std::string>(obj, "dataset", "kind");
    if (kind == "synthetic") {
        ds.kind = DatasetKind::kSynthetic;
        reject_unknown_keys(obj, "dataset",
                            {"kind", "classes", "dims", "samples", "spread"});
        ds.classes = require<std::size_t>(obj, "dataset", "classes");
        ds.dims = require<std::size_t>(obj, "dataset", "dims");
        ds.samples = require<std::size_t>(obj, "dataset", "samples");
        ds.spread = get_or<double>(obj, "dataset", "spread", ds.spread);
        if (ds.classes < 2) fail("dataset.classes", "must be >= 2");
        if (ds.dims < ds.classes) fail("dataset.dims", "must be >= classes");
        if (ds.samples == 0) fail("dataset.samples", "must be >= 1");
        if (ds.spread < 0.0) fail("dataset.spread", "must be >= 0");
    } else if (kind == "idx") {
        ds.kind = DatasetKind::kIdx;
        reject_unknown_keys(obj, "dataset",
                            {"kind", "train_images", "train_labels",
                             "test_images", "test_labels"});
        ds.train_images = require<std::string>(obj, "dataset", "train_images");
        ds.train_labels = require<std::string>(obj, "dataset", "train_labels");
        ds.test_images = require<std::string>(obj, "dataset", "test_images");
        ds.test_labels = require<std::string>(obj, "dataset", "test_labels");
        for (const auto& [key, path] :
             {std::pair<std::string, std::string>{"train_images",
                                                  ds.train_images},
              {"train_labels", ds.train_labels},
              {"test_images", ds.test_images},
              {"test_labels", ds.test_labels}}) {
            if (!std::ifstream(path).good()) {
                fail("dataset." + key, "file not readable: " + path);
            }
        }
    } else {
        fail("dataset.kind", "must be 'synthetic' or 'idx'");
    }
    return ds;
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
    return dataset == other.dataset &&
           partition.kind == other.partition.kind &&
           partition.concentration == other.partition.concentration &&
           partition.num_clients == other.partition.num_clients &&
           model == other.model &&
           round.total_clients == other.round.total_clients &&
           round.fraction == other.round.fraction &&
           round.rounds == other.round.rounds &&
           round.local_epochs == other.round.local_epochs &&
           round.batch_size == other.round.batch_size &&
           round.lr == other.round.lr && round.momentum == other.round.momentum &&
           round.weight_decay == other.round.weight_decay &&
           round.aggregation == other.round.aggregation &&
           round.beta_mode == other.round.beta_mode &&
           round.seed == other.round.seed &&
           round.processes == other.round.processes &&
           eval_mc_samples == other.eval_mc_samples &&
           eval_stride == other.eval_stride && ece_bins == other.ece_bins &&
           output == other.output && record_timing == other.record_timing;
}

ExperimentConfig parse_config(const json& root) {
    if (!root.is_object()) fail("", "top level must be an object");
    reject_unknown_keys(
        root, "",
        {"dataset", "partition", "model", "total_clients", "fraction",
         "rounds", "local_epochs", "batch_size", "lr", "momentum",
         "weight_decay", "aggregation", "ppa_population", "beta_mode", "seed",
         "processes", "eval_mc_samples", "eval_stride", "ece_bins", "output",
         "record_timing"});

    ExperimentConfig cfg;
    cfg.dataset = parse_dataset(require<json>(root, "", "dataset"));

    cfg.round.total_clients =
        get_or<std::size_t>(root, "", "total_clients", 10);
    cfg.round.fraction = get_or<double>(root, "", "fraction", 1.0);
    cfg.round.rounds = get_or<std::size_t>(root, "", "rounds", 50);
    cfg.round.local_epochs = get_or<std::size_t>(root, "", "local_epochs", 10);
    cfg.round.batch_size = get_or<std::size_t>(root, "", "batch_size", 64);
    cfg.round.lr = get_or<double>(root, "", "lr", 0.01);
    cfg.round.momentum = get_or<double>(root, "", "momentum", 0.9);
    cfg.round.weight_decay = get_or<double>(root, "", "weight_decay", 1e-5);
    cfg.round.seed = get_or<std::uint64_t>(root, "", "seed", 0);
    cfg.round.processes = get_or<std::size_t>(root, "", "processes", 1);
    cfg.round.beta_mode =
        parse_beta_mode(get_or<std::string>(root, "", "beta_mode", "uniform"));

    const std::string rule_tag = require<std::string>(root, "", "aggregation");
    AggregationRule rule;
    try {
        rule = AggregationMethod::parse_rule(rule_tag);
    } catch (const std::exception& e) {
        fail("aggregation", e.what());
    }
    if (rule == AggregationRule::kPpa) {
        if (!root.contains("ppa_population")) {
            fail("ppa_population", "required when aggregation is 'ppa'");
        }
        const auto pop = require<std::size_t>(root, "", "ppa_population");
        if (pop == 0) fail("ppa_population", "must be >= 1");
        cfg.round.aggregation = AggregationMethod::ppa(pop);
    } else {
        if (root.contains("ppa_population")) {
            fail("ppa_population", "only valid when aggregation is 'ppa'");
        }
        cfg.round.aggregation = AggregationMethod{rule, 0};
    }

    if (root.contains("partition")) {
        const json& part = root.at("partition");
        if (!part.is_object()) fail("partition", "must be an object");
        reject_unknown_keys(part, "partition", {"kind", "concentration"});
        try {
            cfg.partition.kind = parse_partition_kind(
                get_or<std::string>(part, "partition", "kind", "iid"));
        } catch (const std::exception& e) {
            fail("partition.kind", e.what());
        }
        cfg.partition.concentration =
            get_or<double>(part, "partition", "concentration", 0.5);
        if (part.contains("concentration") &&
            cfg.partition.kind == PartitionKind::kIid) {
            fail("partition.concentration", "only valid for dirichlet");
        }
    }
    cfg.partition.num_clients = cfg.round.total_clients;

    cfg.model = get_or<std::vector<std::size_t>>(root, "", "model", cfg.model);
    if (cfg.model.empty()) fail("model", "needs at least one hidden width");
    for (std::size_t width : cfg.model) {
        if (width == 0) fail("model", "hidden widths must be >= 1");
    }

    cfg.eval_mc_samples =
        get_or<std::size_t>(root, "", "eval_mc_samples", 10);
    cfg.eval_stride = get_or<std::size_t>(root, "", "eval_stride", 1);
    cfg.ece_bins = get_or<std::size_t>(root, "", "ece_bins", 15);
    cfg.output = get_or<std::string>(root, "", "output", "results");
    cfg.record_timing = get_or<bool>(root, "", "record_timing", true);

    if (cfg.eval_mc_samples == 0) fail("eval_mc_samples", "must be >= 1");
    if (cfg.eval_stride == 0) fail("eval_stride", "must be >= 1");
    if (cfg.ece_bins == 0) fail("ece_bins", "must be >= 1");
    try {
        cfg.round.validate();
        cfg.partition.validate();
    } catch (const std::exception& e) {
        fail("(round config)", e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("config: cannot open " + path);
    }
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: " + path + ": " + e.what());
    }
    return parse_config(root);
}

json serialize(const ExperimentConfig& config) {
    json root;
    json ds;
    if (config.dataset.kind == DatasetKind::kSynthetic) {
        ds["kind"] = "synthetic";
        ds["classes"] = config.dataset.classes;
        ds["dims"] = config.dataset.dims;
        ds["samples"] = config.dataset.samples;
        ds["spread"] = config.dataset.spread;
    } else {
        ds["kind"] = "idx";
        ds["train_images"] = config.dataset.train_images;
        ds["train_labels"] = config.dataset.train_labels;
        ds["test_images"] = config.dataset.test_images;
        ds["test_labels"] = config.dataset.test_labels;
    }
    root["dataset"] = ds;

    json part;
    part["kind"] = config.partition.tag();
    if (config.partition.kind == PartitionKind::kDirichlet) {
        part["concentration"] = config.partition.concentration;
    }
    root["partition"] = part;

    root["model"] = config.model;
    root["total_clients"] = config.round.total_clients;
    root["fraction"] = config.round.fraction;
    root["rounds"] = config.round.rounds;
    root["local_epochs"] = config.round.local_epochs;
    root["batch_size"] = config.round.batch_size;
    root["lr"] = config.round.lr;
    root["momentum"] = config.round.momentum;
    root["weight_decay"] = config.round.weight_decay;
    root["aggregation"] = config.round.aggregation.tag();
    if (config.round.aggregation.rule == AggregationRule::kPpa) {
        root["ppa_population"] = config.round.aggregation.ppa_population;
    }
    root["beta_mode"] = beta_mode_tag(config.round.beta_mode);
    root["seed"] = config.round.seed;
    root["processes"] = config.round.processes;
    root["eval_mc_samples"] = config.eval_mc_samples;
    root["eval_stride"] = config.eval_stride;
    root["ece_bins"] = config.ece_bins;
    root["output"] = config.output;
    root["record_timing"] = config.record_timing;
    return root;
}

std::string config_hash(const ExperimentConfig& config) {
    json canon = serialize(config);
    // Execution-only keys do not change what gets computed, so they stay out
    // of the run identity: the same experiment run with a different worker
    // pool or output directory keeps the same hash.
    canon.erase("processes");
    canon.erase("output");
    canon.erase("record_timing");
    const std::string canonical = canon.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

Dataset build_train_set(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.dataset.kind == DatasetKind::kSynthetic) {
        return generate_synthetic(config.dataset.classes, config.dataset.dims,
                                  config.dataset.samples,
                                  config.dataset.spread,
                                  derive_seed(seed, {stream::kDataset, 0}));
    }
    return load_idx(config.dataset.train_images, config.dataset.train_labels);
}

Dataset build_test_set(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.dataset.kind == DatasetKind::kSynthetic) {
        return generate_synthetic(config.dataset.classes, config.dataset.dims,
                                  config.dataset.samples,
                                  config.dataset.spread,
                                  derive_seed(seed, {stream::kDataset, 1}));
    }
    return load_idx(config.dataset.test_images, config.dataset.test_labels);
}

}  // namespace fedvb
