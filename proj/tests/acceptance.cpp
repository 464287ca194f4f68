// Acceptance audit: one numbered criterion per invocation (01..10, or
// "all"). Each criterion prints its evidence and a final PASS/FAIL line;
// the exit code is the number of failed criteria. Tolerances are pinned
// here and are not tuning knobs.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedvb/aggregation.hpp"
#include "fedvb/config.hpp"
#include "fedvb/experiment.hpp"
#include "fedvb/fed_sim.hpp"
#include "fedvb/metrics.hpp"
#include "fedvb/rng.hpp"
#include "fedvb/vbnn.hpp"

using namespace fedvb;

namespace {

struct Check {
    std::string label;
    bool pass;
};

class Criterion {
  public:
    explicit Criterion(std::string id) : id_(std::move(id)) {}

    void expect(bool pass, const std::string& label) {
        checks_.push_back({label, pass});
        std::printf("  [%s] %s\n", pass ? "ok" : "FAIL", label.c_str());
    }

    template <typename T>
    void expect_lt(T lhs, T rhs, const std::string& label) {
        std::ostringstream os;
        os << label << " (" << lhs << " < " << rhs << ")";
        expect(lhs < rhs, os.str());
    }

    bool finish(double elapsed_seconds, double budget_seconds) {
        std::ostringstream os;
        os << "runtime " << elapsed_seconds << " s within " << budget_seconds
           << " s";
        expect(elapsed_seconds < budget_seconds, os.str());
        const bool pass = std::all_of(checks_.begin(), checks_.end(),
                                      [](const Check& c) { return c.pass; });
        std::printf("criterion %s: %s\n", id_.c_str(),
                    pass ? "PASS" : "FAIL");
        return pass;
    }

  private:
    std::string id_;
    std::vector<Check> checks_;
};

GaussianParams scalar(double mu, double sigma2) {
    return GaussianParams::scalar(mu, sigma2);
}

AggregationWeights weights(std::vector<double> betas) {
    AggregationWeights w;
    w.betas = std::move(betas);
    return w;
}

bool models_bitwise_equal(const VbnnModel& a, const VbnnModel& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].weights.mu != b.layers[l].weights.mu) return false;
        if (a.layers[l].weights.alpha != b.layers[l].weights.alpha) {
            return false;
        }
        if (a.layers[l].biases.mu != b.layers[l].biases.mu) return false;
        if (a.layers[l].biases.alpha != b.layers[l].biases.alpha) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 1. Closed-form aggregation suite on the two-client fixture.
bool criterion_01() {
    Criterion c("01");
    Stopwatch watch;
    const std::vector<GaussianParams> clients = {scalar(0.0, 1.0),
                                                 scalar(2.0, 3.0)};
    const auto w = weights({0.5, 0.5});

    const auto eaa = aggregate_eaa(clients, w);
    c.expect(std::abs(eaa.mu[0] - 1.0) < 1e-9 &&
                 std::abs(eaa.sigma2(0) - 2.0) < 1e-9,
             "eaa -> (1, 2) within 1e-9");
    const auto gaa = aggregate_gaa(clients, w);
    c.expect(std::abs(gaa.mu[0] - 1.0) < 1e-9 &&
                 std::abs(gaa.sigma2(0) - 1.0) < 1e-9,
             "gaa -> (1, 1) within 1e-9");
    const auto aalv = aggregate_aalv(clients, w);
    c.expect(std::abs(aalv.mu[0] - 1.0) < 1e-9 &&
                 std::abs(aalv.sigma2(0) - std::sqrt(3.0)) < 1e-9,
             "aalv -> (1, sqrt 3) within 1e-9");
    const auto cf = aggregate_cf(clients, w);
    c.expect(std::abs(cf.mu[0] - 0.5) < 1e-9 &&
                 std::abs(cf.sigma2(0) - 0.75) < 1e-9,
             "cf -> (0.5, 0.75) within 1e-9");

    // Pooled population is the equal-weight mixture: mean 1, variance 3,
    // fourth central moment 28, so SE(mean) = sqrt(3/N) and
    // SE(variance) = sqrt((28 - 3^2)/N).
    constexpr std::size_t kPopulation = 1'000'000;
    const double se_mean = std::sqrt(3.0 / kPopulation);
    const double se_var = std::sqrt(19.0 / kPopulation);
    const auto ppa = aggregate_ppa(clients, w, kPopulation, 42);
    {
        std::ostringstream os;
        os << "ppa mean " << ppa.mu[0] << " within 3 SE of 1 (SE " << se_mean
           << ")";
        c.expect(std::abs(ppa.mu[0] - 1.0) < 3.0 * se_mean, os.str());
    }
    {
        std::ostringstream os;
        os << "ppa variance " << ppa.sigma2(0) << " within 3 SE of 3 (SE "
           << se_var << ")";
        c.expect(std::abs(ppa.sigma2(0) - 3.0) < 3.0 * se_var, os.str());
    }
    return c.finish(watch.seconds(), 5.0);
}

// ---------------------------------------------------------------------------
// 2. Variance ordering across random instances.
bool criterion_02() {
    Criterion c("02");
    Stopwatch watch;
    std::mt19937_64 engine(20240214);
    std::uniform_int_distribution<std::size_t> k_dist(2, 20);
    std::uniform_real_distribution<double> mu_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> log_var(std::log(1e-4),
                                                   std::log(10.0));
    std::uniform_real_distribution<double> raw_beta(1e-3, 1.0);

    int gaa_ok = 0;
    int aalv_ok = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const std::size_t k = k_dist(engine);
        std::vector<GaussianParams> clients;
        std::vector<double> raw(k);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            clients.push_back(scalar(mu_dist(engine),
                                     std::exp(log_var(engine))));
            raw[i] = raw_beta(engine);
            total += raw[i];
        }
        for (double& b : raw) b /= total;
        const auto w = weights(raw);
        const double eaa = aggregate_eaa(clients, w).sigma2(0);
        const double gaa = aggregate_gaa(clients, w).sigma2(0);
        const double aalv = aggregate_aalv(clients, w).sigma2(0);
        if (gaa < eaa) ++gaa_ok;
        if (aalv <= eaa) ++aalv_ok;
    }
    c.expect(gaa_ok == trials, "sigma2_gaa < sigma2_eaa in 1000/1000");
    c.expect(aalv_ok == trials, "sigma2_aalv <= sigma2_eaa in 1000/1000");
    return c.finish(watch.seconds(), 5.0);
}

// ---------------------------------------------------------------------------
// 3. Analytic gradients vs central finite differences on a 4->5->3 MLP.
bool criterion_03() {
    Criterion c("03");
    Stopwatch watch;

    const std::vector<LayerSpec> spec = {{4, 5, Activation::kRelu},
                                         {5, 3, Activation::kNone}};
    VbnnModel model = init_model(spec, ModelMode::kVariational, 1234);
    const WeightSnapshot eps = sample_weights(model, 777);

    std::mt19937_64 engine = make_engine(4321);
    std::normal_distribution<double> unit;
    std::uniform_int_distribution<int> label(0, 2);
    const std::size_t batch = 8;
    std::vector<double> inputs(batch * 4);
    std::vector<int> labels(batch);
    for (double& x : inputs) x = unit(engine);
    for (int& y : labels) y = label(engine);
    const BatchView view{inputs, labels, batch, 4};

    const double kl_scale = 0.37;
    const double h = 1e-4;
    const WeightSnapshot snap = snapshot_from_eps(model, eps);
    const auto [loss0, cache] = elbo_loss(model, snap, view, kl_scale);
    (void)loss0;
    const ModelGrads grads = backward(model, snap, cache);

    const auto loss_at = [&](const VbnnModel& probe) {
        return elbo_loss(probe, snapshot_from_eps(probe, eps), view, kl_scale)
            .first;
    };

    double max_rel = 0.0;
    std::size_t checked = 0;
    for (std::size_t layer = 0; layer < model.layers.size(); ++layer) {
        for (bool weights_part : {true, false}) {
            for (bool mu_part : {true, false}) {
                VbnnModel probe = model;
                GaussianParams& tensor = weights_part
                                             ? probe.layers[layer].weights
                                             : probe.layers[layer].biases;
                std::vector<double>& values =
                    mu_part ? tensor.mu : tensor.alpha;
                const std::vector<double>& analytic =
                    mu_part ? (weights_part ? grads.layers[layer].mu_w
                                            : grads.layers[layer].mu_b)
                            : (weights_part ? grads.layers[layer].alpha_w
                                            : grads.layers[layer].alpha_b);
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const double saved = values[i];
                    values[i] = saved + h;
                    const double up = loss_at(probe);
                    values[i] = saved - h;
                    const double down = loss_at(probe);
                    values[i] = saved;
                    const double fd = (up - down) / (2.0 * h);
                    const double denom = std::max(
                        {std::abs(fd), std::abs(analytic[i]), 1e-8});
                    max_rel = std::max(max_rel,
                                       std::abs(fd - analytic[i]) / denom);
                    ++checked;
                }
            }
        }
    }
    {
        std::ostringstream os;
        os << "max relative error " << max_rel << " < 1e-3 over " << checked
           << " parameters";
        c.expect(max_rel < 1e-3, os.str());
    }
    return c.finish(watch.seconds(), 10.0);
}

// ---------------------------------------------------------------------------
// 4. KL closed form against hand values.
bool criterion_04() {
    Criterion c("04");
    Stopwatch watch;

    const auto single_param_kl = [](double mu, double alpha) {
        VbnnModel model;
        model.mode = ModelMode::kVariational;
        VbnnLayer layer;
        layer.spec = {1, 1, Activation::kNone};
        layer.weights = GaussianParams::zeros({1, 1});
        layer.biases = GaussianParams::zeros({1});
        layer.weights.mu[0] = mu;
        layer.weights.alpha[0] = alpha;
        model.layers.push_back(std::move(layer));
        return kl_to_prior(model);  // bias term contributes exactly zero
    };

    c.expect(std::abs(single_param_kl(0.0, 0.0) - 0.0) < 1e-9,
             "(mu=0, sigma2=1) -> 0");
    c.expect(std::abs(single_param_kl(1.0, 0.0) - 0.5) < 1e-9,
             "(mu=1, sigma2=1) -> 0.5");
    c.expect(std::abs(single_param_kl(0.0, 1.0) - 0.3591409142295225) < 1e-9,
             "(mu=0, alpha=1) -> 0.3591409");
    return c.finish(watch.seconds(), 5.0);
}

// ---------------------------------------------------------------------------
// Shared scaled-down federated workloads for criteria 5, 6, 8.

double final_spread(const RoundConfig& config, const PartitionSpec& spec,
                    const std::vector<std::size_t>& hidden,
                    const Dataset& train, const Dataset& test) {
    EvalConfig eval;
    eval.mc_samples = 3;
    eval.stride = config.rounds;  // only the final round needs metrics
    const ServerState server =
        run_federated(config, spec, hidden, train, test, eval);
    return server.history.back().metrics.spread_norm;
}

// 5. Spread ordering across the five rules, non-IID, 10 clients, T=30.
bool criterion_05() {
    Criterion c("05");
    Stopwatch watch;

    const std::vector<std::size_t> hidden = {16};
    int ordered_seeds = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset train = generate_synthetic(3, 6, 40, 0.3, 1000 + seed);
        const Dataset test = generate_synthetic(3, 6, 20, 0.3, 2000 + seed);

        RoundConfig base;
        base.total_clients = 10;
        base.fraction = 1.0;
        base.rounds = 30;
        base.local_epochs = 3;
        base.batch_size = 16;
        base.seed = seed;
        PartitionSpec spec;
        spec.kind = PartitionKind::kDirichlet;
        spec.concentration = 0.5;
        spec.num_clients = 10;

        std::map<std::string, double> spread;
        for (const auto& method :
             {AggregationMethod::eaa(), AggregationMethod::gaa(),
              AggregationMethod::aalv(), AggregationMethod::ppa(2000),
              AggregationMethod::cf()}) {
            RoundConfig run = base;
            run.aggregation = method;
            spread[method.tag()] =
                final_spread(run, spec, hidden, train, test);
        }
        const bool ordered =
            spread["cf"] < spread["eaa"] && spread["cf"] < spread["ppa"] &&
            spread["aalv"] < spread["eaa"] && spread["aalv"] < spread["ppa"] &&
            spread["gaa"] < spread["eaa"] && spread["gaa"] < spread["ppa"];
        if (ordered) ++ordered_seeds;
        std::printf(
            "  seed %llu spreads: eaa %.4f gaa %.4f aalv %.4f ppa %.4f cf "
            "%.4f -> %s\n",
            static_cast<unsigned long long>(seed), spread["eaa"],
            spread["gaa"], spread["aalv"], spread["ppa"], spread["cf"],
            ordered ? "ordered" : "not ordered");
    }
    {
        std::ostringstream os;
        os << "cf, aalv, gaa below eaa and ppa in " << ordered_seeds
           << "/5 seeds (need >= 4)";
        c.expect(ordered_seeds >= 4, os.str());
    }
    return c.finish(watch.seconds(), 900.0);
}

// 6. Spread grows with client count for eaa but stays put for aalv.
bool criterion_06() {
    Criterion c("06");
    Stopwatch watch;

    const std::vector<std::size_t> hidden = {16};
    int eaa_grows = 0;
    int aalv_stable = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset train = generate_synthetic(3, 6, 300, 0.3, 3000 + seed);
        const Dataset test = generate_synthetic(3, 6, 30, 0.3, 4000 + seed);

        RoundConfig small;
        small.total_clients = 10;
        small.fraction = 1.0;
        small.rounds = 30;
        small.local_epochs = 10;
        small.batch_size = 16;
        small.seed = seed;
        PartitionSpec small_spec;
        small_spec.kind = PartitionKind::kDirichlet;
        small_spec.concentration = 0.5;
        small_spec.num_clients = 10;

        RoundConfig large = small;
        large.total_clients = 100;
        large.fraction = 0.1;
        large.rounds = 60;
        PartitionSpec large_spec = small_spec;
        large_spec.num_clients = 100;

        RoundConfig small_eaa = small;
        small_eaa.aggregation = AggregationMethod::eaa();
        RoundConfig large_eaa = large;
        large_eaa.aggregation = AggregationMethod::eaa();
        RoundConfig small_aalv = small;
        small_aalv.aggregation = AggregationMethod::aalv();
        RoundConfig large_aalv = large;
        large_aalv.aggregation = AggregationMethod::aalv();

        const double eaa_10 =
            final_spread(small_eaa, small_spec, hidden, train, test);
        const double eaa_100 =
            final_spread(large_eaa, large_spec, hidden, train, test);
        const double aalv_10 =
            final_spread(small_aalv, small_spec, hidden, train, test);
        const double aalv_100 =
            final_spread(large_aalv, large_spec, hidden, train, test);

        const double aalv_ratio = aalv_100 / aalv_10;
        if (eaa_100 > eaa_10) ++eaa_grows;
        if (aalv_ratio < 2.0 && aalv_ratio > 0.5) ++aalv_stable;
        std::printf(
            "  seed %llu: eaa 10c %.4f vs 100c %.4f; aalv 10c %.4f vs 100c "
            "%.4f (ratio %.3f)\n",
            static_cast<unsigned long long>(seed), eaa_10, eaa_100, aalv_10,
            aalv_100, aalv_ratio);
    }
    {
        std::ostringstream os;
        os << "eaa spread grows with 100 clients in " << eaa_grows
           << "/5 seeds (need >= 4)";
        c.expect(eaa_grows >= 4, os.str());
    }
    {
        std::ostringstream os;
        os << "aalv spread changes < 2x in " << aalv_stable
           << "/5 seeds (need >= 4)";
        c.expect(aalv_stable >= 4, os.str());
    }
    return c.finish(watch.seconds(), 2700.0);
}

// ---------------------------------------------------------------------------
// 7. Parallel speedup with a >= 1 s client workload plus bit-identity.
bool criterion_07() {
    Criterion c("07");
    Stopwatch watch;

    const std::vector<std::size_t> hidden = {256, 128};
    const Dataset train = generate_synthetic(3, 64, 1350, 0.3, 7100);
    const Dataset test = generate_synthetic(3, 64, 10, 0.3, 7200);

    RoundConfig base;
    base.total_clients = 10;
    base.fraction = 1.0;
    base.rounds = 2;
    base.batch_size = 32;
    base.seed = 7;
    base.aggregation = AggregationMethod::gaa();
    PartitionSpec spec;
    spec.kind = PartitionKind::kIid;
    spec.num_clients = 10;

    // Calibrate local_epochs so one client update costs at least a second.
    {
        const auto parts = partition_iid(
            train.labels, base.total_clients,
            derive_seed(base.seed, {stream::kPartition}));
        ClientState probe;
        probe.id = 0;
        probe.indices = parts[0];
        const auto layout = make_mlp_spec(train.dim, hidden, 3);
        const VbnnModel global =
            init_model(layout, ModelMode::kVariational, 1);
        RoundConfig one_epoch = base;
        one_epoch.local_epochs = 1;
        Stopwatch probe_watch;
        (void)client_update(global, probe, train, one_epoch, 5);
        const double per_epoch = probe_watch.seconds();
        base.local_epochs = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(1.2 / per_epoch)), 1, 64);
        Stopwatch confirm_watch;
        (void)client_update(global, probe, train, base, 5);
        const double per_update = confirm_watch.seconds();
        std::printf("  calibrated local_epochs=%zu, client update %.2f s\n",
                    base.local_epochs, per_update);
        c.expect(per_update >= 1.0, "workload >= 1 s per client update");
    }

    EvalConfig eval;
    eval.mc_samples = 1;
    eval.stride = base.rounds;

    RoundConfig serial = base;
    serial.processes = 1;
    const ServerState run_p1 =
        run_federated(serial, spec, hidden, train, test, eval);
    double tpc_p1 = 0.0;
    for (const auto& r : run_p1.history) tpc_p1 += r.tpc_seconds;
    tpc_p1 /= static_cast<double>(run_p1.history.size());

    RoundConfig parallel = base;
    parallel.processes = 10;
    const ServerState run_p10 =
        run_federated(parallel, spec, hidden, train, test, eval);
    double tpc_p10 = 0.0;
    for (const auto& r : run_p10.history) tpc_p10 += r.tpc_seconds;
    tpc_p10 /= static_cast<double>(run_p10.history.size());

    std::printf(
        "  mean tpc: P=1 %.2f s, P=10 %.2f s (ratio %.3f); "
        "hardware_concurrency=%u\n",
        tpc_p1, tpc_p10, tpc_p10 / tpc_p1,
        std::thread::hardware_concurrency());
    c.expect(models_bitwise_equal(run_p1.global, run_p10.global),
             "global models bit-identical across P");
    {
        std::ostringstream os;
        os << "tpc(P=10) " << tpc_p10 << " < 0.6 x tpc(P=1) "
           << 0.6 * tpc_p1;
        c.expect(tpc_p10 < 0.6 * tpc_p1, os.str());
    }
    return c.finish(watch.seconds(), 540.0);
}

// ---------------------------------------------------------------------------
// 8. Convergence smoke for the probabilistic and point baselines.
bool criterion_08() {
    Criterion c("08");
    Stopwatch watch;

    const std::vector<std::size_t> hidden = {16};
    int variational_ok = 0;
    int fedavg_ok = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset train = generate_synthetic(3, 4, 600, 0.2, 8100 + seed);
        const Dataset test = generate_synthetic(3, 4, 50, 0.2, 8200 + seed);

        RoundConfig base;
        base.total_clients = 10;
        base.fraction = 1.0;
        base.rounds = 20;
        base.local_epochs = 5;
        base.batch_size = 4;
        base.seed = seed;
        PartitionSpec spec;
        spec.kind = PartitionKind::kIid;
        spec.num_clients = 10;
        EvalConfig eval;
        eval.mc_samples = 10;
        eval.stride = base.rounds;

        RoundConfig variational = base;  // Gaussian rule, uniform betas
        variational.aggregation = AggregationMethod::gaa();
        const ServerState var_run =
            run_federated(variational, spec, hidden, train, test, eval);
        const MetricsReport var_metrics = var_run.history.back().metrics;
        const bool var_pass =
            var_metrics.accuracy >= 0.9 && var_metrics.ece < 0.15;
        if (var_pass) ++variational_ok;

        RoundConfig fedavg = base;  // deterministic, proportional betas
        fedavg.aggregation = AggregationMethod::point();
        fedavg.beta_mode = BetaMode::kProportional;
        const ServerState det_run =
            run_federated(fedavg, spec, hidden, train, test, eval);
        const double det_acc = det_run.history.back().metrics.accuracy;
        if (det_acc >= 0.9) ++fedavg_ok;

        std::printf(
            "  seed %llu: variational gaa acc %.3f ece %.3f %s; fedavg acc %.3f "
            "%s\n",
            static_cast<unsigned long long>(seed), var_metrics.accuracy,
            var_metrics.ece, var_pass ? "ok" : "miss", det_acc,
            det_acc >= 0.9 ? "ok" : "miss");
    }
    {
        std::ostringstream os;
        os << "variational gaa reaches acc >= 0.9 and ece < 0.15 in " << variational_ok
           << "/5 seeds (need >= 4)";
        c.expect(variational_ok >= 4, os.str());
    }
    {
        std::ostringstream os;
        os << "fedavg reaches acc >= 0.9 in " << fedavg_ok
           << "/5 seeds (need >= 4)";
        c.expect(fedavg_ok >= 4, os.str());
    }
    return c.finish(watch.seconds(), 600.0);
}

// ---------------------------------------------------------------------------
// 9. Metric oracles.
double brute_force_ece(const std::vector<double>& probs,
                       const std::vector<int>& labels,
                       std::size_t num_classes, std::size_t num_bins) {
    const std::size_t n = labels.size();
    const double m = static_cast<double>(num_bins);
    double total = 0.0;
    for (std::size_t b = 0; b < num_bins; ++b) {
        const double lo = static_cast<double>(b) / m;
        const double hi = static_cast<double>(b + 1) / m;
        std::size_t count = 0;
        double conf_sum = 0.0;
        double acc_sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double* row = probs.data() + r * num_classes;
            std::size_t pred = 0;
            for (std::size_t cl = 1; cl < num_classes; ++cl) {
                if (row[cl] > row[pred]) pred = cl;
            }
            const double conf = row[pred];
            if (!(conf > lo && conf <= hi)) continue;
            ++count;
            conf_sum += conf;
            acc_sum += pred == static_cast<std::size_t>(labels[r]) ? 1.0 : 0.0;
        }
        if (count == 0) continue;
        const double cnt = static_cast<double>(count);
        total += (cnt / static_cast<double>(n)) *
                 std::abs(acc_sum / cnt - conf_sum / cnt);
    }
    return total;
}

bool criterion_09() {
    Criterion c("09");
    Stopwatch watch;

    std::mt19937_64 engine(909);
    std::uniform_int_distribution<std::size_t> class_dist(2, 10);
    std::uniform_int_distribution<std::size_t> batch_dist(1, 100);
    std::uniform_int_distribution<std::size_t> bins_dist(1, 20);
    std::normal_distribution<double> logit;
    std::uniform_real_distribution<double> temp(0.25, 4.0);

    int exact = 0;
    const int fixtures = 200;
    for (int t = 0; t < fixtures; ++t) {
        const std::size_t classes = class_dist(engine);
        const std::size_t batch = batch_dist(engine);
        const std::size_t bins = bins_dist(engine);
        const double tau = temp(engine);
        std::vector<double> probs(batch * classes);
        std::vector<int> labels(batch);
        std::uniform_int_distribution<int> label(0,
                                                 static_cast<int>(classes) -
                                                     1);
        for (std::size_t r = 0; r < batch; ++r) {
            double* row = probs.data() + r * classes;
            double mx = -1e300;
            for (std::size_t cl = 0; cl < classes; ++cl) {
                row[cl] = logit(engine) * tau;
                mx = std::max(mx, row[cl]);
            }
            double sum = 0.0;
            for (std::size_t cl = 0; cl < classes; ++cl) {
                row[cl] = std::exp(row[cl] - mx);
                sum += row[cl];
            }
            for (std::size_t cl = 0; cl < classes; ++cl) row[cl] /= sum;
            labels[r] = label(engine);
        }
        if (ece(probs, labels, classes, bins) ==
            brute_force_ece(probs, labels, classes, bins)) {
            ++exact;
        }
    }
    {
        std::ostringstream os;
        os << "ece equals brute-force binning in " << exact << "/" << fixtures
           << " fixtures";
        c.expect(exact == fixtures, os.str());
    }

    {
        const std::size_t classes = 10;
        const std::size_t batch = 16;
        std::vector<double> probs(batch * classes, 0.1);
        std::vector<int> labels(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            labels[i] = static_cast<int>(i % classes);
        }
        const double v = nll(probs, labels, classes);
        std::ostringstream os;
        os << "uniform 10-class nll " << v << " = ln 10 within 1e-9";
        c.expect(std::abs(v - std::log(10.0)) < 1e-9, os.str());
    }

    {
        // Uniform rows tie every class; argmax must resolve to class 0.
        const std::vector<double> probs = {0.25, 0.25, 0.25, 0.25,
                                           0.25, 0.25, 0.25, 0.25};
        const std::vector<int> labels = {0, 1};
        c.expect(accuracy(probs, labels, 4) == 0.5,
                 "tie-break to the lowest class index (accuracy 0.5)");
    }
    return c.finish(watch.seconds(), 30.0);
}

// ---------------------------------------------------------------------------
// 10. Byte-identical results CSVs for repeated (config, seed) runs.
bool criterion_10() {
    Criterion c("10");
    Stopwatch watch;

    nlohmann::json j{
        {"dataset",
         {{"kind", "synthetic"},
          {"classes", 3},
          {"dims", 4},
          {"samples", 30},
          {"spread", 0.3}}},
        {"aggregation", "gaa"},
        {"total_clients", 6},
        {"rounds", 3},
        {"local_epochs", 2},
        {"batch_size", 16},
        {"model", {12}},
        {"eval_mc_samples", 3},
        {"record_timing", false},
    };
    ExperimentConfig config = parse_config(j);

    const auto run_to = [&](const std::string& dir,
                            std::size_t processes) -> std::string {
        ExperimentConfig run = config;
        run.output = dir;
        run.round.processes = processes;
        const std::vector<std::uint64_t> seeds = {0, 1};
        const ExperimentOutput out = run_experiment(run, seeds);
        std::ifstream in(out.results_csv, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };

    const auto base = std::filesystem::temp_directory_path() / "fedvb_c10";
    const std::string a = run_to((base / "a").string(), 1);
    const std::string b = run_to((base / "b").string(), 1);
    c.expect(!a.empty() && a == b,
             "repeated run produces byte-identical results.csv");
    const std::string p = run_to((base / "p").string(), 4);
    c.expect(a == p, "results.csv is byte-identical with a parallel pool");
    return c.finish(watch.seconds(), 540.0);
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<std::string, std::function<bool()>> criteria = {
        {"01", criterion_01}, {"02", criterion_02}, {"03", criterion_03},
        {"04", criterion_04}, {"05", criterion_05}, {"06", criterion_06},
        {"07", criterion_07}, {"08", criterion_08}, {"09", criterion_09},
        {"10", criterion_10},
    };

    std::vector<std::string> selected;
    if (argc < 2 || std::string(argv[1]) == "all") {
        for (const auto& [id, fn] : criteria) selected.push_back(id);
    } else {
        for (int i = 1; i < argc; ++i) {
            std::string id = argv[i];
            if (id.size() == 1) id = "0" + id;
            if (!criteria.contains(id)) {
                std::cerr << "unknown criterion '" << argv[i]
                          << "' (expected 01..10 or all)\n";
                return 2;
            }
            selected.push_back(id);
        }
    }

    int failures = 0;
    for (const std::string& id : selected) {
        std::printf("criterion %s:\n", id.c_str());
        if (!criteria.at(id)()) ++failures;
    }
    if (selected.size() > 1) {
        std::printf("%zu/%zu criteria passed\n", selected.size() - failures,
                    selected.size());
    }
    return failures;
}
