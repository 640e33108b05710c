// Experiment CLI: seeded clustering runs, the multi-trial averaging protocol,
// k sweeps, and figure-data export. All options can come from a config file
// (key=value with [subcommand] sections) and every config key is overridable
// by the command-line flag of the same name.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evfkm/evfkm.hpp"

namespace {

struct CommonArgs {
    std::string data;
    std::string label_column;
    std::string delimiter = ",";
    std::string scaling = "minmax";
    std::string method = "evfkm";
    double fuzzifier = 2.0;
    std::size_t max_iter = 100;
    double tol = 1e-6;
    bool no_adaptive = false;
};

void add_common_options(CLI::App* sub, CommonArgs& args) {
    sub->fallthrough();  // lets the global --seed/--out/--quiet appear after the verb
    sub->add_option("--data", args.data, "Dataset file (delimited text)")->required();
    sub->add_option("--label-column", args.label_column,
                    "Ground-truth column: 0-based index or header name");
    sub->add_option("--delimiter", args.delimiter, "Field delimiter (single character or 'tab')");
    sub->add_option("--scaling", args.scaling, "Feature scaling")
        ->check(CLI::IsMember({"minmax", "zscore", "none"}));
    sub->add_option("--method", args.method, "Clustering method")
        ->check(CLI::IsMember({"evfkm", "kmeans", "fcm"}));
    sub->add_option("--fuzzifier", args.fuzzifier, "FCM fuzzifier exponent (> 1)");
    sub->add_option("--max-iter", args.max_iter, "Iteration cap");
    sub->add_option("--tol", args.tol, "Relative objective-change stopping threshold");
    sub->add_flag("--no-adaptive", args.no_adaptive,
                  "Freeze lambda/gamma at K1/K2 instead of updating them per iteration");
}

char resolve_delimiter(const std::string& spec) {
    if (spec == "tab" || spec == "\\t") return '\t';
    if (spec.size() != 1) throw CLI::ValidationError("--delimiter expects a single character or 'tab'");
    return spec[0];
}

evfkm::ExperimentConfig make_config(const CommonArgs& args, std::uint64_t seed,
                                    const std::string& out) {
    evfkm::ExperimentConfig config;
    config.dataset_path = args.data;
    if (!args.label_column.empty()) config.label_column = args.label_column;
    config.delimiter = resolve_delimiter(args.delimiter);
    config.scaling = evfkm::scaling_from_name(args.scaling).value();
    config.method = evfkm::method_from_name(args.method).value();
    config.fuzzifier = args.fuzzifier;
    config.adaptive_params = !args.no_adaptive;
    config.base_seed = seed;
    config.tol = args.tol;
    config.max_iter = args.max_iter;
    config.out_dir = out;
    return config;
}

evfkm::ClusterModel run_single_fit(const evfkm::Dataset& data, const evfkm::ExperimentConfig& config,
                                   std::size_t k, double k1, double k2) {
    if (config.method == evfkm::Method::Evfkm) {
        evfkm::FitOptions opts;
        opts.k = k;
        opts.k1 = k1;
        opts.k2 = k2;
        opts.max_iter = config.max_iter;
        opts.tol = config.tol;
        opts.seed = config.base_seed;
        opts.adaptive_params = config.adaptive_params;
        return evfkm::fit(data, opts);
    }
    evfkm::BaselineOptions opts;
    opts.k = k;
    opts.fuzzifier = config.fuzzifier;
    opts.max_iter = config.max_iter;
    opts.tol = config.tol;
    opts.seed = config.base_seed;
    return config.method == evfkm::Method::Kmeans ? evfkm::kmeans_fit(data, opts)
                                                  : evfkm::fcm_fit(data, opts);
}

nlohmann::ordered_json fit_summary_json(const evfkm::Dataset& data, const evfkm::ClusterModel& model,
                                        const evfkm::ExperimentConfig& config, std::size_t k,
                                        double k1, double k2) {
    using evfkm::detail::json_num;
    nlohmann::ordered_json j;
    j["dataset"] = {{"name", data.name}, {"n", data.n()}, {"m", data.m()}, {"classes", data.num_classes()}};
    j["method"] = std::string(evfkm::method_name(config.method));
    j["k"] = k;
    j["k1"] = k1;
    j["k2"] = k2;
    j["seed"] = config.base_seed;
    j["scaling"] = std::string(evfkm::scaling_name(config.scaling));
    j["iterations"] = model.iterations;
    j["converged"] = model.converged;
    j["objective"] = json_num(model.objective_trace.empty() ? 0.0 : model.objective_trace.back());

    const auto pred = evfkm::harden(model.U);
    j["pc"] = json_num(evfkm::partition_coefficient(model.U));
    j["ce"] = json_num(evfkm::classification_entropy(model.U));
    j["xb"] = k >= 2 ? json_num(evfkm::xie_beni(data, model.U, model.V)) : nlohmann::ordered_json(nullptr);
    std::vector<int> distinct(pred.begin(), pred.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    j["di"] = distinct.size() >= 2 ? json_num(evfkm::dunn_index(data, pred))
                                   : nlohmann::ordered_json(nullptr);
    if (data.labels) {
        j["ar_pct"] = json_num(evfkm::accuracy_rate(pred, *data.labels) * 100.0);
        j["ri_pct"] = json_num(evfkm::rand_index(pred, *data.labels) * 100.0);
        j["nmi_pct"] = json_num(evfkm::nmi(pred, *data.labels) * 100.0);
    } else {
        j["ar_pct"] = nullptr;
        j["ri_pct"] = nullptr;
        j["nmi_pct"] = nullptr;
    }
    return j;
}

void print_fit_summary(const nlohmann::ordered_json& j, std::ostream& out) {
    out << "dataset " << j["dataset"]["name"].get<std::string>() << ": n=" << j["dataset"]["n"]
        << " m=" << j["dataset"]["m"] << " classes=" << j["dataset"]["classes"] << '\n';
    out << j["method"].get<std::string>() << " k=" << j["k"] << " seed=" << j["seed"] << ": "
        << j["iterations"] << " iterations" << (j["converged"].get<bool>() ? " (converged)" : "")
        << ", objective " << j["objective"] << '\n';
    if (!j["ar_pct"].is_null())
        out << "AR " << j["ar_pct"] << "%  RI " << j["ri_pct"] << "%  NMI " << j["nmi_pct"] << "%\n";
    out << "PC " << j["pc"] << "  CE " << j["ce"] << "  XB " << j["xb"] << "  DI " << j["di"] << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entropy-regularized variable-feature-weight fuzzy k-means experiments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (key=value, [subcommand] sections)");

    std::uint64_t seed = 0;
    std::string out = "out";
    bool quiet = false;
    app.add_option("--seed", seed, "Base random seed")->configurable(true);
    app.add_option("--out", out, "Output directory")->configurable(true);
    app.add_flag("--quiet", quiet, "Suppress progress output")->configurable(true);

    // fit: one seeded run
    auto* fit_cmd = app.add_subcommand("fit", "Run a single seeded fit and write fit_summary.json");
    fit_cmd->configurable();
    CommonArgs fit_args;
    std::size_t fit_k = 2;
    double fit_k1 = 1.0, fit_k2 = 1.0;
    add_common_options(fit_cmd, fit_args);
    fit_cmd->add_option("--k", fit_k, "Number of clusters");
    fit_cmd->add_option("--k1", fit_k1, "Membership-entropy constant K1");
    fit_cmd->add_option("--k2", fit_k2, "Weight-entropy constant K2");

    // experiment: trial protocol at one k
    auto* exp_cmd = app.add_subcommand(
        "experiment", "Run the multi-trial protocol over a K1/K2 grid and write summary/trials");
    exp_cmd->configurable();
    CommonArgs exp_args;
    std::size_t exp_k = 2;
    std::size_t exp_trials = 10;
    std::vector<double> exp_k1 = {1.0}, exp_k2 = {1.0};
    add_common_options(exp_cmd, exp_args);
    exp_cmd->add_option("--k", exp_k, "Number of clusters");
    exp_cmd->add_option("--k1", exp_k1, "K1 grid values");
    exp_cmd->add_option("--k2", exp_k2, "K2 grid values");
    exp_cmd->add_option("--trials", exp_trials, "Trials per grid cell (seeds base..base+trials-1)");

    // sweep-k: trial protocol across a k range
    auto* sweep_cmd =
        app.add_subcommand("sweep-k", "Run the trial protocol for each k in a range");
    sweep_cmd->configurable();
    CommonArgs sweep_args;
    std::size_t k_min = 2, k_max = 6;
    std::size_t sweep_trials = 10;
    std::vector<double> sweep_k1 = {1.0}, sweep_k2 = {1.0};
    add_common_options(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--k-min", k_min, "Smallest k")->required();
    sweep_cmd->add_option("--k-max", k_max, "Largest k")->required();
    sweep_cmd->add_option("--k1", sweep_k1, "K1 grid values");
    sweep_cmd->add_option("--k2", sweep_k2, "K2 grid values");
    sweep_cmd->add_option("--trials", sweep_trials, "Trials per k and grid cell");

    // export-figures: seeded fit + figure-data files
    auto* figs_cmd = app.add_subcommand(
        "export-figures", "Run a single seeded fit and write weights/lambda/objective files");
    figs_cmd->configurable();
    CommonArgs figs_args;
    std::size_t figs_k = 2;
    double figs_k1 = 1.0, figs_k2 = 1.0;
    add_common_options(figs_cmd, figs_args);
    figs_cmd->add_option("--k", figs_k, "Number of clusters");
    figs_cmd->add_option("--k1", figs_k1, "Membership-entropy constant K1");
    figs_cmd->add_option("--k2", figs_k2, "Weight-entropy constant K2");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit_cmd) {
            auto config = make_config(fit_args, seed, out);
            config.ks = {fit_k};
            const auto data = evfkm::load_experiment_dataset(config);
            const auto model = run_single_fit(data, config, fit_k, fit_k1, fit_k2);
            const auto summary = fit_summary_json(data, model, config, fit_k, fit_k1, fit_k2);
            const auto path = std::filesystem::path(out) / "fit_summary.json";
            evfkm::detail::atomic_write(path, summary.dump(2) + "\n");
            if (!quiet) {
                print_fit_summary(summary, std::cout);
                std::cout << "wrote " << path.string() << '\n';
            }
        } else if (*exp_cmd) {
            auto config = make_config(exp_args, seed, out);
            config.ks = {exp_k};
            config.k1_grid = exp_k1;
            config.k2_grid = exp_k2;
            config.trials = exp_trials;
            const auto result = evfkm::run_experiment(config);
            if (!quiet) {
                const auto& best = result.cells[result.best_cell];
                std::cout << "dataset " << result.dataset_name << ": n=" << result.n
                          << " m=" << result.m << " classes=" << result.classes << '\n';
                std::cout << "ran " << result.cells.size() << " grid cell(s) x " << config.trials
                          << " trial(s), best cell";
                if (best.k1) std::cout << " K1=" << *best.k1 << " K2=" << *best.k2;
                std::cout << '\n';
                std::cout << "wrote " << result.summary_path.string() << ", "
                          << result.trials_path.string() << ", " << result.timings_path.string()
                          << '\n';
            }
        } else if (*sweep_cmd) {
            if (k_min < 2 || k_max < k_min)
                throw std::invalid_argument("sweep-k: need 2 <= k-min <= k-max");
            auto config = make_config(sweep_args, seed, out);
            config.ks.clear();
            for (std::size_t k = k_min; k <= k_max; ++k) config.ks.push_back(k);
            config.k1_grid = sweep_k1;
            config.k2_grid = sweep_k2;
            config.trials = sweep_trials;
            const auto result = evfkm::sweep_k(config);
            if (!quiet)
                std::cout << "swept k=" << k_min << ".." << k_max << ", wrote "
                          << result.summary_path.string() << ", " << result.trials_path.string()
                          << '\n';
        } else if (*figs_cmd) {
            auto config = make_config(figs_args, seed, out);
            config.ks = {figs_k};
            const auto data = evfkm::load_experiment_dataset(config);
            const auto model = run_single_fit(data, config, figs_k, figs_k1, figs_k2);
            evfkm::export_figures(model, data, out);
            if (!quiet)
                std::cout << "wrote " << (std::filesystem::path(out) / "weights.csv").string()
                          << ", lambda_trace.csv, objective_trace.csv\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
