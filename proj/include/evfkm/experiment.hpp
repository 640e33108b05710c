#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evfkm/baselines.hpp"
#include "evfkm/dataset.hpp"
#include "evfkm/fit.hpp"
#include "evfkm/metrics.hpp"

namespace evfkm {

enum class Method { Evfkm, Kmeans, Fcm };

inline std::optional<Method> method_from_name(std::string_view s) {
    if (s == "evfkm") return Method::Evfkm;
    if (s == "kmeans") return Method::Kmeans;
    if (s == "fcm") return Method::Fcm;
    return std::nullopt;
}

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::Evfkm: return "evfkm";
        case Method::Kmeans: return "kmeans";
        default: return "fcm";
    }
}

struct ExperimentConfig {
    std::string dataset_path;
    std::optional<std::string> label_column;
    char delimiter = ',';
    Scaling scaling = Scaling::MinMax;
    Method method = Method::Evfkm;
    std::vector<std::size_t> ks = {2};     // one k for experiment, a range for sweep-k
    std::vector<double> k1_grid = {1.0};
    std::vector<double> k2_grid = {1.0};
    double fuzzifier = 2.0;
    bool adaptive_params = true;
    std::size_t trials = 10;
    std::uint64_t base_seed = 0;
    double tol = 1e-6;
    std::size_t max_iter = 100;
    std::string out_dir = "out";

    void validate() const {
        if (dataset_path.empty()) throw std::invalid_argument("config: dataset path required");
        if (ks.empty()) throw std::invalid_argument("config: k range is empty");
        for (std::size_t k : ks)
            if (k < 2) throw std::invalid_argument("config: k must be at least 2 for experiments");
        if (k1_grid.empty() || k2_grid.empty())
            throw std::invalid_argument("config: K1/K2 grids must be non-empty");
        if (trials < 1) throw std::invalid_argument("config: trials must be at least 1");
    }
};

// One seeded run. External metrics are absent when the dataset carries no
// ground truth; metric values are stored as raw fractions.
struct TrialReport {
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    bool converged = false;
    double final_objective = 0.0;
    std::optional<double> ar, ri, nmi;
    double pc = 0.0;
    double ce = 0.0;
    double xb = 0.0;
    double di = 0.0;
    double wall_ms = 0.0;
};

struct GridCell {
    std::size_t k = 2;
    std::optional<double> k1, k2;  // absent for baseline methods
    std::vector<TrialReport> trials;
};

struct ExperimentResult {
    std::string dataset_name;
    std::size_t n = 0, m = 0, classes = 0;
    std::vector<GridCell> cells;
    std::size_t best_cell = 0;
    std::filesystem::path summary_path, trials_path, timings_path;
};

struct SweepResult {
    std::vector<GridCell> rows;  // best cell per k, ascending k
    std::filesystem::path summary_path, trials_path;
};

namespace detail {

// All floats in report files go through this: 6 significant digits.
inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Weight rows are simplex-constrained; 12 significant digits keep the row
// sums within 5e-12 of 1 after a parse round-trip, which 6 digits cannot.
inline std::string fmt_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_g(*v) : "NA"; }

// JSON value rounded to the same 6 significant digits as the delimited
// output; non-finite values become null.
inline nlohmann::ordered_json json_num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::stod(fmt_g(v));
}

inline nlohmann::ordered_json json_opt(const std::optional<double>& v) {
    return v ? json_num(*v) : nlohmann::ordered_json(nullptr);
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
        out << content;
        if (!out.flush()) throw std::runtime_error(tmp.string() + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
};

template <typename Extract>
Aggregate aggregate(const std::vector<TrialReport>& trials, Extract&& extract) {
    Aggregate agg;
    const double count = static_cast<double>(trials.size());
    for (const auto& t : trials) agg.mean += extract(t);
    agg.mean /= count;
    if (trials.size() > 1) {
        double ss = 0.0;
        for (const auto& t : trials) {
            const double d = extract(t) - agg.mean;
            ss += d * d;
        }
        agg.stddev = std::sqrt(ss / (count - 1.0));
    }
    return agg;
}

inline TrialReport run_trial(const Dataset& data, const ExperimentConfig& config, std::size_t k,
                             double k1, double k2, std::uint64_t seed) {
    TrialReport report;
    report.seed = seed;

    const auto start = std::chrono::steady_clock::now();
    ClusterModel model;
    switch (config.method) {
        case Method::Evfkm: {
            FitOptions opts;
            opts.k = k;
            opts.k1 = k1;
            opts.k2 = k2;
            opts.max_iter = config.max_iter;
            opts.tol = config.tol;
            opts.seed = seed;
            opts.adaptive_params = config.adaptive_params;
            model = fit(data, opts);
            break;
        }
        case Method::Kmeans:
        case Method::Fcm: {
            BaselineOptions opts;
            opts.k = k;
            opts.fuzzifier = config.fuzzifier;
            opts.max_iter = config.max_iter;
            opts.tol = config.tol;
            opts.seed = seed;
            model = config.method == Method::Kmeans ? kmeans_fit(data, opts) : fcm_fit(data, opts);
            break;
        }
    }
    const auto stop = std::chrono::steady_clock::now();
    report.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();

    report.iterations = model.iterations;
    report.converged = model.converged;
    report.final_objective = model.objective_trace.empty() ? 0.0 : model.objective_trace.back();

    const auto pred = harden(model.U);
    report.pc = partition_coefficient(model.U);
    report.ce = classification_entropy(model.U);
    report.xb = xie_beni(data, model.U, model.V);

    // hardening can leave fewer than 2 occupied clusters; the index is
    // undefined there and reported as nan
    std::vector<int> distinct(pred.begin(), pred.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    report.di = distinct.size() >= 2 ? dunn_index(data, pred)
                                     : std::numeric_limits<double>::quiet_NaN();

    if (data.labels) {
        report.ar = accuracy_rate(pred, *data.labels);
        report.ri = rand_index(pred, *data.labels);
        report.nmi = nmi(pred, *data.labels);
    }
    return report;
}

inline GridCell run_cell(const Dataset& data, const ExperimentConfig& config, std::size_t k,
                         double k1, double k2) {
    GridCell cell;
    cell.k = k;
    if (config.method == Method::Evfkm) {
        cell.k1 = k1;
        cell.k2 = k2;
    }
    cell.trials.reserve(config.trials);
    for (std::size_t t = 0; t < config.trials; ++t)
        cell.trials.push_back(run_trial(data, config, k, k1, k2, config.base_seed + t));
    return cell;
}

inline std::vector<GridCell> run_grid(const Dataset& data, const ExperimentConfig& config,
                                      std::size_t k) {
    std::vector<GridCell> cells;
    if (config.method == Method::Evfkm) {
        for (double k1 : config.k1_grid)
            for (double k2 : config.k2_grid) cells.push_back(run_cell(data, config, k, k1, k2));
    } else {
        cells.push_back(run_cell(data, config, k, 1.0, 1.0));
    }
    return cells;
}

// Grid selection: score cells by mean accuracy when ground truth exists,
// mean partition coefficient otherwise, then apply the one-standard-error
// rule — among cells whose score is within one standard error of the best,
// keep the crispest (highest mean PC). Ties keep the earliest cell.
inline std::size_t select_best_cell(const std::vector<GridCell>& cells, bool labeled) {
    std::vector<Aggregate> scores(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
        scores[c] = labeled
                        ? aggregate(cells[c].trials, [](const TrialReport& t) { return t.ar.value_or(0.0); })
                        : aggregate(cells[c].trials, [](const TrialReport& t) { return t.pc; });

    std::size_t top = 0;
    for (std::size_t c = 1; c < cells.size(); ++c)
        if (scores[c].mean > scores[top].mean) top = c;
    const double n_trials = static_cast<double>(cells[top].trials.size());
    const double cutoff = scores[top].mean - scores[top].stddev / std::sqrt(n_trials);

    std::size_t best = top;
    double best_pc = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (scores[c].mean < cutoff) continue;
        const double pc = aggregate(cells[c].trials, [](const TrialReport& t) { return t.pc; }).mean;
        if (pc > best_pc) {
            best_pc = pc;
            best = c;
        }
    }
    return best;
}

inline const char* kTrialHeader =
    "k,k1,k2,trial,seed,iterations,converged,objective,ar_pct,ri_pct,nmi_pct,pc,ce,xb,di";

inline void append_trial_rows(std::ostringstream& out, const GridCell& cell) {
    for (std::size_t t = 0; t < cell.trials.size(); ++t) {
        const TrialReport& r = cell.trials[t];
        auto pct = [](const std::optional<double>& v) -> std::optional<double> {
            if (!v) return std::nullopt;
            return *v * 100.0;
        };
        out << cell.k << ',' << fmt_opt(cell.k1) << ',' << fmt_opt(cell.k2) << ',' << t << ','
            << r.seed << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
            << fmt_g(r.final_objective) << ',' << fmt_opt(pct(r.ar)) << ',' << fmt_opt(pct(r.ri))
            << ',' << fmt_opt(pct(r.nmi)) << ',' << fmt_g(r.pc) << ',' << fmt_g(r.ce) << ','
            << fmt_g(r.xb) << ',' << fmt_g(r.di) << '\n';
    }
}

inline nlohmann::ordered_json cell_summary_json(const GridCell& cell, bool labeled) {
    auto pct_of = [](std::optional<double> TrialReport::*field) {
        return [field](const TrialReport& t) { return (t.*field).value_or(0.0) * 100.0; };
    };
    nlohmann::ordered_json mean, stddev;
    auto put = [&](const char* key, auto&& extract, bool present) {
        if (!present) {
            mean[key] = nullptr;
            stddev[key] = nullptr;
            return;
        }
        const Aggregate agg = aggregate(cell.trials, extract);
        mean[key] = json_num(agg.mean);
        stddev[key] = json_num(agg.stddev);
    };
    put("objective", [](const TrialReport& t) { return t.final_objective; }, true);
    put("iterations", [](const TrialReport& t) { return static_cast<double>(t.iterations); }, true);
    put("ar_pct", pct_of(&TrialReport::ar), labeled);
    put("ri_pct", pct_of(&TrialReport::ri), labeled);
    put("nmi_pct", pct_of(&TrialReport::nmi), labeled);
    put("pc", [](const TrialReport& t) { return t.pc; }, true);
    put("ce", [](const TrialReport& t) { return t.ce; }, true);
    put("xb", [](const TrialReport& t) { return t.xb; }, true);
    put("di", [](const TrialReport& t) { return t.di; }, true);

    std::size_t converged = 0;
    for (const auto& t : cell.trials) converged += t.converged ? 1 : 0;

    nlohmann::ordered_json out;
    out["k"] = cell.k;
    out["k1"] = json_opt(cell.k1);
    out["k2"] = json_opt(cell.k2);
    out["mean"] = std::move(mean);
    out["stddev"] = std::move(stddev);
    out["converged_trials"] = converged;
    return out;
}

inline nlohmann::ordered_json config_json(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["dataset"] = config.dataset_path;
    j["label_column"] = config.label_column ? nlohmann::ordered_json(*config.label_column)
                                            : nlohmann::ordered_json(nullptr);
    j["delimiter"] = std::string(1, config.delimiter);
    j["scaling"] = std::string(scaling_name(config.scaling));
    j["method"] = std::string(method_name(config.method));
    j["k"] = config.ks;
    j["k1_grid"] = config.k1_grid;
    j["k2_grid"] = config.k2_grid;
    j["fuzzifier"] = config.fuzzifier;
    j["adaptive_params"] = config.adaptive_params;
    j["trials"] = config.trials;
    j["base_seed"] = config.base_seed;
    j["tol"] = config.tol;
    j["max_iter"] = config.max_iter;
    return j;
}

}  // namespace detail

inline Dataset load_experiment_dataset(const ExperimentConfig& config) {
    return standardize(load_csv(config.dataset_path, config.label_column, config.delimiter),
                       config.scaling);
}

// Runs the seeded trial protocol at a single k over the K1 x K2 grid and
// writes summary.json plus the per-trial table. Reports are a pure function
// of the config and dataset bytes; per-trial wall time goes to a separate
// timings.csv sidecar so the deterministic reports stay byte-stable.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.ks.size() != 1)
        throw std::invalid_argument("run_experiment: expected a single k (use sweep_k for ranges)");
    const Dataset data = load_experiment_dataset(config);
    const std::size_t k = config.ks[0];
    if (k > data.n()) throw std::invalid_argument("run_experiment: k exceeds dataset size");

    ExperimentResult result;
    result.dataset_name = data.name;
    result.n = data.n();
    result.m = data.m();
    result.classes = data.num_classes();
    result.cells = detail::run_grid(data, config, k);
    result.best_cell = detail::select_best_cell(result.cells, data.labels.has_value());

    const std::filesystem::path dir(config.out_dir);
    result.summary_path = dir / "summary.json";
    result.trials_path = dir / "trials.csv";
    result.timings_path = dir / "timings.csv";

    nlohmann::ordered_json summary;
    summary["config"] = detail::config_json(config);
    summary["dataset"] = {{"name", result.dataset_name},
                          {"n", result.n},
                          {"m", result.m},
                          {"classes", result.classes}};
    auto& cells = summary["cells"] = nlohmann::ordered_json::array();
    for (const auto& cell : result.cells)
        cells.push_back(detail::cell_summary_json(cell, data.labels.has_value()));
    summary["best_cell"] = {{"index", result.best_cell},
                            {"k1", detail::json_opt(result.cells[result.best_cell].k1)},
                            {"k2", detail::json_opt(result.cells[result.best_cell].k2)},
                            {"selected_by", data.labels ? "ar" : "pc"}};
    detail::atomic_write(result.summary_path, summary.dump(2) + "\n");

    std::ostringstream trials;
    trials << detail::kTrialHeader << '\n';
    for (const auto& cell : result.cells) detail::append_trial_rows(trials, cell);
    detail::atomic_write(result.trials_path, trials.str());

    std::ostringstream timings;
    timings << "k,k1,k2,trial,seed,wall_ms\n";
    for (const auto& cell : result.cells)
        for (std::size_t t = 0; t < cell.trials.size(); ++t)
            timings << cell.k << ',' << detail::fmt_opt(cell.k1) << ',' << detail::fmt_opt(cell.k2)
                    << ',' << t << ',' << cell.trials[t].seed << ','
                    << detail::fmt_g(cell.trials[t].wall_ms) << '\n';
    detail::atomic_write(result.timings_path, timings.str());

    return result;
}

// Runs the trial protocol for every k in the configured range and emits a
// k-indexed validity table (per-k best grid cell) for plotting.
inline SweepResult sweep_k(const ExperimentConfig& config) {
    config.validate();
    const Dataset data = load_experiment_dataset(config);
    for (std::size_t k : config.ks)
        if (k > data.n() - 1)
            throw std::invalid_argument("sweep_k: k must be at most n-1");

    SweepResult result;
    for (std::size_t k : config.ks) {
        auto cells = detail::run_grid(data, config, k);
        const std::size_t best = detail::select_best_cell(cells, data.labels.has_value());
        result.rows.push_back(std::move(cells[best]));
    }

    const std::filesystem::path dir(config.out_dir);
    result.summary_path = dir / "sweep_summary.csv";
    result.trials_path = dir / "sweep_trials.csv";

    std::ostringstream summary;
    summary << "k,k1,k2,pc_mean,pc_std,ce_mean,ce_std,xb_mean,xb_std,di_mean,di_std,"
               "ar_pct_mean,ri_pct_mean,nmi_pct_mean,objective_mean,converged_trials\n";
    for (const auto& row : result.rows) {
        auto agg = [&](auto&& extract) { return detail::aggregate(row.trials, extract); };
        const auto pc = agg([](const TrialReport& t) { return t.pc; });
        const auto ce = agg([](const TrialReport& t) { return t.ce; });
        const auto xb = agg([](const TrialReport& t) { return t.xb; });
        const auto di = agg([](const TrialReport& t) { return t.di; });
        const auto obj = agg([](const TrialReport& t) { return t.final_objective; });
        std::size_t converged = 0;
        for (const auto& t : row.trials) converged += t.converged ? 1 : 0;

        summary << row.k << ',' << detail::fmt_opt(row.k1) << ',' << detail::fmt_opt(row.k2) << ','
                << detail::fmt_g(pc.mean) << ',' << detail::fmt_g(pc.stddev) << ','
                << detail::fmt_g(ce.mean) << ',' << detail::fmt_g(ce.stddev) << ','
                << detail::fmt_g(xb.mean) << ',' << detail::fmt_g(xb.stddev) << ','
                << detail::fmt_g(di.mean) << ',' << detail::fmt_g(di.stddev) << ',';
        if (data.labels) {
            const auto ar = agg([](const TrialReport& t) { return t.ar.value_or(0.0) * 100.0; });
            const auto ri = agg([](const TrialReport& t) { return t.ri.value_or(0.0) * 100.0; });
            const auto nm = agg([](const TrialReport& t) { return t.nmi.value_or(0.0) * 100.0; });
            summary << detail::fmt_g(ar.mean) << ',' << detail::fmt_g(ri.mean) << ','
                    << detail::fmt_g(nm.mean) << ',';
        } else {
            summary << "NA,NA,NA,";
        }
        summary << detail::fmt_g(obj.mean) << ',' << converged << '\n';
    }
    detail::atomic_write(result.summary_path, summary.str());

    std::ostringstream trials;
    trials << detail::kTrialHeader << '\n';
    for (const auto& row : result.rows) detail::append_trial_rows(trials, row);
    detail::atomic_write(result.trials_path, trials.str());

    return result;
}

// Figure-data export for a fitted model: per-cluster feature weights, the
// per-iteration lambda spread, and the objective trace.
inline void export_figures(const ClusterModel& model, const Dataset& data,
                           const std::filesystem::path& out_dir) {
    if (model.W.m() != data.m()) throw std::invalid_argument("export_figures: model/dataset mismatch");

    std::ostringstream weights;
    weights << "cluster";
    for (const auto& name : data.feature_names) weights << ',' << name;
    weights << '\n';
    for (std::size_t j = 0; j < model.W.k(); ++j) {
        weights << j;
        for (std::size_t l = 0; l < model.W.m(); ++l)
            weights << ',' << detail::fmt_g12(model.W.w(j, l));
        weights << '\n';
    }
    detail::atomic_write(out_dir / "weights.csv", weights.str());

    std::ostringstream lambda;
    lambda << "iteration,lambda_min,lambda_mean,lambda_max\n";
    for (std::size_t t = 0; t < model.lambda_trace.size(); ++t) {
        const auto& snap = model.lambda_trace[t];
        double lo = snap[0], hi = snap[0], sum = 0.0;
        for (double v : snap) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        lambda << (t + 1) << ',' << detail::fmt_g(lo) << ','
               << detail::fmt_g(sum / static_cast<double>(snap.size())) << ',' << detail::fmt_g(hi)
               << '\n';
    }
    detail::atomic_write(out_dir / "lambda_trace.csv", lambda.str());

    std::ostringstream objective;
    objective << "iteration,objective\n";
    for (std::size_t t = 0; t < model.objective_trace.size(); ++t)
        objective << (t + 1) << ',' << detail::fmt_g(model.objective_trace[t]) << '\n';
    detail::atomic_write(out_dir / "objective_trace.csv", objective.str());
}

}  // namespace evfkm
