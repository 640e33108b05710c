#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evfkm/experiment.hpp"
#include "oracles.hpp"

using namespace evfkm;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = fs::temp_directory_path() /
                     ("evfkm_exp_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// two gaussian blobs, optionally labeled, written as CSV
fs::path write_blob_csv(const fs::path& dir, bool labeled, std::uint64_t seed = 1) {
    MixtureSpec spec;
    spec.components = {{{0.0, 0.0}, {0.5, 0.5}, 12}, {{10.0, 10.0}, {0.5, 0.5}, 12}};
    spec.seed = seed;
    const auto data = synth_mixture(spec);

    const auto path = dir / "blobs.csv";
    std::ofstream out(path);
    out << "x,y" << (labeled ? ",label\n" : "\n");
    for (std::size_t i = 0; i < data.n(); ++i) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", data.values(i, 0), data.values(i, 1));
        out << buf;
        if (labeled) out << ',' << (*data.labels)[i];
        out << '\n';
    }
    return path;
}

ExperimentConfig blob_config(const fs::path& dir, bool labeled) {
    ExperimentConfig config;
    config.dataset_path = write_blob_csv(dir, labeled).string();
    if (labeled) config.label_column = "label";
    config.ks = {2};
    config.trials = 3;
    config.base_seed = 7;
    config.out_dir = (dir / "out").string();
    return config;
}

std::vector<std::map<std::string, std::string>> parse_csv(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);

    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::map<std::string, std::string> row;
        for (const auto& key : header) {
            std::getline(ls, cell, ',');
            row[key] = cell;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TEST(RunExperiment, SingleTrialSummaryEqualsTrial) {
    const auto dir = fresh_dir("single");
    auto config = blob_config(dir, true);
    config.trials = 1;
    const auto result = run_experiment(config);

    ASSERT_EQ(result.cells.size(), 1u);
    ASSERT_EQ(result.cells[0].trials.size(), 1u);
    const auto& trial = result.cells[0].trials[0];

    const auto summary = nlohmann::json::parse(slurp(result.summary_path));
    const auto& mean = summary["cells"][0]["mean"];
    EXPECT_NEAR(mean["pc"].get<double>(), trial.pc, 1e-5);
    EXPECT_NEAR(mean["ar_pct"].get<double>(), *trial.ar * 100.0, 1e-3);
    EXPECT_DOUBLE_EQ(summary["cells"][0]["stddev"]["pc"].get<double>(), 0.0);
}

TEST(RunExperiment, RerunsAreByteIdentical) {
    const auto dir = fresh_dir("determinism");
    const auto config = blob_config(dir, true);
    run_experiment(config);
    const std::string summary1 = slurp(fs::path(config.out_dir) / "summary.json");
    const std::string trials1 = slurp(fs::path(config.out_dir) / "trials.csv");
    run_experiment(config);
    EXPECT_EQ(slurp(fs::path(config.out_dir) / "summary.json"), summary1);
    EXPECT_EQ(slurp(fs::path(config.out_dir) / "trials.csv"), trials1);
}

TEST(RunExperiment, UnlabeledDatasetKeepsExplicitNullColumns) {
    const auto dir = fresh_dir("unlabeled");
    const auto config = blob_config(dir, false);
    const auto result = run_experiment(config);

    const auto rows = parse_csv(result.trials_path);
    ASSERT_EQ(rows.size(), config.trials);
    for (const auto& row : rows) {
        EXPECT_EQ(row.at("ar_pct"), "NA");
        EXPECT_EQ(row.at("ri_pct"), "NA");
        EXPECT_EQ(row.at("nmi_pct"), "NA");
        EXPECT_NE(row.at("pc"), "NA");
    }
    const auto summary = nlohmann::json::parse(slurp(result.summary_path));
    EXPECT_TRUE(summary["cells"][0]["mean"]["ar_pct"].is_null());
    EXPECT_EQ(summary["best_cell"]["selected_by"], "pc");
}

TEST(RunExperiment, SummaryReaggregatesFromTrialRows) {
    const auto dir = fresh_dir("reagg");
    auto config = blob_config(dir, true);
    config.trials = 5;
    config.k1_grid = {0.5, 2.0};
    const auto result = run_experiment(config);

    const auto rows = parse_csv(result.trials_path);
    ASSERT_EQ(rows.size(), 10u);
    const auto summary = nlohmann::json::parse(slurp(result.summary_path));

    for (std::size_t cell = 0; cell < result.cells.size(); ++cell) {
        const std::string k1 = detail::fmt_g(*result.cells[cell].k1);
        std::vector<double> pcs;
        for (const auto& row : rows)
            if (row.at("k1") == k1) pcs.push_back(std::stod(row.at("pc")));
        ASSERT_EQ(pcs.size(), 5u);
        double mean = 0.0;
        for (double v : pcs) mean += v;
        mean /= pcs.size();
        double ss = 0.0;
        for (double v : pcs) ss += (v - mean) * (v - mean);
        const double stddev = std::sqrt(ss / (pcs.size() - 1));
        EXPECT_NEAR(summary["cells"][cell]["mean"]["pc"].get<double>(), mean, 1e-4);
        EXPECT_NEAR(summary["cells"][cell]["stddev"]["pc"].get<double>(), stddev, 1e-4);
    }
}

TEST(RunExperiment, GridSelectionStaysWithinOneStdErrorOfBestAccuracy) {
    const auto dir = fresh_dir("grid");
    auto config = blob_config(dir, true);
    config.trials = 5;
    config.k1_grid = {0.5, 1.0};
    config.k2_grid = {0.5, 1.0};
    const auto result = run_experiment(config);
    ASSERT_EQ(result.cells.size(), 4u);

    auto mean_ar = [](const GridCell& cell) {
        double mean = 0.0;
        for (const auto& t : cell.trials) mean += *t.ar;
        return mean / cell.trials.size();
    };
    double best_ar = -1.0;
    double best_std = 0.0;
    for (const auto& cell : result.cells) {
        const double mean = mean_ar(cell);
        if (mean > best_ar) {
            best_ar = mean;
            double ss = 0.0;
            for (const auto& t : cell.trials) ss += (*t.ar - mean) * (*t.ar - mean);
            best_std = std::sqrt(ss / (cell.trials.size() - 1));
        }
    }
    // one-standard-error rule: the selected cell scores within 1 SE of the top
    EXPECT_GE(mean_ar(result.cells[result.best_cell]),
              best_ar - best_std / std::sqrt(5.0) - 1e-12);
}

TEST(RunExperiment, RejectsBadConfigs) {
    ExperimentConfig config;
    config.dataset_path = "/nonexistent/file.csv";
    config.ks = {2};
    EXPECT_THROW(run_experiment(config), std::runtime_error);

    const auto dir = fresh_dir("badk");
    auto multi = blob_config(dir, true);
    multi.ks = {2, 3};
    EXPECT_THROW(run_experiment(multi), std::invalid_argument);

    auto low_k = blob_config(dir, true);
    low_k.ks = {1};
    EXPECT_THROW(run_experiment(low_k), std::invalid_argument);
}

TEST(SweepK, TruePartitionWinsPartitionCoefficient) {
    const auto dir = fresh_dir("sweep");
    auto config = blob_config(dir, false);
    config.ks = {2, 3};
    config.trials = 5;
    const auto result = sweep_k(config);
    ASSERT_EQ(result.rows.size(), 2u);

    auto mean_pc = [](const GridCell& cell) {
        double mean = 0.0;
        for (const auto& t : cell.trials) mean += t.pc;
        return mean / cell.trials.size();
    };
    EXPECT_GT(mean_pc(result.rows[0]), mean_pc(result.rows[1]));

    const auto rows = parse_csv(result.summary_path);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].at("k"), "2");
    EXPECT_EQ(rows[1].at("k"), "3");
}

TEST(SweepK, SingleKMatchesExperimentProtocol) {
    const auto dir = fresh_dir("sweepsingle");
    auto config = blob_config(dir, true);
    config.ks = {2};
    const auto swept = sweep_k(config);

    auto exp_config = config;
    exp_config.out_dir = (dir / "out_exp").string();
    const auto experiment = run_experiment(exp_config);

    ASSERT_EQ(swept.rows.size(), 1u);
    const auto& a = swept.rows[0].trials;
    const auto& b = experiment.cells[experiment.best_cell].trials;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        EXPECT_EQ(a[t].seed, b[t].seed);
        EXPECT_EQ(a[t].iterations, b[t].iterations);
        EXPECT_DOUBLE_EQ(a[t].final_objective, b[t].final_objective);
        EXPECT_DOUBLE_EQ(a[t].pc, b[t].pc);
    }
}

TEST(ExportFigures, SingleFeatureModelWritesUnitWeights) {
    const auto data = oracle::make_dataset(Matrix{{0.0}, {0.2}, {5.0}, {5.2}});
    FitOptions opts;
    opts.k = 2;
    const auto model = fit(data, opts);

    const auto dir = fresh_dir("figs1");
    export_figures(model, data, dir);

    const auto rows = parse_csv(dir / "weights.csv");
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& row : rows) EXPECT_DOUBLE_EQ(std::stod(row.at("f1")), 1.0);

    const auto trace = parse_csv(dir / "objective_trace.csv");
    EXPECT_EQ(trace.size(), model.iterations);
    const auto lambda = parse_csv(dir / "lambda_trace.csv");
    EXPECT_EQ(lambda.size(), model.iterations);
}

TEST(ExportFigures, WeightRowsSumToOneInEmittedFile) {
    std::mt19937_64 gen(55);
    const auto data = oracle::make_dataset(oracle::random_matrix(20, 4, 0.0, 1.0, gen));
    FitOptions opts;
    opts.k = 3;
    opts.seed = 2;
    const auto model = fit(data, opts);

    const auto dir = fresh_dir("figs2");
    export_figures(model, data, dir);
    const auto rows = parse_csv(dir / "weights.csv");
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& row : rows) {
        double sum = 0.0;
        for (std::size_t f = 1; f <= 4; ++f) sum += std::stod(row.at("f" + std::to_string(f)));
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }

    const auto lambda = parse_csv(dir / "lambda_trace.csv");
    ASSERT_EQ(lambda.size(), model.iterations);
    for (const auto& row : lambda) {
        EXPECT_LE(std::stod(row.at("lambda_min")), std::stod(row.at("lambda_mean")));
        EXPECT_LE(std::stod(row.at("lambda_mean")), std::stod(row.at("lambda_max")));
    }
}
