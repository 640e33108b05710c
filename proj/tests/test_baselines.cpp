#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evfkm/baselines.hpp"
#include "oracles.hpp"

using namespace evfkm;

namespace {

BaselineOptions basic_options(std::size_t k, std::uint64_t seed = 0) {
    BaselineOptions opts;
    opts.k = k;
    opts.seed = seed;
    return opts;
}

}  // namespace

TEST(Kmeans, RecoversWellSeparatedBlobs) {
    const auto data = oracle::make_dataset(Matrix{{0.0}, {0.1}, {10.0}, {10.1}});
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto model = kmeans_fit(data, basic_options(2, seed));
        const auto pred = harden(model.U);
        EXPECT_EQ(pred[0], pred[1]);
        EXPECT_EQ(pred[2], pred[3]);
        EXPECT_NE(pred[0], pred[2]);
        EXPECT_TRUE(model.converged);
    }
}

TEST(Kmeans, KEqualsNGivesZeroInertia) {
    const auto data = oracle::make_dataset(Matrix{{1.0}, {2.0}, {5.0}, {9.0}});
    const auto model = kmeans_fit(data, basic_options(4, 3));
    EXPECT_DOUBLE_EQ(model.objective_trace.back(), 0.0);
    // every point its own cluster
    const auto pred = harden(model.U);
    std::vector<int> sorted = pred;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Kmeans, InertiaNonIncreasing) {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 10; ++rep) {
        const auto data = oracle::make_dataset(oracle::random_matrix(30, 3, 0.0, 1.0, gen));
        const auto model = kmeans_fit(data, basic_options(4, rep));
        for (std::size_t t = 1; t < model.objective_trace.size(); ++t)
            EXPECT_LE(model.objective_trace[t], model.objective_trace[t - 1] + 1e-9);
    }
}

TEST(Kmeans, HardPartitionAndUniformWeights) {
    std::mt19937_64 gen(6);
    const auto data = oracle::make_dataset(oracle::random_matrix(12, 2, 0.0, 1.0, gen));
    const auto model = kmeans_fit(data, basic_options(3, 1));
    for (std::size_t i = 0; i < data.n(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_TRUE(model.U.mu(i, j) == 0.0 || model.U.mu(i, j) == 1.0);
            sum += model.U.mu(i, j);
        }
        EXPECT_DOUBLE_EQ(sum, 1.0);
    }
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t l = 0; l < 2; ++l) EXPECT_DOUBLE_EQ(model.W.w(j, l), 0.5);
}

TEST(Kmeans, DuplicateRowsStillSplitCleanly) {
    // four coincident rows plus an outlier; with a single restart, coincident
    // initial centers force the empty-cluster rescue on many seeds
    const auto data = oracle::make_dataset(Matrix{{0.0}, {0.0}, {0.0}, {0.0}, {10.0}});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto opts = basic_options(2, seed);
        opts.restarts = 1;
        const auto model = kmeans_fit(data, opts);
        const auto pred = harden(model.U);
        EXPECT_EQ(pred[0], pred[1]);
        EXPECT_EQ(pred[1], pred[2]);
        EXPECT_EQ(pred[2], pred[3]);
        EXPECT_NE(pred[3], pred[4]) << "seed " << seed;
        EXPECT_DOUBLE_EQ(model.objective_trace.back(), 0.0);
    }
}

TEST(Kmeans, KLargerThanNThrows) {
    const auto data = oracle::make_dataset(Matrix{{1.0}, {2.0}});
    EXPECT_THROW(kmeans_fit(data, basic_options(3)), std::invalid_argument);
}

TEST(Fcm, SingleClusterIsMeanWithFullMembership) {
    const auto data = oracle::make_dataset(Matrix{{1.0}, {2.0}, {6.0}});
    const auto model = fcm_fit(data, basic_options(1));
    EXPECT_NEAR(model.V.v(0, 0), 3.0, 1e-9);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(model.U.mu(i, 0), 1.0);
    EXPECT_LE(model.iterations, 2u);
}

TEST(Fcm, TwoPointSymmetricDatasetHardensToIdentity) {
    const auto data = oracle::make_dataset(Matrix{{0.0}, {1.0}});
    const auto model = fcm_fit(data, basic_options(2, 0));
    // with centers on the points, the zero-distance rule makes rows hard
    const auto pred = harden(model.U);
    EXPECT_NE(pred[0], pred[1]);
    for (std::size_t i = 0; i < 2; ++i) {
        const double top = std::max(model.U.mu(i, 0), model.U.mu(i, 1));
        EXPECT_NEAR(top, 1.0, 1e-9);
    }
}

TEST(Fcm, RowStochasticAndMonotone) {
    std::mt19937_64 gen(8);
    for (int rep = 0; rep < 10; ++rep) {
        const auto data = oracle::make_dataset(oracle::random_matrix(25, 3, 0.0, 1.0, gen));
        const auto model = fcm_fit(data, basic_options(3, rep));
        model.U.validate();
        for (std::size_t t = 1; t < model.objective_trace.size(); ++t)
            EXPECT_LE(model.objective_trace[t],
                      model.objective_trace[t - 1] + 1e-9 * (1.0 + model.objective_trace[t - 1]));
    }
}

TEST(Fcm, DeterministicPerSeed) {
    std::mt19937_64 gen(9);
    const auto data = oracle::make_dataset(oracle::random_matrix(20, 2, 0.0, 1.0, gen));
    const auto a = fcm_fit(data, basic_options(3, 11));
    const auto b = fcm_fit(data, basic_options(3, 11));
    EXPECT_EQ(a.U.mu, b.U.mu);
    EXPECT_EQ(a.V.v, b.V.v);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(Fcm, RejectsBadOptions) {
    const auto data = oracle::make_dataset(Matrix{{1.0}, {2.0}});
    auto opts = basic_options(2);
    opts.fuzzifier = 1.0;
    EXPECT_THROW(fcm_fit(data, opts), std::invalid_argument);
    EXPECT_THROW(fcm_fit(data, basic_options(3)), std::invalid_argument);
}
