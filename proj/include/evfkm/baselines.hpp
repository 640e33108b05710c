#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "evfkm/core.hpp"
#include "evfkm/dataset.hpp"
#include "evfkm/fit.hpp"
#include "evfkm/random.hpp"

namespace evfkm {

struct BaselineOptions {
    std::size_t k = 2;
    double fuzzifier = 2.0;   // FCM only
    std::size_t restarts = 10;  // k-means only: best-inertia multi-start per seed
    std::size_t max_iter = 100;
    double tol = 1e-6;
    std::uint64_t seed = 0;

    void validate(std::size_t n) const {
        if (k < 1) throw std::invalid_argument("BaselineOptions: k must be at least 1");
        if (k > n) throw std::invalid_argument("BaselineOptions: k exceeds number of samples");
        if (!(fuzzifier > 1.0)) throw std::invalid_argument("BaselineOptions: fuzzifier must exceed 1");
        if (restarts < 1) throw std::invalid_argument("BaselineOptions: restarts must be at least 1");
        if (!(tol > 0.0)) throw std::invalid_argument("BaselineOptions: tol must be strictly positive");
        if (max_iter < 1) throw std::invalid_argument("BaselineOptions: max_iter must be at least 1");
    }
};

namespace detail {

// Same seeding scheme as the weighted fitter: k distinct data rows, so
// trial-to-trial comparisons share initial centers for a given seed.
inline Matrix draw_centers(const Dataset& data, std::size_t k, Rng& rng) {
    const auto rows = sample_distinct(data.n(), k, rng);
    Matrix centers(k, data.m());
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < data.m(); ++l) centers(j, l) = data.values(rows[j], l);
    return centers;
}

inline Matrix seed_centers(const Dataset& data, std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    return draw_centers(data, k, rng);
}

inline std::size_t nearest_center(const Matrix& centers, std::span<const double> x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.rows(); ++j) {
        const double d = sqdist(x, centers.row(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

// Unweighted variant of the empty-cluster rescue: move center j to the data
// row farthest from the anchors.
inline void reseed_center_plain(const Dataset& data, Matrix& centers, std::size_t j,
                                const std::vector<std::size_t>& anchors) {
    std::size_t best_row = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t a : anchors)
            nearest = std::min(nearest, sqdist(data.values.row(i), centers.row(a)));
        if (nearest > best_dist) {
            best_dist = nearest;
            best_row = i;
        }
    }
    for (std::size_t l = 0; l < data.m(); ++l) centers(j, l) = data.values(best_row, l);
}

inline ControlParams unit_params(std::size_t n, std::size_t k) {
    ControlParams p;
    p.lambda.assign(n, 1.0);
    p.gamma.assign(k, 1.0);
    return p;
}

}  // namespace detail

namespace detail {

struct LloydRun {
    std::vector<std::size_t> assign;
    Matrix centers;
    std::vector<double> trace;  // inertia after each assign/update cycle
    bool converged = false;
};

inline LloydRun lloyd(const Dataset& data, Matrix centers, std::size_t max_iter) {
    const std::size_t n = data.n(), m = data.m(), k = centers.rows();
    LloydRun run;
    run.assign.resize(n);
    for (std::size_t i = 0; i < n; ++i) run.assign[i] = nearest_center(centers, data.values.row(i));

    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        Matrix sums(k, m);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.values.row(i);
            auto s = sums.row(run.assign[i]);
            for (std::size_t l = 0; l < m; ++l) s[l] += x[l];
            ++counts[run.assign[i]];
        }
        std::vector<std::size_t> alive;
        std::vector<std::size_t> dead;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) {
                dead.push_back(j);
                continue;
            }
            for (std::size_t l = 0; l < m; ++l)
                centers(j, l) = sums(j, l) / static_cast<double>(counts[j]);
            alive.push_back(j);
        }
        for (std::size_t j : dead) {
            reseed_center_plain(data, centers, j, alive);
            alive.push_back(j);
        }

        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = nearest_center(centers, data.values.row(i));
            if (j != run.assign[i]) {
                run.assign[i] = j;
                changed = true;
            }
            inertia += sqdist(data.values.row(i), centers.row(j));
        }
        run.trace.push_back(inertia);
        if (!changed) {
            run.converged = true;
            break;
        }
    }
    run.centers = std::move(centers);
    return run;
}

}  // namespace detail

// Lloyd iterations with squared Euclidean distance, multi-started per seed
// (single random inits land in bad local optima on roughly a fifth of seeds);
// the run with the lowest final inertia wins. All restart center sets come
// from one seeded stream, so the first draw matches the weighted fitter's
// initialization for the same seed. Returns a hard (one-hot) partition with
// the weight matrix reported as uniform 1/m.
inline ClusterModel kmeans_fit(const Dataset& data, const BaselineOptions& opts) {
    data.validate();
    opts.validate(data.n());
    const std::size_t n = data.n(), m = data.m(), k = opts.k;

    Rng rng(opts.seed);
    detail::LloydRun best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < opts.restarts; ++r) {
        auto run = detail::lloyd(data, detail::draw_centers(data, k, rng), opts.max_iter);
        if (run.trace.back() < best_inertia) {
            best_inertia = run.trace.back();
            best = std::move(run);
        }
    }

    ClusterModel model;
    model.objective_trace = std::move(best.trace);
    model.converged = best.converged;
    model.iterations = model.objective_trace.size();
    model.U.mu = Matrix(n, k);
    for (std::size_t i = 0; i < n; ++i) model.U.mu(i, best.assign[i]) = 1.0;
    model.V.v = std::move(best.centers);
    model.W = WeightMatrix::uniform(k, m);
    model.params = detail::unit_params(n, k);
    return model;
}

namespace detail {

// Classic FCM membership row for squared distances d, fuzzifier f. Zero
// distances make the row hard (mass split over the coincident centers).
inline void fcm_membership_row(std::span<const double> d, double fuzzifier, std::span<double> out) {
    const std::size_t k = d.size();
    std::size_t zeros = 0;
    for (double v : d)
        if (v == 0.0) ++zeros;
    if (zeros > 0) {
        for (std::size_t j = 0; j < k; ++j) out[j] = d[j] == 0.0 ? 1.0 / static_cast<double>(zeros) : 0.0;
        return;
    }
    // ratios against the smallest distance keep the powers bounded
    const double d_min = *std::min_element(d.begin(), d.end());
    const double expo = 1.0 / (fuzzifier - 1.0);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        out[j] = std::pow(d_min / d[j], expo);
        total += out[j];
    }
    for (std::size_t j = 0; j < k; ++j) out[j] /= total;
}

}  // namespace detail

// Standard fuzzy c-means. The objective trace records sum_ij mu_ij^f d_ij
// after each iteration's center update.
inline ClusterModel fcm_fit(const Dataset& data, const BaselineOptions& opts) {
    data.validate();
    opts.validate(data.n());
    const std::size_t n = data.n(), m = data.m(), k = opts.k;
    const double f = opts.fuzzifier;

    Matrix centers = detail::seed_centers(data, k, opts.seed);
    Matrix mu(n, k);
    std::vector<double> dist(k);

    ClusterModel model;
    for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) dist[j] = detail::sqdist(data.values.row(i), centers.row(j));
            detail::fcm_membership_row(dist, f, mu.row(i));
        }

        Matrix sums(k, m);
        std::vector<double> mass(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.values.row(i);
            for (std::size_t j = 0; j < k; ++j) {
                const double w = std::pow(mu(i, j), f);
                mass[j] += w;
                auto s = sums.row(j);
                for (std::size_t l = 0; l < m; ++l) s[l] += w * x[l];
            }
        }
        std::vector<std::size_t> alive;
        std::vector<std::size_t> dead;
        for (std::size_t j = 0; j < k; ++j) {
            if (mass[j] < kMassEps) {
                dead.push_back(j);
                continue;
            }
            for (std::size_t l = 0; l < m; ++l) centers(j, l) = sums(j, l) / mass[j];
            alive.push_back(j);
        }
        for (std::size_t j : dead) {
            detail::reseed_center_plain(data, centers, j, alive);
            alive.push_back(j);
        }

        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j)
                obj += std::pow(mu(i, j), f) * detail::sqdist(data.values.row(i), centers.row(j));
        model.objective_trace.push_back(obj);

        const std::size_t t = model.objective_trace.size();
        if (t >= 2) {
            const double prev = model.objective_trace[t - 2];
            if (std::abs(obj - prev) <= opts.tol * (1.0 + std::abs(prev))) {
                model.converged = true;
                break;
            }
        }
    }
    model.iterations = model.objective_trace.size();

    model.U.mu = std::move(mu);
    model.V.v = std::move(centers);
    model.W = WeightMatrix::uniform(k, m);
    model.params = detail::unit_params(n, k);
    return model;
}

}  // namespace evfkm
