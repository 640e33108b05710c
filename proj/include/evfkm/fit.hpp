#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "evfkm/core.hpp"
#include "evfkm/dataset.hpp"
#include "evfkm/random.hpp"

namespace evfkm {

inline constexpr double kParamFloor = 1e-8;      // lower bound for lambda/gamma
inline constexpr double kMassEps = 1e-12;        // membership mass below this marks a dead cluster

struct FitOptions {
    std::size_t k = 2;
    double k1 = 1.0;
    double k2 = 1.0;
    std::size_t max_iter = 100;
    double tol = 1e-6;                 // relative objective-change threshold
    std::uint64_t seed = 0;
    bool adaptive_params = true;       // when false, lambda/gamma stay at K1/K2

    void validate(std::size_t n) const {
        if (k < 1) throw std::invalid_argument("FitOptions: k must be at least 1");
        if (k > n) throw std::invalid_argument("FitOptions: k exceeds number of samples");
        if (!(k1 > 0.0) || !(k2 > 0.0))
            throw std::invalid_argument("FitOptions: K1 and K2 must be strictly positive");
        if (!(tol > 0.0)) throw std::invalid_argument("FitOptions: tol must be strictly positive");
        if (max_iter < 1) throw std::invalid_argument("FitOptions: max_iter must be at least 1");
    }
};

struct ClusterModel {
    FuzzyPartition U;
    Centers V;
    WeightMatrix W;
    ControlParams params;
    std::vector<double> objective_trace;            // one entry per iteration
    std::vector<std::vector<double>> lambda_trace;  // lambda snapshot at the end of each iteration
    std::size_t iterations = 0;
    bool converged = false;
};

enum class FitStage { Weights, Memberships, Centers, Params };

// Snapshot passed to the optional fit observer after each sub-update.
// References stay valid only for the duration of the callback.
struct FitStep {
    std::size_t iteration;  // 1-based
    FitStage stage;
    const FuzzyPartition& U;
    const Centers& V;
    const WeightMatrix& W;
    const ControlParams& params;
    double objective;
};

using FitObserver = std::function<void(const FitStep&)>;

struct InitState {
    Centers V;
    WeightMatrix W;
    ControlParams params;
};

// Initial state: centers are k distinct data rows sampled by seed, weights are
// uniform 1/m, lambda/gamma start at K1/K2.
inline InitState init(const Dataset& data, const FitOptions& opts) {
    data.validate();
    opts.validate(data.n());
    const std::size_t m = data.m();

    Rng rng(opts.seed);
    const auto rows = sample_distinct(data.n(), opts.k, rng);

    InitState state;
    state.V.v = Matrix(opts.k, m);
    for (std::size_t j = 0; j < opts.k; ++j)
        for (std::size_t l = 0; l < m; ++l) state.V.v(j, l) = data.values(rows[j], l);
    state.W = WeightMatrix::uniform(opts.k, m);
    state.params.lambda.assign(data.n(), opts.k1);
    state.params.gamma.assign(opts.k, opts.k2);
    state.params.k1 = opts.k1;
    state.params.k2 = opts.k2;
    return state;
}

namespace detail {

// Weighted squared distance from sample x to center row j of V.
inline double weighted_sqdist(std::span<const double> x, const Centers& V, const WeightMatrix& W,
                              std::size_t j) {
    double dist = 0.0;
    const auto c = V.v.row(j);
    const auto w = W.w.row(j);
    for (std::size_t l = 0; l < x.size(); ++l) {
        const double d = x[l] - c[l];
        dist += w[l] * d * d;
    }
    return dist;
}

// Reseeds center j to the data row farthest (by weighted distance) from the
// clusters listed in anchors. Lowest row index wins ties.
inline void reseed_center(const Dataset& data, Centers& V, const WeightMatrix& W,
                          std::size_t j, const std::vector<std::size_t>& anchors) {
    std::size_t best_row = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t a : anchors)
            nearest = std::min(nearest, weighted_sqdist(data.values.row(i), V, W, a));
        if (nearest > best_dist) {
            best_dist = nearest;
            best_row = i;
        }
    }
    for (std::size_t l = 0; l < data.m(); ++l) V.v(j, l) = data.values(best_row, l);
}

}  // namespace detail

// Membership-weighted mean per cluster. The feature weight cancels out of the
// stationarity condition, so centers do not depend on W except when a cluster
// loses all membership mass and is reseeded to the farthest data row.
inline Centers update_centers(const Dataset& data, const FuzzyPartition& U, const WeightMatrix& W) {
    const std::size_t n = data.n(), m = data.m(), k = U.k();
    if (U.n() != n || W.k() != k || W.m() != m)
        throw std::invalid_argument("update_centers: shape mismatch");

    Centers V;
    V.v = Matrix(k, m);
    std::vector<std::size_t> alive;
    std::vector<std::size_t> dead;
    for (std::size_t j = 0; j < k; ++j) {
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += U.mu(i, j);
        if (mass < kMassEps) {
            dead.push_back(j);
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = U.mu(i, j);
            const auto x = data.values.row(i);
            for (std::size_t l = 0; l < m; ++l) V.v(j, l) += mu * x[l];
        }
        for (std::size_t l = 0; l < m; ++l) V.v(j, l) /= mass;
        alive.push_back(j);
    }
    for (std::size_t j : dead) {
        if (alive.empty()) {
            // cannot happen for a valid row-stochastic U with n >= 1
            throw std::invalid_argument("update_centers: no cluster has membership mass");
        }
        detail::reseed_center(data, V, W, j, alive);
        alive.push_back(j);
    }
    return V;
}

// w_jl = softmin over features of E_jl / gamma_j, with E_jl the
// membership-weighted dispersion of feature l in cluster j.
inline WeightMatrix update_weights(const Dataset& data, const FuzzyPartition& U, const Centers& V,
                                   std::span<const double> gamma) {
    const std::size_t n = data.n(), m = data.m(), k = V.k();
    if (U.n() != n || U.k() != k || V.m() != m || gamma.size() != k)
        throw std::invalid_argument("update_weights: shape mismatch");
    for (double g : gamma)
        if (!(g > 0.0)) throw std::invalid_argument("update_weights: gamma must be strictly positive");

    Matrix energy(k, m);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = data.values.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            const double mu = U.mu(i, j);
            const auto c = V.v.row(j);
            auto e = energy.row(j);
            for (std::size_t l = 0; l < m; ++l) {
                const double d = x[l] - c[l];
                e[l] += mu * d * d;
            }
        }
    }

    WeightMatrix W;
    W.w = Matrix(k, m);
    for (std::size_t j = 0; j < k; ++j) softmin_into(energy.row(j), gamma[j], W.w.row(j));
    return W;
}

// mu_ij = softmin over clusters of the weighted squared distance / lambda_i.
inline FuzzyPartition update_memberships(const Dataset& data, const Centers& V,
                                         const WeightMatrix& W, std::span<const double> lambda) {
    const std::size_t n = data.n(), m = data.m(), k = V.k();
    if (W.k() != k || W.m() != m || V.m() != m || lambda.size() != n)
        throw std::invalid_argument("update_memberships: shape mismatch");
    for (double l : lambda)
        if (!(l > 0.0)) throw std::invalid_argument("update_memberships: lambda must be strictly positive");

    FuzzyPartition U;
    U.mu = Matrix(n, k);
    std::vector<double> dist(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = data.values.row(i);
        for (std::size_t j = 0; j < k; ++j) dist[j] = detail::weighted_sqdist(x, V, W, j);
        softmin_into(dist, lambda[i], U.mu.row(i));
    }
    return U;
}

// lambda_i = K1 * (weighted dispersion of sample i) / (membership entropy of
// sample i), floored at kParamFloor; rows with vanishing entropy fall back to
// the floor.
inline std::vector<double> update_lambda(const Dataset& data, const FuzzyPartition& U,
                                         const Centers& V, const WeightMatrix& W, double K1) {
    const std::size_t n = data.n(), k = V.k();
    if (U.n() != n || U.k() != k || W.k() != k || W.m() != data.m() || V.m() != data.m())
        throw std::invalid_argument("update_lambda: shape mismatch");
    if (!(K1 > 0.0)) throw std::invalid_argument("update_lambda: K1 must be strictly positive");

    std::vector<double> lambda(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dispersion = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            dispersion += U.mu(i, j) * detail::weighted_sqdist(data.values.row(i), V, W, j);
        const double h = entropy(U.mu.row(i));
        lambda[i] = h < kMassEps ? kParamFloor : std::max(K1 * dispersion / h, kParamFloor);
    }
    return lambda;
}

// gamma_j = K2 * (membership-weighted dispersion of cluster j) / (weight
// entropy of cluster j), same floor and fallback as update_lambda.
inline std::vector<double> update_gamma(const Dataset& data, const FuzzyPartition& U,
                                        const Centers& V, const WeightMatrix& W, double K2) {
    const std::size_t n = data.n(), k = V.k();
    if (U.n() != n || U.k() != k || W.k() != k || W.m() != data.m() || V.m() != data.m())
        throw std::invalid_argument("update_gamma: shape mismatch");
    if (!(K2 > 0.0)) throw std::invalid_argument("update_gamma: K2 must be strictly positive");

    std::vector<double> gamma(k);
    for (std::size_t j = 0; j < k; ++j) {
        double dispersion = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            dispersion += U.mu(i, j) * detail::weighted_sqdist(data.values.row(i), V, W, j);
        const double h = entropy(W.w.row(j));
        gamma[j] = h < kMassEps ? kParamFloor : std::max(K2 * dispersion / h, kParamFloor);
    }
    return gamma;
}

// Alternating optimization: weights, then memberships, then centers, then the
// adaptive lambda/gamma refresh. The initial partition is derived from the
// seeded centers and uniform weights. Stops when the relative objective change
// drops below tol or max_iter is reached. The recorded objective uses the
// lambda/gamma that produced the iteration's U and W, i.e. it is evaluated
// before the parameter refresh; lambda_trace snapshots the end-of-iteration
// values.
inline ClusterModel fit(const Dataset& data, const FitOptions& opts,
                        const FitObserver& observer = {}) {
    InitState state = init(data, opts);

    ClusterModel model;
    model.V = std::move(state.V);
    model.W = std::move(state.W);
    model.params = std::move(state.params);
    model.U = update_memberships(data, model.V, model.W, model.params.lambda);

    for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
        model.W = update_weights(data, model.U, model.V, model.params.gamma);
        if (observer)
            observer({iter, FitStage::Weights, model.U, model.V, model.W, model.params,
                      objective(data, model.U, model.V, model.W, model.params)});

        model.U = update_memberships(data, model.V, model.W, model.params.lambda);
        if (observer)
            observer({iter, FitStage::Memberships, model.U, model.V, model.W, model.params,
                      objective(data, model.U, model.V, model.W, model.params)});

        model.V = update_centers(data, model.U, model.W);
        const double obj = objective(data, model.U, model.V, model.W, model.params);
        if (observer)
            observer({iter, FitStage::Centers, model.U, model.V, model.W, model.params, obj});
        model.objective_trace.push_back(obj);

        if (opts.adaptive_params) {
            model.params.lambda = update_lambda(data, model.U, model.V, model.W, opts.k1);
            model.params.gamma = update_gamma(data, model.U, model.V, model.W, opts.k2);
            if (observer)
                observer({iter, FitStage::Params, model.U, model.V, model.W, model.params,
                          objective(data, model.U, model.V, model.W, model.params)});
        }
        model.lambda_trace.push_back(model.params.lambda);

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
    return model;
}

// Crisp labels by per-row argmax; ties break to the lowest index.
inline std::vector<int> harden(const FuzzyPartition& U) {
    std::vector<int> labels(U.n());
    for (std::size_t i = 0; i < U.n(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < U.k(); ++j)
            if (U.mu(i, j) > U.mu(i, best)) best = j;
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

}  // namespace evfkm
