#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "evfkm/dataset.hpp"
#include "evfkm/matrix.hpp"

namespace evfkm {

inline constexpr double kRowSumTol = 1e-9;
inline constexpr double kLogFloor = 1e-300;  // keeps log() out of -inf on denormal entries

// x log x with the entropy convention 0 log 0 = 0. Natural log throughout.
inline double xlogx(double p) {
    if (p <= 0.0) return 0.0;
    return p * std::log(std::max(p, kLogFloor));
}

// -sum p log p
inline double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) h -= xlogx(v);
    return h;
}

// Softmin: out[j] proportional to exp(-costs[j]/scale), normalized to sum 1.
// The exponents are shifted so the largest is 0; the minimizer of
// sum_j p_j costs_j + scale * sum_j p_j log p_j over the probability simplex.
inline void softmin_into(std::span<const double> costs, double scale, std::span<double> out) {
    if (costs.empty()) throw std::invalid_argument("softmin: empty cost vector");
    if (costs.size() != out.size()) throw std::invalid_argument("softmin: size mismatch");
    if (!(scale > 0.0)) throw std::invalid_argument("softmin: scale must be strictly positive");
    const double lo = *std::min_element(costs.begin(), costs.end());
    double total = 0.0;
    for (std::size_t j = 0; j < costs.size(); ++j) {
        out[j] = std::exp(-(costs[j] - lo) / scale);
        total += out[j];
    }
    for (std::size_t j = 0; j < costs.size(); ++j) out[j] /= total;
}

inline std::vector<double> softmin(std::span<const double> costs, double scale) {
    std::vector<double> out(costs.size());
    softmin_into(costs, scale, out);
    return out;
}

namespace detail {

inline double sqdist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        const double d = a[l] - b[l];
        s += d * d;
    }
    return s;
}

inline void check_row_stochastic(const Matrix& rows, const char* what) {
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < rows.cols(); ++j) {
            const double v = rows(i, j);
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument(std::string(what) + ": entry outside [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
    }
}

}  // namespace detail

// n x k membership degrees; each sample's row lies on the simplex.
struct FuzzyPartition {
    Matrix mu;

    std::size_t n() const noexcept { return mu.rows(); }
    std::size_t k() const noexcept { return mu.cols(); }

    static FuzzyPartition uniform(std::size_t n, std::size_t k) {
        return {Matrix(n, k, 1.0 / static_cast<double>(k))};
    }

    void validate() const { detail::check_row_stochastic(mu, "FuzzyPartition"); }
};

// k x m per-cluster feature weights; each cluster's row lies on the simplex.
struct WeightMatrix {
    Matrix w;

    std::size_t k() const noexcept { return w.rows(); }
    std::size_t m() const noexcept { return w.cols(); }

    static WeightMatrix uniform(std::size_t k, std::size_t m) {
        return {Matrix(k, m, 1.0 / static_cast<double>(m))};
    }

    void validate() const { detail::check_row_stochastic(w, "WeightMatrix"); }
};

// k x m cluster centers in feature space.
struct Centers {
    Matrix v;

    std::size_t k() const noexcept { return v.rows(); }
    std::size_t m() const noexcept { return v.cols(); }

    void validate() const {
        for (double x : v.storage())
            if (!std::isfinite(x)) throw std::invalid_argument("Centers: non-finite entry");
    }
};

// Per-sample lambda and per-cluster gamma regularization strengths, plus the
// K1/K2 constants that scale their adaptive updates.
struct ControlParams {
    std::vector<double> lambda;
    std::vector<double> gamma;
    double k1 = 1.0;
    double k2 = 1.0;

    void validate() const {
        auto positive = [](std::span<const double> v) {
            for (double x : v)
                if (!(x > 0.0) || !std::isfinite(x)) return false;
            return true;
        };
        if (!positive(lambda) || !positive(gamma) || !(k1 > 0.0) || !(k2 > 0.0))
            throw std::invalid_argument("ControlParams: entries must be strictly positive and finite");
    }
};

// Per-feature squared differences between a sample and a center.
inline void dissimilarity_into(std::span<const double> x, std::span<const double> v,
                               std::span<double> out) {
    if (x.size() != v.size() || x.size() != out.size())
        throw std::invalid_argument("dissimilarity: length mismatch");
    for (std::size_t l = 0; l < x.size(); ++l) {
        const double d = x[l] - v[l];
        out[l] = d * d;
    }
}

inline std::vector<double> dissimilarity(std::span<const double> x, std::span<const double> v) {
    std::vector<double> out(x.size());
    dissimilarity_into(x, v, out);
    return out;
}

struct ObjectiveTerms {
    double dispersion = 0.0;            // sum_ijl mu_ij w_jl (x_il - v_jl)^2
    double membership_negentropy = 0.0;  // sum_i lambda_i sum_j mu_ij log mu_ij, always <= 0
    double weight_negentropy = 0.0;      // sum_j gamma_j sum_l w_jl log w_jl, always <= 0

    double total() const { return dispersion + membership_negentropy + weight_negentropy; }
};

inline ObjectiveTerms objective_terms(const Dataset& data, const FuzzyPartition& U,
                                      const Centers& V, const WeightMatrix& W,
                                      const ControlParams& params) {
    const std::size_t n = data.n(), m = data.m(), k = V.k();
    if (U.n() != n || U.k() != k || W.k() != k || W.m() != m || V.m() != m ||
        params.lambda.size() != n || params.gamma.size() != k)
        throw std::invalid_argument("objective: shape mismatch");

    ObjectiveTerms terms;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = data.values.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            const auto c = V.v.row(j);
            const auto w = W.w.row(j);
            double dist = 0.0;
            for (std::size_t l = 0; l < m; ++l) {
                const double d = x[l] - c[l];
                dist += w[l] * d * d;
            }
            terms.dispersion += U.mu(i, j) * dist;
        }
        terms.membership_negentropy -= params.lambda[i] * entropy(U.mu.row(i));
    }
    for (std::size_t j = 0; j < k; ++j)
        terms.weight_negentropy -= params.gamma[j] * entropy(W.w.row(j));
    return terms;
}

inline double objective(const Dataset& data, const FuzzyPartition& U, const Centers& V,
                        const WeightMatrix& W, const ControlParams& params) {
    return objective_terms(data, U, V, W, params).total();
}

}  // namespace evfkm
