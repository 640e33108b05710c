#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "evfkm/core.hpp"
#include "evfkm/dataset.hpp"

namespace evfkm {

// Class-by-cluster co-occurrence counts. Ids on either side may be arbitrary
// integers; they are compacted in order of first appearance.
struct ContingencyTable {
    std::vector<std::vector<std::uint64_t>> counts;  // rows: truth classes, cols: predicted clusters
    std::vector<std::uint64_t> row_sums;
    std::vector<std::uint64_t> col_sums;
    std::uint64_t n = 0;

    static ContingencyTable from_labels(std::span<const int> truth, std::span<const int> pred) {
        if (truth.size() != pred.size())
            throw std::invalid_argument("ContingencyTable: label vectors differ in length");
        if (truth.empty()) throw std::invalid_argument("ContingencyTable: empty label vectors");

        auto compact = [](std::span<const int> ids) {
            std::map<int, std::size_t> dense;
            std::vector<std::size_t> out(ids.size());
            for (std::size_t i = 0; i < ids.size(); ++i) {
                auto [it, _] = dense.try_emplace(ids[i], dense.size());
                out[i] = it->second;
            }
            return std::pair{out, dense.size()};
        };
        const auto [t_ids, c] = compact(truth);
        const auto [p_ids, k] = compact(pred);

        ContingencyTable table;
        table.counts.assign(c, std::vector<std::uint64_t>(k, 0));
        table.row_sums.assign(c, 0);
        table.col_sums.assign(k, 0);
        table.n = truth.size();
        for (std::size_t i = 0; i < truth.size(); ++i) {
            ++table.counts[t_ids[i]][p_ids[i]];
            ++table.row_sums[t_ids[i]];
            ++table.col_sums[p_ids[i]];
        }
        return table;
    }
};

namespace detail {

// Min-cost perfect matching on a square cost matrix (shortest augmenting
// path form of the Hungarian method). Returns column assigned to each row.
inline std::vector<std::size_t> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
    const std::size_t s = cost.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(s + 1, 0.0), v(s + 1, 0.0);
    std::vector<std::size_t> match(s + 1, 0);  // match[col] = row (1-based)
    std::vector<std::size_t> way(s + 1, 0);

    for (std::size_t i = 1; i <= s; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> min_reduced(s + 1, inf);
        std::vector<bool> used(s + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= s; ++j) {
                if (used[j]) continue;
                const double reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (reduced < min_reduced[j]) {
                    min_reduced[j] = reduced;
                    way[j] = j0;
                }
                if (min_reduced[j] < delta) {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= s; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(s, 0);
    for (std::size_t j = 1; j <= s; ++j)
        if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

// Maximum total count over one-to-one class/cluster assignments, via the
// Hungarian method on the negated table padded to square.
inline std::uint64_t best_assignment_total(const ContingencyTable& table) {
    const std::size_t c = table.counts.size();
    const std::size_t k = table.counts[0].size();
    const std::size_t s = std::max(c, k);
    double peak = 0.0;
    for (const auto& row : table.counts)
        for (std::uint64_t v : row) peak = std::max(peak, static_cast<double>(v));

    std::vector<std::vector<double>> cost(s, std::vector<double>(s, peak));
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < k; ++j)
            cost[i][j] = peak - static_cast<double>(table.counts[i][j]);

    const auto row_to_col = hungarian_min_cost(cost);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < c; ++i)
        if (row_to_col[i] < k) total += table.counts[i][row_to_col[i]];
    return total;
}

inline std::uint64_t pairs_within(std::uint64_t count) { return count * (count - 1) / 2; }

}  // namespace detail

// Fraction of points correctly recovered under the best one-to-one matching
// of clusters to classes.
inline double accuracy_rate(std::span<const int> pred, std::span<const int> truth) {
    const auto table = ContingencyTable::from_labels(truth, pred);
    return static_cast<double>(detail::best_assignment_total(table)) /
           static_cast<double>(table.n);
}

// Rand index: agreeing pairs (together in both partitions or separate in
// both) over all pairs.
inline double rand_index(std::span<const int> pred, std::span<const int> truth) {
    const auto table = ContingencyTable::from_labels(truth, pred);
    if (table.n < 2) throw std::invalid_argument("rand_index: need at least 2 points");

    std::uint64_t together_both = 0;
    for (const auto& row : table.counts)
        for (std::uint64_t v : row) together_both += detail::pairs_within(v);
    std::uint64_t together_truth = 0;
    for (std::uint64_t v : table.row_sums) together_truth += detail::pairs_within(v);
    std::uint64_t together_pred = 0;
    for (std::uint64_t v : table.col_sums) together_pred += detail::pairs_within(v);

    const std::uint64_t total = detail::pairs_within(table.n);
    const std::uint64_t disagreements = (together_truth - together_both) + (together_pred - together_both);
    return static_cast<double>(total - disagreements) / static_cast<double>(total);
}

// Normalized mutual information with the arithmetic-mean normalizer.
// Both marginal entropies zero -> 1; exactly one zero -> 0.
inline double nmi(std::span<const int> pred, std::span<const int> truth) {
    const auto table = ContingencyTable::from_labels(truth, pred);
    const double n = static_cast<double>(table.n);

    double h_truth = 0.0;
    for (std::uint64_t v : table.row_sums) h_truth -= xlogx(static_cast<double>(v) / n);
    double h_pred = 0.0;
    for (std::uint64_t v : table.col_sums) h_pred -= xlogx(static_cast<double>(v) / n);

    if (h_truth == 0.0 && h_pred == 0.0) return 1.0;
    if (h_truth == 0.0 || h_pred == 0.0) return 0.0;

    double mi = 0.0;
    for (std::size_t i = 0; i < table.counts.size(); ++i) {
        for (std::size_t j = 0; j < table.counts[i].size(); ++j) {
            const std::uint64_t v = table.counts[i][j];
            if (v == 0) continue;
            const double p_ij = static_cast<double>(v) / n;
            const double p_i = static_cast<double>(table.row_sums[i]) / n;
            const double q_j = static_cast<double>(table.col_sums[j]) / n;
            mi += p_ij * std::log(p_ij / (p_i * q_j));
        }
    }
    return std::clamp(mi / ((h_truth + h_pred) / 2.0), 0.0, 1.0);
}

// Mean squared membership; 1 for hard partitions, 1/k for uniform ones.
inline double partition_coefficient(const FuzzyPartition& U) {
    double total = 0.0;
    for (double v : U.mu.storage()) total += v * v;
    return total / static_cast<double>(U.n());
}

// Mean membership entropy; 0 for hard partitions, log k for uniform ones.
inline double classification_entropy(const FuzzyPartition& U) {
    double total = 0.0;
    for (double v : U.mu.storage()) total -= xlogx(v);
    return total / static_cast<double>(U.n());
}

// Compactness over separation; coincident centers yield +infinity.
inline double xie_beni(const Dataset& data, const FuzzyPartition& U, const Centers& V) {
    const std::size_t n = data.n(), k = V.k();
    if (k < 2) throw std::invalid_argument("xie_beni: need at least 2 clusters");
    if (U.n() != n || U.k() != k || V.m() != data.m())
        throw std::invalid_argument("xie_beni: shape mismatch");

    double numerator = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = data.values.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            const double mu = U.mu(i, j);
            numerator += mu * mu * detail::sqdist(x, V.v.row(j));
        }
    }
    double min_sep = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b)
            min_sep = std::min(min_sep, detail::sqdist(V.v.row(a), V.v.row(b)));
    if (min_sep == 0.0) return std::numeric_limits<double>::infinity();
    return numerator / (static_cast<double>(n) * min_sep);
}

// Smallest between-cluster point distance over largest cluster diameter,
// plain Euclidean. A zero maximum diameter yields +infinity.
inline double dunn_index(const Dataset& data, std::span<const int> labels) {
    const std::size_t n = data.n();
    if (labels.size() != n) throw std::invalid_argument("dunn_index: label vector length mismatch");

    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
    if (groups.size() < 2) throw std::invalid_argument("dunn_index: need at least 2 non-empty clusters");

    std::vector<const std::vector<std::size_t>*> clusters;
    for (const auto& [id, members] : groups) clusters.push_back(&members);

    double max_diameter = 0.0;
    for (const auto* members : clusters)
        for (std::size_t a = 0; a < members->size(); ++a)
            for (std::size_t b = a + 1; b < members->size(); ++b)
                max_diameter = std::max(max_diameter,
                                        detail::sqdist(data.values.row((*members)[a]),
                                                       data.values.row((*members)[b])));

    double min_inter = std::numeric_limits<double>::infinity();
    for (std::size_t ca = 0; ca < clusters.size(); ++ca)
        for (std::size_t cb = ca + 1; cb < clusters.size(); ++cb)
            for (std::size_t a : *clusters[ca])
                for (std::size_t b : *clusters[cb])
                    min_inter = std::min(min_inter,
                                         detail::sqdist(data.values.row(a), data.values.row(b)));

    if (max_diameter == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(min_inter) / std::sqrt(max_diameter);
}

}  // namespace evfkm
