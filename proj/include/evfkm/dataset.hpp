#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evfkm/matrix.hpp"
#include "evfkm/random.hpp"

namespace evfkm {

// Feature matrix with optional ground-truth class ids. Immutable by convention
// once built; fits and trials share const references to it.
struct Dataset {
    std::string name;
    Matrix values;                              // n samples x m features
    std::vector<std::string> feature_names;     // size m
    std::optional<std::vector<int>> labels;     // size n, ids 0..c-1
    std::vector<std::string> label_names;       // id -> original spelling, when labeled

    std::size_t n() const noexcept { return values.rows(); }
    std::size_t m() const noexcept { return values.cols(); }

    std::size_t num_classes() const {
        if (!labels) return 0;
        int mx = -1;
        for (int v : *labels) mx = std::max(mx, v);
        return static_cast<std::size_t>(mx + 1);
    }

    void validate() const {
        if (n() < 2) throw std::invalid_argument("Dataset: need at least 2 samples");
        if (m() < 1) throw std::invalid_argument("Dataset: need at least 1 feature");
        if (feature_names.size() != m())
            throw std::invalid_argument("Dataset: feature_names size mismatch");
        for (double v : values.storage())
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite value");
        if (labels) {
            if (labels->size() != n())
                throw std::invalid_argument("Dataset: labels size mismatch");
            const std::size_t c = num_classes();
            std::vector<bool> seen(c, false);
            for (int v : *labels) {
                if (v < 0 || static_cast<std::size_t>(v) >= c)
                    throw std::invalid_argument("Dataset: label id out of range");
                seen[static_cast<std::size_t>(v)] = true;
            }
            for (bool s : seen)
                if (!s) throw std::invalid_argument("Dataset: label ids not contiguous");
        }
    }
};

enum class Scaling { MinMax, ZScore, None };

inline std::optional<Scaling> scaling_from_name(std::string_view s) {
    if (s == "minmax" || s == "min-max") return Scaling::MinMax;
    if (s == "zscore" || s == "z-score") return Scaling::ZScore;
    if (s == "none") return Scaling::None;
    return std::nullopt;
}

inline std::string_view scaling_name(Scaling s) {
    switch (s) {
        case Scaling::MinMax: return "minmax";
        case Scaling::ZScore: return "zscore";
        default: return "none";
    }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// Strict numeric cell parse: whole cell must be one finite number.
inline std::optional<double> parse_number(std::string_view cell) {
    const std::string_view t = trim(cell);
    if (t.empty()) return std::nullopt;
    double value = 0.0;
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

// RFC-4180-style record reader: quoted fields may contain the delimiter,
// doubled quotes, and embedded newlines. Blank lines are skipped.
inline std::vector<std::vector<std::string>> read_csv_records(std::istream& in, char delimiter) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any_char = false;

    auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        const bool blank = fields.size() == 1 && trim(fields[0]).empty();
        if (!blank) records.push_back(std::move(fields));
        fields.clear();
        any_char = false;
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get(c);
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            any_char = true;
        } else if (c == '"') {
            in_quotes = true;
            any_char = true;
        } else if (c == delimiter) {
            end_field();
            any_char = true;
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            // swallowed; the following '\n' (if any) ends the record
            if (in.peek() != '\n') end_record();
        } else {
            field.push_back(c);
            any_char = true;
        }
    }
    if (any_char || !field.empty() || !fields.empty()) end_record();
    return records;
}

}  // namespace detail

// Loads a delimited text file. label_column may be a 0-based column index or a
// header name. A first row with any non-numeric cell outside the label column
// is treated as a header. Labels (strings or numbers) are canonicalized to
// contiguous ids 0..c-1 in order of first appearance.
inline Dataset load_csv(const std::filesystem::path& path,
                        const std::optional<std::string>& label_column = {},
                        char delimiter = ',') {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open file");
    // skip a UTF-8 byte-order mark if present
    if (in.peek() == 0xEF) {
        char bom[3];
        in.read(bom, 3);
        if (in.gcount() != 3 || bom[1] != '\xBB' || bom[2] != '\xBF') {
            in.clear();
            in.seekg(0);
        }
    }

    const auto records = detail::read_csv_records(in, delimiter);
    if (records.empty()) throw std::runtime_error(path.string() + ": empty file");

    const std::size_t width = records[0].size();
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (records[r].size() != width) {
            std::ostringstream msg;
            msg << path.string() << ": row " << (r + 1) << ": expected " << width
                << " fields, got " << records[r].size();
            throw std::runtime_error(msg.str());
        }
    }

    // Resolve the label column: an all-digit spec is an index, anything else a
    // header name (which requires a header row).
    std::optional<std::size_t> label_idx;
    std::optional<std::string> label_name_wanted;
    if (label_column) {
        const std::string_view spec = detail::trim(*label_column);
        if (!spec.empty() && spec.size() <= 9 &&
            std::all_of(spec.begin(), spec.end(),
                        [](unsigned char ch) { return std::isdigit(ch); })) {
            const std::size_t idx = std::stoul(std::string(spec));
            if (idx >= width) {
                std::ostringstream msg;
                msg << path.string() << ": label column index " << idx << " out of range ("
                    << width << " columns)";
                throw std::runtime_error(msg.str());
            }
            label_idx = idx;
        } else {
            label_name_wanted = std::string(spec);
        }
    }

    bool has_header = false;
    if (label_name_wanted) {
        for (std::size_t c = 0; c < width; ++c) {
            if (std::string(detail::trim(records[0][c])) == *label_name_wanted) {
                label_idx = c;
                has_header = true;
                break;
            }
        }
        if (!label_idx)
            throw std::runtime_error(path.string() + ": label column '" + *label_name_wanted +
                                     "' not found in header row");
    } else {
        for (std::size_t c = 0; c < width && !has_header; ++c) {
            if (label_idx && c == *label_idx) continue;
            if (!detail::parse_number(records[0][c])) has_header = true;
        }
    }

    const std::size_t first_data = has_header ? 1 : 0;
    const std::size_t n = records.size() - first_data;
    if (n < 2) throw std::runtime_error(path.string() + ": need at least 2 data rows");
    const std::size_t m = width - (label_idx ? 1 : 0);
    if (m < 1) throw std::runtime_error(path.string() + ": no feature columns");

    Dataset out;
    out.name = path.stem().string();
    out.values = Matrix(n, m);
    out.feature_names.reserve(m);
    if (has_header) {
        for (std::size_t c = 0; c < width; ++c) {
            if (label_idx && c == *label_idx) continue;
            out.feature_names.emplace_back(detail::trim(records[0][c]));
        }
    } else {
        for (std::size_t f = 1; f <= m; ++f) out.feature_names.push_back("f" + std::to_string(f));
    }

    std::vector<int> labels;
    std::unordered_map<std::string, int> label_ids;
    if (label_idx) labels.reserve(n);

    for (std::size_t r = first_data; r < records.size(); ++r) {
        std::size_t f = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (label_idx && c == *label_idx) {
                const std::string raw(detail::trim(records[r][c]));
                auto [it, inserted] = label_ids.try_emplace(raw, static_cast<int>(out.label_names.size()));
                if (inserted) out.label_names.push_back(raw);
                labels.push_back(it->second);
                continue;
            }
            const auto value = detail::parse_number(records[r][c]);
            if (!value) {
                std::ostringstream msg;
                msg << path.string() << ": row " << (r + 1) << ", column " << (c + 1)
                    << ": cannot parse '" << records[r][c] << "' as a number";
                throw std::runtime_error(msg.str());
            }
            out.values(r - first_data, f++) = *value;
        }
    }
    if (label_idx) out.labels = std::move(labels);

    out.validate();
    return out;
}

// Per-feature rescaling. Constant features map to 0 under both methods;
// z-score uses the sample (n-1) standard deviation. Labels pass through.
inline Dataset standardize(const Dataset& data, Scaling method) {
    data.validate();
    Dataset out = data;
    if (method == Scaling::None) return out;

    const std::size_t n = data.n(), m = data.m();
    for (std::size_t j = 0; j < m; ++j) {
        if (method == Scaling::MinMax) {
            double lo = data.values(0, j), hi = lo;
            for (std::size_t i = 1; i < n; ++i) {
                lo = std::min(lo, data.values(i, j));
                hi = std::max(hi, data.values(i, j));
            }
            const double range = hi - lo;
            for (std::size_t i = 0; i < n; ++i)
                out.values(i, j) = range == 0.0 ? 0.0 : (data.values(i, j) - lo) / range;
        } else {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += data.values(i, j);
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = data.values(i, j) - mean;
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            for (std::size_t i = 0; i < n; ++i)
                out.values(i, j) = sd == 0.0 ? 0.0 : (data.values(i, j) - mean) / sd;
        }
    }
    return out;
}

struct MixtureComponent {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::size_t count = 0;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    std::uint64_t seed = 0;
};

// Labeled draw from axis-aligned gaussians, component by component.
// Deterministic per seed.
inline Dataset synth_mixture(const MixtureSpec& spec) {
    if (spec.components.empty()) throw std::invalid_argument("synth_mixture: no components");
    const std::size_t m = spec.components[0].mean.size();
    if (m == 0) throw std::invalid_argument("synth_mixture: zero-dimensional components");
    std::size_t n = 0;
    for (const auto& comp : spec.components) {
        if (comp.mean.size() != m || comp.stddev.size() != m)
            throw std::invalid_argument("synth_mixture: inconsistent component dimensions");
        if (comp.count == 0) throw std::invalid_argument("synth_mixture: component with zero count");
        for (double s : comp.stddev)
            if (!(s > 0.0) || !std::isfinite(s))
                throw std::invalid_argument("synth_mixture: stddev must be strictly positive");
        n += comp.count;
    }
    if (n < 2) throw std::invalid_argument("synth_mixture: need at least 2 samples in total");

    Dataset out;
    out.name = "mixture";
    out.values = Matrix(n, m);
    for (std::size_t f = 1; f <= m; ++f) out.feature_names.push_back("f" + std::to_string(f));
    std::vector<int> labels;
    labels.reserve(n);

    Rng rng(spec.seed);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
        const auto& comp = spec.components[c];
        for (std::size_t r = 0; r < comp.count; ++r, ++row) {
            for (std::size_t l = 0; l < m; ++l)
                out.values(row, l) = comp.mean[l] + comp.stddev[l] * rng.next_gaussian();
            labels.push_back(static_cast<int>(c));
        }
        out.label_names.push_back("c" + std::to_string(c));
    }
    out.labels = std::move(labels);
    out.validate();
    return out;
}

}  // namespace evfkm
