#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "eqc/dense_oracle.hpp"
#include "eqc/feature_map.hpp"
#include "eqc/statevector.hpp"
#include "eqc/util.hpp"

namespace eqc {

// Tabular data with integer labels. Multiclass datasets use ids 0..k-1;
// binary datasets use -1/+1.
struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    int n_classes = 0;
    std::string provenance;

    std::size_t size() const { return features.size(); }
    int n_features() const {
        return features.empty() ? 0 : static_cast<int>(features.front().size());
    }
    bool uses_signed_labels() const {
        for (int y : labels)
            if (y < 0) return true;
        return false;
    }
};

struct SplitDataset {
    Dataset train;
    Dataset test;
};

inline void validate_dataset(const Dataset& data) {
    if (data.features.size() != data.labels.size())
        throw std::invalid_argument("dataset: feature rows and labels are not aligned");
    if (data.features.empty()) throw std::invalid_argument("dataset: empty");
    const std::size_t width = data.features.front().size();
    for (const auto& row : data.features)
        if (row.size() != width) throw std::invalid_argument("dataset: ragged feature rows");
    const bool is_signed = data.uses_signed_labels();
    for (int y : data.labels) {
        const bool ok = is_signed ? (y == -1 || y == 1) : (y >= 0 && y < data.n_classes);
        if (!ok) throw std::invalid_argument("dataset: label " + std::to_string(y) + " out of range");
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    for (auto& f : fields) {
        const auto begin = f.find_first_not_of(" \t");
        if (begin == std::string::npos) {
            f.clear();
            continue;
        }
        const auto end = f.find_last_not_of(" \t");
        f = f.substr(begin, end - begin + 1);
    }
    return fields;
}

inline double parse_csv_double(const std::string& field, std::size_t line_no) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) + ": '" + field + "' is not a number");
    return value;
}

inline int parse_csv_int(const std::string& field, std::size_t line_no) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) + ": '" + field + "' is not an integer");
    return value;
}

inline bool looks_numeric(const std::string& field) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    return ec == std::errc{} && ptr == field.data() + field.size();
}

inline int iris_class_id(const std::string& field, std::size_t line_no) {
    if (looks_numeric(field)) {
        const int id = parse_csv_int(field, line_no);
        if (id < 0 || id > 2)
            throw ParseError("line " + std::to_string(line_no) + ": class id " +
                             std::to_string(id) + " is not an iris class");
        return id;
    }
    std::string name = field;
    if (name.rfind("Iris-", 0) == 0) name = name.substr(5);
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (name == "setosa") return 0;
    if (name == "versicolor") return 1;
    if (name == "virginica") return 2;
    throw ParseError("line " + std::to_string(line_no) + ": unknown class '" + field + "'");
}

}  // namespace detail

/// Reads the 4-feature iris CSV (species as strings or class ids 0..2).
inline Dataset load_iris(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    Dataset data;
    data.n_classes = 3;
    data.provenance = "iris";
    std::string line;
    std::size_t line_no = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (first_content_line) {
            first_content_line = false;
            if (!fields.empty() && !detail::looks_numeric(fields.front())) continue;  // header
        }
        if (fields.size() != 5)
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 columns, found " +
                             std::to_string(fields.size()));
        std::vector<double> row(4);
        for (int j = 0; j < 4; ++j)
            row[static_cast<std::size_t>(j)] =
                detail::parse_csv_double(fields[static_cast<std::size_t>(j)], line_no);
        data.features.push_back(std::move(row));
        data.labels.push_back(detail::iris_class_id(fields[4], line_no));
    }
    if (data.features.empty()) throw ParseError(path + ": empty dataset");
    validate_dataset(data);
    return data;
}

/// Writes a dataset as `f0,..,f{n-1},label` with round-trip-exact numbers.
inline void save_dataset_csv(const Dataset& data, const std::string& path) {
    validate_dataset(data);
    std::string out;
    for (int j = 0; j < data.n_features(); ++j) {
        if (j > 0) out += ',';
        out += "f" + std::to_string(j);
    }
    out += ",label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.features[i].size(); ++j) {
            if (j > 0) out += ',';
            out += format_double(data.features[i][j]);
        }
        out += ',';
        out += std::to_string(data.labels[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

inline Dataset load_dataset_csv(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty dataset");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header.back() != "label")
        throw ParseError(path + ": header must be f0,..,f{n-1},label");
    const std::size_t n_features = header.size() - 1;
    for (std::size_t j = 0; j < n_features; ++j)
        if (header[j] != "f" + std::to_string(j))
            throw ParseError(path + ": header must be f0,..,f{n-1},label");

    Dataset data;
    data.provenance = "csv:" + path;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " columns, found " +
                             std::to_string(fields.size()));
        std::vector<double> row(n_features);
        for (std::size_t j = 0; j < n_features; ++j)
            row[j] = detail::parse_csv_double(fields[j], line_no);
        data.features.push_back(std::move(row));
        data.labels.push_back(detail::parse_csv_int(fields[n_features], line_no));
    }
    if (data.features.empty()) throw ParseError(path + ": empty dataset");

    int max_label = 0;
    bool any_negative = false;
    for (int y : data.labels) {
        any_negative = any_negative || y < 0;
        max_label = std::max(max_label, y);
    }
    data.n_classes = any_negative ? 2 : max_label + 1;
    if (data.n_classes < 2) throw ParseError(path + ": dataset needs at least two classes");
    validate_dataset(data);
    return data;
}

// Per-feature affine map onto [0, 2pi). Fit on the training split only and
// reused on test; out-of-range test values are clamped and counted.
class MinMaxScaler {
  public:
    static constexpr double target_max = two_pi * (1.0 - 1e-9);

    void fit(const Dataset& train) {
        validate_dataset(train);
        const std::size_t n = static_cast<std::size_t>(train.n_features());
        min_.assign(n, std::numeric_limits<double>::infinity());
        max_.assign(n, -std::numeric_limits<double>::infinity());
        for (const auto& row : train.features)
            for (std::size_t j = 0; j < n; ++j) {
                min_[j] = std::min(min_[j], row[j]);
                max_[j] = std::max(max_[j], row[j]);
            }
        for (std::size_t j = 0; j < n; ++j)
            if (!(max_[j] > min_[j]))
                throw std::invalid_argument("feature f" + std::to_string(j) +
                                            " is constant; cannot min-max scale");
    }

    Dataset transform(const Dataset& data) {
        require_fitted();
        Dataset out = data;
        for (auto& row : out.features) {
            if (row.size() != min_.size())
                throw std::invalid_argument("scaler was fit on a different feature count");
            for (std::size_t j = 0; j < row.size(); ++j) {
                double scaled = (row[j] - min_[j]) / (max_[j] - min_[j]) * target_max;
                if (scaled < 0.0 || scaled > target_max) {
                    scaled = std::clamp(scaled, 0.0, target_max);
                    ++clamped_;
                }
                row[j] = scaled;
            }
        }
        return out;
    }

    Dataset inverse_transform(const Dataset& scaled) const {
        require_fitted();
        Dataset out = scaled;
        for (auto& row : out.features) {
            if (row.size() != min_.size())
                throw std::invalid_argument("scaler was fit on a different feature count");
            for (std::size_t j = 0; j < row.size(); ++j)
                row[j] = row[j] / target_max * (max_[j] - min_[j]) + min_[j];
        }
        return out;
    }

    /// Number of values clamped so far because they fell outside the fitted range.
    long clamped_count() const { return clamped_; }
    std::span<const double> feature_min() const { return min_; }
    std::span<const double> feature_max() const { return max_; }

  private:
    void require_fitted() const {
        if (min_.empty()) throw std::logic_error("MinMaxScaler used before fit");
    }

    std::vector<double> min_;
    std::vector<double> max_;
    long clamped_ = 0;
};

// Synthetic binary dataset: grid points x in [0, 2pi)^n labeled by
// sign(<Phi(x)| V' Z..Z V |Phi(x)>) under the ZZ map and a fixed Haar-random
// V, keeping only points whose expectation clears the gap.
struct AdhocParams {
    int dim = 2;
    double gap = 0.3;
    int per_class = 20;
    int grid_density = 16;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> v_seed;  // defaults to a value derived from seed
};

struct AdhocMeta {
    int dim = 0;
    double gap = 0.0;
    int per_class = 0;
    std::uint64_t seed = 0;
    std::uint64_t v_seed = 0;
    int grid_density = 0;  // density that produced the dataset, after any refinement
};

struct AdhocResult {
    Dataset data;
    AdhocMeta meta;
};

/// Labeling functional of the generator, exposed so stored labels can be
/// re-verified against the emitted points.
inline double adhoc_expectation(std::span<const double> x, const Eigen::MatrixXcd& v) {
    const int n = static_cast<int>(x.size());
    const StateVector phi = prepare_state({FeatureMapKind::ZZ_FULL, n}, x);
    const Eigen::VectorXcd rotated = v * to_eigen(phi);
    const PauliZObservable parity = PauliZObservable::all_z(n);
    double e = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(rotated.size()); ++i)
        e += parity.eigenvalue(i) * std::norm(rotated[static_cast<Eigen::Index>(i)]);
    return e;
}

inline AdhocResult adhoc_generate(const AdhocParams& params) {
    if (params.dim != 2 && params.dim != 3)
        throw std::invalid_argument("ad-hoc generator supports dim 2 or 3");
    if (!(params.gap > 0.0)) throw std::invalid_argument("ad-hoc gap must be positive");
    if (params.per_class < 1) throw std::invalid_argument("ad-hoc per_class must be >= 1");
    if (params.grid_density < 2) throw std::invalid_argument("ad-hoc grid_density must be >= 2");

    const int n = params.dim;
    const std::uint64_t v_seed = params.v_seed.value_or(derive_seed(params.seed, 7));
    const Eigen::MatrixXcd v = random_unitary(std::size_t{1} << n, v_seed);

    constexpr int max_refinements = 3;
    for (int level = 0; level <= max_refinements; ++level) {
        const int density = params.grid_density << level;
        const std::size_t n_candidates =
            static_cast<std::size_t>(std::pow(static_cast<double>(density), n) + 0.5);
        std::vector<std::size_t> order(n_candidates);
        for (std::size_t i = 0; i < n_candidates; ++i) order[i] = i;
        auto rng = make_rng(derive_seed(params.seed, static_cast<std::uint64_t>(level)));
        for (std::size_t i = n_candidates - 1; i > 0; --i)
            std::swap(order[i], order[uniform_index(rng, i + 1)]);

        std::vector<std::vector<double>> positive, negative;
        for (std::size_t idx : order) {
            std::vector<double> x(static_cast<std::size_t>(n));
            std::size_t rest = idx;
            for (int d = 0; d < n; ++d) {
                x[static_cast<std::size_t>(d)] =
                    two_pi * static_cast<double>(rest % static_cast<std::size_t>(density)) /
                    static_cast<double>(density);
                rest /= static_cast<std::size_t>(density);
            }
            const double e = adhoc_expectation(x, v);
            if (std::abs(e) < params.gap) continue;
            auto& side = e > 0.0 ? positive : negative;
            if (static_cast<int>(side.size()) < params.per_class) side.push_back(std::move(x));
            if (static_cast<int>(positive.size()) == params.per_class &&
                static_cast<int>(negative.size()) == params.per_class)
                break;
        }
        if (static_cast<int>(positive.size()) == params.per_class &&
            static_cast<int>(negative.size()) == params.per_class) {
            Dataset data;
            data.n_classes = 2;
            data.provenance = "adhoc-" + std::to_string(n) + "d";
            for (auto& x : positive) {
                data.features.push_back(std::move(x));
                data.labels.push_back(+1);
            }
            for (auto& x : negative) {
                data.features.push_back(std::move(x));
                data.labels.push_back(-1);
            }
            return {std::move(data),
                    AdhocMeta{n, params.gap, params.per_class, params.seed, v_seed, density}};
        }
        if (level == max_refinements)
            throw GenerationError(
                "ad-hoc generation found " + std::to_string(positive.size()) + "+ / " +
                std::to_string(negative.size()) + "- samples of " +
                std::to_string(params.per_class) + " needed at gap " + format_double(params.gap) +
                " after refining the grid to density " + std::to_string(density));
    }
    throw std::logic_error("unreachable");
}

inline Dataset adhoc_generate(int n_dim, double gap, int per_class, std::uint64_t seed) {
    AdhocParams params;
    params.dim = n_dim;
    params.gap = gap;
    params.per_class = per_class;
    params.seed = seed;
    return adhoc_generate(params).data;
}

/// Stratified train/test split: per-class counts follow the fraction with
/// largest-remainder rounding, sampled without replacement per seed.
inline SplitDataset split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    validate_dataset(data);
    const std::size_t total = data.size();
    const long long total_train = std::llround(train_fraction * static_cast<double>(total));
    if (!(train_fraction > 0.0 && train_fraction < 1.0) || total_train < 1 ||
        total_train >= static_cast<long long>(total))
        throw std::invalid_argument("train_fraction " + format_double(train_fraction) +
                                    " leaves an empty split");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < total; ++i) by_class[data.labels[i]].push_back(i);
    for (const auto& [label, members] : by_class)
        if (members.size() < 2)
            throw std::invalid_argument("class " + std::to_string(label) +
                                        " has fewer than 2 samples");

    struct ClassQuota {
        int label;
        std::size_t count;
        std::size_t train;
        double remainder;
        std::size_t position;
    };
    std::vector<ClassQuota> quotas;
    long long assigned = 0;
    std::size_t position = 0;
    for (const auto& [label, members] : by_class) {
        const double exact = train_fraction * static_cast<double>(members.size());
        const auto floor_count = static_cast<std::size_t>(std::floor(exact));
        quotas.push_back({label, members.size(), floor_count,
                          exact - static_cast<double>(floor_count), position++});
        assigned += static_cast<long long>(floor_count);
    }
    std::vector<std::size_t> by_remainder(quotas.size());
    for (std::size_t i = 0; i < quotas.size(); ++i) by_remainder[i] = i;
    std::sort(by_remainder.begin(), by_remainder.end(), [&](std::size_t a, std::size_t b) {
        if (quotas[a].remainder != quotas[b].remainder)
            return quotas[a].remainder > quotas[b].remainder;
        return quotas[a].position < quotas[b].position;
    });
    for (std::size_t i = 0; assigned < total_train && i < by_remainder.size(); ++i, ++assigned)
        ++quotas[by_remainder[i]].train;

    auto rng = make_rng(seed);
    SplitDataset out;
    for (Dataset* part : {&out.train, &out.test}) {
        part->n_classes = data.n_classes;
        part->provenance = data.provenance;
    }
    for (const auto& quota : quotas) {
        auto members = by_class.at(quota.label);
        for (std::size_t i = members.size() - 1; i > 0; --i)
            std::swap(members[i], members[uniform_index(rng, i + 1)]);
        for (std::size_t i = 0; i < members.size(); ++i) {
            Dataset& part = i < quota.train ? out.train : out.test;
            part.features.push_back(data.features[members[i]]);
            part.labels.push_back(data.labels[members[i]]);
        }
    }
    validate_dataset(out.train);
    validate_dataset(out.test);
    return out;
}

}  // namespace eqc
