#pragma once

#include <span>
#include <vector>

#include "eqc/dataset.hpp"
#include "eqc/encoding.hpp"
#include "eqc/feature_map.hpp"
#include "eqc/statevector.hpp"

namespace eqc {

// Shared evaluation path for both trainers: feature-mapped states are
// prepared once, then each candidate circuit is applied as a tail and scored
// through the label encoding.

struct EncodedData {
    int n_qubits = 0;
    std::vector<StateVector> states;
    std::vector<int> labels;

    std::size_t size() const { return states.size(); }
};

inline EncodedData encode_dataset(const Dataset& data, const FeatureMapSpec& map) {
    validate_dataset(data);
    if (data.n_features() != map.n_features)
        throw std::invalid_argument("feature map expects " + std::to_string(map.n_features) +
                                    " features, dataset has " + std::to_string(data.n_features()));
    EncodedData out;
    out.n_qubits = map.n_features;
    out.labels = data.labels;
    out.states.reserve(data.size());
    for (const auto& row : data.features) out.states.push_back(prepare_state(map, row));
    return out;
}

// shots == 0 evaluates exact expectations; shots > 0 estimates them from a
// seeded finite-sample measurement per state.
struct EvalOptions {
    std::uint64_t shots = 0;
    std::uint64_t shots_seed = 0;
};

struct Predictions {
    std::vector<double> parity;                    // binary encodings
    std::vector<std::vector<double>> scores;       // multiclass encodings
};

namespace detail {

inline std::vector<double> measured_distribution(const StateVector& state,
                                                 const EvalOptions& opts, std::size_t index) {
    if (opts.shots == 0) return probabilities(state);
    const auto counts = sample_counts(state, opts.shots, derive_seed(opts.shots_seed, index));
    std::vector<double> omega(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        omega[i] = static_cast<double>(counts[i]) / static_cast<double>(opts.shots);
    return omega;
}

}  // namespace detail

inline Predictions evaluate_circuit(const EncodedData& data, std::span<const Gate> tail,
                                    const LabelEncoding& enc, const EvalOptions& opts = {}) {
    Predictions out;
    const bool binary = is_binary(enc);
    if (binary)
        out.parity.reserve(data.size());
    else
        out.scores.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        StateVector state = data.states[i];
        for (const Gate& g : tail) detail::apply_in_place(state, g);
        if (binary) {
            const auto& parity_enc = std::get<BinaryParityEncoding>(enc);
            if (opts.shots == 0) {
                out.parity.push_back(parity_estimate(state, parity_enc));
            } else {
                const auto omega = detail::measured_distribution(state, opts, i);
                double e = 0.0;
                for (std::size_t b = 0; b < omega.size(); ++b)
                    e += parity_enc.observable.eigenvalue(b) * omega[b];
                out.parity.push_back(e);
            }
        } else {
            const auto omega = detail::measured_distribution(state, opts, i);
            out.scores.push_back(multiclass_estimates(omega, std::get<MultiHotEncoding>(enc)));
        }
    }
    return out;
}

inline double predictions_loss(const Predictions& preds, std::span<const int> labels,
                               LossKind loss, const LabelEncoding& enc) {
    if (is_binary(enc)) return dataset_loss(preds.parity, labels, loss);
    return dataset_loss(preds.scores, labels, loss);
}

inline double predictions_accuracy(const Predictions& preds, std::span<const int> labels,
                                   const LabelEncoding& enc) {
    if (labels.empty()) throw std::invalid_argument("empty dataset");
    std::size_t hits = 0;
    if (is_binary(enc)) {
        const auto& parity_enc = std::get<BinaryParityEncoding>(enc);
        if (preds.parity.size() != labels.size())
            throw std::invalid_argument("predictions and labels are not aligned");
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (predict_label(preds.parity[i], parity_enc) == labels[i]) ++hits;
    } else {
        if (preds.scores.size() != labels.size())
            throw std::invalid_argument("predictions and labels are not aligned");
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (predict_label(preds.scores[i]) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// One row of a training trace, shared by both trainers.
struct GenerationRecord {
    int generation = 0;
    double best_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    int depth = 0;
};

inline std::string history_to_csv(std::span<const GenerationRecord> history) {
    std::string out = "generation,best_loss,train_acc,test_acc,depth\n";
    for (const auto& rec : history) {
        out += std::to_string(rec.generation);
        out += ',';
        out += format_double(rec.best_loss);
        out += ',';
        out += format_double(rec.train_accuracy);
        out += ',';
        out += format_double(rec.test_accuracy);
        out += ',';
        out += std::to_string(rec.depth);
        out += '\n';
    }
    return out;
}

}  // namespace eqc
