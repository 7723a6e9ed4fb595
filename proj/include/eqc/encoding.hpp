#pragma once

#include <span>
#include <variant>
#include <vector>

#include "eqc/statevector.hpp"

namespace eqc {

// Label encodings turn a measured state into class estimators, and losses
// turn estimators plus labels into a training objective.
//
// Binary: labels in {-1, +1}, estimator p(x) = <P> for a Z/I parity
// observable. Multiclass: labels in {0..k-1}, estimator y_j sums the
// measured distribution over a disjoint basis-index bucket per class.

inline constexpr double loss_epsilon = 1e-10;

struct BinaryParityEncoding {
    PauliZObservable observable;
    double threshold = 0.0;  // p >= threshold -> +1, else -1
};

struct MultiHotEncoding {
    int n_qubits = 0;
    std::vector<std::vector<std::size_t>> buckets;

    std::size_t n_classes() const { return buckets.size(); }
};

/// Validated constructor: buckets must be pairwise disjoint, in range, and
/// at least as numerous as two classes.
inline MultiHotEncoding make_multi_hot(int n_qubits, std::vector<std::vector<std::size_t>> buckets) {
    if (n_qubits < 1) throw std::invalid_argument("encoding needs n_qubits >= 1");
    if (buckets.size() < 2) throw std::invalid_argument("multi-hot encoding needs k >= 2 buckets");
    const std::size_t dim = std::size_t{1} << n_qubits;
    std::vector<bool> seen(dim, false);
    std::size_t total = 0;
    for (const auto& bucket : buckets) {
        for (std::size_t idx : bucket) {
            if (idx >= dim)
                throw std::invalid_argument("bucket index " + std::to_string(idx) +
                                            " out of range for n=" + std::to_string(n_qubits));
            if (seen[idx])
                throw std::invalid_argument("bucket index " + std::to_string(idx) +
                                            " appears in more than one bucket");
            seen[idx] = true;
            ++total;
        }
    }
    if (total < buckets.size())
        throw std::invalid_argument("fewer bucketed indices than classes");
    return MultiHotEncoding{n_qubits, std::move(buckets)};
}

using LabelEncoding = std::variant<BinaryParityEncoding, MultiHotEncoding>;

inline bool is_binary(const LabelEncoding& enc) {
    return std::holds_alternative<BinaryParityEncoding>(enc);
}

enum class LossKind { MSE, LOG_LOSS, CROSS_ENTROPY };

inline std::string_view loss_name(LossKind k) {
    switch (k) {
        case LossKind::MSE: return "mse";
        case LossKind::LOG_LOSS: return "log_loss";
        case LossKind::CROSS_ENTROPY: return "cross_entropy";
    }
    throw std::logic_error("unhandled LossKind");
}

inline LossKind loss_from_name(std::string_view name) {
    if (name == "mse") return LossKind::MSE;
    if (name == "log_loss") return LossKind::LOG_LOSS;
    if (name == "cross_entropy") return LossKind::CROSS_ENTROPY;
    throw ConfigError("loss: unknown kind '" + std::string(name) + "'");
}

/// p(x) = <Psi| P |Psi>, in [-1, 1].
inline double parity_estimate(const StateVector& state, const BinaryParityEncoding& enc) {
    return expectation_z(state, enc.observable);
}

/// y_j = sum_{i in bucket_j} omega_i. Indices outside every bucket simply
/// drop their mass, so sum_j y_j <= 1.
inline std::vector<double> multiclass_estimates(std::span<const double> omega,
                                                const MultiHotEncoding& enc) {
    double total = 0.0;
    for (double w : omega) total += w;
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("omega is not a probability distribution");
    std::vector<double> estimates(enc.buckets.size(), 0.0);
    for (std::size_t j = 0; j < enc.buckets.size(); ++j) {
        for (std::size_t idx : enc.buckets[j]) {
            if (idx >= omega.size()) throw std::out_of_range("bucket index out of range for omega");
            estimates[j] += omega[idx];
        }
    }
    return estimates;
}

/// Splits indices 1 .. 2^n - 1 into k consecutive equal blocks, discarding
/// index 0 and any remainder at the top. For n=4, k=3 this gives
/// {1..5}, {6..10}, {11..15}.
inline MultiHotEncoding default_partition(int n_qubits, int k) {
    if (n_qubits < 1) throw std::invalid_argument("default_partition needs n_qubits >= 1");
    if (k < 2) throw std::invalid_argument("default_partition needs k >= 2");
    const std::size_t usable = (std::size_t{1} << n_qubits) - 1;
    const std::size_t block = usable / static_cast<std::size_t>(k);
    if (block == 0)
        throw std::invalid_argument("k=" + std::to_string(k) + " too large for n=" +
                                    std::to_string(n_qubits));
    std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < buckets.size(); ++j) {
        buckets[j].reserve(block);
        for (std::size_t i = 0; i < block; ++i) buckets[j].push_back(1 + j * block + i);
    }
    return make_multi_hot(n_qubits, std::move(buckets));
}

/// argmax_j, ties resolved to the lowest class index.
inline int predict_label(std::span<const double> estimates) {
    if (estimates.empty()) throw std::invalid_argument("empty estimate vector");
    std::size_t best = 0;
    for (std::size_t j = 1; j < estimates.size(); ++j)
        if (estimates[j] > estimates[best]) best = j;
    return static_cast<int>(best);
}

/// sign(p - threshold) with zero mapped to +1.
inline int predict_label(double parity, const BinaryParityEncoding& enc) {
    return parity >= enc.threshold ? +1 : -1;
}

/// Mean binary loss over a dataset; outputs are parity estimates, labels
/// are in {-1, +1}.
inline double dataset_loss(std::span<const double> outputs, std::span<const int> labels,
                           LossKind kind) {
    if (outputs.empty()) throw std::invalid_argument("empty dataset");
    if (outputs.size() != labels.size())
        throw std::invalid_argument("outputs and labels are not aligned");
    if (kind == LossKind::CROSS_ENTROPY)
        throw std::invalid_argument("cross_entropy needs multiclass estimates");
    double total = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const int y = labels[i];
        if (y != -1 && y != 1)
            throw std::invalid_argument("binary label must be -1 or +1, got " + std::to_string(y));
        const double p = outputs[i];
        if (kind == LossKind::MSE) {
            const double d = p - y;
            total += d * d;
        } else {
            total += -std::log((1.0 + y * p) / 2.0 + loss_epsilon);
        }
    }
    return total / static_cast<double>(outputs.size());
}

/// Mean multiclass cross-entropy; bucket sums are renormalized to a
/// distribution before the log.
inline double dataset_loss(const std::vector<std::vector<double>>& estimates,
                           std::span<const int> labels, LossKind kind) {
    if (estimates.empty()) throw std::invalid_argument("empty dataset");
    if (estimates.size() != labels.size())
        throw std::invalid_argument("outputs and labels are not aligned");
    if (kind != LossKind::CROSS_ENTROPY)
        throw std::invalid_argument(std::string(loss_name(kind)) + " needs binary outputs");
    double total = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& y_hat = estimates[i];
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= y_hat.size())
            throw std::invalid_argument("label " + std::to_string(y) + " outside encoding");
        double sum = 0.0;
        for (double v : y_hat) sum += v;
        const double normalized = y_hat[static_cast<std::size_t>(y)] / (sum + loss_epsilon);
        total += -std::log(normalized + loss_epsilon);
    }
    return total / static_cast<double>(estimates.size());
}

}  // namespace eqc
