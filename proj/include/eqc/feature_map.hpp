#pragma once

#include <span>
#include <vector>

#include "eqc/statevector.hpp"

namespace eqc {

// Data-encoding circuits U_Phi(x). Inputs are expected pre-scaled so each
// feature lies in [0, 2*pi); one qubit per feature.

enum class FeatureMapKind { ZZ_FULL, RX_PRODUCT };

inline std::string_view feature_map_name(FeatureMapKind k) {
    return k == FeatureMapKind::ZZ_FULL ? "zz_full" : "rx_product";
}

inline FeatureMapKind feature_map_from_name(std::string_view name) {
    if (name == "zz_full") return FeatureMapKind::ZZ_FULL;
    if (name == "rx_product") return FeatureMapKind::RX_PRODUCT;
    throw ConfigError("feature_map: unknown kind '" + std::string(name) +
                      "' (expected zz_full or rx_product)");
}

struct FeatureMapSpec {
    FeatureMapKind kind = FeatureMapKind::ZZ_FULL;
    int n_features = 1;   // = n_qubits
    int repetitions = 2;  // ZZ_FULL only
};

/// Entangling map: repetitions of H on every qubit followed by the diagonal
/// block V(x) = prod_i RZ(2*x_i) * prod_{i<j} RZZ(2*(pi-x_i)*(pi-x_j)).
inline std::vector<Gate> zz_feature_map_gates(std::span<const double> x, int n,
                                              int repetitions = 2) {
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("feature vector length does not match qubit count");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    std::vector<Gate> gates;
    gates.reserve(static_cast<std::size_t>(repetitions) * (2 * n + n * (n - 1) / 2));
    for (int rep = 0; rep < repetitions; ++rep) {
        for (int q = 0; q < n; ++q) gates.push_back(Gate::h(q));
        for (int q = 0; q < n; ++q) gates.push_back(Gate::rz(q, 2.0 * x[q]));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                gates.push_back(Gate::rzz(i, j, 2.0 * (pi - x[i]) * (pi - x[j])));
    }
    return gates;
}

/// Product map: one RX(x_i) per qubit, depth 1. Rejects features outside
/// [0, 2*pi) since those indicate missing scaling.
inline std::vector<Gate> rx_product_map_gates(std::span<const double> x, int n) {
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("feature vector length does not match qubit count");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    std::vector<Gate> gates;
    gates.reserve(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
        if (!(x[q] >= 0.0 && x[q] < two_pi))
            throw std::invalid_argument("feature " + std::to_string(q) +
                                        " outside [0, 2*pi); scale the data first");
        gates.push_back(Gate::rx(q, x[q]));
    }
    return gates;
}

inline std::vector<Gate> feature_map_gates(const FeatureMapSpec& spec, std::span<const double> x) {
    switch (spec.kind) {
        case FeatureMapKind::ZZ_FULL:
            return zz_feature_map_gates(x, spec.n_features, spec.repetitions);
        case FeatureMapKind::RX_PRODUCT:
            return rx_product_map_gates(x, spec.n_features);
    }
    throw std::logic_error("unhandled FeatureMapKind");
}

/// U_Phi(x) |0...0>
inline StateVector prepare_state(const FeatureMapSpec& spec, std::span<const double> x) {
    const std::vector<Gate> gates = feature_map_gates(spec, x);
    return run_circuit(spec.n_features, gates);
}

}  // namespace eqc
