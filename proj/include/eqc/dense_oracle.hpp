#pragma once

#include <Eigen/Dense>
#include <span>

#include "eqc/statevector.hpp"

namespace eqc {

// Full-matrix circuit composition. Deliberately a different route from the
// statevector kernels: each gate is embedded as a dense 2^n x 2^n unitary
// and the circuit is the matrix chain U_d ... U_1. Quadratic memory, so
// capped at 6 qubits; meant for verification and for small fixed unitaries,
// not simulation.

inline constexpr int dense_oracle_max_qubits = 6;

/// Dense 2^n x 2^n embedding of one gate.
inline Eigen::MatrixXcd gate_unitary(const Gate& g, int n_qubits) {
    if (n_qubits < 1 || n_qubits > dense_oracle_max_qubits)
        throw std::invalid_argument("gate_unitary supports 1..6 qubits");
    if (g.q0 >= n_qubits || (g.two_qubit() && g.q1 >= n_qubits))
        throw std::out_of_range("gate qubit out of range");
    const std::size_t dim = std::size_t{1} << n_qubits;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
    if (!g.two_qubit()) {
        const auto m = single_qubit_matrix(g.kind, g.angle);
        const std::size_t mask = std::size_t{1} << g.q0;
        for (std::size_t i = 0; i < dim; ++i) {
            if (i & mask) continue;
            const auto i0 = static_cast<Eigen::Index>(i);
            const auto i1 = static_cast<Eigen::Index>(i | mask);
            u(i0, i0) = m[0];
            u(i0, i1) = m[1];
            u(i1, i0) = m[2];
            u(i1, i1) = m[3];
        }
    } else {
        const auto m = two_qubit_matrix(g.kind, g.angle);
        const std::size_t m0 = std::size_t{1} << g.q0;
        const std::size_t m1 = std::size_t{1} << g.q1;
        for (std::size_t i = 0; i < dim; ++i) {
            if (i & (m0 | m1)) continue;
            const std::size_t idx[4] = {i, i | m0, i | m1, i | m0 | m1};
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    u(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c])) =
                        m[4 * r + c];
        }
    }
    return u;
}

/// Matrix product of the whole circuit, gates applied in list order.
inline Eigen::MatrixXcd dense_unitary_oracle(int n_qubits, std::span<const Gate> gates) {
    if (n_qubits < 1 || n_qubits > dense_oracle_max_qubits)
        throw std::invalid_argument("dense_unitary_oracle supports 1..6 qubits");
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
    for (const Gate& g : gates) u = gate_unitary(g, n_qubits) * u;
    return u;
}

inline Eigen::VectorXcd to_eigen(const StateVector& st) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(st.dim()));
    for (std::size_t i = 0; i < st.dim(); ++i) v(static_cast<Eigen::Index>(i)) = st.amplitudes[i];
    return v;
}

inline StateVector state_from_eigen(int n_qubits, const Eigen::VectorXcd& v) {
    std::vector<cxd> amps(static_cast<std::size_t>(v.size()));
    for (std::size_t i = 0; i < amps.size(); ++i) amps[i] = v(static_cast<Eigen::Index>(i));
    return StateVector::from_amplitudes(n_qubits, std::move(amps));
}

/// Haar-distributed random unitary (QR of a complex Ginibre matrix with the
/// usual phase fix). Deterministic per seed.
inline Eigen::MatrixXcd random_unitary(int dim, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXcd z(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) z(r, c) = cxd{gaussian(rng), gaussian(rng)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        const cxd d = r(j, j);
        const cxd phase = (std::abs(d) > 0.0) ? d / std::abs(d) : cxd{1.0, 0.0};
        q.col(j) *= phase;
    }
    return q;
}

/// Random real orthogonal matrix, deterministic per seed.
inline Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXd z(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) z(r, c) = gaussian(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

}  // namespace eqc
