#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eqc/util.hpp"

namespace eqc {

using cxd = std::complex<double>;

// Dense statevector simulation of the H + {RX,RY,RZ,RXX,RYY,RZZ} gate set.
//
// Convention: qubit 0 is the least significant bit of the basis index, so
// basis state |i> assigns qubit q the bit (i >> q) & 1. All rotation gates
// implement exp(-i * angle/2 * L) for the matching Pauli string L.

enum class GateKind : std::uint8_t { H, RX, RY, RZ, RXX, RYY, RZZ };

inline constexpr bool is_two_qubit(GateKind k) {
    return k == GateKind::RXX || k == GateKind::RYY || k == GateKind::RZZ;
}

inline constexpr bool has_angle(GateKind k) { return k != GateKind::H; }

inline std::string_view kind_name(GateKind k) {
    switch (k) {
        case GateKind::H: return "H";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::RXX: return "RXX";
        case GateKind::RYY: return "RYY";
        case GateKind::RZZ: return "RZZ";
    }
    throw std::logic_error("unhandled GateKind");
}

inline GateKind kind_from_name(std::string_view name) {
    if (name == "H") return GateKind::H;
    if (name == "RX") return GateKind::RX;
    if (name == "RY") return GateKind::RY;
    if (name == "RZ") return GateKind::RZ;
    if (name == "RXX") return GateKind::RXX;
    if (name == "RYY") return GateKind::RYY;
    if (name == "RZZ") return GateKind::RZZ;
    throw ParseError("unknown gate kind: " + std::string(name));
}

/// One gate in a circuit. Angles are stored wrapped into [0, 2*pi); a wrap
/// changes the unitary only by a global phase of -1.
struct Gate {
    GateKind kind;
    int q0;
    int q1;        // -1 for single-qubit kinds
    double angle;  // 0 for H

    static Gate h(int q) { return Gate{GateKind::H, q, -1, 0.0}; }
    static Gate rx(int q, double a) { return make(GateKind::RX, q, -1, a); }
    static Gate ry(int q, double a) { return make(GateKind::RY, q, -1, a); }
    static Gate rz(int q, double a) { return make(GateKind::RZ, q, -1, a); }
    static Gate rxx(int a, int b, double t) { return make(GateKind::RXX, a, b, t); }
    static Gate ryy(int a, int b, double t) { return make(GateKind::RYY, a, b, t); }
    static Gate rzz(int a, int b, double t) { return make(GateKind::RZZ, a, b, t); }

    static Gate make(GateKind kind, int q0, int q1, double angle) {
        if (q0 < 0) throw std::invalid_argument("gate qubit index must be >= 0");
        if (is_two_qubit(kind)) {
            if (q1 < 0) throw std::invalid_argument("two-qubit gate needs a second qubit");
            if (q0 == q1) throw std::invalid_argument("two-qubit gate qubits must be distinct");
        } else {
            q1 = -1;
        }
        return Gate{kind, q0, q1, has_angle(kind) ? wrap_angle(angle) : 0.0};
    }

    bool two_qubit() const { return is_two_qubit(kind); }

    friend bool operator==(const Gate&, const Gate&) = default;
};

struct StateVector {
    int n_qubits = 0;
    std::vector<cxd> amplitudes;

    static StateVector zero(int n) {
        if (n < 1) throw std::invalid_argument("n_qubits must be >= 1");
        StateVector st;
        st.n_qubits = n;
        st.amplitudes.assign(std::size_t{1} << n, cxd{0.0, 0.0});
        st.amplitudes[0] = cxd{1.0, 0.0};
        return st;
    }

    /// Construct from explicit amplitudes; the norm must already be 1.
    static StateVector from_amplitudes(int n, std::vector<cxd> amps) {
        if (n < 1) throw std::invalid_argument("n_qubits must be >= 1");
        if (amps.size() != (std::size_t{1} << n))
            throw std::invalid_argument("amplitude count must be 2^n_qubits");
        StateVector st;
        st.n_qubits = n;
        st.amplitudes = std::move(amps);
        if (std::abs(st.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("state is not normalized");
        return st;
    }

    std::size_t dim() const { return amplitudes.size(); }

    double norm() const {
        double s = 0.0;
        for (const cxd& a : amplitudes) s += std::norm(a);
        return std::sqrt(s);
    }
};

/// Tensor product of Z and I factors; mask bit q set means Z on qubit q.
struct PauliZObservable {
    int n_qubits = 0;
    std::uint64_t mask = 0;

    static PauliZObservable all_z(int n) {
        check_n(n);
        return PauliZObservable{n, n >= 64 ? ~0ull : ((std::uint64_t{1} << n) - 1)};
    }

    static PauliZObservable single_z(int n, int qubit) {
        check_n(n);
        if (qubit < 0 || qubit >= n) throw std::invalid_argument("observable qubit out of range");
        return PauliZObservable{n, std::uint64_t{1} << qubit};
    }

    /// Flags indexed by qubit; flags[q] == true means Z on qubit q.
    static PauliZObservable from_flags(const std::vector<bool>& flags) {
        check_n(static_cast<int>(flags.size()));
        PauliZObservable obs{static_cast<int>(flags.size()), 0};
        for (std::size_t q = 0; q < flags.size(); ++q)
            if (flags[q]) obs.mask |= std::uint64_t{1} << q;
        if (obs.mask == 0) throw std::invalid_argument("observable must flag at least one qubit Z");
        return obs;
    }

    /// String of 'Z'/'I' characters, position 0 = qubit 0 (e.g. "ZIZ").
    static PauliZObservable from_string(std::string_view s) {
        std::vector<bool> flags;
        flags.reserve(s.size());
        for (char c : s) {
            if (c == 'Z' || c == 'z') flags.push_back(true);
            else if (c == 'I' || c == 'i') flags.push_back(false);
            else throw std::invalid_argument(std::string("observable mask character must be Z or I, got '") + c + "'");
        }
        return from_flags(flags);
    }

    /// Eigenvalue of basis state |i>: (-1)^popcount(i & mask).
    int eigenvalue(std::uint64_t basis_index) const {
        return (std::popcount(basis_index & mask) & 1) ? -1 : 1;
    }

private:
    static void check_n(int n) {
        if (n < 1) throw std::invalid_argument("observable needs n_qubits >= 1");
    }
};

// ---------------------------------------------------------------------------
// Gate matrices

/// Row-major 2x2 unitary for a single-qubit kind.
inline std::array<cxd, 4> single_qubit_matrix(GateKind kind, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    switch (kind) {
        case GateKind::H: {
            const double r = 1.0 / std::sqrt(2.0);
            return {cxd{r, 0}, cxd{r, 0}, cxd{r, 0}, cxd{-r, 0}};
        }
        case GateKind::RX:
            return {cxd{c, 0}, cxd{0, -s}, cxd{0, -s}, cxd{c, 0}};
        case GateKind::RY:
            return {cxd{c, 0}, cxd{-s, 0}, cxd{s, 0}, cxd{c, 0}};
        case GateKind::RZ:
            return {cxd{c, -s}, cxd{0, 0}, cxd{0, 0}, cxd{c, s}};
        default:
            throw std::invalid_argument("not a single-qubit kind");
    }
}

/// Row-major 4x4 unitary for a two-qubit kind. Local basis order is
/// |b1 b0> = 00, 01, 10, 11 with b0 the gate's first qubit.
inline std::array<cxd, 16> two_qubit_matrix(GateKind kind, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    std::array<cxd, 16> m{};
    switch (kind) {
        case GateKind::RXX:
            m[0] = m[5] = m[10] = m[15] = cxd{c, 0};
            m[3] = m[6] = m[9] = m[12] = cxd{0, -s};
            return m;
        case GateKind::RYY:
            m[0] = m[5] = m[10] = m[15] = cxd{c, 0};
            m[3] = m[12] = cxd{0, s};
            m[6] = m[9] = cxd{0, -s};
            return m;
        case GateKind::RZZ:
            m[0] = m[15] = cxd{c, -s};
            m[5] = m[10] = cxd{c, s};
            return m;
        default:
            throw std::invalid_argument("not a two-qubit kind");
    }
}

// ---------------------------------------------------------------------------
// Simulation

namespace detail {

inline void check_gate(const StateVector& st, const Gate& g) {
    if (g.q0 < 0 || g.q0 >= st.n_qubits)
        throw std::out_of_range("gate qubit " + std::to_string(g.q0) + " out of range for n=" +
                                std::to_string(st.n_qubits));
    if (g.two_qubit()) {
        if (g.q1 < 0 || g.q1 >= st.n_qubits)
            throw std::out_of_range("gate qubit " + std::to_string(g.q1) + " out of range for n=" +
                                    std::to_string(st.n_qubits));
        if (g.q0 == g.q1) throw std::invalid_argument("two-qubit gate qubits must be distinct");
    }
}

inline void apply_in_place(StateVector& st, const Gate& g) {
    check_gate(st, g);
    const std::size_t dim = st.dim();
    cxd* amp = st.amplitudes.data();
    if (!g.two_qubit()) {
        const auto m = single_qubit_matrix(g.kind, g.angle);
        const std::size_t mask = std::size_t{1} << g.q0;
        for (std::size_t i = 0; i < dim; ++i) {
            if (i & mask) continue;
            const cxd a0 = amp[i];
            const cxd a1 = amp[i | mask];
            amp[i] = m[0] * a0 + m[1] * a1;
            amp[i | mask] = m[2] * a0 + m[3] * a1;
        }
    } else {
        const auto m = two_qubit_matrix(g.kind, g.angle);
        const std::size_t m0 = std::size_t{1} << g.q0;
        const std::size_t m1 = std::size_t{1} << g.q1;
        for (std::size_t i = 0; i < dim; ++i) {
            if (i & (m0 | m1)) continue;
            const std::size_t idx[4] = {i, i | m0, i | m1, i | m0 | m1};
            const cxd a[4] = {amp[idx[0]], amp[idx[1]], amp[idx[2]], amp[idx[3]]};
            for (int r = 0; r < 4; ++r)
                amp[idx[r]] = m[4 * r + 0] * a[0] + m[4 * r + 1] * a[1] +
                              m[4 * r + 2] * a[2] + m[4 * r + 3] * a[3];
        }
    }
}

}  // namespace detail

/// Apply one gate; returns the new state, the input is untouched.
inline StateVector apply_gate(const StateVector& state, const Gate& gate) {
    StateVector out = state;
    detail::apply_in_place(out, gate);
    return out;
}

/// Apply a gate list (list order = application order) to a given state.
inline StateVector run_gates(const StateVector& state, std::span<const Gate> gates) {
    StateVector out = state;
    for (const Gate& g : gates) detail::apply_in_place(out, g);
    return out;
}

/// C|0...0> for the circuit C given as an ordered gate list.
inline StateVector run_circuit(int n_qubits, std::span<const Gate> gates) {
    return run_gates(StateVector::zero(n_qubits), gates);
}

/// Measurement distribution: Omega_i = |alpha_i|^2.
inline std::vector<double> probabilities(const StateVector& state) {
    std::vector<double> omega(state.dim());
    for (std::size_t i = 0; i < omega.size(); ++i) omega[i] = std::norm(state.amplitudes[i]);
    return omega;
}

/// <state| P |state> for a Z/I tensor observable; lies in [-1, 1].
inline double expectation_z(const StateVector& state, const PauliZObservable& obs) {
    if (obs.n_qubits != state.n_qubits)
        throw std::invalid_argument("observable mask length does not match state qubit count");
    double value = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i)
        value += obs.eigenvalue(i) * std::norm(state.amplitudes[i]);
    return value;
}

/// Multinomial shot sampling; deterministic for a fixed seed. Returns counts
/// per basis index, summing to shots.
inline std::vector<std::uint64_t> sample_counts(const StateVector& state, std::uint64_t shots,
                                                std::uint64_t rng_seed) {
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    const std::vector<double> omega = probabilities(state);
    std::vector<double> cdf(omega.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        acc += omega[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;
    std::vector<std::uint64_t> counts(omega.size(), 0);
    std::mt19937_64 rng = make_rng(rng_seed);
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = uniform_double(rng);
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u,
                                         [](double c, double v) { return c <= v; });
        counts[static_cast<std::size_t>(it - cdf.begin())] += 1;
    }
    return counts;
}

}  // namespace eqc
