#pragma once

#include <span>
#include <vector>

#include "eqc/classifier.hpp"
#include "eqc/dense_oracle.hpp"

namespace eqc {

// Fixed-topology baseline: a layered hardware-efficient ansatz trained by
// full-batch gradient descent, plus the gradient-variance probe and the
// real-circuit cost-gradient algebra used to study barren plateaus.

struct AnsatzSpec {
    int n_qubits = 0;
    int layers = 1;

    int parameter_count() const { return 2 * n_qubits * layers; }
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 500;
    std::uint64_t seed = 0;
};

inline void validate_ansatz(const AnsatzSpec& spec) {
    if (spec.n_qubits < 1) throw ConfigError("ansatz needs n_qubits >= 1");
    if (spec.layers < 1) throw ConfigError("ansatz needs layers >= 1");
}

/// Per layer: RY then RZ on every qubit, then an RZZ(pi/2) entangling ring
/// q_i - q_{(i+1) mod n}. No entanglers on a single qubit. Parameter k maps
/// to layer k / 2n, RY for the first n slots of a layer, RZ for the rest.
inline std::vector<Gate> build_ansatz(const AnsatzSpec& spec, std::span<const double> theta) {
    validate_ansatz(spec);
    if (static_cast<int>(theta.size()) != spec.parameter_count())
        throw std::invalid_argument("ansatz expects " + std::to_string(spec.parameter_count()) +
                                    " parameters, got " + std::to_string(theta.size()));
    const int n = spec.n_qubits;
    std::vector<Gate> gates;
    gates.reserve(static_cast<std::size_t>(spec.layers) *
                  static_cast<std::size_t>(n > 1 ? 3 * n : 2 * n));
    for (int layer = 0; layer < spec.layers; ++layer) {
        const std::size_t base = static_cast<std::size_t>(2 * n * layer);
        for (int i = 0; i < n; ++i)
            gates.push_back(Gate::ry(i, theta[base + static_cast<std::size_t>(i)]));
        for (int i = 0; i < n; ++i)
            gates.push_back(Gate::rz(i, theta[base + static_cast<std::size_t>(n + i)]));
        if (n > 1)
            for (int i = 0; i < n; ++i) gates.push_back(Gate::rzz(i, (i + 1) % n, pi / 2.0));
    }
    return gates;
}

namespace detail {

// d(loss)/d(output) factors at the unshifted point. Binary: one factor per
// sample. Multiclass: one factor per (sample, class).
inline std::vector<double> binary_loss_grad(std::span<const double> outputs,
                                            std::span<const int> labels, LossKind loss) {
    std::vector<double> grad(outputs.size());
    const double inv_n = 1.0 / static_cast<double>(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const double p = outputs[i];
        const double y = labels[i];
        if (loss == LossKind::MSE)
            grad[i] = 2.0 * (p - y) * inv_n;
        else
            grad[i] = -(y / 2.0) / ((1.0 + y * p) / 2.0 + loss_epsilon) * inv_n;
    }
    return grad;
}

inline std::vector<std::vector<double>> multiclass_loss_grad(
    const std::vector<std::vector<double>>& scores, std::span<const int> labels) {
    std::vector<std::vector<double>> grad(scores.size());
    const double inv_n = 1.0 / static_cast<double>(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& y_hat = scores[i];
        const auto y = static_cast<std::size_t>(labels[i]);
        double sum = 0.0;
        for (double v : y_hat) sum += v;
        const double denom = sum + loss_epsilon;
        const double t = y_hat[y] / denom;
        grad[i].resize(y_hat.size());
        for (std::size_t j = 0; j < y_hat.size(); ++j) {
            const double dt = ((j == y ? denom : 0.0) - y_hat[y]) / (denom * denom);
            grad[i][j] = -dt / (t + loss_epsilon) * inv_n;
        }
    }
    return grad;
}

}  // namespace detail

/// Exact gradient of the dataset loss: each estimator's derivative comes
/// from +-pi/2 shifts of one angle (exact for these rotation generators),
/// combined with the analytic derivative of the loss in the estimators.
inline std::vector<double> parameter_shift_gradient(const AnsatzSpec& spec,
                                                    std::span<const double> theta,
                                                    const EncodedData& train,
                                                    const LabelEncoding& enc, LossKind loss) {
    const int n_params = spec.parameter_count();
    if (static_cast<int>(theta.size()) != n_params)
        throw std::invalid_argument("theta length does not match ansatz");
    const bool binary = is_binary(enc);
    const Predictions base = evaluate_circuit(train, build_ansatz(spec, theta), enc);
    std::vector<double> binary_factors;
    std::vector<std::vector<double>> multi_factors;
    if (binary)
        binary_factors = detail::binary_loss_grad(base.parity, train.labels, loss);
    else
        multi_factors = detail::multiclass_loss_grad(base.scores, train.labels);

    std::vector<double> gradient(static_cast<std::size_t>(n_params), 0.0);
    std::vector<double> shifted(theta.begin(), theta.end());
    for (int k = 0; k < n_params; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const double original = shifted[ks];
        shifted[ks] = original + pi / 2.0;
        const Predictions plus = evaluate_circuit(train, build_ansatz(spec, shifted), enc);
        shifted[ks] = original - pi / 2.0;
        const Predictions minus = evaluate_circuit(train, build_ansatz(spec, shifted), enc);
        shifted[ks] = original;

        double g = 0.0;
        if (binary) {
            for (std::size_t i = 0; i < binary_factors.size(); ++i)
                g += binary_factors[i] * (plus.parity[i] - minus.parity[i]) / 2.0;
        } else {
            for (std::size_t i = 0; i < multi_factors.size(); ++i)
                for (std::size_t j = 0; j < multi_factors[i].size(); ++j)
                    g += multi_factors[i][j] * (plus.scores[i][j] - minus.scores[i][j]) / 2.0;
        }
        gradient[ks] = g;
    }
    return gradient;
}

inline std::vector<double> parameter_shift_gradient(const AnsatzSpec& spec,
                                                    std::span<const double> theta,
                                                    const Dataset& data,
                                                    const FeatureMapSpec& map,
                                                    const LabelEncoding& enc, LossKind loss) {
    return parameter_shift_gradient(spec, theta, encode_dataset(data, map), enc, loss);
}

/// Independent check: central differences of the full dataset loss.
inline std::vector<double> finite_difference_gradient(const AnsatzSpec& spec,
                                                      std::span<const double> theta,
                                                      const EncodedData& train,
                                                      const LabelEncoding& enc, LossKind loss,
                                                      double h = 1e-5) {
    if (static_cast<int>(theta.size()) != spec.parameter_count())
        throw std::invalid_argument("theta length does not match ansatz");
    auto loss_at = [&](std::span<const double> t) {
        const Predictions preds = evaluate_circuit(train, build_ansatz(spec, t), enc);
        return predictions_loss(preds, train.labels, loss, enc);
    };
    std::vector<double> gradient(theta.size());
    std::vector<double> shifted(theta.begin(), theta.end());
    for (std::size_t k = 0; k < shifted.size(); ++k) {
        const double original = shifted[k];
        shifted[k] = original + h;
        const double plus = loss_at(shifted);
        shifted[k] = original - h;
        const double minus = loss_at(shifted);
        shifted[k] = original;
        gradient[k] = (plus - minus) / (2.0 * h);
    }
    return gradient;
}

struct VqcResult {
    std::vector<double> theta;
    std::vector<GenerationRecord> history;
    double final_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

/// Full-batch gradient descent from a uniform [0, 2pi) initialization. One
/// history record per epoch, taken after that epoch's update.
inline VqcResult train_vqc(const AnsatzSpec& spec, const SplitDataset& data,
                           const FeatureMapSpec& map, const LabelEncoding& enc, LossKind loss,
                           const TrainConfig& cfg) {
    validate_ansatz(spec);
    if (spec.n_qubits != map.n_features)
        throw ConfigError("ansatz qubit count does not match the feature map");
    if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    const EncodedData train = encode_dataset(data.train, map);
    const EncodedData test = encode_dataset(data.test, map);

    auto rng = make_rng(cfg.seed);
    std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()));
    for (auto& t : theta) t = uniform_angle(rng);

    const int depth = static_cast<int>(build_ansatz(spec, theta).size());
    auto evaluate = [&](const EncodedData& split, double* acc) {
        const Predictions preds = evaluate_circuit(split, build_ansatz(spec, theta), enc);
        *acc = predictions_accuracy(preds, split.labels, enc);
        return predictions_loss(preds, split.labels, loss, enc);
    };

    VqcResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto gradient = parameter_shift_gradient(spec, theta, train, enc, loss);
        for (std::size_t k = 0; k < theta.size(); ++k)
            theta[k] = wrap_angle(theta[k] - cfg.learning_rate * gradient[k]);
        double train_acc = 0.0;
        double test_acc = 0.0;
        const double train_loss = evaluate(train, &train_acc);
        evaluate(test, &test_acc);
        result.history.push_back({epoch, train_loss, train_acc, test_acc, depth});
    }
    result.theta = std::move(theta);
    result.final_loss = result.history.back().best_loss;
    result.train_accuracy = result.history.back().train_accuracy;
    result.test_accuracy = result.history.back().test_accuracy;
    return result;
}

enum class ProbeObservable { Global, Local };

/// Variance over random initializations of dC/dtheta_1 for the ansatz cost
/// C(theta) = <0..0| A' H A |0..0>, H = Z..Z (Global) or Z on qubit 0
/// (Local). The shift rule gives the derivative exactly.
inline double gradient_variance_probe(int n_qubits, int layers, int n_samples, std::uint64_t seed,
                                      ProbeObservable observable = ProbeObservable::Global) {
    if (n_samples < 30) throw std::invalid_argument("probe needs n_samples >= 30");
    const AnsatzSpec spec{n_qubits, layers};
    validate_ansatz(spec);
    const PauliZObservable h = observable == ProbeObservable::Global
                                   ? PauliZObservable::all_z(n_qubits)
                                   : PauliZObservable::single_z(n_qubits, 0);
    auto cost = [&](std::span<const double> theta) {
        const StateVector state = run_circuit(n_qubits, build_ansatz(spec, theta));
        return expectation_z(state, h);
    };

    auto rng = make_rng(seed);
    std::vector<double> grads(static_cast<std::size_t>(n_samples));
    std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()));
    for (auto& g : grads) {
        for (auto& t : theta) t = uniform_angle(rng);
        const double original = theta[0];
        theta[0] = original + pi / 2.0;
        const double plus = cost(theta);
        theta[0] = original - pi / 2.0;
        const double minus = cost(theta);
        theta[0] = original;
        g = (plus - minus) / 2.0;
    }
    double mean = 0.0;
    for (double g : grads) mean += g;
    mean /= static_cast<double>(n_samples);
    double var = 0.0;
    for (double g : grads) var += (g - mean) * (g - mean);
    return var / static_cast<double>(n_samples - 1);
}

/// F(C) = tr[C |0><0| C' H] = c0' H c0 for a real circuit matrix C.
inline double circuit_cost(const Eigen::MatrixXd& c, const PauliZObservable& obs) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << obs.n_qubits);
    if (c.rows() != dim || c.cols() != dim)
        throw std::invalid_argument("circuit matrix shape does not match the observable");
    double f = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i)
        f += obs.eigenvalue(static_cast<std::size_t>(i)) * c(i, 0) * c(i, 0);
    return f;
}

/// dF/dC = 2 H C |0><0|: only the first column is nonzero, and a circuit
/// whose first column avoids H's support has a null gradient.
inline Eigen::MatrixXd cost_gradient_matrix(const Eigen::MatrixXd& c,
                                            const PauliZObservable& obs) {
    if (obs.n_qubits > 4)
        throw std::invalid_argument("cost_gradient_matrix supports n_qubits <= 4");
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << obs.n_qubits);
    if (c.rows() != dim || c.cols() != dim)
        throw std::invalid_argument("circuit matrix shape does not match the observable");
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        grad(i, 0) = 2.0 * obs.eigenvalue(static_cast<std::size_t>(i)) * c(i, 0);
    return grad;
}

inline Eigen::MatrixXd cost_gradient_matrix(const Eigen::MatrixXcd& c,
                                            const PauliZObservable& obs) {
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            if (std::abs(c(i, j).imag()) > 1e-12)
                throw std::invalid_argument("cost_gradient_matrix requires a real circuit matrix");
    return cost_gradient_matrix(Eigen::MatrixXd(c.real()), obs);
}

}  // namespace eqc
