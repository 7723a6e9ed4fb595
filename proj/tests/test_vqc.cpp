#include <catch2/catch_amalgamated.hpp>

#include "eqc/vqc.hpp"

using namespace eqc;

namespace {

SplitDataset toy_split(int per_class, std::uint64_t seed) {
    const Dataset data = adhoc_generate(2, 0.3, per_class, seed);
    return split(data, 2.0 / 3.0, derive_seed(seed, 1));
}

LabelEncoding parity_encoding(int n) {
    return BinaryParityEncoding{PauliZObservable::all_z(n), 0.0};
}

double norm_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Central differences of F(C) entry by entry; exact for the quadratic F.
Eigen::MatrixXd fd_cost_gradient(const Eigen::MatrixXd& c, const PauliZObservable& obs,
                                 double h = 1e-5) {
    Eigen::MatrixXd grad(c.rows(), c.cols());
    Eigen::MatrixXd probe = c;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            probe(i, j) = c(i, j) + h;
            const double plus = circuit_cost(probe, obs);
            probe(i, j) = c(i, j) - h;
            const double minus = circuit_cost(probe, obs);
            probe(i, j) = c(i, j);
            grad(i, j) = (plus - minus) / (2.0 * h);
        }
    return grad;
}

}  // namespace

TEST_CASE("ansatz layout") {
    const AnsatzSpec spec{3, 2};
    REQUIRE(spec.parameter_count() == 12);
    std::vector<double> theta(12);
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = 0.01 * static_cast<double>(k + 1);
    const auto gates = build_ansatz(spec, theta);
    REQUIRE(gates.size() == 18);

    // Layer 0: RY q0..q2 with theta[0..2], RZ q0..q2 with theta[3..5], ring.
    for (int i = 0; i < 3; ++i) {
        REQUIRE(gates[static_cast<std::size_t>(i)].kind == GateKind::RY);
        REQUIRE(gates[static_cast<std::size_t>(i)].q0 == i);
        REQUIRE(gates[static_cast<std::size_t>(i)].angle ==
                Catch::Approx(theta[static_cast<std::size_t>(i)]));
        REQUIRE(gates[static_cast<std::size_t>(3 + i)].kind == GateKind::RZ);
        REQUIRE(gates[static_cast<std::size_t>(3 + i)].angle ==
                Catch::Approx(theta[static_cast<std::size_t>(3 + i)]));
    }
    REQUIRE(gates[6].kind == GateKind::RZZ);
    REQUIRE(gates[6].q0 == 0);
    REQUIRE(gates[6].q1 == 1);
    REQUIRE(gates[7].q0 == 1);
    REQUIRE(gates[7].q1 == 2);
    REQUIRE(gates[8].q0 == 2);
    REQUIRE(gates[8].q1 == 0);
    REQUIRE(gates[8].angle == Catch::Approx(pi / 2.0));
    // Layer 1 rotations start at parameter 6.
    REQUIRE(gates[9].kind == GateKind::RY);
    REQUIRE(gates[9].angle == Catch::Approx(theta[6]));
}

TEST_CASE("ansatz at zero angles reduces to the entangling ring") {
    const AnsatzSpec spec{2, 1};
    const std::vector<double> theta(4, 0.0);
    const StateVector full = run_circuit(2, build_ansatz(spec, theta));
    const std::vector<Gate> ring = {Gate::rzz(0, 1, pi / 2.0), Gate::rzz(1, 0, pi / 2.0)};
    const StateVector bare = run_circuit(2, ring);
    for (std::size_t i = 0; i < full.dim(); ++i)
        REQUIRE(std::abs(full.amplitudes[i] - bare.amplitudes[i]) < 1e-12);
}

TEST_CASE("single-qubit ansatz has no entanglers") {
    const AnsatzSpec spec{1, 3};
    const std::vector<double> theta(6, 0.5);
    const auto gates = build_ansatz(spec, theta);
    REQUIRE(gates.size() == 6);
    for (const Gate& g : gates) REQUIRE_FALSE(is_two_qubit(g.kind));
}

TEST_CASE("ansatz validation") {
    REQUIRE_THROWS_AS(build_ansatz({2, 1}, std::vector<double>(3, 0.0)),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(build_ansatz({0, 1}, std::vector<double>{}), ConfigError);
    REQUIRE_THROWS_AS(build_ansatz({2, 0}, std::vector<double>{}), ConfigError);
}

TEST_CASE("parameter shift matches the closed form on one qubit") {
    // Sample x=0 under the RX product map is |0>, so p(theta) = cos(theta_ry)
    // and L = (p - 1)^2 gives dL/dtheta_ry = 2(cos t - 1)(-sin t).
    Dataset data;
    data.features = {{0.0}};
    data.labels = {1};
    data.n_classes = 2;
    const EncodedData encoded = encode_dataset(data, {FeatureMapKind::RX_PRODUCT, 1});

    const AnsatzSpec spec{1, 1};
    const double t = 1.0;
    const std::vector<double> theta = {t, 0.7};
    const auto grad =
        parameter_shift_gradient(spec, theta, encoded, parity_encoding(1), LossKind::MSE);
    REQUIRE(grad.size() == 2);
    REQUIRE(grad[0] ==
            Catch::Approx(2.0 * (std::cos(t) - 1.0) * (-std::sin(t))).margin(1e-10));
    REQUIRE(grad[1] == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("parameter shift agrees with finite differences") {
    const SplitDataset parts = toy_split(6, 91);
    const EncodedData encoded =
        encode_dataset(parts.train, {FeatureMapKind::ZZ_FULL, 2});
    const AnsatzSpec spec{2, 2};
    const LabelEncoding enc = parity_encoding(2);

    auto rng = make_rng(314);
    for (LossKind loss : {LossKind::MSE, LossKind::LOG_LOSS}) {
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()));
            for (auto& v : theta) v = uniform_angle(rng);
            const auto ps = parameter_shift_gradient(spec, theta, encoded, enc, loss);
            const auto fd = finite_difference_gradient(spec, theta, encoded, enc, loss);
            double diff = 0.0;
            for (std::size_t k = 0; k < ps.size(); ++k)
                diff += (ps[k] - fd[k]) * (ps[k] - fd[k]);
            REQUIRE(std::sqrt(diff) <= 1e-5 * std::max(1.0, norm_of(fd)));
        }
    }
}

TEST_CASE("parameter shift handles the multiclass loss") {
    Dataset data;
    data.features = {{0.3, 1.2}, {2.0, 4.0}, {5.1, 0.7}, {3.3, 2.2}};
    data.labels = {0, 1, 2, 1};
    data.n_classes = 3;
    const EncodedData encoded = encode_dataset(data, {FeatureMapKind::ZZ_FULL, 2});
    const LabelEncoding enc = default_partition(2, 3);
    const AnsatzSpec spec{2, 2};

    auto rng = make_rng(159);
    std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()));
    for (auto& v : theta) v = uniform_angle(rng);
    const auto ps =
        parameter_shift_gradient(spec, theta, encoded, enc, LossKind::CROSS_ENTROPY);
    const auto fd =
        finite_difference_gradient(spec, theta, encoded, enc, LossKind::CROSS_ENTROPY);
    double diff = 0.0;
    for (std::size_t k = 0; k < ps.size(); ++k)
        diff += (ps[k] - fd[k]) * (ps[k] - fd[k]);
    REQUIRE(std::sqrt(diff) <= 1e-5 * std::max(1.0, norm_of(fd)));
}

TEST_CASE("vqc training runs to the epoch budget and learns") {
    const SplitDataset parts = toy_split(6, 67);
    const AnsatzSpec spec{2, 2};
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 4;
    const VqcResult result = train_vqc(spec, parts, {FeatureMapKind::ZZ_FULL, 2},
                                       parity_encoding(2), LossKind::MSE, cfg);
    REQUIRE(result.history.size() == 60);
    for (std::size_t i = 0; i < result.history.size(); ++i)
        REQUIRE(result.history[i].generation == static_cast<int>(i) + 1);
    REQUIRE(result.final_loss == result.history.back().best_loss);
    REQUIRE(result.final_loss < result.history.front().best_loss);
    REQUIRE(result.theta.size() == 8);
    for (double t : result.theta) {
        REQUIRE(t >= 0.0);
        REQUIRE(t < two_pi);
    }
}

TEST_CASE("vqc training is deterministic per seed") {
    const SplitDataset parts = toy_split(5, 29);
    const AnsatzSpec spec{2, 1};
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 21;
    const VqcResult a = train_vqc(spec, parts, {FeatureMapKind::ZZ_FULL, 2},
                                  parity_encoding(2), LossKind::MSE, cfg);
    const VqcResult b = train_vqc(spec, parts, {FeatureMapKind::ZZ_FULL, 2},
                                  parity_encoding(2), LossKind::MSE, cfg);
    REQUIRE(a.theta == b.theta);
    for (std::size_t i = 0; i < a.history.size(); ++i)
        REQUIRE(a.history[i].best_loss == b.history[i].best_loss);
}

TEST_CASE("a zero learning rate freezes the loss") {
    const SplitDataset parts = toy_split(5, 43);
    const AnsatzSpec spec{2, 1};
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    cfg.seed = 8;
    const VqcResult result = train_vqc(spec, parts, {FeatureMapKind::ZZ_FULL, 2},
                                       parity_encoding(2), LossKind::MSE, cfg);
    for (const auto& record : result.history)
        REQUIRE(record.best_loss == result.history.front().best_loss);
}

TEST_CASE("vqc training validation") {
    const SplitDataset parts = toy_split(5, 43);
    TrainConfig cfg;
    REQUIRE_THROWS_AS(train_vqc({3, 1}, parts, {FeatureMapKind::ZZ_FULL, 2},
                                parity_encoding(3), LossKind::MSE, cfg),
                      ConfigError);
    TrainConfig no_epochs;
    no_epochs.epochs = 0;
    REQUIRE_THROWS_AS(train_vqc({2, 1}, parts, {FeatureMapKind::ZZ_FULL, 2},
                                parity_encoding(2), LossKind::MSE, no_epochs),
                      ConfigError);
    TrainConfig backward;
    backward.learning_rate = -0.1;
    REQUIRE_THROWS_AS(train_vqc({2, 1}, parts, {FeatureMapKind::ZZ_FULL, 2},
                                parity_encoding(2), LossKind::MSE, backward),
                      ConfigError);
}

TEST_CASE("gradient variance probe on one qubit matches the closed form") {
    // C(theta) = cos(theta_ry), so dC/dtheta_1 = -sin(theta_ry) and the
    // variance over uniform angles is E[sin^2] = 1/2.
    const double var = gradient_variance_probe(1, 1, 6000, 17);
    REQUIRE(var == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("gradient variance decays with width") {
    const double narrow = gradient_variance_probe(2, 4, 200, 5);
    const double wide = gradient_variance_probe(8, 4, 200, 5);
    REQUIRE(narrow > 0.0);
    REQUIRE(wide > 0.0);
    REQUIRE(wide < narrow);
}

TEST_CASE("local observables keep more gradient signal than global ones") {
    const double global_var =
        gradient_variance_probe(8, 4, 200, 11, ProbeObservable::Global);
    const double local_var =
        gradient_variance_probe(8, 4, 200, 11, ProbeObservable::Local);
    REQUIRE(local_var > global_var);
}

TEST_CASE("gradient variance probe is deterministic and validated") {
    REQUIRE(gradient_variance_probe(3, 2, 50, 9) == gradient_variance_probe(3, 2, 50, 9));
    REQUIRE_THROWS_AS(gradient_variance_probe(3, 2, 29, 9), std::invalid_argument);
    REQUIRE_THROWS_AS(gradient_variance_probe(0, 2, 50, 9), ConfigError);
}

TEST_CASE("circuit cost on simple matrices") {
    const PauliZObservable z = PauliZObservable::all_z(1);
    REQUIRE(circuit_cost(Eigen::MatrixXd::Identity(2, 2), z) == Catch::Approx(1.0));

    Eigen::MatrixXd hadamard(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    hadamard << r, r, r, -r;
    REQUIRE(circuit_cost(hadamard, z) == Catch::Approx(0.0).margin(1e-15));

    REQUIRE_THROWS_AS(circuit_cost(Eigen::MatrixXd::Identity(2, 2),
                                   PauliZObservable::all_z(2)),
                      std::invalid_argument);
}

TEST_CASE("cost gradient matrix on the identity circuit") {
    const PauliZObservable z = PauliZObservable::all_z(1);
    const Eigen::MatrixXd grad =
        cost_gradient_matrix(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)), z);
    REQUIRE(grad(0, 0) == Catch::Approx(2.0));
    REQUIRE(grad(1, 0) == Catch::Approx(0.0).margin(0.0));
    REQUIRE(grad(0, 1) == 0.0);
    REQUIRE(grad(1, 1) == 0.0);
}

TEST_CASE("a first column outside the support nulls the gradient") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
    c(1, 1) = c(2, 2) = c(3, 3) = 1.0;  // diagonal with a zero top-left entry
    const Eigen::MatrixXd grad = cost_gradient_matrix(c, PauliZObservable::all_z(2));
    REQUIRE(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cost gradient matches finite differences on random orthogonals") {
    const PauliZObservable z = PauliZObservable::all_z(2);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd c =
            random_orthogonal(4, derive_seed(8080, static_cast<std::uint64_t>(trial)));
        const Eigen::MatrixXd analytic = cost_gradient_matrix(c, z);
        const Eigen::MatrixXd numeric = fd_cost_gradient(c, z);
        for (Eigen::Index j = 0; j < 4; ++j)
            for (Eigen::Index i = 0; i < 4; ++i) {
                REQUIRE(std::abs(analytic(i, j) - numeric(i, j)) <=
                        1e-6 * std::max(1.0, std::abs(numeric(i, j))));
                if (j > 0) REQUIRE(analytic(i, j) == 0.0);
            }
    }
}

TEST_CASE("cost gradient input validation") {
    const PauliZObservable z5 = PauliZObservable::all_z(5);
    REQUIRE_THROWS_AS(cost_gradient_matrix(Eigen::MatrixXd(Eigen::MatrixXd::Identity(32, 32)), z5),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(cost_gradient_matrix(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)),
                                           PauliZObservable::all_z(2)),
                      std::invalid_argument);

    Eigen::MatrixXcd complex_c = Eigen::MatrixXcd::Identity(2, 2);
    complex_c(0, 0) = cxd{0.0, 1.0};
    REQUIRE_THROWS_AS(cost_gradient_matrix(complex_c, PauliZObservable::all_z(1)),
                      std::invalid_argument);

    const Eigen::MatrixXcd real_valued = Eigen::MatrixXcd::Identity(2, 2);
    const Eigen::MatrixXd grad =
        cost_gradient_matrix(real_valued, PauliZObservable::all_z(1));
    REQUIRE(grad(0, 0) == Catch::Approx(2.0));
}
