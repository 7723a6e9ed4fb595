// End-to-end gate: each case checks one release criterion at its stated
// tolerance and prints a PASS/FAIL line for the run log.
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <iostream>
#include <map>

#include "eqc/dense_oracle.hpp"
#include "eqc/experiment.hpp"

using namespace eqc;

namespace {

namespace fs = std::filesystem;

void report(int number, const std::string& name, bool ok) {
    std::cout << "[criterion " << number << "] " << name << ": " << (ok ? "PASS" : "FAIL")
              << std::endl;
}

std::string iris_path() { return std::string(EQC_DATA_DIR) + "/iris.csv"; }

fs::path fresh_dir(const std::string& stem) {
    const fs::path dir = fs::temp_directory_path() / ("eqc_accept_" + stem);
    fs::remove_all(dir);
    return dir;
}

Gate random_any_gate(int n, std::mt19937_64& rng) {
    if (n >= 2 && uniform_index(rng, 7) == 0)
        return Gate::h(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n))));
    auto sub = make_rng(rng());
    return random_gate(n, sub);
}

/// The benchmark generator settings: 20 train and 10 test samples per class
/// at gap 0.3, shared by the EQC and VQC runs through one master seed.
ExperimentConfig adhoc_benchmark_config(TrainerSpec::Kind kind) {
    ExperimentConfig cfg;
    cfg.name = kind == TrainerSpec::Kind::EQC ? "eqc" : "vqc";
    cfg.dataset.kind = DatasetSpec::Kind::Adhoc;
    cfg.dataset.adhoc_dim = 2;
    cfg.dataset.adhoc_gap = 0.3;
    cfg.dataset.adhoc_per_class = 30;
    cfg.dataset.train_fraction = 2.0 / 3.0;
    cfg.dataset.scale = false;
    cfg.map = {FeatureMapKind::ZZ_FULL, 2};
    cfg.loss = LossKind::MSE;
    cfg.trainer.kind = kind;
    cfg.trainer.vqc_layers = 4;
    cfg.repetitions = 10;
    cfg.master_seed = 2024;
    return cfg;
}

ExperimentConfig iris_benchmark_config(TrainerSpec::Kind kind) {
    ExperimentConfig cfg;
    cfg.name = kind == TrainerSpec::Kind::EQC ? "eqc" : "vqc";
    cfg.dataset.kind = DatasetSpec::Kind::Iris;
    cfg.dataset.path = iris_path();
    cfg.dataset.train_fraction = 0.65;
    cfg.dataset.scale = true;
    cfg.map = {FeatureMapKind::RX_PRODUCT, 4};
    cfg.loss = LossKind::CROSS_ENTROPY;
    cfg.trainer.kind = kind;
    cfg.trainer.vqc_layers = 4;
    cfg.repetitions = 10;
    cfg.master_seed = 515;
    return cfg;
}

std::vector<RepResult> run_all(const ExperimentConfig& cfg) {
    const ResolvedConfig resolved = resolve_config(cfg);
    std::vector<RepResult> reps;
    reps.reserve(static_cast<std::size_t>(cfg.repetitions));
    for (int rep = 0; rep < cfg.repetitions; ++rep)
        reps.push_back(run_repetition(resolved, rep));
    return reps;
}

/// EQC benchmark runs shared between the monotonicity and accuracy criteria.
const std::vector<RepResult>& eqc_adhoc_runs() {
    static const std::vector<RepResult> runs =
        run_all(adhoc_benchmark_config(TrainerSpec::Kind::EQC));
    return runs;
}

double lsq_slope(std::span<const double> xs, std::span<const double> ys) {
    double x_mean = 0.0, y_mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        x_mean += xs[i];
        y_mean += ys[i];
    }
    x_mean /= static_cast<double>(xs.size());
    y_mean /= static_cast<double>(xs.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - x_mean) * (ys[i] - y_mean);
        den += (xs[i] - x_mean) * (xs[i] - x_mean);
    }
    return num / den;
}

double vec_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("criterion 1: fast simulator matches the dense oracle") {
    auto rng = make_rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 5));
        const int depth = static_cast<int>(uniform_index(rng, 21));
        std::vector<Gate> gates;
        for (int d = 0; d < depth; ++d) gates.push_back(random_any_gate(n, rng));
        const StateVector fast = run_circuit(n, gates);
        const Eigen::VectorXcd oracle = dense_unitary_oracle(n, gates).col(0);
        for (std::size_t i = 0; i < fast.dim(); ++i)
            worst = std::max(worst, std::abs(fast.amplitudes[i] -
                                             oracle[static_cast<Eigen::Index>(i)]));
    }
    const bool ok = worst < 1e-10;
    report(1, "statevector vs dense matrix oracle", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 2: elitist best loss never increases") {
    bool ok = true;
    for (const RepResult& rep : eqc_adhoc_runs()) {
        for (std::size_t g = 1; g < rep.history.size(); ++g)
            ok = ok && rep.history[g].best_loss <= rep.history[g - 1].best_loss;
        ok = ok && !rep.history.empty();
    }
    report(2, "selection monotonicity across benchmark runs", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 3: mutation action frequencies") {
    MutationConfig cfg;
    auto rng = make_rng(31337);
    std::map<MutationAction, int> counts;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) ++counts[sample_mutation_action(cfg, rng)];
    const std::map<MutationAction, double> expected = {
        {MutationAction::INSERT, 0.5},
        {MutationAction::MODIFY, 0.3},
        {MutationAction::SWAP, 0.1},
        {MutationAction::DELETE, 0.1},
    };
    bool ok = true;
    for (const auto& [action, p] : expected)
        ok = ok && std::abs(counts[action] / static_cast<double>(trials) - p) <= 0.02;
    report(3, "action draws within 0.02 of (0.5, 0.3, 0.1, 0.1)", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 4: evolved classifiers solve the gap-0.3 benchmark") {
    int perfect = 0;
    for (const RepResult& rep : eqc_adhoc_runs())
        if (rep.test_accuracy == 1.0) ++perfect;
    const bool ok = perfect >= 8;
    std::cout << "  (EQC perfect test accuracy in " << perfect << "/10 runs)\n";
    report(4, "EQC reaches test accuracy 1.0 in >= 8/10 runs", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 5: variational baseline on the same splits") {
    const std::vector<RepResult> runs = run_all(adhoc_benchmark_config(TrainerSpec::Kind::VQC));
    int perfect = 0;
    for (const RepResult& rep : runs)
        if (rep.test_accuracy == 1.0) ++perfect;
    const bool ok = perfect >= 7;
    std::cout << "  (VQC perfect test accuracy in " << perfect << "/10 runs)\n";
    report(5, "VQC reaches test accuracy 1.0 in >= 7/10 runs", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 6: evolved circuits beat the baseline on iris") {
    const std::vector<RepResult> eqc = run_all(iris_benchmark_config(TrainerSpec::Kind::EQC));
    const std::vector<RepResult> vqc = run_all(iris_benchmark_config(TrainerSpec::Kind::VQC));
    double eqc_mean = 0.0, vqc_mean = 0.0;
    for (const auto& rep : eqc) eqc_mean += rep.test_accuracy;
    for (const auto& rep : vqc) vqc_mean += rep.test_accuracy;
    eqc_mean /= 10.0;
    vqc_mean /= 10.0;
    const bool ok = eqc_mean > vqc_mean;
    std::cout << "  (iris mean test accuracy: EQC " << eqc_mean << " vs VQC " << vqc_mean
              << " at 500 iterations each)\n";
    report(6, "mean EQC test accuracy exceeds VQC at budget parity", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 7: gradient variance decays, localized costs decay slower") {
    const std::vector<int> widths = {2, 4, 6, 8};
    std::vector<double> xs, global_log, local_log;
    for (int n : widths) {
        const std::uint64_t seed = derive_seed(808, static_cast<std::uint64_t>(n));
        xs.push_back(static_cast<double>(n));
        global_log.push_back(
            std::log(gradient_variance_probe(n, 4, 200, seed, ProbeObservable::Global)));
        local_log.push_back(
            std::log(gradient_variance_probe(n, 4, 200, seed, ProbeObservable::Local)));
    }
    const double global_slope = lsq_slope(xs, global_log);
    const double local_slope = lsq_slope(xs, local_log);
    const bool ok = global_slope < 0.0 && local_slope > global_slope;
    std::cout << "  (log-variance slopes: global " << global_slope << ", local "
              << local_slope << ")\n";
    report(7, "global slope negative and below the local slope", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 8: cost gradient algebra on random orthogonal circuits") {
    const PauliZObservable z = PauliZObservable::all_z(2);
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd c =
            random_orthogonal(4, derive_seed(4444, static_cast<std::uint64_t>(trial)));
        const Eigen::MatrixXd analytic = cost_gradient_matrix(c, z);
        const double h = 1e-5;
        Eigen::MatrixXd probe = c;
        for (Eigen::Index j = 0; j < 4; ++j)
            for (Eigen::Index i = 0; i < 4; ++i) {
                probe(i, j) = c(i, j) + h;
                const double plus = circuit_cost(probe, z);
                probe(i, j) = c(i, j) - h;
                const double minus = circuit_cost(probe, z);
                probe(i, j) = c(i, j);
                const double numeric = (plus - minus) / (2.0 * h);
                ok = ok && std::abs(analytic(i, j) - numeric) <=
                               1e-6 * std::max(1.0, std::abs(numeric));
                if (j > 0) ok = ok && analytic(i, j) == 0.0;
            }
    }
    Eigen::MatrixXd masked = Eigen::MatrixXd::Zero(4, 4);
    masked(1, 1) = masked(2, 2) = masked(3, 3) = 1.0;
    ok = ok && cost_gradient_matrix(masked, z).cwiseAbs().maxCoeff() == 0.0;
    report(8, "dF/dC matches finite differences and support rules", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 9: parameter-shift gradients match finite differences") {
    const Dataset binary_data = adhoc_generate(2, 0.3, 8, 77);
    const EncodedData binary =
        encode_dataset(binary_data, {FeatureMapKind::ZZ_FULL, 2});
    const LabelEncoding parity = BinaryParityEncoding{PauliZObservable::all_z(2), 0.0};

    Dataset multi_data;
    multi_data.features = {{0.3, 1.2}, {2.0, 4.0}, {5.1, 0.7}, {3.3, 2.2}, {1.0, 6.0}};
    multi_data.labels = {0, 1, 2, 1, 0};
    multi_data.n_classes = 3;
    const EncodedData multi = encode_dataset(multi_data, {FeatureMapKind::ZZ_FULL, 2});
    const LabelEncoding buckets = default_partition(2, 3);

    auto rng = make_rng(262144);
    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const AnsatzSpec spec{2, 1 + static_cast<int>(uniform_index(rng, 3))};
        std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()));
        for (auto& t : theta) t = uniform_angle(rng);

        const int mode = trial % 3;
        const EncodedData& data = mode == 2 ? multi : binary;
        const LabelEncoding& enc = mode == 2 ? buckets : parity;
        const LossKind loss = mode == 0   ? LossKind::MSE
                              : mode == 1 ? LossKind::LOG_LOSS
                                          : LossKind::CROSS_ENTROPY;

        const auto ps = parameter_shift_gradient(spec, theta, data, enc, loss);
        const auto fd = finite_difference_gradient(spec, theta, data, enc, loss);
        std::vector<double> diff(ps.size());
        for (std::size_t k = 0; k < ps.size(); ++k) diff[k] = ps[k] - fd[k];
        const double rel = vec_norm(diff) / std::max(1.0, vec_norm(fd));
        worst = std::max(worst, rel);
        ok = ok && rel < 1e-5;
    }
    std::cout << "  (worst relative gradient deviation " << worst << ")\n";
    report(9, "shift-rule vs central differences on 50 instances", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 10: identical configs produce byte-identical outputs") {
    ExperimentConfig cfg = adhoc_benchmark_config(TrainerSpec::Kind::EQC);
    cfg.dataset.adhoc_per_class = 6;
    cfg.trainer.mutation.max_generations = 20;
    cfg.repetitions = 3;

    const fs::path a = fresh_dir("bytes_a");
    const fs::path b = fresh_dir("bytes_b");
    run_experiment(cfg, a.string());
    run_experiment(cfg, b.string());

    ExperimentConfig vcfg = adhoc_benchmark_config(TrainerSpec::Kind::VQC);
    vcfg.dataset.adhoc_per_class = 6;
    vcfg.trainer.vqc_layers = 1;
    vcfg.trainer.training.epochs = 5;
    vcfg.repetitions = 2;
    const fs::path va = fresh_dir("bytes_va");
    const fs::path vb = fresh_dir("bytes_vb");
    run_experiment(vcfg, va.string());
    run_experiment(vcfg, vb.string());

    bool ok = true;
    for (const std::string name : {"run_00.csv", "run_01.csv", "run_02.csv",
                                   "best_genome_00.txt", "aggregate.csv", "summary.csv",
                                   "summary.txt"})
        ok = ok && read_file((a / name).string()) == read_file((b / name).string());
    for (const std::string name : {"run_00.csv", "run_01.csv", "aggregate.csv",
                                   "summary.csv", "summary.txt"})
        ok = ok && read_file((va / name).string()) == read_file((vb / name).string());
    report(10, "reruns are byte-identical", ok);
    REQUIRE(ok);
}
