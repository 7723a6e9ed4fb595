// Command-line runner: seeded experiments, model comparison, the
// barren-plateau probe, and ad-hoc dataset generation.
//
// Exit codes: 0 success, 2 malformed config or input file, 3 invalid
// configuration values, 4 I/O failure, 5 data generation failure, 1 other.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "eqc/experiment.hpp"

namespace {

std::vector<int> parse_n_list(const std::string& text) {
    std::vector<int> values;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        try {
            values.push_back(std::stoi(token));
        } catch (const std::exception&) {
            throw eqc::ConfigError("--n-list: '" + token + "' is not an integer");
        }
    }
    return values;
}

std::vector<std::pair<std::string, double>> parse_externals(const std::vector<std::string>& raw) {
    std::vector<std::pair<std::string, double>> externals;
    for (const auto& entry : raw) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos || eq == 0)
            throw eqc::ConfigError("--external: expected NAME=ACCURACY, got '" + entry + "'");
        try {
            externals.emplace_back(entry.substr(0, eq), std::stod(entry.substr(eq + 1)));
        } catch (const std::exception&) {
            throw eqc::ConfigError("--external: '" + entry.substr(eq + 1) +
                                   "' is not a number");
        }
    }
    return externals;
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-")
        std::cout << content;
    else
        eqc::write_file_atomic(path, content);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evolved and variational quantum classifiers"};
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs", jobs, "worker threads for independent repetitions")
        ->check(CLI::PositiveNumber);

    std::string run_config, run_output;
    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("config", run_config, "config file (JSON, comments allowed)")->required();
    run->add_option("--output-dir", run_output, "override the config's output directory");

    std::string cmp_eqc, cmp_vqc, cmp_output;
    std::vector<std::string> cmp_externals;
    auto* compare = app.add_subcommand("compare", "run an EQC and a VQC config on shared splits");
    compare->add_option("eqc_config", cmp_eqc, "EQC config file")->required();
    compare->add_option("vqc_config", cmp_vqc, "VQC config file")->required();
    compare->add_option("--output-dir", cmp_output, "directory for both runs and the table")
        ->required();
    compare->add_option("--external", cmp_externals,
                        "extra baseline rows as NAME=ACCURACY (repeatable)");

    std::string probe_ns = "2,4,6,8", probe_output;
    int probe_layers = 4, probe_samples = 200;
    std::uint64_t probe_seed = 0;
    bool probe_local = false;
    auto* probe = app.add_subcommand("probe-plateau", "gradient variance vs qubit count");
    probe->add_option("--n-list", probe_ns, "comma-separated qubit counts");
    probe->add_option("--layers", probe_layers, "ansatz layers");
    probe->add_option("--samples", probe_samples, "random initializations per point");
    probe->add_option("--seed", probe_seed, "probe seed");
    probe->add_flag("--local", probe_local, "single-qubit observable instead of the global parity");
    probe->add_option("--output", probe_output, "output CSV path (default: stdout)");

    eqc::AdhocParams gen_params;
    std::uint64_t gen_v_seed = 0;
    bool gen_has_v_seed = false;
    std::string gen_output = "adhoc.csv";
    auto* gen = app.add_subcommand("gen-adhoc", "generate a gap-separated ad-hoc dataset");
    gen->add_option("--dim", gen_params.dim, "feature dimension (2 or 3)");
    gen->add_option("--gap", gen_params.gap, "minimum |expectation| per kept sample");
    gen->add_option("--per-class", gen_params.per_class, "samples per class");
    gen->add_option("--grid-density", gen_params.grid_density, "initial grid points per axis");
    gen->add_option("--seed", gen_params.seed, "generator seed");
    gen->add_option("--v-seed", gen_v_seed, "seed of the hidden unitary (default: derived)")
        ->each([&](const std::string&) { gen_has_v_seed = true; });
    gen->add_option("--output", gen_output, "dataset CSV path; metadata goes beside it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            const eqc::ExperimentSummary summary =
                eqc::run_experiment(eqc::parse_config_file(run_config), run_output, jobs);
            std::cout << "wrote " << summary.output_dir << "\n"
                      << "final test accuracy: " << eqc::format_double(summary.mean_test_acc)
                      << " +- " << eqc::format_double(summary.std_test_acc) << "\n";
        } else if (*compare) {
            const eqc::ComparisonResult result = eqc::compare_models(
                eqc::parse_config_file(cmp_eqc), eqc::parse_config_file(cmp_vqc),
                parse_externals(cmp_externals), cmp_output, jobs);
            std::cout << result.text << "wrote " << cmp_output << "\n";
        } else if (*probe) {
            const std::string csv = eqc::probe_plateau(
                parse_n_list(probe_ns), probe_layers, probe_samples, probe_seed,
                probe_local ? eqc::ProbeObservable::Local : eqc::ProbeObservable::Global);
            emit(probe_output, csv);
        } else if (*gen) {
            if (gen_has_v_seed) gen_params.v_seed = gen_v_seed;
            const eqc::AdhocResult result = eqc::adhoc_generate(gen_params);
            eqc::save_dataset_csv(result.data, gen_output);
            nlohmann::json meta{{"kind", "adhoc"},
                                {"dim", result.meta.dim},
                                {"gap", result.meta.gap},
                                {"per_class", result.meta.per_class},
                                {"seed", result.meta.seed},
                                {"v_seed", result.meta.v_seed},
                                {"grid_density", result.meta.grid_density}};
            eqc::write_file_atomic(gen_output + ".meta.json", meta.dump(2) + "\n");
            std::cout << "wrote " << gen_output << " and " << gen_output << ".meta.json\n";
        }
        return 0;
    } catch (const eqc::GenerationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const eqc::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eqc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
