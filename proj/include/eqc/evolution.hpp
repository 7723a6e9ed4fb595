#pragma once

#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "eqc/classifier.hpp"

namespace eqc {

// Elitist (1+mu) evolution of a variable-topology gate list. Each generation
// mutates the incumbent parent mu times with one action per child and keeps
// the best individual, so the best training loss never increases.

struct CircuitGenome {
    int n_qubits = 0;
    std::vector<Gate> gates;

    int depth() const { return static_cast<int>(gates.size()); }
};

enum class MutationAction { INSERT, MODIFY, SWAP, DELETE };

struct MutationConfig {
    double p_insert = 0.5;
    double p_modify = 0.3;
    double p_swap = 0.1;
    double p_delete = 0.1;
    int mu = 4;
    int max_generations = 500;
    double angle_perturbation_scale = pi / 8.0;
    bool modify_full_redraw = false;  // redraw the angle instead of perturbing it
    double early_stop_loss = 1e-6;
    std::uint64_t shots = 0;  // 0 = exact expectations
    std::uint64_t seed = 0;
};

inline void validate_mutation_config(const MutationConfig& cfg) {
    const double probs[] = {cfg.p_insert, cfg.p_modify, cfg.p_swap, cfg.p_delete};
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw ConfigError("mutation probabilities must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("mutation probabilities sum to " + format_double(sum) + ", expected 1");
    if (cfg.mu < 1) throw ConfigError("mu must be >= 1");
    if (cfg.max_generations < 1) throw ConfigError("max_generations must be >= 1");
    if (!(cfg.angle_perturbation_scale > 0.0))
        throw ConfigError("angle_perturbation_scale must be positive");
    if (!(cfg.early_stop_loss >= 0.0)) throw ConfigError("early_stop_loss must be >= 0");
}

/// Uniform over the rotation pool (two-qubit kinds excluded when n=1),
/// qubits without replacement, angle uniform in [0, 2pi).
inline Gate random_gate(int n_qubits, std::mt19937_64& rng) {
    if (n_qubits < 1) throw std::invalid_argument("random_gate needs n_qubits >= 1");
    static constexpr GateKind pool[] = {GateKind::RX,  GateKind::RY,  GateKind::RZ,
                                        GateKind::RXX, GateKind::RYY, GateKind::RZZ};
    const std::size_t n_kinds = n_qubits == 1 ? 3 : 6;
    const GateKind kind = pool[uniform_index(rng, n_kinds)];
    const int q0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_qubits)));
    int q1 = -1;
    if (is_two_qubit(kind)) {
        q1 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_qubits - 1)));
        if (q1 >= q0) ++q1;
    }
    const double angle = uniform_angle(rng);
    return Gate::make(kind, q0, q1, angle);
}

inline MutationAction sample_mutation_action(const MutationConfig& cfg, std::mt19937_64& rng) {
    const double u = uniform_double(rng);
    if (u < cfg.p_insert) return MutationAction::INSERT;
    if (u < cfg.p_insert + cfg.p_modify) return MutationAction::MODIFY;
    if (u < cfg.p_insert + cfg.p_modify + cfg.p_swap) return MutationAction::SWAP;
    return MutationAction::DELETE;
}

/// Applies exactly one mutation action; the parent is never modified.
/// Actions that have no valid target (MODIFY/SWAP/DELETE on an empty parent,
/// SWAP without a two-qubit gate, MODIFY without an angled gate) fall back
/// to INSERT.
inline CircuitGenome mutate(const CircuitGenome& parent, const MutationConfig& cfg,
                            std::mt19937_64& rng) {
    MutationAction action = sample_mutation_action(cfg, rng);
    if (parent.gates.empty()) action = MutationAction::INSERT;
    if (action == MutationAction::SWAP) {
        bool has_pair = false;
        for (const Gate& g : parent.gates) has_pair = has_pair || is_two_qubit(g.kind);
        if (!has_pair) action = MutationAction::INSERT;
    }
    if (action == MutationAction::MODIFY) {
        bool has_angle_gate = false;
        for (const Gate& g : parent.gates) has_angle_gate = has_angle_gate || has_angle(g.kind);
        if (!has_angle_gate) action = MutationAction::INSERT;
    }

    CircuitGenome child = parent;
    switch (action) {
        case MutationAction::INSERT: {
            const Gate gate = random_gate(parent.n_qubits, rng);
            const std::size_t pos = uniform_index(rng, child.gates.size() + 1);
            child.gates.insert(child.gates.begin() + static_cast<std::ptrdiff_t>(pos), gate);
            break;
        }
        case MutationAction::MODIFY: {
            std::vector<std::size_t> targets;
            for (std::size_t i = 0; i < child.gates.size(); ++i)
                if (has_angle(child.gates[i].kind)) targets.push_back(i);
            Gate& gate = child.gates[targets[uniform_index(rng, targets.size())]];
            if (cfg.modify_full_redraw) {
                gate.angle = uniform_angle(rng);
            } else {
                const double delta =
                    (2.0 * uniform_double(rng) - 1.0) * cfg.angle_perturbation_scale;
                gate.angle = wrap_angle(gate.angle + delta);
            }
            break;
        }
        case MutationAction::SWAP: {
            std::vector<std::size_t> targets;
            for (std::size_t i = 0; i < child.gates.size(); ++i)
                if (is_two_qubit(child.gates[i].kind)) targets.push_back(i);
            Gate& gate = child.gates[targets[uniform_index(rng, targets.size())]];
            std::swap(gate.q0, gate.q1);
            break;
        }
        case MutationAction::DELETE: {
            const std::size_t pos = uniform_index(rng, child.gates.size());
            child.gates.erase(child.gates.begin() + static_cast<std::ptrdiff_t>(pos));
            break;
        }
    }
    return child;
}

/// Child genomes depend only on (parent, seed, generation, child index), so
/// they can be produced and evaluated in any order.
inline CircuitGenome mutate_child(const CircuitGenome& parent, const MutationConfig& cfg,
                                  int generation, int child_index) {
    auto rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(generation),
                                    static_cast<std::uint64_t>(child_index)));
    return mutate(parent, cfg, rng);
}

inline double fitness(const CircuitGenome& genome, const EncodedData& train,
                      const LabelEncoding& enc, LossKind loss, const EvalOptions& opts = {}) {
    const Predictions preds = evaluate_circuit(train, genome.gates, enc, opts);
    return predictions_loss(preds, train.labels, loss, enc);
}

inline double fitness(const CircuitGenome& genome, const Dataset& train,
                      const FeatureMapSpec& map, const LabelEncoding& enc, LossKind loss) {
    return fitness(genome, encode_dataset(train, map), enc, loss);
}

struct EvolveResult {
    CircuitGenome best;
    std::vector<GenerationRecord> history;
    double best_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

inline EvolveResult evolve(const SplitDataset& data, const FeatureMapSpec& map,
                           const LabelEncoding& enc, LossKind loss, const MutationConfig& cfg) {
    validate_mutation_config(cfg);
    const EncodedData train = encode_dataset(data.train, map);
    const EncodedData test = encode_dataset(data.test, map);
    const EvalOptions opts{cfg.shots, derive_seed(cfg.seed, 0x510757)};

    struct Scored {
        CircuitGenome genome;
        double loss;
        double train_acc;
    };
    auto score = [&](CircuitGenome genome) {
        const Predictions preds = evaluate_circuit(train, genome.gates, enc, opts);
        const double l = predictions_loss(preds, train.labels, loss, enc);
        const double acc = predictions_accuracy(preds, train.labels, enc);
        return Scored{std::move(genome), l, acc};
    };
    // Candidates are ranked by (loss, depth, listed order); the incumbent is
    // always listed first, so it survives full ties.
    auto better = [](const Scored& a, const Scored& b) {
        if (a.loss != b.loss) return a.loss < b.loss;
        return a.genome.depth() < b.genome.depth();
    };

    Scored parent = score(CircuitGenome{map.n_features, {}});
    for (int c = 0; c < cfg.mu; ++c) {
        auto rng = make_rng(derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(c)));
        Scored candidate = score(CircuitGenome{map.n_features, {random_gate(map.n_features, rng)}});
        if (better(candidate, parent)) parent = std::move(candidate);
    }
    auto test_accuracy_of = [&](const CircuitGenome& genome) {
        const Predictions preds = evaluate_circuit(test, genome.gates, enc, opts);
        return predictions_accuracy(preds, test.labels, enc);
    };
    double parent_test_acc = test_accuracy_of(parent.genome);

    EvolveResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.max_generations));
    for (int g = 1; g <= cfg.max_generations; ++g) {
        bool replaced = false;
        for (int c = 0; c < cfg.mu; ++c) {
            Scored candidate = score(mutate_child(parent.genome, cfg, g, c));
            if (better(candidate, parent)) {
                parent = std::move(candidate);
                replaced = true;
            }
        }
        if (replaced) parent_test_acc = test_accuracy_of(parent.genome);
        result.history.push_back(
            {g, parent.loss, parent.train_acc, parent_test_acc, parent.genome.depth()});
        if (parent.loss < cfg.early_stop_loss) break;
    }
    result.best = std::move(parent.genome);
    result.best_loss = parent.loss;
    result.train_accuracy = parent.train_acc;
    result.test_accuracy = parent_test_acc;
    return result;
}

/// One gate per line: `KIND q0 [q1] angle`, angles at 17 significant digits.
inline std::string genome_to_text(const CircuitGenome& genome) {
    std::string out;
    for (const Gate& g : genome.gates) {
        out += kind_name(g.kind);
        out += ' ';
        out += std::to_string(g.q0);
        if (is_two_qubit(g.kind)) {
            out += ' ';
            out += std::to_string(g.q1);
        }
        if (has_angle(g.kind)) {
            out += ' ';
            out += format_double(g.angle, 17);
        }
        out += '\n';
    }
    return out;
}

inline CircuitGenome genome_from_text(const std::string& text, int n_qubits) {
    CircuitGenome genome{n_qubits, {}};
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string name;
        if (!(fields >> name)) continue;  // blank line
        const GateKind kind = kind_from_name(name);
        int q0 = -1;
        int q1 = -1;
        if (!(fields >> q0))
            throw ParseError("line " + std::to_string(line_no) + ": missing qubit index");
        if (is_two_qubit(kind) && !(fields >> q1))
            throw ParseError("line " + std::to_string(line_no) + ": missing second qubit index");
        double angle = 0.0;
        if (has_angle(kind) && !(fields >> angle))
            throw ParseError("line " + std::to_string(line_no) + ": missing angle");
        std::string extra;
        if (fields >> extra)
            throw ParseError("line " + std::to_string(line_no) + ": unexpected token '" + extra +
                             "'");
        if (q0 >= n_qubits || q1 >= n_qubits)
            throw ParseError("line " + std::to_string(line_no) + ": qubit index out of range for " +
                             std::to_string(n_qubits) + " qubits");
        try {
            genome.gates.push_back(Gate::make(kind, q0, q1, angle));
        } catch (const std::invalid_argument& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return genome;
}

}  // namespace eqc
