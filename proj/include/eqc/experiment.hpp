#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "eqc/evolution.hpp"
#include "eqc/vqc.hpp"

namespace eqc {

// Configuration-driven experiment runner. A config names a dataset, feature
// map, label encoding, loss, and one trainer; run_experiment executes
// `repetitions` independent runs with per-run seeds derived from the master
// seed and writes per-run histories, an aggregate curve, and a summary.
//
// Seed derivation (shared by every trainer, so two configs with the same
// dataset spec and master seed see identical datasets and splits):
//   rep_seed   = derive(master_seed, rep)
//   data_seed  = derive(rep_seed, 1)
//   split_seed = derive(rep_seed, 2)
//   train_seed = derive(rep_seed, 3)

struct DatasetSpec {
    enum class Kind { Iris, Adhoc };
    Kind kind = Kind::Iris;
    std::string path;  // iris CSV
    int adhoc_dim = 2;
    double adhoc_gap = 0.3;
    int adhoc_per_class = 20;
    int adhoc_grid_density = 16;
    std::optional<std::uint64_t> adhoc_v_seed;
    double train_fraction = 0.65;
    bool scale = true;  // min-max onto [0, 2pi), fit on the training split

    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct EncodingSpec {
    enum class Kind { Default, BinaryMask, Buckets };
    Kind kind = Kind::Default;
    std::string mask;  // e.g. "ZIZ", position 0 = qubit 0
    double threshold = 0.0;
    std::vector<std::vector<std::size_t>> buckets;
};

struct TrainerSpec {
    enum class Kind { EQC, VQC };
    Kind kind = Kind::EQC;
    MutationConfig mutation;  // EQC (seed is filled per repetition)
    int vqc_layers = 4;
    TrainConfig training;  // VQC (seed is filled per repetition)
};

struct ExperimentConfig {
    std::string name;
    DatasetSpec dataset;
    FeatureMapSpec map{FeatureMapKind::ZZ_FULL, 0};  // n_features resolved from the dataset
    EncodingSpec encoding;
    LossKind loss = LossKind::MSE;
    TrainerSpec trainer;
    int repetitions = 10;
    std::uint64_t master_seed = 0;
    std::string output_dir;
};

namespace detail {

// JSON object wrapper that reports missing/extra fields with full paths.
class ConfigObject {
  public:
    ConfigObject(const nlohmann::json& j, std::string path) : json_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_.empty() ? "config: expected an object"
                                                            : path_ + ": expected an object");
    }

    std::string member(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }
    bool has(const std::string& key) const { return json_.contains(key); }
    const nlohmann::json& require(const std::string& key) {
        touched_.insert(key);
        if (!json_.contains(key)) throw ConfigError(member(key) + ": missing");
        return json_.at(key);
    }
    const nlohmann::json* optional(const std::string& key) {
        touched_.insert(key);
        return json_.contains(key) ? &json_.at(key) : nullptr;
    }
    void finish() const {
        for (auto it = json_.begin(); it != json_.end(); ++it)
            if (!touched_.contains(it.key()))
                throw ConfigError(member(it.key()) + ": unknown field");
    }

  private:
    const nlohmann::json& json_;
    std::string path_;
    std::set<std::string> touched_;
};

inline double as_double(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

inline int as_int(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return j.get<int>();
}

inline std::uint64_t as_seed(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                   j.get<std::int64_t>() < 0))
        throw ConfigError(path + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string as_string(const nlohmann::json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

inline bool as_bool(const nlohmann::json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
    return j.get<bool>();
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base_dir) {
    std::filesystem::path fp(p);
    if (fp.is_absolute() || base_dir.empty()) return fp.lexically_normal().string();
    return (base_dir / fp).lexically_normal().string();
}

inline DatasetSpec parse_dataset(const nlohmann::json& j, const std::string& path,
                                 const std::filesystem::path& base_dir) {
    ConfigObject obj(j, path);
    DatasetSpec spec;
    const std::string kind = as_string(obj.require("kind"), obj.member("kind"));
    if (kind == "iris") {
        spec.kind = DatasetSpec::Kind::Iris;
        spec.path = resolve_path(as_string(obj.require("path"), obj.member("path")), base_dir);
        spec.scale = true;
    } else if (kind == "adhoc") {
        spec.kind = DatasetSpec::Kind::Adhoc;
        spec.scale = false;  // generated directly in [0, 2pi); scaling would break the gap
        spec.adhoc_dim = as_int(obj.require("dim"), obj.member("dim"));
        spec.adhoc_gap = as_double(obj.require("gap"), obj.member("gap"));
        spec.adhoc_per_class = as_int(obj.require("per_class"), obj.member("per_class"));
        if (const auto* v = obj.optional("grid_density"))
            spec.adhoc_grid_density = as_int(*v, obj.member("grid_density"));
        if (const auto* v = obj.optional("v_seed"))
            spec.adhoc_v_seed = as_seed(*v, obj.member("v_seed"));
    } else {
        throw ConfigError(obj.member("kind") + ": expected 'iris' or 'adhoc', got '" + kind + "'");
    }
    if (const auto* v = obj.optional("train_fraction"))
        spec.train_fraction = as_double(*v, obj.member("train_fraction"));
    if (const auto* v = obj.optional("scale")) spec.scale = as_bool(*v, obj.member("scale"));
    obj.finish();
    return spec;
}

inline FeatureMapSpec parse_feature_map(const nlohmann::json& j, const std::string& path) {
    FeatureMapSpec spec{FeatureMapKind::ZZ_FULL, 0};
    if (j.is_string()) {
        spec.kind = feature_map_from_name(j.get<std::string>());
        return spec;
    }
    ConfigObject obj(j, path);
    spec.kind = feature_map_from_name(as_string(obj.require("kind"), obj.member("kind")));
    if (const auto* v = obj.optional("repetitions")) {
        spec.repetitions = as_int(*v, obj.member("repetitions"));
        if (spec.repetitions < 1) throw ConfigError(obj.member("repetitions") + ": must be >= 1");
    }
    obj.finish();
    return spec;
}

inline EncodingSpec parse_encoding(const nlohmann::json& j, const std::string& path) {
    EncodingSpec spec;
    if (j.is_string()) {
        if (j.get<std::string>() != "default")
            throw ConfigError(path + ": expected 'default' or an object");
        return spec;
    }
    ConfigObject obj(j, path);
    const bool has_mask = obj.has("binary_mask");
    const bool has_buckets = obj.has("buckets");
    if (has_mask == has_buckets)
        throw ConfigError(path + ": provide exactly one of binary_mask or buckets");
    if (has_mask) {
        spec.kind = EncodingSpec::Kind::BinaryMask;
        spec.mask = as_string(obj.require("binary_mask"), obj.member("binary_mask"));
        if (const auto* v = obj.optional("threshold"))
            spec.threshold = as_double(*v, obj.member("threshold"));
    } else {
        spec.kind = EncodingSpec::Kind::Buckets;
        const auto& buckets = obj.require("buckets");
        if (!buckets.is_array()) throw ConfigError(obj.member("buckets") + ": expected an array");
        for (const auto& bucket : buckets) {
            if (!bucket.is_array())
                throw ConfigError(obj.member("buckets") + ": expected arrays of indices");
            std::vector<std::size_t> indices;
            for (const auto& idx : bucket) {
                if (!idx.is_number_integer() || idx.get<std::int64_t>() < 0)
                    throw ConfigError(obj.member("buckets") +
                                      ": indices must be non-negative integers");
                indices.push_back(idx.get<std::size_t>());
            }
            spec.buckets.push_back(std::move(indices));
        }
    }
    obj.finish();
    return spec;
}

inline TrainerSpec parse_trainer(const nlohmann::json& j, const std::string& path) {
    ConfigObject obj(j, path);
    TrainerSpec spec;
    const std::string kind = as_string(obj.require("kind"), obj.member("kind"));
    if (kind == "eqc") {
        spec.kind = TrainerSpec::Kind::EQC;
        MutationConfig& m = spec.mutation;
        if (const auto* v = obj.optional("p_insert")) m.p_insert = as_double(*v, obj.member("p_insert"));
        if (const auto* v = obj.optional("p_modify")) m.p_modify = as_double(*v, obj.member("p_modify"));
        if (const auto* v = obj.optional("p_swap")) m.p_swap = as_double(*v, obj.member("p_swap"));
        if (const auto* v = obj.optional("p_delete")) m.p_delete = as_double(*v, obj.member("p_delete"));
        if (const auto* v = obj.optional("mu")) m.mu = as_int(*v, obj.member("mu"));
        if (const auto* v = obj.optional("max_generations"))
            m.max_generations = as_int(*v, obj.member("max_generations"));
        if (const auto* v = obj.optional("angle_perturbation_scale"))
            m.angle_perturbation_scale = as_double(*v, obj.member("angle_perturbation_scale"));
        if (const auto* v = obj.optional("modify_full_redraw"))
            m.modify_full_redraw = as_bool(*v, obj.member("modify_full_redraw"));
        if (const auto* v = obj.optional("early_stop_loss"))
            m.early_stop_loss = as_double(*v, obj.member("early_stop_loss"));
        if (const auto* v = obj.optional("shots")) m.shots = as_seed(*v, obj.member("shots"));
        try {
            validate_mutation_config(m);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    } else if (kind == "vqc") {
        spec.kind = TrainerSpec::Kind::VQC;
        if (const auto* v = obj.optional("layers")) spec.vqc_layers = as_int(*v, obj.member("layers"));
        if (spec.vqc_layers < 1) throw ConfigError(obj.member("layers") + ": must be >= 1");
        TrainConfig& t = spec.training;
        if (const auto* v = obj.optional("learning_rate"))
            t.learning_rate = as_double(*v, obj.member("learning_rate"));
        if (!(t.learning_rate > 0.0)) throw ConfigError(obj.member("learning_rate") + ": must be positive");
        if (const auto* v = obj.optional("epochs")) t.epochs = as_int(*v, obj.member("epochs"));
        if (t.epochs < 1) throw ConfigError(obj.member("epochs") + ": must be >= 1");
    } else {
        throw ConfigError(obj.member("kind") + ": expected 'eqc' or 'vqc', got '" + kind + "'");
    }
    obj.finish();
    return spec;
}

}  // namespace detail

/// Parses a config document (JSON, // and /* */ comments allowed). Relative
/// paths are resolved against base_dir.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::filesystem::path& base_dir) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    detail::ConfigObject obj(doc, "");
    ExperimentConfig cfg;
    cfg.dataset = detail::parse_dataset(obj.require("dataset"), "dataset", base_dir);
    cfg.map = detail::parse_feature_map(obj.require("feature_map"), "feature_map");
    cfg.map.n_features =
        cfg.dataset.kind == DatasetSpec::Kind::Iris ? 4 : cfg.dataset.adhoc_dim;
    if (const auto* v = obj.optional("encoding")) cfg.encoding = detail::parse_encoding(*v, "encoding");
    cfg.loss = loss_from_name(detail::as_string(obj.require("loss"), "loss"));
    cfg.trainer = detail::parse_trainer(obj.require("trainer"), "trainer");
    if (const auto* v = obj.optional("repetitions"))
        cfg.repetitions = detail::as_int(*v, "repetitions");
    cfg.master_seed = detail::as_seed(obj.require("seed"), "seed");
    if (const auto* v = obj.optional("output_dir"))
        cfg.output_dir = detail::resolve_path(detail::as_string(*v, "output_dir"), base_dir);
    if (const auto* v = obj.optional("name")) cfg.name = detail::as_string(*v, "name");
    if (cfg.name.empty()) cfg.name = cfg.trainer.kind == TrainerSpec::Kind::EQC ? "eqc" : "vqc";
    obj.finish();
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    return parse_config_text(read_file(path), std::filesystem::path(path).parent_path());
}

// Data-independent resolution of a config: feature map width, label
// encoding, and every consistency rule. Nothing is written before this
// succeeds.
struct ResolvedConfig {
    ExperimentConfig cfg;
    LabelEncoding encoding{BinaryParityEncoding{}};
    int n_classes = 0;
};

inline ResolvedConfig resolve_config(const ExperimentConfig& cfg) {
    ResolvedConfig out{cfg, BinaryParityEncoding{}, 0};
    const int n = cfg.map.n_features;
    const bool adhoc = cfg.dataset.kind == DatasetSpec::Kind::Adhoc;
    out.n_classes = adhoc ? 2 : 3;
    const bool signed_labels = adhoc;

    if (cfg.repetitions < 1) throw ConfigError("repetitions: must be >= 1");
    if (!(cfg.dataset.train_fraction > 0.0 && cfg.dataset.train_fraction < 1.0))
        throw ConfigError("dataset.train_fraction: must be in (0, 1)");
    if (adhoc) {
        if (cfg.dataset.adhoc_dim != 2 && cfg.dataset.adhoc_dim != 3)
            throw ConfigError("dataset.dim: must be 2 or 3");
        if (!(cfg.dataset.adhoc_gap > 0.0)) throw ConfigError("dataset.gap: must be positive");
        if (cfg.dataset.adhoc_per_class < 2)
            throw ConfigError("dataset.per_class: must be >= 2 to allow a split");
        if (cfg.dataset.adhoc_grid_density < 2)
            throw ConfigError("dataset.grid_density: must be >= 2");
    } else if (cfg.dataset.path.empty()) {
        throw ConfigError("dataset.path: missing");
    }

    switch (cfg.encoding.kind) {
        case EncodingSpec::Kind::Default:
            if (signed_labels)
                out.encoding = BinaryParityEncoding{PauliZObservable::all_z(n), 0.0};
            else
                out.encoding = default_partition(n, out.n_classes);
            break;
        case EncodingSpec::Kind::BinaryMask: {
            if (!signed_labels || out.n_classes != 2)
                throw ConfigError("encoding.binary_mask: binary parity needs a 2-class dataset "
                                  "with -1/+1 labels");
            try {
                out.encoding = BinaryParityEncoding{PauliZObservable::from_string(cfg.encoding.mask),
                                                    cfg.encoding.threshold};
            } catch (const std::exception& e) {
                throw ConfigError(std::string("encoding.binary_mask: ") + e.what());
            }
            if (std::get<BinaryParityEncoding>(out.encoding).observable.n_qubits != n)
                throw ConfigError("encoding.binary_mask: mask length must equal qubit count " +
                                  std::to_string(n));
            break;
        }
        case EncodingSpec::Kind::Buckets: {
            if (signed_labels)
                throw ConfigError("encoding.buckets: multiclass encoding needs class-id labels, "
                                  "not -1/+1");
            if (static_cast<int>(cfg.encoding.buckets.size()) != out.n_classes)
                throw ConfigError("encoding.buckets: dataset has " + std::to_string(out.n_classes) +
                                  " classes, got " + std::to_string(cfg.encoding.buckets.size()) +
                                  " buckets");
            try {
                out.encoding = make_multi_hot(n, cfg.encoding.buckets);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("encoding.buckets: ") + e.what());
            }
            break;
        }
    }

    const bool binary = is_binary(out.encoding);
    if (binary && cfg.loss == LossKind::CROSS_ENTROPY)
        throw ConfigError("loss: cross_entropy needs a multiclass encoding");
    if (!binary && cfg.loss != LossKind::CROSS_ENTROPY)
        throw ConfigError("loss: " + std::string(loss_name(cfg.loss)) +
                          " needs a binary encoding");
    return out;
}

/// Builds the split dataset one repetition sees; shared by every trainer
/// with the same dataset spec and master seed.
inline SplitDataset materialize_split(const ResolvedConfig& resolved, int rep) {
    const ExperimentConfig& cfg = resolved.cfg;
    const std::uint64_t rep_seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(rep));
    const std::uint64_t data_seed = derive_seed(rep_seed, 1);
    const std::uint64_t split_seed = derive_seed(rep_seed, 2);

    Dataset data;
    if (cfg.dataset.kind == DatasetSpec::Kind::Iris) {
        data = load_iris(cfg.dataset.path);
    } else {
        AdhocParams params;
        params.dim = cfg.dataset.adhoc_dim;
        params.gap = cfg.dataset.adhoc_gap;
        params.per_class = cfg.dataset.adhoc_per_class;
        params.grid_density = cfg.dataset.adhoc_grid_density;
        params.seed = data_seed;
        params.v_seed = cfg.dataset.adhoc_v_seed;
        data = adhoc_generate(params).data;
    }
    SplitDataset parts = split(data, cfg.dataset.train_fraction, split_seed);
    if (cfg.dataset.scale) {
        MinMaxScaler scaler;
        scaler.fit(parts.train);
        parts.train = scaler.transform(parts.train);
        parts.test = scaler.transform(parts.test);
    }
    return parts;
}

struct RepResult {
    int rep = 0;
    std::uint64_t rep_seed = 0;
    std::vector<GenerationRecord> history;
    double final_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    int depth = 0;
    std::string genome_text;  // EQC only
};

inline RepResult run_repetition(const ResolvedConfig& resolved, int rep) {
    const ExperimentConfig& cfg = resolved.cfg;
    const std::uint64_t rep_seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(rep));
    const std::uint64_t train_seed = derive_seed(rep_seed, 3);
    const SplitDataset parts = materialize_split(resolved, rep);

    RepResult out;
    out.rep = rep;
    out.rep_seed = rep_seed;
    if (cfg.trainer.kind == TrainerSpec::Kind::EQC) {
        MutationConfig mcfg = cfg.trainer.mutation;
        mcfg.seed = train_seed;
        EvolveResult res = evolve(parts, cfg.map, resolved.encoding, cfg.loss, mcfg);
        out.history = std::move(res.history);
        out.final_loss = res.best_loss;
        out.train_accuracy = res.train_accuracy;
        out.test_accuracy = res.test_accuracy;
        out.depth = res.best.depth();
        out.genome_text = genome_to_text(res.best);
    } else {
        TrainConfig tcfg = cfg.trainer.training;
        tcfg.seed = train_seed;
        const AnsatzSpec spec{cfg.map.n_features, cfg.trainer.vqc_layers};
        VqcResult res = train_vqc(spec, parts, cfg.map, resolved.encoding, cfg.loss, tcfg);
        out.history = std::move(res.history);
        out.final_loss = res.final_loss;
        out.train_accuracy = res.train_accuracy;
        out.test_accuracy = res.test_accuracy;
        out.depth = out.history.back().depth;
    }
    return out;
}

struct ExperimentSummary {
    std::string name;
    TrainerSpec::Kind model = TrainerSpec::Kind::EQC;
    std::string output_dir;
    std::vector<RepResult> reps;
    double mean_train_acc = 0.0, std_train_acc = 0.0;
    double mean_test_acc = 0.0, std_test_acc = 0.0;
    double mean_final_loss = 0.0, std_final_loss = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_std(std::span<const double> xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(xs.size() - 1))};
}

inline std::string pad_index(int value, std::size_t width = 2) {
    std::string s = std::to_string(value);
    while (s.size() < width) s.insert(s.begin(), '0');
    return s;
}

/// Early-stopped runs are padded with their final record, which elitism
/// makes a faithful continuation.
inline std::string aggregate_csv(const std::vector<RepResult>& reps) {
    std::size_t max_len = 0;
    for (const auto& rep : reps) max_len = std::max(max_len, rep.history.size());
    std::string out = "generation,mean_best_loss,std_best_loss,mean_test_acc,std_test_acc\n";
    std::vector<double> losses(reps.size());
    std::vector<double> accs(reps.size());
    for (std::size_t g = 0; g < max_len; ++g) {
        for (std::size_t r = 0; r < reps.size(); ++r) {
            const auto& history = reps[r].history;
            const auto& rec = history[std::min(g, history.size() - 1)];
            losses[r] = rec.best_loss;
            accs[r] = rec.test_accuracy;
        }
        const auto [loss_mean, loss_std] = mean_std(losses);
        const auto [acc_mean, acc_std] = mean_std(accs);
        out += std::to_string(g + 1);
        out += ',';
        out += format_double(loss_mean);
        out += ',';
        out += format_double(loss_std);
        out += ',';
        out += format_double(acc_mean);
        out += ',';
        out += format_double(acc_std);
        out += '\n';
    }
    return out;
}

inline std::string summary_csv(const std::vector<RepResult>& reps) {
    std::string out = "rep,seed,iterations,final_loss,train_acc,test_acc,depth\n";
    for (const auto& rep : reps) {
        out += std::to_string(rep.rep);
        out += ',';
        out += std::to_string(rep.rep_seed);
        out += ',';
        out += std::to_string(rep.history.size());
        out += ',';
        out += format_double(rep.final_loss);
        out += ',';
        out += format_double(rep.train_accuracy);
        out += ',';
        out += format_double(rep.test_accuracy);
        out += ',';
        out += std::to_string(rep.depth);
        out += '\n';
    }
    return out;
}

inline std::string summary_text(const ExperimentSummary& s, const ExperimentConfig& cfg) {
    const bool eqc = s.model == TrainerSpec::Kind::EQC;
    std::string out;
    out += "experiment: " + s.name + "\n";
    out += std::string("model: ") + (eqc ? "eqc" : "vqc") + "\n";
    out += "repetitions: " + std::to_string(s.reps.size()) + "\n";
    if (eqc) {
        out += "iteration budget: " + std::to_string(cfg.trainer.mutation.max_generations) +
               " generations (early stop below loss " +
               format_double(cfg.trainer.mutation.early_stop_loss) + ")\n";
        out += "circuit evaluations per iteration: mu = " +
               std::to_string(cfg.trainer.mutation.mu) + " children\n";
    } else {
        const int n_params = 2 * cfg.map.n_features * cfg.trainer.vqc_layers;
        out += "iteration budget: " + std::to_string(cfg.trainer.training.epochs) + " epochs\n";
        out += "circuit evaluations per iteration: 2*|theta|+1 = " +
               std::to_string(2 * n_params + 1) + " (parameter-shift gradient)\n";
    }
    out += "statistics: mean and unbiased (n-1) standard deviation over repetitions;\n";
    out += "  aggregate.csv pads early-stopped runs with their final record\n";
    out += "final train accuracy: " + format_double(s.mean_train_acc) + " +- " +
           format_double(s.std_train_acc) + "\n";
    out += "final test accuracy: " + format_double(s.mean_test_acc) + " +- " +
           format_double(s.std_test_acc) + "\n";
    out += "final training loss: " + format_double(s.mean_final_loss) + " +- " +
           format_double(s.std_final_loss) + "\n";
    return out;
}

inline ExperimentSummary summarize(const ExperimentConfig& cfg, std::vector<RepResult> reps,
                                   std::string output_dir) {
    ExperimentSummary s;
    s.name = cfg.name;
    s.model = cfg.trainer.kind;
    s.output_dir = std::move(output_dir);
    s.reps = std::move(reps);
    std::vector<double> train_accs, test_accs, losses;
    for (const auto& rep : s.reps) {
        train_accs.push_back(rep.train_accuracy);
        test_accs.push_back(rep.test_accuracy);
        losses.push_back(rep.final_loss);
    }
    std::tie(s.mean_train_acc, s.std_train_acc) = mean_std(train_accs);
    std::tie(s.mean_test_acc, s.std_test_acc) = mean_std(test_accs);
    std::tie(s.mean_final_loss, s.std_final_loss) = mean_std(losses);
    return s;
}

inline std::vector<RepResult> run_all_reps(const ResolvedConfig& resolved, int jobs) {
    const int n_reps = resolved.cfg.repetitions;
    std::vector<RepResult> reps(static_cast<std::size_t>(n_reps));
    const int workers = std::clamp(jobs, 1, n_reps);
    if (workers == 1) {
        for (int r = 0; r < n_reps; ++r) reps[static_cast<std::size_t>(r)] = run_repetition(resolved, r);
        return reps;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        try {
            for (int r = next.fetch_add(1); r < n_reps; r = next.fetch_add(1))
                reps[static_cast<std::size_t>(r)] = run_repetition(resolved, r);
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return reps;
}

}  // namespace detail

/// Runs every repetition and writes run_XX.csv (+ best_genome_XX.txt for
/// EQC), aggregate.csv, summary.csv, and summary.txt into the output
/// directory. Validation happens before anything is written.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                        const std::string& output_override = "", int jobs = 1) {
    const ResolvedConfig resolved = resolve_config(cfg);
    const std::string out_dir = output_override.empty() ? cfg.output_dir : output_override;
    if (out_dir.empty()) throw ConfigError("output_dir: missing");

    std::vector<RepResult> reps = detail::run_all_reps(resolved, jobs);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path base(out_dir);
    for (const auto& rep : reps) {
        const std::string tag = detail::pad_index(rep.rep);
        write_file_atomic((base / ("run_" + tag + ".csv")).string(), history_to_csv(rep.history));
        if (cfg.trainer.kind == TrainerSpec::Kind::EQC)
            write_file_atomic((base / ("best_genome_" + tag + ".txt")).string(), rep.genome_text);
    }
    write_file_atomic((base / "aggregate.csv").string(), detail::aggregate_csv(reps));
    write_file_atomic((base / "summary.csv").string(), detail::summary_csv(reps));
    ExperimentSummary summary = detail::summarize(cfg, std::move(reps), out_dir);
    write_file_atomic((base / "summary.txt").string(), detail::summary_text(summary, cfg));
    return summary;
}

struct ComparisonResult {
    ExperimentSummary eqc;
    ExperimentSummary vqc;
    std::vector<std::pair<std::string, double>> externals;
    std::string csv;
    std::string text;
};

/// Runs one EQC and one VQC config over identical datasets and splits
/// (enforced: same dataset spec, master seed, and repetition count) and
/// emits comparison.csv / comparison.txt. Externally supplied baseline
/// accuracies are reported as rows labeled "external".
inline ComparisonResult compare_models(const ExperimentConfig& cfg_eqc,
                                       const ExperimentConfig& cfg_vqc,
                                       const std::vector<std::pair<std::string, double>>& externals,
                                       const std::string& output_dir, int jobs = 1) {
    if (cfg_eqc.trainer.kind != TrainerSpec::Kind::EQC ||
        cfg_vqc.trainer.kind != TrainerSpec::Kind::VQC)
        throw ConfigError("compare expects an eqc config then a vqc config");
    if (!(cfg_eqc.dataset == cfg_vqc.dataset))
        throw ConfigError("compare: dataset specs differ; the comparison needs identical splits");
    if (cfg_eqc.master_seed != cfg_vqc.master_seed)
        throw ConfigError("compare: master seeds differ; the comparison needs identical splits");
    if (cfg_eqc.repetitions != cfg_vqc.repetitions)
        throw ConfigError("compare: repetition counts differ");
    if (output_dir.empty()) throw ConfigError("output_dir: missing");
    resolve_config(cfg_eqc);
    resolve_config(cfg_vqc);

    const std::filesystem::path base(output_dir);
    ComparisonResult result;
    result.eqc = run_experiment(cfg_eqc, (base / "eqc").string(), jobs);
    result.vqc = run_experiment(cfg_vqc, (base / "vqc").string(), jobs);
    result.externals = externals;

    std::string csv = "model,mean_test_acc,std_test_acc,source\n";
    auto add_row = [&csv](const std::string& model, double mean, const std::string& std_text,
                          const std::string& source) {
        csv += model + "," + format_double(mean) + "," + std_text + "," + source + "\n";
    };
    add_row(result.eqc.name, result.eqc.mean_test_acc, format_double(result.eqc.std_test_acc),
            "computed");
    add_row(result.vqc.name, result.vqc.mean_test_acc, format_double(result.vqc.std_test_acc),
            "computed");
    for (const auto& [name, acc] : externals) add_row(name, acc, "", "external");
    result.csv = csv;

    std::string text;
    text += "test-accuracy comparison over " + std::to_string(cfg_eqc.repetitions) +
            " repetitions (shared datasets and splits, master seed " +
            std::to_string(cfg_eqc.master_seed) + ")\n";
    text += "budget parity: " + std::to_string(cfg_eqc.trainer.mutation.max_generations) +
            " EQC generations vs " + std::to_string(cfg_vqc.trainer.training.epochs) +
            " VQC epochs; per-iteration circuit evaluations differ (mu = " +
            std::to_string(cfg_eqc.trainer.mutation.mu) + " vs 2*|theta|+1 = " +
            std::to_string(2 * 2 * cfg_vqc.map.n_features * cfg_vqc.trainer.vqc_layers + 1) +
            ")\n\n";
    auto line = [&text](const std::string& model, double mean, double stddev, bool external) {
        text += "  " + model + ": " + format_double(mean);
        if (!external) text += " +- " + format_double(stddev);
        text += external ? "  [external]\n" : "\n";
    };
    line(result.eqc.name, result.eqc.mean_test_acc, result.eqc.std_test_acc, false);
    line(result.vqc.name, result.vqc.mean_test_acc, result.vqc.std_test_acc, false);
    for (const auto& [name, acc] : externals) line(name, acc, 0.0, true);
    result.text = text;

    write_file_atomic((base / "comparison.csv").string(), result.csv);
    write_file_atomic((base / "comparison.txt").string(), result.text);
    return result;
}

/// One row per qubit count: `n,variance` for the gradient-variance probe.
inline std::string probe_plateau(const std::vector<int>& n_list, int layers, int samples,
                                 std::uint64_t seed,
                                 ProbeObservable observable = ProbeObservable::Global) {
    if (n_list.empty()) throw ConfigError("probe: n-list is empty");
    for (int n : n_list)
        if (n < 1 || n > 12)
            throw ConfigError("probe: n = " + std::to_string(n) + " outside [1, 12]");
    std::string out = "n,variance\n";
    for (int n : n_list) {
        const double var = gradient_variance_probe(
            n, layers, samples, derive_seed(seed, static_cast<std::uint64_t>(n)), observable);
        out += std::to_string(n) + "," + format_double(var) + "\n";
    }
    return out;
}

}  // namespace eqc
