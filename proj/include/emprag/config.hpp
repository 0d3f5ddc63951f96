#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emprag/dropcode.hpp"
#include "emprag/emergence.hpp"
#include "emprag/eval.hpp"
#include "emprag/policy.hpp"
#include "emprag/world.hpp"

namespace emprag::config {

struct DataConfig {
    int n_train = 3000;
    int n_test = 1000;
};

struct TrainingConfig {
    long long n_steps = 200'000;
    int n_candidates = 2;
    double learning_rate = 0.1;
    double entropy_coefficient = 0.05;
    double entropy_fraction = 0.2;
    int baseline_window = 1000;
    long long checkpoint_every = 1000;
};

struct EvaluationConfig {
    int n_candidates = 2;
    int n_epochs = 5;
    double mass_threshold = 0.75;
    int max_size = 16;
    int max_union = 12;
    int max_candidates = 4;
    long long n_virtual_probes = 500;
    std::vector<std::string> methods = {"baseline",  "sampleL_0.5", "argmaxL",
                                        "rsa_cnvg",  "ibr_2rnd",    "ibr_cnvg",
                                        "gametable", "gametable_seq"};
    std::vector<std::string> lexicon_methods = {"baseline", "gametable_seq"};
};

struct VirtualConfig {
    long long n_rounds = 100'000;
    double learning_rate = 0.05;
};

struct DropConfig {
    int dim = 8;
    std::vector<double> mean = std::vector<double>(8, 2.0);
    double transition_scale = 1.0;
    double message_noise = 0.0;
    std::vector<double> drop_grid = {0.0, 0.3, 0.6, 0.9, 1.0};
    long long n_samples = 100'000;
    std::vector<std::string> encoders = {"identity", "whitened"};
};

// Whole-experiment definition. Loaded from a JSON file whose blocks mirror
// the fields below; unknown keys anywhere are rejected so typos cannot
// silently fall back to defaults.
struct RunConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    world::WorldConfig world;
    DataConfig data;
    policy::PolicyConfig policy;
    TrainingConfig training;
    EvaluationConfig evaluation;
    VirtualConfig virtual_model; // JSON block name: "virtual"
    DropConfig dropcode;
};

// Parses JSON text; every present key overrides the default, unknown keys
// throw errc::bad_config.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical JSON rendering (sorted keys, fixed float format) of the
// effective config, i.e. after any CLI overrides.
std::string serialize_config(const RunConfig& cfg);

// FNV-1a 64-bit hash of serialize_config with out_dir blanked, so the hash
// identifies the experiment regardless of where artifacts land; recorded in
// run manifests.
std::uint64_t config_hash(const RunConfig& cfg);

// Materialized module configs.
emergence::TrainConfig train_config(const RunConfig& cfg);
emergence::DistillConfig distill_config(const RunConfig& cfg);
eval::EvalConfig eval_config(const RunConfig& cfg);
dropcode::EmbeddingModel embedding_model(const RunConfig& cfg);

} // namespace emprag::config
