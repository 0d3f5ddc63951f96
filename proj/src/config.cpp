#include "emprag/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "emprag/error.hpp"

namespace emprag::config {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw Error(errc::bad_config, where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key))
            throw Error(errc::bad_config, "unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& field, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(field);
    } catch (const json::exception& e) {
        throw Error(errc::bad_config, where + "." + key + ": " + e.what());
    }
}

void parse_world(const json& j, world::WorldConfig& w) {
    check_keys(j,
               {"n_colors", "n_shapes", "dedup_grid", "noise_scale", "shape_scale",
                "position_scale", "color_similarity", "color_overlap"},
               "world");
    get_if(j, "n_colors", w.n_colors, "world");
    get_if(j, "n_shapes", w.n_shapes, "world");
    get_if(j, "dedup_grid", w.dedup_grid, "world");
    get_if(j, "noise_scale", w.noise_scale, "world");
    get_if(j, "shape_scale", w.shape_scale, "world");
    get_if(j, "position_scale", w.position_scale, "world");
    get_if(j, "color_similarity", w.color_similarity, "world");
    get_if(j, "color_overlap", w.color_overlap, "world");
}

void parse_data(const json& j, DataConfig& d) {
    check_keys(j, {"n_train", "n_test"}, "data");
    get_if(j, "n_train", d.n_train, "data");
    get_if(j, "n_test", d.n_test, "data");
}

void parse_policy(const json& j, policy::PolicyConfig& p) {
    check_keys(j, {"alphabet", "max_len", "dim", "temperature", "init_scale"}, "policy");
    get_if(j, "alphabet", p.alphabet, "policy");
    get_if(j, "max_len", p.max_len, "policy");
    get_if(j, "dim", p.dim, "policy");
    get_if(j, "temperature", p.temperature, "policy");
    get_if(j, "init_scale", p.init_scale, "policy");
}

void parse_training(const json& j, TrainingConfig& t) {
    check_keys(j,
               {"n_steps", "n_candidates", "learning_rate", "entropy_coefficient",
                "entropy_fraction", "baseline_window", "checkpoint_every"},
               "training");
    get_if(j, "n_steps", t.n_steps, "training");
    get_if(j, "n_candidates", t.n_candidates, "training");
    get_if(j, "learning_rate", t.learning_rate, "training");
    get_if(j, "entropy_coefficient", t.entropy_coefficient, "training");
    get_if(j, "entropy_fraction", t.entropy_fraction, "training");
    get_if(j, "baseline_window", t.baseline_window, "training");
    get_if(j, "checkpoint_every", t.checkpoint_every, "training");
}

void parse_evaluation(const json& j, EvaluationConfig& e) {
    check_keys(j,
               {"n_candidates", "n_epochs", "mass_threshold", "max_size", "max_union",
                "max_candidates", "n_virtual_probes", "methods", "lexicon_methods"},
               "evaluation");
    get_if(j, "n_candidates", e.n_candidates, "evaluation");
    get_if(j, "n_epochs", e.n_epochs, "evaluation");
    get_if(j, "mass_threshold", e.mass_threshold, "evaluation");
    get_if(j, "max_size", e.max_size, "evaluation");
    get_if(j, "max_union", e.max_union, "evaluation");
    get_if(j, "max_candidates", e.max_candidates, "evaluation");
    get_if(j, "n_virtual_probes", e.n_virtual_probes, "evaluation");
    get_if(j, "methods", e.methods, "evaluation");
    get_if(j, "lexicon_methods", e.lexicon_methods, "evaluation");
}

void parse_virtual(const json& j, VirtualConfig& v) {
    check_keys(j, {"n_rounds", "learning_rate"}, "virtual");
    get_if(j, "n_rounds", v.n_rounds, "virtual");
    get_if(j, "learning_rate", v.learning_rate, "virtual");
}

void parse_dropcode(const json& j, DropConfig& d) {
    check_keys(j,
               {"dim", "mean", "transition_scale", "message_noise", "drop_grid", "n_samples",
                "encoders"},
               "dropcode");
    get_if(j, "dim", d.dim, "dropcode");
    if (j.contains("mean")) {
        const auto& m = j.at("mean");
        if (m.is_number()) {
            d.mean.assign(static_cast<std::size_t>(std::max(d.dim, 0)), m.get<double>());
        } else {
            get_if(j, "mean", d.mean, "dropcode");
        }
    } else if (static_cast<int>(d.mean.size()) != d.dim) {
        d.mean.assign(static_cast<std::size_t>(std::max(d.dim, 0)), 2.0);
    }
    get_if(j, "transition_scale", d.transition_scale, "dropcode");
    get_if(j, "message_noise", d.message_noise, "dropcode");
    get_if(j, "drop_grid", d.drop_grid, "dropcode");
    get_if(j, "n_samples", d.n_samples, "dropcode");
    get_if(j, "encoders", d.encoders, "dropcode");
}

} // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(errc::bad_config, std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j,
               {"out_dir", "seed", "world", "data", "policy", "training", "evaluation", "virtual",
                "dropcode"},
               "config");
    RunConfig cfg;
    get_if(j, "out_dir", cfg.out_dir, "config");
    get_if(j, "seed", cfg.seed, "config");
    if (j.contains("world")) parse_world(j.at("world"), cfg.world);
    if (j.contains("data")) parse_data(j.at("data"), cfg.data);
    if (j.contains("policy")) parse_policy(j.at("policy"), cfg.policy);
    if (j.contains("training")) parse_training(j.at("training"), cfg.training);
    if (j.contains("evaluation")) parse_evaluation(j.at("evaluation"), cfg.evaluation);
    if (j.contains("virtual")) parse_virtual(j.at("virtual"), cfg.virtual_model);
    if (j.contains("dropcode")) parse_dropcode(j.at("dropcode"), cfg.dropcode);
    if (static_cast<int>(cfg.dropcode.mean.size()) != cfg.dropcode.dim)
        throw Error(errc::bad_config, "dropcode.mean length must equal dropcode.dim");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::missing_artifact, "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["world"] = {{"n_colors", cfg.world.n_colors},
                  {"n_shapes", cfg.world.n_shapes},
                  {"dedup_grid", cfg.world.dedup_grid},
                  {"noise_scale", cfg.world.noise_scale},
                  {"shape_scale", cfg.world.shape_scale},
                  {"position_scale", cfg.world.position_scale},
                  {"color_similarity", cfg.world.color_similarity},
                  {"color_overlap", cfg.world.color_overlap}};
    j["data"] = {{"n_train", cfg.data.n_train}, {"n_test", cfg.data.n_test}};
    j["policy"] = {{"alphabet", cfg.policy.alphabet},
                   {"max_len", cfg.policy.max_len},
                   {"dim", cfg.policy.dim},
                   {"temperature", cfg.policy.temperature},
                   {"init_scale", cfg.policy.init_scale}};
    j["training"] = {{"n_steps", cfg.training.n_steps},
                     {"n_candidates", cfg.training.n_candidates},
                     {"learning_rate", cfg.training.learning_rate},
                     {"entropy_coefficient", cfg.training.entropy_coefficient},
                     {"entropy_fraction", cfg.training.entropy_fraction},
                     {"baseline_window", cfg.training.baseline_window},
                     {"checkpoint_every", cfg.training.checkpoint_every}};
    j["evaluation"] = {{"n_candidates", cfg.evaluation.n_candidates},
                       {"n_epochs", cfg.evaluation.n_epochs},
                       {"mass_threshold", cfg.evaluation.mass_threshold},
                       {"max_size", cfg.evaluation.max_size},
                       {"max_union", cfg.evaluation.max_union},
                       {"max_candidates", cfg.evaluation.max_candidates},
                       {"n_virtual_probes", cfg.evaluation.n_virtual_probes},
                       {"methods", cfg.evaluation.methods},
                       {"lexicon_methods", cfg.evaluation.lexicon_methods}};
    j["virtual"] = {{"n_rounds", cfg.virtual_model.n_rounds},
                    {"learning_rate", cfg.virtual_model.learning_rate}};
    j["dropcode"] = {{"dim", cfg.dropcode.dim},
                     {"mean", cfg.dropcode.mean},
                     {"transition_scale", cfg.dropcode.transition_scale},
                     {"message_noise", cfg.dropcode.message_noise},
                     {"drop_grid", cfg.dropcode.drop_grid},
                     {"n_samples", cfg.dropcode.n_samples},
                     {"encoders", cfg.dropcode.encoders}};
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
    // Identify the experiment, not where its artifacts land: the same config and
    // seed written to two directories must produce byte-identical manifests.
    RunConfig keyed = cfg;
    keyed.out_dir.clear();
    const std::string text = serialize_config(keyed);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

emergence::TrainConfig train_config(const RunConfig& cfg) {
    emergence::TrainConfig tc;
    tc.n_steps = cfg.training.n_steps;
    tc.n_candidates = cfg.training.n_candidates;
    tc.learning_rate = cfg.training.learning_rate;
    tc.entropy_coefficient = cfg.training.entropy_coefficient;
    tc.entropy_fraction = cfg.training.entropy_fraction;
    tc.baseline_window = cfg.training.baseline_window;
    tc.checkpoint_every = cfg.training.checkpoint_every;
    tc.seed = cfg.seed;
    tc.policy = cfg.policy;
    tc.world = cfg.world;
    return tc;
}

emergence::DistillConfig distill_config(const RunConfig& cfg) {
    emergence::DistillConfig dc;
    dc.learning_rate = cfg.virtual_model.learning_rate;
    dc.n_candidates = cfg.evaluation.n_candidates;
    dc.seed = cfg.seed;
    dc.policy = cfg.policy;
    dc.world = cfg.world;
    return dc;
}

eval::EvalConfig eval_config(const RunConfig& cfg) {
    eval::EvalConfig ec;
    ec.n_candidates = cfg.evaluation.n_candidates;
    ec.n_epochs = cfg.evaluation.n_epochs;
    ec.mass_threshold = cfg.evaluation.mass_threshold;
    ec.max_size = cfg.evaluation.max_size;
    ec.bounds.max_union = cfg.evaluation.max_union;
    ec.bounds.max_candidates = cfg.evaluation.max_candidates;
    ec.n_virtual_probes = cfg.evaluation.n_virtual_probes;
    ec.world = cfg.world;
    return ec;
}

dropcode::EmbeddingModel embedding_model(const RunConfig& cfg) {
    dropcode::EmbeddingModel m;
    m.dim = cfg.dropcode.dim;
    m.mean = cfg.dropcode.mean;
    m.transition_scale = cfg.dropcode.transition_scale;
    m.message_noise = cfg.dropcode.message_noise;
    return m;
}

} // namespace emprag::config
