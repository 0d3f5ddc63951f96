#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emprag/config.hpp"
#include "emprag/dropcode.hpp"
#include "emprag/emergence.hpp"
#include "emprag/error.hpp"
#include "emprag/eval.hpp"
#include "emprag/policy.hpp"
#include "emprag/world.hpp"

namespace fs = std::filesystem;
using emprag::Error;
using emprag::config::RunConfig;
namespace errc = emprag::errc;

namespace {

constexpr const char* kProgramVersion = "1.0.0";
constexpr int kPolicyFormat = 1;
constexpr int kDatasetFormat = 1;

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    std::int64_t seed_override = -1;
    bool has_seed = false;
};

RunConfig effective_config(const CommonArgs& args) {
    RunConfig cfg = emprag::config::load_config(args.config_path);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (args.has_seed) {
        if (args.seed_override < 0) throw Error(errc::bad_config, "--seed must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    }
    fs::create_directories(cfg.out_dir);
    return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io, "cannot open output file: " + path);
    return out;
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
    nlohmann::json j;
    j["command"] = command;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(emprag::config::config_hash(cfg)));
    j["config_hash"] = std::string(hash);
    j["seed"] = cfg.seed;
    j["versions"] = {{"program", kProgramVersion},
                     {"policy_format", kPolicyFormat},
                     {"dataset_format", kDatasetFormat}};
    auto out = open_out(out_path(cfg, "manifest-" + command + ".json"));
    out << j.dump(2) << "\n";
}

emprag::world::Dataset load_artifact_dataset(const RunConfig& cfg) {
    return emprag::world::load_dataset(out_path(cfg, "train.txt"), out_path(cfg, "test.txt"));
}

std::pair<emprag::policy::SpeakerPolicy, emprag::policy::ListenerPolicy>
load_artifact_policies(const RunConfig& cfg) {
    const std::string sp_path = out_path(cfg, "speaker.policy");
    const std::string lp_path = out_path(cfg, "listener.policy");
    std::ifstream sf(sp_path);
    if (!sf) throw Error(errc::missing_artifact, "missing policy file: " + sp_path);
    std::ifstream lf(lp_path);
    if (!lf) throw Error(errc::missing_artifact, "missing policy file: " + lp_path);
    return {emprag::policy::load_speaker(sf), emprag::policy::load_listener(lf)};
}

std::vector<emprag::eval::MethodSpec> parse_methods(const std::vector<std::string>& ids) {
    std::vector<emprag::eval::MethodSpec> methods;
    methods.reserve(ids.size());
    for (const auto& id : ids) methods.push_back(emprag::eval::parse_method(id));
    return methods;
}

void cmd_gen_data(const RunConfig& cfg) {
    auto ds = emprag::world::generate_dataset(cfg.world, cfg.data.n_train, cfg.data.n_test,
                                              cfg.seed);
    emprag::world::save_dataset(out_path(cfg, "train.txt"), out_path(cfg, "test.txt"), ds);
    write_manifest(cfg, "gen-data");
}

void cmd_train(const RunConfig& cfg) {
    auto ds = load_artifact_dataset(cfg);
    auto result = emprag::emergence::train(ds, emprag::config::train_config(cfg));
    emprag::policy::save_policies(out_path(cfg, "speaker.policy"), out_path(cfg, "listener.policy"),
                                  result.speaker, result.listener);
    auto log = open_out(out_path(cfg, "trainlog.csv"));
    emprag::emergence::save_train_log(log, result.log);
    write_manifest(cfg, "train");
}

void cmd_eval(const RunConfig& cfg) {
    auto ds = load_artifact_dataset(cfg);
    auto [sp, lp] = load_artifact_policies(cfg);
    const auto methods = parse_methods(cfg.evaluation.methods);
    const auto ecfg = emprag::config::eval_config(cfg);

    auto results = open_out(out_path(cfg, "results.csv"));
    auto instances = open_out(out_path(cfg, "instances.csv"));
    results << "method,subset,epoch,acc,sp,lp\n";
    instances << "instance_id,method,target,message,choice,success,sp,lp\n";
    for (const auto& method : methods) {
        auto run = emprag::eval::run_method(sp, lp, ds, method, cfg.seed, ecfg);
        emprag::eval::append_results_rows(results, method.id, "overall", run.rows);
        emprag::eval::append_results_rows(results, method.id, "challenge", run.rows);
        emprag::eval::append_instance_rows(instances, method.id, run.rows);
    }
    write_manifest(cfg, "eval");
}

void cmd_virtual(const RunConfig& cfg) {
    auto ds = load_artifact_dataset(cfg);
    auto [sp, lp] = load_artifact_policies(cfg);
    auto virt = emprag::emergence::distill_virtual(sp, lp, ds, cfg.virtual_model.n_rounds,
                                                   emprag::config::distill_config(cfg));
    const auto methods = parse_methods(cfg.evaluation.methods);
    const auto ecfg = emprag::config::eval_config(cfg);
    auto vrun = emprag::eval::run_virtual(sp, lp, virt.speaker, virt.listener, ds, methods,
                                          cfg.seed, ecfg);

    auto results = open_out(out_path(cfg, "virtual_results.csv"));
    results << "method,subset,epoch,acc,sp,lp\n";
    for (const auto& run : vrun.methods) {
        emprag::eval::append_results_rows(results, run.method.id, "overall", run.rows);
        emprag::eval::append_results_rows(results, run.method.id, "challenge", run.rows);
    }
    auto fidelity = open_out(out_path(cfg, "fidelity.csv"));
    char buf[128];
    fidelity << "side,fidelity\n";
    std::snprintf(buf, sizeof buf, "speaker,%.17g\nlistener,%.17g\n", vrun.fidelity_speaker,
                  vrun.fidelity_listener);
    fidelity << buf;
    write_manifest(cfg, "virtual");
}

void cmd_lexicon(const RunConfig& cfg) {
    auto ds = load_artifact_dataset(cfg);
    auto [sp, lp] = load_artifact_policies(cfg);
    const auto ecfg = emprag::config::eval_config(cfg);
    std::vector<std::pair<std::string, std::vector<emprag::eval::LexiconEntry>>> lexicons;
    for (const auto& id : cfg.evaluation.lexicon_methods) {
        auto method = emprag::eval::parse_method(id);
        lexicons.emplace_back(id,
                              emprag::eval::lexicon_map(sp, lp, ds, method, cfg.seed, ecfg));
    }
    auto out = open_out(out_path(cfg, "lexicon.tsv"));
    emprag::eval::save_lexicon_tsv(out, lexicons);
    write_manifest(cfg, "lexicon");
}

void cmd_dropsim(const RunConfig& cfg) {
    const auto model = emprag::config::embedding_model(cfg);
    auto out = open_out(out_path(cfg, "dropsim.csv"));
    out << "p,encoder,mean_l1_error,ci95\n";
    for (const auto& name : cfg.dropcode.encoders) {
        const auto encoder = emprag::dropcode::encoder_from_string(name);
        auto points = emprag::dropcode::drop_benchmark(model, cfg.dropcode.drop_grid, encoder,
                                                       cfg.dropcode.n_samples, cfg.seed);
        emprag::dropcode::append_drop_csv(out, encoder, points);
    }
    write_manifest(cfg, "dropsim");
}

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "JSON run configuration")->required();
    sub->add_option("--out", args.out_override, "override the configured output directory");
    sub->add_option("--seed", args.seed_override, "override the configured seed")
        ->check(CLI::NonNegativeNumber);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"referential-game language emergence and pragmatic reasoning workbench"};
    app.require_subcommand(1);

    CommonArgs args;
    struct SubSpec {
        const char* name;
        const char* help;
        void (*run)(const RunConfig&);
    };
    const SubSpec specs[] = {
        {"gen-data", "generate the train/test object splits", cmd_gen_data},
        {"train", "train speaker and listener policies", cmd_train},
        {"eval", "evaluate configured methods on the test split", cmd_eval},
        {"virtual", "distill virtual opponents and re-evaluate", cmd_virtual},
        {"lexicon", "map realized messages to attributes", cmd_lexicon},
        {"dropsim", "run the drop-resistant coding benchmark", cmd_dropsim},
    };
    for (const auto& spec : specs) {
        auto* sub = app.add_subcommand(spec.name, spec.help);
        add_common(sub, args);
        sub->callback([&args, &spec, sub] {
            args.has_seed = sub->count("--seed") > 0;
            spec.run(effective_config(args));
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        nlohmann::json j{{"error", e.code()}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json j{{"error", "internal"}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
        return 2;
    }
    return 0;
}
