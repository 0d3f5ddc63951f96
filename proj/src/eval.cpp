#include "emprag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "emprag/error.hpp"

namespace emprag::eval {

namespace {

constexpr std::uint64_t kStreamEval = 4;
constexpr std::uint64_t kStreamProbe = 5;
constexpr std::uint64_t kSubInstance = 0;
constexpr std::uint64_t kSubSpeaker = 1;
constexpr std::uint64_t kSubListener = 2;

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

pragmatics::Rounds parse_rounds(const std::string& suffix, const std::string& id) {
    if (suffix == "cnvg") return pragmatics::Rounds::convergence();
    if (suffix.size() > 3 && suffix.substr(suffix.size() - 3) == "rnd") {
        const std::string num = suffix.substr(0, suffix.size() - 3);
        std::size_t used = 0;
        int k = 0;
        try {
            k = std::stoi(num, &used);
        } catch (const std::exception&) {
            throw Error(errc::bad_method, "bad round count in method id: " + id);
        }
        if (used != num.size() || k < 0)
            throw Error(errc::bad_method, "bad round count in method id: " + id);
        return pragmatics::Rounds::fixed(k);
    }
    throw Error(errc::bad_method, "unknown method id: " + id);
}

} // namespace

MethodSpec parse_method(const std::string& id) {
    MethodSpec m;
    m.id = id;
    if (id == "baseline") {
        m.kind = MethodSpec::Kind::baseline;
        return m;
    }
    if (id == "argmaxL") {
        m.kind = MethodSpec::Kind::argmax_l;
        return m;
    }
    if (id == "gametable") {
        m.kind = MethodSpec::Kind::gametable;
        return m;
    }
    if (id == "gametable_seq") {
        m.kind = MethodSpec::Kind::gametable_seq;
        return m;
    }
    if (id.rfind("sampleL_", 0) == 0) {
        const std::string num = id.substr(8);
        std::size_t used = 0;
        double lambda = 0.0;
        try {
            lambda = std::stod(num, &used);
        } catch (const std::exception&) {
            throw Error(errc::bad_method, "bad lambda in method id: " + id);
        }
        if (used != num.size() || !(lambda >= 0.0 && lambda <= 1.0))
            throw Error(errc::bad_method, "lambda outside [0, 1] in method id: " + id);
        m.kind = MethodSpec::Kind::sample_l;
        m.lambda = lambda;
        return m;
    }
    if (id.rfind("rsa_", 0) == 0) {
        m.kind = MethodSpec::Kind::rsa;
        m.rounds = parse_rounds(id.substr(4), id);
        return m;
    }
    if (id.rfind("ibr_", 0) == 0) {
        m.kind = MethodSpec::Kind::ibr;
        m.rounds = parse_rounds(id.substr(4), id);
        return m;
    }
    throw Error(errc::bad_method, "unknown method id: " + id);
}

namespace {

// Speaker-side half. Mirrors the flag conventions of the full plays so that
// the virtual path with exact-copy models is bit-identical to run_epoch.
int method_message(const MethodSpec& method, const pragmatics::StageGame& game, Rng& speaker_rng,
                   const gametheory::TableBounds& bounds, pragmatics::OutcomeFlags& flags) {
    using Kind = MethodSpec::Kind;
    switch (method.kind) {
        case Kind::baseline:
            return pragmatics::baseline_message(game);
        case Kind::sample_l:
            return pragmatics::sample_l_message(game, method.lambda);
        case Kind::argmax_l:
            return pragmatics::argmax_l_message(game);
        case Kind::rsa:
        case Kind::ibr: {
            auto kind = method.kind == Kind::rsa ? pragmatics::RecursionKind::rsa
                                                 : pragmatics::RecursionKind::ibr;
            auto pair = pragmatics::run_recursion(game, kind, method.rounds);
            flags.converged = method.rounds.to_convergence ? pair.converged : true;
            flags.cycled = pair.cycled;
            flags.uniform_fallback = pair.uniform_fallback;
            return pragmatics::recursion_message(game, pair);
        }
        case Kind::gametable:
        case Kind::gametable_seq: {
            auto res = gametheory::resolve_table(game, method.kind == Kind::gametable_seq, bounds);
            flags.guard_fallback = res.guard_tripped;
            flags.gt_branch = res.branch;
            return gametheory::resolved_message(res, game.target, speaker_rng);
        }
    }
    throw Error(errc::bad_method, "unhandled method kind");
}

int method_choice(const MethodSpec& method, const pragmatics::StageGame& game, int message_index,
                  Rng& listener_rng, const gametheory::TableBounds& bounds) {
    using Kind = MethodSpec::Kind;
    switch (method.kind) {
        case Kind::baseline:
        case Kind::argmax_l:
            return pragmatics::baseline_choice(game, message_index);
        case Kind::sample_l:
            return pragmatics::sample_l_choice(game, message_index, listener_rng);
        case Kind::rsa:
        case Kind::ibr: {
            auto kind = method.kind == Kind::rsa ? pragmatics::RecursionKind::rsa
                                                 : pragmatics::RecursionKind::ibr;
            auto pair = pragmatics::run_recursion(game, kind, method.rounds);
            return pragmatics::recursion_choice(game, pair, message_index);
        }
        case Kind::gametable:
        case Kind::gametable_seq: {
            auto res = gametheory::resolve_table(game, method.kind == Kind::gametable_seq, bounds);
            return gametheory::resolved_choice(res, message_index, listener_rng);
        }
    }
    throw Error(errc::bad_method, "unhandled method kind");
}

pragmatics::Outcome play_method(const MethodSpec& method, const pragmatics::StageGame& game,
                                Rng& speaker_rng, Rng& listener_rng,
                                const gametheory::TableBounds& bounds) {
    using Kind = MethodSpec::Kind;
    switch (method.kind) {
        case Kind::baseline:
            return pragmatics::baseline_play(game);
        case Kind::sample_l:
            return pragmatics::sample_l(game, method.lambda, listener_rng);
        case Kind::argmax_l:
            return pragmatics::argmax_l(game);
        case Kind::rsa:
            return pragmatics::rsa_play(game, method.rounds);
        case Kind::ibr:
            return pragmatics::ibr_play(game, method.rounds);
        case Kind::gametable:
        case Kind::gametable_seq: {
            auto res = gametheory::resolve_table(game, method.kind == Kind::gametable_seq, bounds);
            int m = gametheory::resolved_message(res, game.target, speaker_rng);
            int c = gametheory::resolved_choice(res, m, listener_rng);
            pragmatics::OutcomeFlags flags;
            flags.guard_fallback = res.guard_tripped;
            flags.gt_branch = res.branch;
            return pragmatics::finish_outcome(game, m, c, flags);
        }
    }
    throw Error(errc::bad_method, "unhandled method kind");
}

InstanceRow eval_instance(const policy::SpeakerPolicy& sp, const policy::ListenerPolicy& lp,
                          const world::Dataset& dataset, const MethodSpec& method, int epoch,
                          int instance_id, std::uint64_t seed, const EvalConfig& cfg) {
    const auto e = static_cast<std::uint64_t>(epoch);
    const auto i = static_cast<std::uint64_t>(instance_id);
    Rng rng0(derive_stream(seed, {kStreamEval, e, i, kSubInstance}));
    Rng rng1(derive_stream(seed, {kStreamEval, e, i, kSubSpeaker}));
    Rng rng2(derive_stream(seed, {kStreamEval, e, i, kSubListener}));

    auto instance = world::instance_for_target(dataset, world::Split::test, instance_id,
                                               cfg.n_candidates, cfg.world, rng0);
    auto game = pragmatics::build_stage_game(instance, sp, lp,
                                             {cfg.mass_threshold, cfg.max_size});
    auto out = play_method(method, game, rng1, rng2, cfg.bounds);

    InstanceRow row;
    row.epoch = epoch;
    row.instance_id = instance_id;
    row.target = instance.target_index;
    row.challenge = world::is_challenge(instance, cfg.world);
    row.message = out.message;
    row.choice = out.choice;
    row.success = out.success;
    row.sp = out.sp;
    row.lp = out.lp;
    row.flags = out.flags;
    return row;
}

InstanceRow eval_instance_virtual(const policy::SpeakerPolicy& real_sp,
                                  const policy::ListenerPolicy& real_lp,
                                  const policy::SpeakerPolicy& virt_sp,
                                  const policy::ListenerPolicy& virt_lp,
                                  const world::Dataset& dataset, const MethodSpec& method,
                                  int epoch, int instance_id, std::uint64_t seed,
                                  const EvalConfig& cfg) {
    const auto e = static_cast<std::uint64_t>(epoch);
    const auto i = static_cast<std::uint64_t>(instance_id);
    Rng rng0(derive_stream(seed, {kStreamEval, e, i, kSubInstance}));
    Rng rng1(derive_stream(seed, {kStreamEval, e, i, kSubSpeaker}));
    Rng rng2(derive_stream(seed, {kStreamEval, e, i, kSubListener}));

    auto instance = world::instance_for_target(dataset, world::Split::test, instance_id,
                                               cfg.n_candidates, cfg.world, rng0);
    const pragmatics::StageConfig stage_cfg{cfg.mass_threshold, cfg.max_size};
    auto game_s = pragmatics::build_stage_game(instance, real_sp, virt_lp, stage_cfg);
    auto game_l = pragmatics::build_stage_game(instance, virt_sp, real_lp, stage_cfg);

    InstanceRow row;
    row.epoch = epoch;
    row.instance_id = instance_id;
    row.target = instance.target_index;
    row.challenge = world::is_challenge(instance, cfg.world);

    int m = method_message(method, game_s, rng1, cfg.bounds, row.flags);
    row.message = game_s.messages[m];
    row.sp = game_s.raw_at(m, game_s.target);

    int j = game_l.message_index(row.message);
    if (j >= 0) {
        row.choice = method_choice(method, game_l, j, rng2, cfg.bounds);
        row.lp = game_l.l0_at(j, row.choice);
    } else {
        // The listener never anticipated this message; it falls back to its
        // prior, evaluated directly by its policy.
        auto lrow = policy::listener_prob(real_lp, row.message, instance.listener_views);
        row.choice = argmax(lrow);
        row.lp = lrow[row.choice];
    }
    row.success = row.choice == instance.target_index;
    return row;
}

} // namespace

std::vector<InstanceRow> run_epoch(const policy::SpeakerPolicy& sp, const policy::ListenerPolicy& lp,
                                   const world::Dataset& dataset, const MethodSpec& method,
                                   int epoch, std::uint64_t seed, const EvalConfig& cfg) {
    const int n = static_cast<int>(dataset.test_objects.size());
    std::vector<InstanceRow> rows(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < n; ++i)
        rows[i] = eval_instance(sp, lp, dataset, method, epoch, i, seed, cfg);
    return rows;
}

std::vector<InstanceRow> run_epoch_serial(const policy::SpeakerPolicy& sp,
                                          const policy::ListenerPolicy& lp,
                                          const world::Dataset& dataset, const MethodSpec& method,
                                          int epoch, std::uint64_t seed, const EvalConfig& cfg) {
    const int n = static_cast<int>(dataset.test_objects.size());
    std::vector<InstanceRow> rows(n);
    for (int i = 0; i < n; ++i)
        rows[i] = eval_instance(sp, lp, dataset, method, epoch, i, seed, cfg);
    return rows;
}

std::vector<InstanceRow> run_epoch_virtual(const policy::SpeakerPolicy& real_sp,
                                           const policy::ListenerPolicy& real_lp,
                                           const policy::SpeakerPolicy& virt_sp,
                                           const policy::ListenerPolicy& virt_lp,
                                           const world::Dataset& dataset, const MethodSpec& method,
                                           int epoch, std::uint64_t seed, const EvalConfig& cfg) {
    const int n = static_cast<int>(dataset.test_objects.size());
    std::vector<InstanceRow> rows(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < n; ++i)
        rows[i] = eval_instance_virtual(real_sp, real_lp, virt_sp, virt_lp, dataset, method, epoch,
                                        i, seed, cfg);
    return rows;
}

Metrics aggregate_metrics(const std::vector<InstanceRow>& rows, int n_epochs, bool challenge_only) {
    Metrics m;
    m.n_epochs = n_epochs;
    std::map<int, std::pair<long long, long long>> per_epoch; // epoch -> (count, successes)
    double sp_sum = 0.0, lp_sum = 0.0;
    long long successes = 0;
    for (const auto& r : rows) {
        if (challenge_only && !r.challenge) continue;
        auto& [count, succ] = per_epoch[r.epoch];
        ++count;
        ++m.n_instances;
        if (r.success) {
            ++succ;
            ++successes;
            sp_sum += r.sp;
            lp_sum += r.lp;
        }
    }
    if (m.n_instances == 0) return m;
    m.acc = static_cast<double>(successes) / static_cast<double>(m.n_instances);
    if (successes > 0) {
        m.sp = sp_sum / static_cast<double>(successes);
        m.lp = lp_sum / static_cast<double>(successes);
    }
    if (per_epoch.size() > 1) {
        double mean = 0.0;
        std::vector<double> accs;
        for (const auto& [epoch, cs] : per_epoch) {
            const double a = cs.first > 0 ? static_cast<double>(cs.second) / cs.first : 0.0;
            accs.push_back(a);
            mean += a;
        }
        mean /= static_cast<double>(accs.size());
        double ss = 0.0;
        for (double a : accs) ss += (a - mean) * (a - mean);
        m.acc_sd = std::sqrt(ss / static_cast<double>(accs.size() - 1));
    }
    return m;
}

MethodRun run_method(const policy::SpeakerPolicy& sp, const policy::ListenerPolicy& lp,
                     const world::Dataset& dataset, const MethodSpec& method, std::uint64_t seed,
                     const EvalConfig& cfg) {
    MethodRun run;
    run.method = method;
    for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        auto rows = run_epoch(sp, lp, dataset, method, epoch, seed, cfg);
        run.rows.insert(run.rows.end(), rows.begin(), rows.end());
    }
    run.overall = aggregate_metrics(run.rows, cfg.n_epochs, false);
    run.challenge = aggregate_metrics(run.rows, cfg.n_epochs, true);
    return run;
}

VirtualRun run_virtual(const policy::SpeakerPolicy& real_sp, const policy::ListenerPolicy& real_lp,
                       const policy::SpeakerPolicy& virt_sp, const policy::ListenerPolicy& virt_lp,
                       const world::Dataset& dataset, const std::vector<MethodSpec>& methods,
                       std::uint64_t seed, const EvalConfig& cfg) {
    VirtualRun out;
    std::vector<world::GameInstance> probes;
    probes.reserve(static_cast<std::size_t>(cfg.n_virtual_probes));
    for (long long i = 0; i < cfg.n_virtual_probes; ++i) {
        Rng rng(derive_stream(seed, {kStreamProbe, static_cast<std::uint64_t>(i)}));
        probes.push_back(
            world::sample_instance(dataset, world::Split::test, cfg.n_candidates, cfg.world, rng));
    }
    out.fidelity_speaker =
        emergence::fidelity(real_sp, virt_sp, probes, cfg.mass_threshold, cfg.max_size);
    out.fidelity_listener = emergence::fidelity(real_lp, virt_lp, real_sp, probes);

    for (const auto& method : methods) {
        MethodRun run;
        run.method = method;
        for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
            auto rows = run_epoch_virtual(real_sp, real_lp, virt_sp, virt_lp, dataset, method,
                                          epoch, seed, cfg);
            run.rows.insert(run.rows.end(), rows.begin(), rows.end());
        }
        run.overall = aggregate_metrics(run.rows, cfg.n_epochs, false);
        run.challenge = aggregate_metrics(run.rows, cfg.n_epochs, true);
        out.methods.push_back(std::move(run));
    }
    return out;
}

std::vector<LexiconEntry> lexicon_map(const policy::SpeakerPolicy& sp,
                                      const policy::ListenerPolicy& lp,
                                      const world::Dataset& dataset, const MethodSpec& method,
                                      std::uint64_t seed, const EvalConfig& cfg) {
    auto rows = run_epoch(sp, lp, dataset, method, 0, seed, cfg);

    auto xpos_label = [](double x) {
        if (x < 1.0 / 3.0) return std::string("xpos:left");
        if (x < 2.0 / 3.0) return std::string("xpos:mid");
        return std::string("xpos:right");
    };

    // (key, is_prefix) -> attribute value -> count
    std::map<std::pair<std::string, bool>, std::map<std::string, int>> counts;
    for (const auto& r : rows) {
        const auto& obj = dataset.test_objects[r.instance_id];
        const std::string color = "color:" + std::to_string(obj.color);
        const std::string xpos = xpos_label(obj.position[0]);
        const std::string full = policy::to_string(r.message);
        policy::Message prefix{{r.message.symbols.begin(),
                                r.message.symbols.begin() +
                                    std::min<std::ptrdiff_t>(2, r.message.symbols.size())}};
        const std::string pref = policy::to_string(prefix);
        for (const auto& attr : {color, xpos}) {
            ++counts[{full, false}][attr];
            ++counts[{pref, true}][attr];
        }
    }

    std::vector<LexiconEntry> entries;
    for (const auto& [key, attr_counts] : counts) {
        LexiconEntry e;
        e.key = key.first;
        e.is_prefix = key.second;
        int best = 0, total = 0;
        for (const auto& [attr, count] : attr_counts) {
            total += count;
            if (count > best) {
                best = count;
                e.attribute = attr;
            }
        }
        // Each use contributes one color and one position tag.
        e.support = total / 2;
        e.purity = e.support > 0 ? static_cast<double>(best) / e.support : 0.0;
        entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end(), [](const LexiconEntry& a, const LexiconEntry& b) {
        if (a.is_prefix != b.is_prefix) return !a.is_prefix;
        return a.key < b.key;
    });
    return entries;
}

void append_results_rows(std::ostream& out, const std::string& method_id, const std::string& subset,
                         const std::vector<InstanceRow>& rows) {
    const bool challenge_only = subset == "challenge";
    std::map<int, std::vector<const InstanceRow*>> per_epoch;
    for (const auto& r : rows) {
        if (challenge_only && !r.challenge) continue;
        per_epoch[r.epoch].push_back(&r);
    }
    char buf[256];
    for (const auto& [epoch, epoch_rows] : per_epoch) {
        long long succ = 0;
        double sp_sum = 0.0, lp_sum = 0.0;
        for (const auto* r : epoch_rows) {
            if (!r->success) continue;
            ++succ;
            sp_sum += r->sp;
            lp_sum += r->lp;
        }
        const double acc = static_cast<double>(succ) / static_cast<double>(epoch_rows.size());
        const double sp = succ ? sp_sum / static_cast<double>(succ) : 0.0;
        const double lp = succ ? lp_sum / static_cast<double>(succ) : 0.0;
        std::snprintf(buf, sizeof buf, "%s,%s,%d,%.17g,%.17g,%.17g\n", method_id.c_str(),
                      subset.c_str(), epoch, acc, sp, lp);
        out << buf;
    }
}

void append_instance_rows(std::ostream& out, const std::string& method_id,
                          const std::vector<InstanceRow>& rows) {
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%d,%s,%d,%d,%.17g,%.17g\n", r.instance_id,
                      method_id.c_str(), r.target, policy::to_string(r.message).c_str(), r.choice,
                      r.success ? 1 : 0, r.sp, r.lp);
        out << buf;
    }
}

void save_lexicon_tsv(std::ostream& out,
                      const std::vector<std::pair<std::string, std::vector<LexiconEntry>>>& lexicons) {
    out << "message\tattribute\tpurity\tsupport\tmethods\n";
    std::map<std::pair<bool, std::string>, std::pair<const LexiconEntry*, std::vector<std::string>>>
        merged;
    for (const auto& [label, entries] : lexicons) {
        for (const auto& e : entries) {
            auto& slot = merged[{e.is_prefix, e.key}];
            if (!slot.first) slot.first = &e;
            slot.second.push_back(label);
        }
    }
    char buf[256];
    for (const auto& [key, slot] : merged) {
        std::string methods;
        for (const auto& label : slot.second) {
            if (!methods.empty()) methods += ",";
            methods += label;
        }
        std::snprintf(buf, sizeof buf, "%s\t%s\t%.17g\t%d\t%s\n", slot.first->key.c_str(),
                      slot.first->attribute.c_str(), slot.first->purity, slot.first->support,
                      methods.c_str());
        out << buf;
    }
}

} // namespace emprag::eval
