#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emprag/emergence.hpp"
#include "emprag/gametheory.hpp"
#include "emprag/policy.hpp"
#include "emprag/pragmatics.hpp"
#include "emprag/world.hpp"

namespace emprag::eval {

struct MethodSpec {
    enum class Kind { baseline, sample_l, argmax_l, rsa, ibr, gametable, gametable_seq };
    Kind kind = Kind::baseline;
    double lambda = 0.5;          // sample_l only
    pragmatics::Rounds rounds;    // rsa/ibr only
    std::string id = "baseline";  // canonical identifier, see parse_method
};

// Method ids: baseline | sampleL_<lambda> | argmaxL | rsa_<k>rnd | rsa_cnvg |
// ibr_<k>rnd | ibr_cnvg | gametable | gametable_seq.
MethodSpec parse_method(const std::string& id);

struct EvalConfig {
    int n_candidates = 2;
    int n_epochs = 5;
    double mass_threshold = 0.75;
    int max_size = 16;
    gametheory::TableBounds bounds;
    world::WorldConfig world;
    long long n_virtual_probes = 500;
};

struct InstanceRow {
    int epoch = 0;
    int instance_id = 0; // test-object position serving as the target
    int target = 0;      // target slot after candidate shuffling
    bool challenge = false;
    policy::Message message;
    int choice = 0;
    bool success = false;
    double sp = 0.0;
    double lp = 0.0;
    pragmatics::OutcomeFlags flags;
};

struct Metrics {
    double acc = 0.0;
    double acc_sd = 0.0; // across epochs
    double sp = 0.0;     // over successful instances only
    double lp = 0.0;
    long long n_instances = 0;
    int n_epochs = 0;
};

// One pass where every test object serves as the target once; distractors,
// view noise, and decision draws come from per-instance streams derived from
// (seed, epoch, instance), so all methods see identical instances and the
// parallel and serial paths are byte-identical.
std::vector<InstanceRow> run_epoch(const policy::SpeakerPolicy& sp, const policy::ListenerPolicy& lp,
                                   const world::Dataset& dataset, const MethodSpec& method,
                                   int epoch, std::uint64_t seed, const EvalConfig& cfg);

// Plain-loop reference with identical output.
std::vector<InstanceRow> run_epoch_serial(const policy::SpeakerPolicy& sp,
                                          const policy::ListenerPolicy& lp,
                                          const world::Dataset& dataset, const MethodSpec& method,
                                          int epoch, std::uint64_t seed, const EvalConfig& cfg);

Metrics aggregate_metrics(const std::vector<InstanceRow>& rows, int n_epochs, bool challenge_only);

struct MethodRun {
    MethodSpec method;
    std::vector<InstanceRow> rows; // all epochs concatenated
    Metrics overall;
    Metrics challenge;
};

MethodRun run_method(const policy::SpeakerPolicy& sp, const policy::ListenerPolicy& lp,
                     const world::Dataset& dataset, const MethodSpec& method, std::uint64_t seed,
                     const EvalConfig& cfg);

// Virtual-opponent pass: each agent reasons over a stage game in which the
// opponent's policy is replaced by its virtual model, while the exchanged
// message and the realized views stay real. With exact-copy virtual models it
// reproduces run_epoch bit-exactly. A message outside the listener-side game
// falls back to the listener's prior argmax.
std::vector<InstanceRow> run_epoch_virtual(const policy::SpeakerPolicy& real_sp,
                                           const policy::ListenerPolicy& real_lp,
                                           const policy::SpeakerPolicy& virt_sp,
                                           const policy::ListenerPolicy& virt_lp,
                                           const world::Dataset& dataset, const MethodSpec& method,
                                           int epoch, std::uint64_t seed, const EvalConfig& cfg);

struct VirtualRun {
    double fidelity_speaker = 0.0;
    double fidelity_listener = 0.0;
    std::vector<MethodRun> methods;
};

VirtualRun run_virtual(const policy::SpeakerPolicy& real_sp, const policy::ListenerPolicy& real_lp,
                       const policy::SpeakerPolicy& virt_sp, const policy::ListenerPolicy& virt_lp,
                       const world::Dataset& dataset, const std::vector<MethodSpec>& methods,
                       std::uint64_t seed, const EvalConfig& cfg);

struct LexiconEntry {
    std::string key;       // full message or 2-symbol prefix
    bool is_prefix = false;
    std::string attribute; // dominant attribute value, e.g. "color:2" or "xpos:left"
    double purity = 0.0;   // majority fraction of the dominant attribute
    int support = 0;       // number of uses
};

// Messages realized over one epoch of the given method, grouped by full
// message and by 2-symbol prefix; dominant attribute over color and a
// 3-bucket horizontal position.
std::vector<LexiconEntry> lexicon_map(const policy::SpeakerPolicy& sp,
                                      const policy::ListenerPolicy& lp,
                                      const world::Dataset& dataset, const MethodSpec& method,
                                      std::uint64_t seed, const EvalConfig& cfg);

// --- artifact writers ----------------------------------------------------

// Appends `method,subset,epoch,acc,sp,lp` rows, one per epoch.
void append_results_rows(std::ostream& out, const std::string& method_id, const std::string& subset,
                         const std::vector<InstanceRow>& rows);

// Appends `instance_id,method,target,message,choice,success,sp,lp` rows.
void append_instance_rows(std::ostream& out, const std::string& method_id,
                          const std::vector<InstanceRow>& rows);

// TSV `message\tattribute\tpurity\tsupport\tmethods`; entries present under
// several methods are merged, keeping the first method's statistics.
void save_lexicon_tsv(std::ostream& out,
                      const std::vector<std::pair<std::string, std::vector<LexiconEntry>>>& lexicons);

} // namespace emprag::eval
