#pragma once

#include <optional>
#include <vector>

#include "emprag/policy.hpp"
#include "emprag/rng.hpp"
#include "emprag/world.hpp"

namespace emprag::pragmatics {

struct StageConfig {
    double mass_threshold = 0.75;
    int max_size = 16;
};

// One short-term game: the union of per-candidate proposal sets together
// with both prior matrices restricted to it. Matrices are dense row-major
// [message][candidate].
struct StageGame {
    world::GameInstance instance;
    std::vector<policy::ProposalSet> proposals; // per candidate
    std::vector<policy::Message> messages;      // message union, lexicographically sorted
    int n_messages = 0;
    int n_candidates = 0;
    int target = 0;

    std::vector<double> s0;     // speaker prior renormalized on each candidate's proposal support
    std::vector<double> s0_raw; // unrenormalized speaker prior
    std::vector<double> l0;     // listener prior; rows sum to 1

    double s0_at(int m, int c) const { return s0[static_cast<std::size_t>(m) * n_candidates + c]; }
    double raw_at(int m, int c) const { return s0_raw[static_cast<std::size_t>(m) * n_candidates + c]; }
    double l0_at(int m, int c) const { return l0[static_cast<std::size_t>(m) * n_candidates + c]; }

    // Index of a message in the union, or -1.
    int message_index(const policy::Message& m) const;
};

struct OutcomeFlags {
    bool converged = true;        // recursion reached a fixed point within the cap
    bool cycled = false;          // IBR revisited a non-fixed-point strategy pair
    bool uniform_fallback = false; // an unnormalizable row was replaced by uniform
    bool guard_fallback = false;  // game-table bounds exceeded, random play used
    int gt_branch = -1;           // selection protocol branch, see gametheory.hpp
};

struct Outcome {
    policy::Message message;
    int choice = 0;
    bool success = false;
    double sp = 0.0; // prior speaker probability of the sent message
    double lp = 0.0; // prior listener probability of the choice
    OutcomeFlags flags;
};

// Speaker/listener strategy matrices at some recursion depth, same layout as
// the stage game priors.
struct StrategyPair {
    std::vector<double> speaker; // columns (per candidate) sum to 1
    std::vector<double> listener; // rows (per message) sum to 1
    int depth = 0;
    bool converged = false;
    bool cycled = false;
    bool uniform_fallback = false;
};

struct Rounds {
    int depth = 2;
    bool to_convergence = false;

    static Rounds fixed(int k) { return {k, false}; }
    static Rounds convergence() { return {0, true}; }
};

inline constexpr double kConvergenceTol = 1e-8;
inline constexpr int kIterationCap = 100;

StageGame build_stage_game(const world::GameInstance& instance, const policy::SpeakerPolicy& sp,
                           const policy::ListenerPolicy& lp, const StageConfig& cfg = {});

// Alternating normalized power updates from (S0, L0) with reciprocal-prior
// message cost; alpha or beta = +inf selects the argmax (best-response)
// limit. k full rounds, each one speaker update then one listener update.
StrategyPair recursive_update(const StageGame& game, double alpha, double beta, int k);

// --- message-side and choice-side halves ------------------------------
// The evaluation harness composes these so that each agent can reason over
// its own (possibly virtual-opponent) stage game.

int baseline_message(const StageGame& game);
int baseline_choice(const StageGame& game, int message_index);

int sample_l_message(const StageGame& game, double lambda);
int sample_l_choice(const StageGame& game, int message_index, Rng& listener_rng);

int argmax_l_message(const StageGame& game);

enum class RecursionKind { rsa, ibr };

StrategyPair run_recursion(const StageGame& game, RecursionKind kind, Rounds rounds);
int recursion_message(const StageGame& game, const StrategyPair& pair);
int recursion_choice(const StageGame& game, const StrategyPair& pair, int message_index);

// --- full plays --------------------------------------------------------

Outcome baseline_play(const StageGame& game);
Outcome sample_l(const StageGame& game, double lambda, Rng& listener_rng);
Outcome argmax_l(const StageGame& game);
Outcome rsa_play(const StageGame& game, Rounds rounds);
Outcome ibr_play(const StageGame& game, Rounds rounds);

// Fills success/sp/lp from the stage game priors.
Outcome finish_outcome(const StageGame& game, int message_index, int choice, OutcomeFlags flags = {});

} // namespace emprag::pragmatics
