#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emprag/pragmatics.hpp"
#include "emprag/rng.hpp"

namespace emprag::gametheory {

// Capacity limits for explicit strategy enumeration. The strategy spaces grow
// as prod(|M_i|) x |C|^|M_union|, so anything past these bounds is refused.
struct TableBounds {
    int max_union = 12;
    int max_candidates = 4;
    std::size_t max_cells = std::size_t{1} << 22;
};

// A speaker strategy assigns each candidate a message from that candidate's
// proposal set; a listener strategy assigns each message in the union a
// candidate. Both are stored as flat indices into mixed-radix spaces and
// decoded on demand (the last digit varies fastest).
struct PayoffTable {
    int n_messages = 0;
    int n_candidates = 0;
    std::vector<policy::Message> messages; // the union, canonical order
    std::vector<double> s0;                // copies of the stage-game priors, row-major [m][c]
    std::vector<double> l0;

    std::vector<std::vector<int>> proposal_sets; // per candidate, ascending message indices
    std::size_t n_speaker = 0;                   // prod of proposal set sizes
    std::size_t n_listener = 0;                  // n_candidates^n_messages

    std::vector<double> pay_s; // P_S per speaker strategy
    std::vector<double> pay_l; // P_L per listener strategy

    // Optional explicit match bits, row-major [s][l]. Empty in tables built
    // from a stage game; abstract fixture tables fill it directly.
    std::vector<std::uint8_t> match_bits;

    double s0_at(int m, int c) const { return s0[static_cast<std::size_t>(m) * n_candidates + c]; }
    double l0_at(int m, int c) const { return l0[static_cast<std::size_t>(m) * n_candidates + c]; }

    std::vector<int> speaker_strategy(std::size_t index) const;  // message index per candidate
    std::vector<int> listener_strategy(std::size_t index) const; // candidate per message

    bool match_at(std::size_t s_index, std::size_t l_index) const;
    // (P_S(s), P_L(l)) when the strategies match, (0, 0) otherwise.
    std::pair<double, double> pay(std::size_t s_index, std::size_t l_index) const;
};

struct Equilibrium {
    std::uint32_t s = 0;
    std::uint32_t l = 0;
    friend bool operator==(const Equilibrium&, const Equilibrium&) = default;
};

using EquilibriumSet = std::vector<Equilibrium>;

// True iff every candidate's chosen message maps back to that candidate.
bool match(const std::vector<int>& speaker, const std::vector<int>& listener);

// (prod_i S0(m_{s_i}|c_i), prod_j L0(c_{l_j}|m_j)) on match, else (0, 0). The
// listener product runs over the whole message union.
std::pair<double, double> psych_payoffs(const std::vector<int>& speaker,
                                        const std::vector<int>& listener,
                                        const pragmatics::StageGame& game);

PayoffTable build_payoff_table(const pragmatics::StageGame& game, const TableBounds& bounds = {});

// Exact pure Nash set: no unilateral deviation strictly improves the deviating
// agent's own payoff component.
EquilibriumSet enumerate_nash(const PayoffTable& table);

// The equilibrium weakly dominating every member of E in both components, if
// any. All dominators necessarily share one payoff point; the first in index
// order is returned so that both agents select the same strategies.
std::optional<Equilibrium> pareto_select(const EquilibriumSet& eq, const PayoffTable& table);

// Per-message refinement: candidate index if the message is assigned to the
// same candidate in every equilibrium speaker strategy that contains it, -1 if
// it is ambiguous or unused.
std::vector<int> sequential_map(const EquilibriumSet& eq, const PayoffTable& table);

// First (canonical order) unambiguous message for the target, if any.
std::optional<policy::Message> sequential_refine(const EquilibriumSet& eq, const PayoffTable& table,
                                                 int target);

// Selection protocol branches, recorded in OutcomeFlags::gt_branch.
inline constexpr int kBranchRandomEmpty = 0; // no equilibrium: random actions
inline constexpr int kBranchUnique = 1;      // unique equilibrium played
inline constexpr int kBranchPareto = 2;      // Pareto-dominant equilibrium played
inline constexpr int kBranchSequential = 3;  // sequential refinement used
inline constexpr int kBranchRandom = 4;      // selection failed: random actions

// Target-independent part of the protocol: table, equilibria, and the branch
// both agents deterministically agree on.
struct Resolution {
    bool guard_tripped = false; // bounds exceeded; only the priors are usable
    PayoffTable table;
    EquilibriumSet eq;
    int branch = kBranchRandom;
    std::optional<Equilibrium> chosen; // set for the unique/Pareto branches
    std::vector<int> seq_map;          // set for the sequential branch
};

Resolution resolve_table(const pragmatics::StageGame& game, bool sequential,
                         const TableBounds& bounds = {});

// Speaker side: message index into the union. Randomized branches draw from
// the target's renormalized proposal priors.
int resolved_message(const Resolution& res, int target, Rng& rng);

// Listener side: candidate choice for a received message. Takes no stage game
// and no target; randomized branches draw from the copied L0 row.
int resolved_choice(const Resolution& res, int message_index, Rng& rng);

// Full protocol: build table, enumerate equilibria, select, play. Guard trips
// degrade to prior-weighted random play with the guard_fallback flag set.
pragmatics::Outcome gametable_play(const pragmatics::StageGame& game, bool sequential, Rng& rng,
                                   const TableBounds& bounds = {});

// Text rendering of strategies, payoffs, and equilibria for small fixtures.
std::string render_table(const PayoffTable& table, const EquilibriumSet& eq);

} // namespace emprag::gametheory
