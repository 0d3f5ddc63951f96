#pragma once

// Shared fixtures plus definition-level reference implementations used as
// oracles across the test binaries. The oracles are deliberately written
// straight from the definitions (dense matrices, full double loops) rather
// than sharing code with the library.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "emprag/gametheory.hpp"
#include "emprag/policy.hpp"
#include "emprag/pragmatics.hpp"
#include "emprag/rng.hpp"

namespace testutil {

inline emprag::policy::Message msg(const std::string& s) {
    return emprag::policy::message_from_string(s);
}

// Builds a consistent StageGame directly from per-candidate proposal lists of
// (message, raw prior probability) and optional listener rows (one per union
// message, any positive scale; normalized here). Listener rows default to
// uniform.
inline emprag::pragmatics::StageGame make_game(
    const std::vector<std::vector<std::pair<std::string, double>>>& proposals,
    const std::vector<std::vector<double>>& l0_rows = {}, int target = 0) {
    using emprag::policy::Message;
    emprag::pragmatics::StageGame g;
    g.n_candidates = static_cast<int>(proposals.size());
    g.target = target;
    g.instance.target_index = target;
    g.instance.candidates.resize(proposals.size());

    std::vector<Message> union_msgs;
    for (const auto& plist : proposals)
        for (const auto& [text, prob] : plist) union_msgs.push_back(msg(text));
    std::sort(union_msgs.begin(), union_msgs.end());
    union_msgs.erase(std::unique(union_msgs.begin(), union_msgs.end()), union_msgs.end());
    g.messages = union_msgs;
    g.n_messages = static_cast<int>(union_msgs.size());

    const auto idx = [&](const Message& m) {
        return static_cast<int>(std::lower_bound(union_msgs.begin(), union_msgs.end(), m) -
                                union_msgs.begin());
    };

    g.s0_raw.assign(static_cast<std::size_t>(g.n_messages) * g.n_candidates, 0.0);
    g.s0.assign(g.s0_raw.size(), 0.0);
    g.proposals.resize(proposals.size());
    for (int c = 0; c < g.n_candidates; ++c) {
        double mass = 0.0;
        for (const auto& [text, prob] : proposals[c]) {
            g.s0_raw[static_cast<std::size_t>(idx(msg(text))) * g.n_candidates + c] = prob;
            g.proposals[c].entries.push_back({msg(text), prob});
            mass += prob;
        }
        std::sort(g.proposals[c].entries.begin(), g.proposals[c].entries.end(),
                  [](const auto& a, const auto& b) {
                      return a.prob != b.prob ? a.prob > b.prob : a.message < b.message;
                  });
        g.proposals[c].mass = mass;
        for (int m = 0; m < g.n_messages; ++m) {
            const std::size_t at = static_cast<std::size_t>(m) * g.n_candidates + c;
            if (g.s0_raw[at] > 0.0) g.s0[at] = g.s0_raw[at] / mass;
        }
    }

    g.l0.assign(static_cast<std::size_t>(g.n_messages) * g.n_candidates, 0.0);
    for (int m = 0; m < g.n_messages; ++m) {
        double total = 0.0;
        if (!l0_rows.empty())
            for (double v : l0_rows[static_cast<std::size_t>(m)]) total += v;
        for (int c = 0; c < g.n_candidates; ++c) {
            const std::size_t at = static_cast<std::size_t>(m) * g.n_candidates + c;
            g.l0[at] = l0_rows.empty() ? 1.0 / g.n_candidates
                                       : l0_rows[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)] / total;
        }
    }
    return g;
}

// Random small stage game for oracle sweeps. Message pool is shared across
// candidates so proposal sets overlap with positive probability.
inline emprag::pragmatics::StageGame random_game(emprag::Rng& rng, int max_candidates = 3,
                                                 int max_proposals = 3, int pool_size = 5) {
    const int n_candidates = 2 + rng.uniform_int(std::max(1, max_candidates - 1));
    std::vector<std::string> pool;
    for (int i = 0; i < pool_size; ++i) pool.push_back(std::string(1, static_cast<char>('a' + i)));

    std::vector<std::vector<std::pair<std::string, double>>> proposals(n_candidates);
    for (int c = 0; c < n_candidates; ++c) {
        const int k = 1 + rng.uniform_int(max_proposals);
        std::vector<int> chosen;
        while (static_cast<int>(chosen.size()) < k) {
            int m = rng.uniform_int(pool_size);
            if (std::find(chosen.begin(), chosen.end(), m) == chosen.end()) chosen.push_back(m);
        }
        for (int m : chosen) proposals[c].push_back({pool[static_cast<std::size_t>(m)], 0.1 + rng.uniform()});
    }

    // Listener rows over the union (size inferred by make_game ordering:
    // single-symbol messages sort like the pool). Build rows for the union
    // after computing it the same way make_game does.
    std::vector<std::string> union_msgs;
    for (const auto& plist : proposals)
        for (const auto& [text, prob] : plist) union_msgs.push_back(text);
    std::sort(union_msgs.begin(), union_msgs.end());
    union_msgs.erase(std::unique(union_msgs.begin(), union_msgs.end()), union_msgs.end());

    std::vector<std::vector<double>> l0_rows(union_msgs.size());
    for (auto& row : l0_rows)
        for (int c = 0; c < n_candidates; ++c) row.push_back(0.05 + rng.uniform());

    const int target = rng.uniform_int(n_candidates);
    return make_game(proposals, l0_rows, target);
}

// ---------------------------------------------------------------------------
// Brute-force pure Nash oracle: full unilateral-deviation check over a cached
// payoff matrix.
inline emprag::gametheory::EquilibriumSet nash_oracle(const emprag::gametheory::PayoffTable& t) {
    const std::size_t S = t.n_speaker, L = t.n_listener;
    std::vector<std::pair<double, double>> pay(S * L);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t l = 0; l < L; ++l) pay[s * L + l] = t.pay(s, l);

    emprag::gametheory::EquilibriumSet out;
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t l = 0; l < L; ++l) {
            const auto [ps, pl] = pay[s * L + l];
            bool nash = true;
            for (std::size_t s2 = 0; s2 < S && nash; ++s2)
                if (pay[s2 * L + l].first > ps) nash = false;
            for (std::size_t l2 = 0; l2 < L && nash; ++l2)
                if (pay[s * L + l2].second > pl) nash = false;
            if (nash) out.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(l)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dense-matrix recursion oracle. S and L are [message][candidate]; a round is
// one speaker update then one listener update, straight from the definitions:
//   S_{k+1}(m|c) ∝ [L_k(c|m) S_0(m|c)]^alpha   (alpha=inf: argmax, lowest m)
//   L_{k+1}(c|m) ∝ S_{k+1}(m|c)^beta           (beta=inf: argmax, lowest c)
// Unnormalizable rows/columns become uniform over their support.
struct OracleState {
    std::vector<std::vector<double>> S, L;
};

inline OracleState oracle_init(const emprag::pragmatics::StageGame& g) {
    OracleState st;
    st.S.assign(static_cast<std::size_t>(g.n_messages),
                std::vector<double>(static_cast<std::size_t>(g.n_candidates), 0.0));
    st.L = st.S;
    for (int m = 0; m < g.n_messages; ++m)
        for (int c = 0; c < g.n_candidates; ++c) {
            st.S[m][c] = g.s0_at(m, c);
            st.L[m][c] = g.l0_at(m, c);
        }
    return st;
}

inline void oracle_round(const emprag::pragmatics::StageGame& g, OracleState& st, bool one_hot) {
    const int M = g.n_messages, C = g.n_candidates;
    std::vector<std::vector<double>> S_next(st.S.size(),
                                            std::vector<double>(static_cast<std::size_t>(C), 0.0));
    for (int c = 0; c < C; ++c) {
        std::vector<double> base(static_cast<std::size_t>(M), 0.0);
        double total = 0.0;
        for (int m = 0; m < M; ++m) {
            if (g.s0_at(m, c) <= 0.0) continue;
            base[m] = st.L[m][c] * g.s0_at(m, c);
            total += base[m];
        }
        if (one_hot) {
            int best = -1;
            for (int m = 0; m < M; ++m) {
                if (g.s0_at(m, c) <= 0.0) continue;
                if (best < 0 || base[m] > base[best]) best = m;
            }
            S_next[static_cast<std::size_t>(best)][c] = 1.0;
        } else if (total > 0.0) {
            for (int m = 0; m < M; ++m) S_next[m][c] = base[m] / total;
        } else {
            int support = 0;
            for (int m = 0; m < M; ++m)
                if (g.s0_at(m, c) > 0.0) ++support;
            for (int m = 0; m < M; ++m)
                if (g.s0_at(m, c) > 0.0) S_next[m][c] = 1.0 / support;
        }
    }
    st.S = S_next;

    for (int m = 0; m < M; ++m) {
        if (one_hot) {
            int best = 0;
            for (int c = 1; c < C; ++c)
                if (st.S[m][c] > st.S[m][best]) best = c;
            for (int c = 0; c < C; ++c) st.L[m][c] = c == best ? 1.0 : 0.0;
        } else {
            double total = 0.0;
            for (int c = 0; c < C; ++c) total += st.S[m][c];
            for (int c = 0; c < C; ++c)
                st.L[m][c] = total > 0.0 ? st.S[m][c] / total : 1.0 / C;
        }
    }
}

// (message, choice) the plays should produce from an oracle state.
inline std::pair<int, int> oracle_outcome(const emprag::pragmatics::StageGame& g,
                                          const OracleState& st) {
    int best_m = 0;
    for (int m = 1; m < g.n_messages; ++m)
        if (st.S[m][g.target] > st.S[best_m][g.target]) best_m = m;
    int best_c = 0;
    for (int c = 1; c < g.n_candidates; ++c)
        if (st.L[best_m][c] > st.L[best_m][best_c]) best_c = c;
    return {best_m, best_c};
}

inline double oracle_diff(const OracleState& a, const OracleState& b) {
    double d = 0.0;
    for (std::size_t m = 0; m < a.S.size(); ++m)
        for (std::size_t c = 0; c < a.S[m].size(); ++c) {
            d = std::max(d, std::abs(a.S[m][c] - b.S[m][c]));
            d = std::max(d, std::abs(a.L[m][c] - b.L[m][c]));
        }
    return d;
}

} // namespace testutil
