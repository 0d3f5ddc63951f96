#include "emprag/gametheory.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "emprag/error.hpp"

namespace emprag::gametheory {

std::vector<int> PayoffTable::speaker_strategy(std::size_t index) const {
    std::vector<int> out(n_candidates);
    for (int c = n_candidates - 1; c >= 0; --c) {
        const auto& set = proposal_sets[c];
        out[c] = set[index % set.size()];
        index /= set.size();
    }
    return out;
}

std::vector<int> PayoffTable::listener_strategy(std::size_t index) const {
    std::vector<int> out(n_messages);
    for (int m = n_messages - 1; m >= 0; --m) {
        out[m] = static_cast<int>(index % n_candidates);
        index /= static_cast<std::size_t>(n_candidates);
    }
    return out;
}

bool PayoffTable::match_at(std::size_t s_index, std::size_t l_index) const {
    if (!match_bits.empty()) return match_bits[s_index * n_listener + l_index] != 0;
    return match(speaker_strategy(s_index), listener_strategy(l_index));
}

std::pair<double, double> PayoffTable::pay(std::size_t s_index, std::size_t l_index) const {
    if (!match_at(s_index, l_index)) return {0.0, 0.0};
    return {pay_s[s_index], pay_l[l_index]};
}

bool match(const std::vector<int>& speaker, const std::vector<int>& listener) {
    for (std::size_t i = 0; i < speaker.size(); ++i)
        if (listener[speaker[i]] != static_cast<int>(i)) return false;
    return true;
}

std::pair<double, double> psych_payoffs(const std::vector<int>& speaker,
                                        const std::vector<int>& listener,
                                        const pragmatics::StageGame& game) {
    if (!match(speaker, listener)) return {0.0, 0.0};
    double ps = 1.0;
    for (int c = 0; c < game.n_candidates; ++c) ps *= game.s0_at(speaker[c], c);
    double pl = 1.0;
    for (int m = 0; m < game.n_messages; ++m) pl *= game.l0_at(m, listener[m]);
    return {ps, pl};
}

namespace {

// Strategy-space sizes, or nullopt when the bounds are exceeded.
struct TableDims {
    std::size_t n_speaker = 1;
    std::size_t n_listener = 1;
};

std::optional<TableDims> checked_dims(const pragmatics::StageGame& game, const TableBounds& bounds) {
    if (game.n_messages > bounds.max_union || game.n_candidates > bounds.max_candidates)
        return std::nullopt;
    TableDims dims;
    for (const auto& ps : game.proposals) dims.n_speaker *= ps.entries.size();
    for (int m = 0; m < game.n_messages; ++m) dims.n_listener *= static_cast<std::size_t>(game.n_candidates);
    if (dims.n_speaker > bounds.max_cells || dims.n_listener > bounds.max_cells ||
        dims.n_speaker * dims.n_listener > bounds.max_cells)
        return std::nullopt;
    return dims;
}

// Copies the parts of the stage game every branch needs, including fallbacks.
PayoffTable table_stub(const pragmatics::StageGame& game) {
    PayoffTable t;
    t.n_messages = game.n_messages;
    t.n_candidates = game.n_candidates;
    t.messages = game.messages;
    t.s0 = game.s0;
    t.l0 = game.l0;
    return t;
}

} // namespace

PayoffTable build_payoff_table(const pragmatics::StageGame& game, const TableBounds& bounds) {
    auto dims = checked_dims(game, bounds);
    if (!dims)
        throw Error(errc::capacity, "build_payoff_table: strategy spaces exceed the configured bounds");

    PayoffTable t = table_stub(game);
    t.proposal_sets.resize(game.n_candidates);
    for (int c = 0; c < game.n_candidates; ++c) {
        for (const auto& e : game.proposals[c].entries)
            t.proposal_sets[c].push_back(game.message_index(e.message));
        std::sort(t.proposal_sets[c].begin(), t.proposal_sets[c].end());
    }
    t.n_speaker = dims->n_speaker;
    t.n_listener = dims->n_listener;

    t.pay_s.resize(t.n_speaker);
    for (std::size_t s = 0; s < t.n_speaker; ++s) {
        auto strat = t.speaker_strategy(s);
        double p = 1.0;
        for (int c = 0; c < t.n_candidates; ++c) p *= t.s0_at(strat[c], c);
        t.pay_s[s] = p;
    }
    t.pay_l.resize(t.n_listener);
    for (std::size_t l = 0; l < t.n_listener; ++l) {
        auto strat = t.listener_strategy(l);
        double p = 1.0;
        for (int m = 0; m < t.n_messages; ++m) p *= t.l0_at(m, strat[m]);
        t.pay_l[l] = p;
    }
    return t;
}

EquilibriumSet enumerate_nash(const PayoffTable& table) {
    const std::size_t S = table.n_speaker;
    const std::size_t L = table.n_listener;
    std::vector<double> colmax(L, 0.0); // best speaker payoff against each listener strategy
    std::vector<double> rowmax(S, 0.0); // best listener payoff against each speaker strategy
    std::vector<std::uint8_t> matched(S * L, 0);

    if (!table.match_bits.empty()) {
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t l = 0; l < L; ++l) {
                if (!table.match_bits[s * L + l]) continue;
                matched[s * L + l] = 1;
                colmax[l] = std::max(colmax[l], table.pay_s[s]);
                rowmax[s] = std::max(rowmax[s], table.pay_l[l]);
            }
        }
    } else {
        // Flat copies of all speaker strategies; listener strategies are
        // decoded once per outer iteration.
        const int C = table.n_candidates;
        std::vector<int> s_digits(S * C);
        for (std::size_t s = 0; s < S; ++s) {
            auto strat = table.speaker_strategy(s);
            std::copy(strat.begin(), strat.end(), s_digits.begin() + static_cast<std::ptrdiff_t>(s * C));
        }
        for (std::size_t l = 0; l < L; ++l) {
            auto lstrat = table.listener_strategy(l);
            for (std::size_t s = 0; s < S; ++s) {
                const int* sd = s_digits.data() + s * C;
                bool ok = true;
                for (int i = 0; i < C; ++i) {
                    if (lstrat[sd[i]] != i) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                matched[s * L + l] = 1;
                colmax[l] = std::max(colmax[l], table.pay_s[s]);
                rowmax[s] = std::max(rowmax[s], table.pay_l[l]);
            }
        }
    }

    EquilibriumSet eq;
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t l = 0; l < L; ++l) {
            bool nash;
            if (matched[s * L + l])
                nash = table.pay_s[s] == colmax[l] && table.pay_l[l] == rowmax[s];
            else
                nash = colmax[l] == 0.0 && rowmax[s] == 0.0;
            if (nash) eq.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(l)});
        }
    }
    return eq;
}

std::optional<Equilibrium> pareto_select(const EquilibriumSet& eq, const PayoffTable& table) {
    if (eq.empty()) return std::nullopt;
    std::vector<std::pair<double, double>> pts(eq.size());
    double max_s = 0.0, max_l = 0.0;
    for (std::size_t i = 0; i < eq.size(); ++i) {
        pts[i] = table.pay(eq[i].s, eq[i].l);
        max_s = std::max(max_s, pts[i].first);
        max_l = std::max(max_l, pts[i].second);
    }
    // A dominator must sit at (max_s, max_l); it is selectable only when it is
    // the single equilibrium there, otherwise the agents cannot coordinate.
    std::size_t found = eq.size();
    int count = 0;
    for (std::size_t i = 0; i < eq.size(); ++i) {
        if (pts[i].first == max_s && pts[i].second == max_l) {
            found = i;
            if (++count > 1) return std::nullopt;
        }
    }
    if (count != 1) return std::nullopt;
    return eq[found];
}

std::vector<int> sequential_map(const EquilibriumSet& eq, const PayoffTable& table) {
    constexpr int kAmbiguous = -2;
    std::vector<int> assign(table.n_messages, -1);
    std::vector<std::uint8_t> seen(table.n_speaker, 0);
    for (const auto& e : eq) {
        if (seen[e.s]) continue; // the map depends only on the speaker strategies in E
        seen[e.s] = 1;
        auto strat = table.speaker_strategy(e.s);
        for (int c = 0; c < table.n_candidates; ++c) {
            int m = strat[c];
            if (assign[m] == -1)
                assign[m] = c;
            else if (assign[m] != c)
                assign[m] = kAmbiguous;
        }
    }
    for (int& a : assign)
        if (a == kAmbiguous) a = -1;
    return assign;
}

std::optional<policy::Message> sequential_refine(const EquilibriumSet& eq, const PayoffTable& table,
                                                 int target) {
    auto map = sequential_map(eq, table);
    for (int m = 0; m < table.n_messages; ++m)
        if (map[m] == target) return table.messages[m];
    return std::nullopt;
}

Resolution resolve_table(const pragmatics::StageGame& game, bool sequential,
                         const TableBounds& bounds) {
    Resolution res;
    if (!checked_dims(game, bounds)) {
        res.guard_tripped = true;
        res.table = table_stub(game);
        res.branch = kBranchRandom;
        return res;
    }
    res.table = build_payoff_table(game, bounds);
    res.eq = enumerate_nash(res.table);
    if (res.eq.empty()) {
        res.branch = kBranchRandomEmpty;
        return res;
    }
    if (res.eq.size() == 1) {
        res.branch = kBranchUnique;
        res.chosen = res.eq[0];
        return res;
    }
    res.chosen = pareto_select(res.eq, res.table);
    if (res.chosen) {
        res.branch = kBranchPareto;
        return res;
    }
    if (sequential) {
        res.seq_map = sequential_map(res.eq, res.table);
        if (std::any_of(res.seq_map.begin(), res.seq_map.end(), [](int a) { return a >= 0; })) {
            res.branch = kBranchSequential;
            return res;
        }
    }
    res.branch = kBranchRandom;
    return res;
}

namespace {

int random_message(const PayoffTable& table, int target, Rng& rng) {
    std::vector<double> col(table.n_messages);
    for (int m = 0; m < table.n_messages; ++m) col[m] = table.s0_at(m, target);
    return rng.categorical(col);
}

int random_choice(const PayoffTable& table, int message_index, Rng& rng) {
    std::vector<double> row(table.n_candidates);
    for (int c = 0; c < table.n_candidates; ++c) row[c] = table.l0_at(message_index, c);
    return rng.categorical(row);
}

} // namespace

int resolved_message(const Resolution& res, int target, Rng& rng) {
    switch (res.branch) {
        case kBranchUnique:
        case kBranchPareto:
            return res.table.speaker_strategy(res.chosen->s)[target];
        case kBranchSequential:
            for (int m = 0; m < res.table.n_messages; ++m)
                if (res.seq_map[m] == target) return m;
            return random_message(res.table, target, rng);
        default:
            return random_message(res.table, target, rng);
    }
}

int resolved_choice(const Resolution& res, int message_index, Rng& rng) {
    switch (res.branch) {
        case kBranchUnique:
        case kBranchPareto:
            return res.table.listener_strategy(res.chosen->l)[message_index];
        case kBranchSequential:
            if (res.seq_map[message_index] >= 0) return res.seq_map[message_index];
            return random_choice(res.table, message_index, rng);
        default:
            return random_choice(res.table, message_index, rng);
    }
}

pragmatics::Outcome gametable_play(const pragmatics::StageGame& game, bool sequential, Rng& rng,
                                   const TableBounds& bounds) {
    Resolution res = resolve_table(game, sequential, bounds);
    int m = resolved_message(res, game.target, rng);
    int c = resolved_choice(res, m, rng);
    pragmatics::OutcomeFlags flags;
    flags.guard_fallback = res.guard_tripped;
    flags.gt_branch = res.branch;
    return pragmatics::finish_outcome(game, m, c, flags);
}

std::string render_table(const PayoffTable& table, const EquilibriumSet& eq) {
    std::ostringstream os;
    os << table.n_speaker << " speaker x " << table.n_listener << " listener strategies, "
       << table.n_messages << " messages, " << table.n_candidates << " candidates\n";
    char buf[64];
    for (std::size_t s = 0; s < table.n_speaker; ++s) {
        os << "s" << s << " [";
        auto strat = table.speaker_strategy(s);
        for (int c = 0; c < table.n_candidates; ++c)
            os << (c ? "," : "") << policy::to_string(table.messages[strat[c]]);
        os << "]";
        for (std::size_t l = 0; l < table.n_listener; ++l) {
            auto p = table.pay(s, l);
            if (p.first == 0.0 && p.second == 0.0) {
                os << "  -";
            } else {
                std::snprintf(buf, sizeof buf, "  (%.4g,%.4g)", p.first, p.second);
                os << buf;
            }
        }
        os << "\n";
    }
    os << "nash:";
    for (const auto& e : eq) os << " (" << e.s << "," << e.l << ")";
    os << "\n";
    return os.str();
}

} // namespace emprag::gametheory
