#include "emprag/pragmatics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "emprag/error.hpp"

namespace emprag::pragmatics {

namespace {

// Lowest index attaining the maximum.
int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

int StageGame::message_index(const policy::Message& m) const {
    auto it = std::lower_bound(messages.begin(), messages.end(), m);
    if (it == messages.end() || !(*it == m)) return -1;
    return static_cast<int>(it - messages.begin());
}

StageGame build_stage_game(const world::GameInstance& instance, const policy::SpeakerPolicy& sp,
                           const policy::ListenerPolicy& lp, const StageConfig& cfg) {
    StageGame game;
    game.instance = instance;
    game.n_candidates = instance.n_candidates();
    game.target = instance.target_index;

    for (int c = 0; c < game.n_candidates; ++c)
        game.proposals.push_back(
            policy::proposal_set(sp, instance.speaker_views[c], cfg.mass_threshold, cfg.max_size));

    std::set<policy::Message> unioned;
    for (const auto& ps : game.proposals)
        for (const auto& e : ps.entries) unioned.insert(e.message);
    game.messages.assign(unioned.begin(), unioned.end());
    game.n_messages = static_cast<int>(game.messages.size());

    const std::size_t cells = static_cast<std::size_t>(game.n_messages) * game.n_candidates;
    game.s0.assign(cells, 0.0);
    game.s0_raw.assign(cells, 0.0);
    game.l0.assign(cells, 0.0);

    for (int m = 0; m < game.n_messages; ++m) {
        for (int c = 0; c < game.n_candidates; ++c) {
            game.s0_raw[static_cast<std::size_t>(m) * game.n_candidates + c] =
                policy::speaker_prob(sp, instance.speaker_views[c], game.messages[m]);
        }
        auto lrow = policy::listener_prob(lp, game.messages[m], instance.listener_views);
        for (int c = 0; c < game.n_candidates; ++c)
            game.l0[static_cast<std::size_t>(m) * game.n_candidates + c] = lrow[c];
    }
    for (int c = 0; c < game.n_candidates; ++c) {
        for (const auto& e : game.proposals[c].entries) {
            int m = game.message_index(e.message);
            game.s0[static_cast<std::size_t>(m) * game.n_candidates + c] =
                e.prob / game.proposals[c].mass;
        }
    }
    return game;
}

Outcome finish_outcome(const StageGame& game, int message_index, int choice, OutcomeFlags flags) {
    Outcome out;
    out.message = game.messages[message_index];
    out.choice = choice;
    out.success = (choice == game.target);
    out.sp = game.raw_at(message_index, game.target);
    out.lp = game.l0_at(message_index, choice);
    out.flags = flags;
    return out;
}

int baseline_message(const StageGame& game) {
    std::vector<double> col(game.n_messages);
    for (int m = 0; m < game.n_messages; ++m) col[m] = game.s0_at(m, game.target);
    return argmax(col);
}

int baseline_choice(const StageGame& game, int message_index) {
    std::vector<double> row(game.n_candidates);
    for (int c = 0; c < game.n_candidates; ++c) row[c] = game.l0_at(message_index, c);
    return argmax(row);
}

Outcome baseline_play(const StageGame& game) {
    int m = baseline_message(game);
    return finish_outcome(game, m, baseline_choice(game, m));
}

int sample_l_message(const StageGame& game, double lambda) {
    if (lambda < 0.0 || lambda > 1.0)
        throw Error(errc::bad_argument, "sample_l: lambda must be in [0, 1]");
    int best = -1;
    double best_score = -1.0;
    for (int m = 0; m < game.n_messages; ++m) {
        if (game.s0_at(m, game.target) <= 0.0) continue; // outside the target's proposals
        double score = std::pow(game.raw_at(m, game.target), lambda) *
                       std::pow(game.l0_at(m, game.target), 1.0 - lambda);
        if (score > best_score) {
            best_score = score;
            best = m;
        }
    }
    return best;
}

int sample_l_choice(const StageGame& game, int message_index, Rng& listener_rng) {
    std::vector<double> row(game.n_candidates);
    for (int c = 0; c < game.n_candidates; ++c) row[c] = game.l0_at(message_index, c);
    return listener_rng.categorical(row);
}

Outcome sample_l(const StageGame& game, double lambda, Rng& listener_rng) {
    int m = sample_l_message(game, lambda);
    return finish_outcome(game, m, sample_l_choice(game, m, listener_rng));
}

int argmax_l_message(const StageGame& game) {
    int best = -1;
    double best_prior = -1.0;
    for (int m = 0; m < game.n_messages; ++m) {
        if (game.s0_at(m, game.target) <= 0.0) continue;
        if (baseline_choice(game, m) != game.target) continue;
        double prior = game.raw_at(m, game.target);
        if (prior > best_prior) {
            best_prior = prior;
            best = m;
        }
    }
    return best >= 0 ? best : baseline_message(game);
}

Outcome argmax_l(const StageGame& game) {
    int m = argmax_l_message(game);
    return finish_outcome(game, m, baseline_choice(game, m));
}

namespace {

struct IterState {
    std::vector<double> speaker;  // [m][c]
    std::vector<double> listener; // [m][c]
};

// One alternating round. Speaker base is L_k(t|m) * S0(m|t): the reciprocal
// prior cost cancels into a multiplication by the prior. P(t) is uniform and
// cancels in the listener normalization.
void update_round(const StageGame& game, double alpha, double beta, IterState& st,
                  bool& uniform_fallback) {
    const int M = game.n_messages;
    const int C = game.n_candidates;
    auto at = [C](std::vector<double>& v, int m, int c) -> double& {
        return v[static_cast<std::size_t>(m) * C + c];
    };

    std::vector<double> next_speaker(st.speaker.size(), 0.0);
    for (int c = 0; c < C; ++c) {
        std::vector<double> base(M);
        for (int m = 0; m < M; ++m) base[m] = at(st.listener, m, c) * game.s0_at(m, c);
        if (std::isinf(alpha)) {
            int best = -1;
            double best_v = -1.0;
            for (int m = 0; m < M; ++m) {
                if (game.s0_at(m, c) <= 0.0) continue;
                if (base[m] > best_v) {
                    best_v = base[m];
                    best = m;
                }
            }
            next_speaker[static_cast<std::size_t>(best) * C + c] = 1.0;
        } else {
            double z = 0.0;
            for (int m = 0; m < M; ++m) {
                base[m] = base[m] > 0.0 ? std::pow(base[m], alpha) : 0.0;
                z += base[m];
            }
            if (z > 0.0) {
                for (int m = 0; m < M; ++m) next_speaker[static_cast<std::size_t>(m) * C + c] = base[m] / z;
            } else {
                uniform_fallback = true;
                int support = 0;
                for (int m = 0; m < M; ++m)
                    if (game.s0_at(m, c) > 0.0) ++support;
                for (int m = 0; m < M; ++m)
                    if (game.s0_at(m, c) > 0.0)
                        next_speaker[static_cast<std::size_t>(m) * C + c] = 1.0 / support;
            }
        }
    }
    st.speaker = std::move(next_speaker);

    std::vector<double> next_listener(st.listener.size(), 0.0);
    for (int m = 0; m < M; ++m) {
        std::vector<double> base(C);
        for (int c = 0; c < C; ++c) base[c] = at(st.speaker, m, c);
        if (std::isinf(beta)) {
            int best = argmax(base);
            next_listener[static_cast<std::size_t>(m) * C + best] = 1.0;
        } else {
            double z = 0.0;
            for (int c = 0; c < C; ++c) {
                base[c] = base[c] > 0.0 ? std::pow(base[c], beta) : 0.0;
                z += base[c];
            }
            if (z > 0.0) {
                for (int c = 0; c < C; ++c) next_listener[static_cast<std::size_t>(m) * C + c] = base[c] / z;
            } else {
                uniform_fallback = true;
                for (int c = 0; c < C; ++c)
                    next_listener[static_cast<std::size_t>(m) * C + c] = 1.0 / C;
            }
        }
    }
    st.listener = std::move(next_listener);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

StrategyPair iterate(const StageGame& game, double alpha, double beta, Rounds rounds) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw Error(errc::bad_argument, "recursive_update: alpha and beta must be positive");
    const bool one_hot = std::isinf(alpha) && std::isinf(beta);

    IterState st{game.s0, game.l0};
    StrategyPair out;
    out.converged = false;

    auto same = [](const IterState& a, const IterState& b) {
        return a.speaker == b.speaker && a.listener == b.listener;
    };

    if (rounds.to_convergence) {
        std::vector<IterState> history; // visited one-hot pairs, for cycle detection
        if (one_hot) history.push_back(st);
        for (int round = 0; round < kIterationCap; ++round) {
            IterState prev = st;
            update_round(game, alpha, beta, st, out.uniform_fallback);
            out.depth = round + 1;
            if (one_hot) {
                if (same(st, prev)) {
                    out.converged = true;
                    break;
                }
                for (const IterState& h : history) {
                    if (same(st, h)) {
                        out.cycled = true;
                        break;
                    }
                }
                if (out.cycled) break; // st is the first recurring pair
                history.push_back(st);
            } else {
                if (max_abs_diff(st.speaker, prev.speaker) < kConvergenceTol &&
                    max_abs_diff(st.listener, prev.listener) < kConvergenceTol) {
                    // The tol bound certifies prev: one update moves it by < tol.
                    // st = F(prev) has no such certificate; near poorly conditioned
                    // normalizers its own residual can be orders of magnitude larger.
                    st = std::move(prev);
                    out.depth = round;
                    out.converged = true;
                    break;
                }
            }
        }
    } else {
        for (int round = 0; round < rounds.depth; ++round) {
            IterState prev = st;
            update_round(game, alpha, beta, st, out.uniform_fallback);
            out.depth = round + 1;
            // A one-hot fixed point never moves again, so later rounds are no-ops.
            if (one_hot && same(st, prev)) {
                out.converged = true;
                break;
            }
        }
    }
    out.speaker = std::move(st.speaker);
    out.listener = std::move(st.listener);
    return out;
}

} // namespace

StrategyPair recursive_update(const StageGame& game, double alpha, double beta, int k) {
    if (k < 0) throw Error(errc::bad_argument, "recursive_update: depth must be nonnegative");
    if (k == 0) {
        StrategyPair out;
        out.speaker = game.s0;
        out.listener = game.l0;
        out.depth = 0;
        return out;
    }
    return iterate(game, alpha, beta, Rounds::fixed(k));
}

StrategyPair run_recursion(const StageGame& game, RecursionKind kind, Rounds rounds) {
    const double inf = std::numeric_limits<double>::infinity();
    const double alpha = (kind == RecursionKind::ibr) ? inf : 1.0;
    const double beta = (kind == RecursionKind::ibr) ? inf : 1.0;
    if (!rounds.to_convergence && rounds.depth == 0) return recursive_update(game, alpha, beta, 0);
    return iterate(game, alpha, beta, rounds);
}

int recursion_message(const StageGame& game, const StrategyPair& pair) {
    std::vector<double> col(game.n_messages);
    for (int m = 0; m < game.n_messages; ++m)
        col[m] = pair.speaker[static_cast<std::size_t>(m) * game.n_candidates + game.target];
    return argmax(col);
}

int recursion_choice(const StageGame& game, const StrategyPair& pair, int message_index) {
    std::vector<double> row(game.n_candidates);
    for (int c = 0; c < game.n_candidates; ++c)
        row[c] = pair.listener[static_cast<std::size_t>(message_index) * game.n_candidates + c];
    return argmax(row);
}

namespace {

Outcome play_recursion(const StageGame& game, RecursionKind kind, Rounds rounds) {
    StrategyPair pair = run_recursion(game, kind, rounds);
    int m = recursion_message(game, pair);
    int c = recursion_choice(game, pair, m);
    OutcomeFlags flags;
    flags.converged = rounds.to_convergence ? pair.converged : true;
    flags.cycled = pair.cycled;
    flags.uniform_fallback = pair.uniform_fallback;
    return finish_outcome(game, m, c, flags);
}

} // namespace

Outcome rsa_play(const StageGame& game, Rounds rounds) {
    return play_recursion(game, RecursionKind::rsa, rounds);
}

Outcome ibr_play(const StageGame& game, Rounds rounds) {
    return play_recursion(game, RecursionKind::ibr, rounds);
}

} // namespace emprag::pragmatics
