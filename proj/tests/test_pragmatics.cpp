#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "emprag/error.hpp"
#include "emprag/pragmatics.hpp"
#include "helpers.hpp"

using namespace emprag;
using namespace testutil;
using pragmatics::Rounds;

namespace {

// Speaker whose message depends one-hot on which coordinate of a 2-d view is
// lit: view e0 -> "a", view e1 -> "b".
policy::SpeakerPolicy discriminating_speaker() {
    policy::SpeakerPolicy sp;
    sp.alphabet = 2;
    sp.max_len = 1;
    sp.dim = 2;
    sp.temperature = 1.0;
    sp.weights.assign(2 * 2, 0.0);
    sp.row(0, 0)[0] = 50.0;
    sp.row(0, 1)[1] = 50.0;
    return sp;
}

world::GameInstance two_view_instance(int target) {
    world::GameInstance inst;
    inst.candidates.resize(2);
    inst.target_index = target;
    world::FeatureView e0, e1;
    e0.values = {1.0, 0.0};
    e1.values = {0.0, 1.0};
    inst.speaker_views = {e0, e1};
    inst.listener_views = {e0, e1};
    return inst;
}

} // namespace

TEST_CASE("build_stage_game: discriminating speaker gives a 0/1 prior over 2 messages") {
    auto sp = discriminating_speaker();
    policy::ListenerPolicy lp;
    lp.alphabet = 2;
    lp.max_len = 1;
    lp.dim = 2;
    lp.embeddings = {3.0, 0.0, 0.0, 3.0}; // symbol a decodes to e0 direction, b to e1

    auto game = pragmatics::build_stage_game(two_view_instance(0), sp, lp);
    REQUIRE(game.n_messages == 2);
    REQUIRE(game.n_candidates == 2);
    CHECK(game.s0_at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(game.s0_at(0, 1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(game.s0_at(1, 1) == doctest::Approx(1.0).epsilon(1e-9));

    // L0 rows match a direct softmax recomputation.
    const double z = std::exp(3.0) + std::exp(0.0);
    CHECK(game.l0_at(0, 0) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-9));
    CHECK(game.l0_at(1, 0) == doctest::Approx(std::exp(0.0) / z).epsilon(1e-9));

    // Columns of S0 and rows of L0 are stochastic.
    for (int c = 0; c < 2; ++c)
        CHECK(game.s0_at(0, c) + game.s0_at(1, c) == doctest::Approx(1.0).epsilon(1e-9));
    for (int m = 0; m < 2; ++m)
        CHECK(game.l0_at(m, 0) + game.l0_at(m, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("build_stage_game: shared dominant message collapses the union to one") {
    policy::SpeakerPolicy sp;
    sp.alphabet = 2;
    sp.max_len = 1;
    sp.dim = 2;
    sp.temperature = 1.0;
    sp.weights.assign(2 * 2, 0.0);
    sp.row(0, 0)[0] = 50.0;
    sp.row(0, 0)[1] = 50.0; // symbol a wins for both views
    policy::ListenerPolicy lp;
    lp.alphabet = 2;
    lp.max_len = 1;
    lp.dim = 2;
    lp.embeddings.assign(4, 0.0);

    auto game = pragmatics::build_stage_game(two_view_instance(0), sp, lp);
    CHECK(game.n_messages == 1);
}

TEST_CASE("baseline_play: direct argmax and tie rules") {
    auto game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}},
                          {{0.7, 0.3}, {0.5, 0.5}}, 0);
    auto out = pragmatics::baseline_play(game);
    CHECK(out.message == msg("a"));
    CHECK(out.choice == 0);
    CHECK(out.success);
    CHECK(out.sp == doctest::Approx(0.8));
    CHECK(out.lp == doctest::Approx(0.7));

    // Uniform listener rows -> first candidate by the tie rule.
    auto tie_game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}}, {}, 1);
    auto tied = pragmatics::baseline_play(tie_game);
    CHECK(tied.message == msg("b"));
    CHECK(tied.choice == 0);
    CHECK(!tied.success);
}

TEST_CASE("sample_l: hand blend example and the lambda limits") {
    // S0 target column (.8, .2); L0(target|m1)=.4, L0(target|m2)=.9.
    auto game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.5}, {"b", 0.5}}},
                          {{0.4, 0.6}, {0.9, 0.1}}, 0);
    Rng rng(31);
    auto out = pragmatics::sample_l(game, 0.5, rng);
    CHECK(out.message == msg("a")); // sqrt(.32) > sqrt(.18)
    CHECK((out.choice == 0 || out.choice == 1));

    // lambda=1 reduces to the baseline message.
    auto base = pragmatics::baseline_play(game);
    auto l1 = pragmatics::sample_l(game, 1.0, rng);
    CHECK(l1.message == base.message);

    // lambda=0 maximizes L0(target|m) over the target's proposals -> m2.
    auto l0 = pragmatics::sample_l(game, 0.0, rng);
    CHECK(l0.message == msg("b"));

    CHECK_THROWS_AS((void)pragmatics::sample_l(game, -0.1, rng), Error);
    CHECK_THROWS_AS((void)pragmatics::sample_l(game, 1.1, rng), Error);
}

TEST_CASE("sample_l listener samples from the L0 row") {
    auto game = make_game({{{"a", 1.0}}, {{"a", 1.0}}}, {{0.25, 0.75}}, 0);
    Rng rng(32);
    int first = 0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i)
        if (pragmatics::sample_l(game, 0.5, rng).choice == 0) ++first;
    CHECK(std::abs(first - n / 4) < 4 * std::sqrt(n * 0.25 * 0.75));
}

TEST_CASE("argmax_l: constrained argmax, success by construction, fallback") {
    // Only m2's listener argmax hits the target despite the lower prior.
    auto game = make_game({{{"a", 0.6}, {"b", 0.4}}, {{"a", 0.5}, {"b", 0.5}}},
                          {{0.3, 0.7}, {0.8, 0.2}}, 0);
    auto out = pragmatics::argmax_l(game);
    CHECK(out.message == msg("b"));
    CHECK(out.success);

    // No proposal satisfies the constraint -> identical to baseline_play.
    auto hopeless = make_game({{{"a", 0.6}, {"b", 0.4}}, {{"a", 0.5}, {"b", 0.5}}},
                              {{0.3, 0.7}, {0.2, 0.8}}, 0);
    auto fallback = pragmatics::argmax_l(hopeless);
    auto base = pragmatics::baseline_play(hopeless);
    CHECK(fallback.message == base.message);
    CHECK(fallback.choice == base.choice);
}

TEST_CASE("recursive_update: zero depth returns the priors unchanged") {
    auto game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}}, {}, 0);
    auto pair = pragmatics::recursive_update(game, 1.0, 1.0, 0);
    CHECK(pair.depth == 0);
    for (int m = 0; m < 2; ++m)
        for (int c = 0; c < 2; ++c) {
            CHECK(pair.speaker[static_cast<std::size_t>(m) * 2 + c] ==
                  doctest::Approx(game.s0_at(m, c)).epsilon(1e-12));
            CHECK(pair.listener[static_cast<std::size_t>(m) * 2 + c] ==
                  doctest::Approx(game.l0_at(m, c)).epsilon(1e-12));
        }
}

TEST_CASE("recursive_update: one-round hand example (alpha=beta=1)") {
    // S0 columns c1: (.8, .2), c2: (.3, .7); L0 uniform.
    auto game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}}, {}, 0);
    auto pair = pragmatics::recursive_update(game, 1.0, 1.0, 1);
    // Uniform L cancels: S1 = S0.
    CHECK(pair.speaker[0] == doctest::Approx(0.8).epsilon(1e-12)); // (m1|c1)
    CHECK(pair.speaker[2] == doctest::Approx(0.2).epsilon(1e-12)); // (m2|c1)
    // L1(c|m1) proportional to (.8, .3) -> (8/11, 3/11); L1(c|m2) -> (2/9, 7/9).
    CHECK(pair.listener[0] == doctest::Approx(8.0 / 11).epsilon(1e-12));
    CHECK(pair.listener[1] == doctest::Approx(3.0 / 11).epsilon(1e-12));
    CHECK(pair.listener[2] == doctest::Approx(2.0 / 9).epsilon(1e-12));
    CHECK(pair.listener[3] == doctest::Approx(7.0 / 9).epsilon(1e-12));
}

TEST_CASE("recursive_update: alpha=inf yields one-hot speaker columns") {
    auto game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}}, {}, 0);
    const double inf = std::numeric_limits<double>::infinity();
    auto pair = pragmatics::recursive_update(game, inf, 1.0, 1);
    CHECK(pair.speaker[0] == 1.0);
    CHECK(pair.speaker[2] == 0.0);
    CHECK(pair.speaker[1] == 0.0);
    CHECK(pair.speaker[3] == 1.0);
}

TEST_CASE("rsa_play: k=0 equals baseline, convergence solves the 2x2 game") {
    auto game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}}, {}, 0);
    auto base = pragmatics::baseline_play(game);
    auto k0 = pragmatics::rsa_play(game, Rounds::fixed(0));
    CHECK(k0.message == base.message);
    CHECK(k0.choice == base.choice);

    for (int target = 0; target < 2; ++target) {
        auto g = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}}, {}, target);
        auto out = pragmatics::rsa_play(g, Rounds::convergence());
        CHECK(out.flags.converged);
        CHECK(out.success); // m1 -> c1, m2 -> c2 at the fixed point
    }
}

TEST_CASE("rsa fixed point: one more oracle round moves < 1e-8 in max norm") {
    Rng rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        auto game = random_game(rng);
        auto pair = pragmatics::run_recursion(game, pragmatics::RecursionKind::rsa,
                                              Rounds::convergence());
        if (!pair.converged) continue;
        OracleState st;
        st.S.assign(static_cast<std::size_t>(game.n_messages),
                    std::vector<double>(static_cast<std::size_t>(game.n_candidates), 0.0));
        st.L = st.S;
        for (int m = 0; m < game.n_messages; ++m)
            for (int c = 0; c < game.n_candidates; ++c) {
                st.S[m][c] = pair.speaker[static_cast<std::size_t>(m) * game.n_candidates + c];
                st.L[m][c] = pair.listener[static_cast<std::size_t>(m) * game.n_candidates + c];
            }
        OracleState next = st;
        oracle_round(game, next, false);
        CHECK(oracle_diff(st, next) < 1e-8);
    }
}

TEST_CASE("rsa on a symmetric game preserves symmetry; tie goes to candidate 0") {
    auto game = make_game({{{"a", 0.6}, {"b", 0.4}}, {{"a", 0.6}, {"b", 0.4}}}, {}, 1);
    auto out = pragmatics::rsa_play(game, Rounds::convergence());
    CHECK(out.choice == 0);
    CHECK(!out.success);
}

TEST_CASE("ibr_play: hand best-response example reaches a fixed point") {
    // S1: c1 -> m1 (.4 vs .1), c2 -> m2 (.35 vs .15); L1: m1 -> c1, m2 -> c2.
    for (int target = 0; target < 2; ++target) {
        auto game = make_game({{{"a", 0.8}, {"b", 0.2}}, {{"a", 0.3}, {"b", 0.7}}}, {}, target);
        auto out = pragmatics::ibr_play(game, Rounds::convergence());
        CHECK(out.flags.converged);
        CHECK(!out.flags.cycled);
        CHECK(out.success);
        CHECK(out.message == (target == 0 ? msg("a") : msg("b")));
    }
}

TEST_CASE("ibr strategies are exactly one-hot") {
    Rng rng(34);
    for (int trial = 0; trial < 30; ++trial) {
        auto game = random_game(rng);
        auto pair =
            pragmatics::run_recursion(game, pragmatics::RecursionKind::ibr, Rounds::fixed(2));
        for (int c = 0; c < game.n_candidates; ++c) {
            double col = 0.0;
            for (int m = 0; m < game.n_messages; ++m) {
                const double v = pair.speaker[static_cast<std::size_t>(m) * game.n_candidates + c];
                CHECK((v == 0.0 || v == 1.0));
                col += v;
            }
            CHECK(col == 1.0);
        }
        for (int m = 0; m < game.n_messages; ++m) {
            double row = 0.0;
            for (int c = 0; c < game.n_candidates; ++c) {
                const double v = pair.listener[static_cast<std::size_t>(m) * game.n_candidates + c];
                CHECK((v == 0.0 || v == 1.0));
                row += v;
            }
            CHECK(row == 1.0);
        }
    }
}

TEST_CASE("ibr with identical candidates sends one message; listener tie -> first") {
    auto game = make_game({{{"a", 0.6}, {"b", 0.4}}, {{"a", 0.6}, {"b", 0.4}}}, {}, 1);
    auto out = pragmatics::ibr_play(game, Rounds::convergence());
    CHECK(out.choice == 0);
    CHECK(!out.success);
}

TEST_CASE("rsa/ibr outcomes match the dense-matrix oracle on random games") {
    Rng rng(35);
    for (int trial = 0; trial < 100; ++trial) {
        auto game = random_game(rng);
        for (int k = 0; k <= 3; ++k) {
            OracleState st = oracle_init(game);
            for (int round = 0; round < k; ++round) oracle_round(game, st, false);
            auto [om, oc] = oracle_outcome(game, st);
            auto out = pragmatics::rsa_play(game, Rounds::fixed(k));
            CHECK(out.message == game.messages[static_cast<std::size_t>(om)]);
            CHECK(out.choice == oc);

            OracleState ibr_st = oracle_init(game);
            for (int round = 0; round < k; ++round) oracle_round(game, ibr_st, true);
            auto [im, ic] = oracle_outcome(game, ibr_st);
            auto ibr_out = pragmatics::ibr_play(game, Rounds::fixed(k));
            CHECK(ibr_out.message == game.messages[static_cast<std::size_t>(im)]);
            CHECK(ibr_out.choice == ic);
        }
    }
}

TEST_CASE("ibr: depth 2 agrees with convergence on >= 95% of random games") {
    Rng rng(36);
    int agree = 0;
    const int n = 200;
    for (int trial = 0; trial < n; ++trial) {
        auto game = random_game(rng);
        auto d2 = pragmatics::ibr_play(game, Rounds::fixed(2));
        auto cv = pragmatics::ibr_play(game, Rounds::convergence());
        if (d2.message == cv.message && d2.choice == cv.choice) ++agree;
    }
    CHECK(agree >= n * 95 / 100);
}

TEST_CASE("positive rescaling of raw priors leaves argmax outcomes unchanged") {
    Rng rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        auto game = random_game(rng);
        // Scale every raw prior by 3 (the renormalized s0 is unchanged, raw changes).
        auto scaled = game;
        for (auto& v : scaled.s0_raw) v *= 3.0;
        for (auto& ps : scaled.proposals)
            for (auto& e : ps.entries) e.prob *= 3.0;

        auto b1 = pragmatics::baseline_play(game), b2 = pragmatics::baseline_play(scaled);
        CHECK(b1.message == b2.message);
        CHECK(b1.choice == b2.choice);
        auto a1 = pragmatics::argmax_l(game), a2 = pragmatics::argmax_l(scaled);
        CHECK(a1.message == a2.message);
        CHECK(a1.choice == a2.choice);
        auto i1 = pragmatics::ibr_play(game, Rounds::fixed(2));
        auto i2 = pragmatics::ibr_play(scaled, Rounds::fixed(2));
        CHECK(i1.message == i2.message);
        CHECK(i1.choice == i2.choice);
    }
}

TEST_CASE("sample_l(lambda=1) sends the baseline message on random games") {
    Rng rng(38);
    for (int trial = 0; trial < 50; ++trial) {
        auto game = random_game(rng);
        Rng lr(100 + static_cast<std::uint64_t>(trial));
        auto s = pragmatics::sample_l(game, 1.0, lr);
        auto b = pragmatics::baseline_play(game);
        CHECK(s.message == b.message);
    }
}

TEST_CASE("message_index finds union members and rejects strangers") {
    auto game = make_game({{{"a", 0.5}, {"c", 0.5}}, {{"b", 1.0}}});
    CHECK(game.message_index(msg("a")) == 0);
    CHECK(game.message_index(msg("b")) == 1);
    CHECK(game.message_index(msg("c")) == 2);
    CHECK(game.message_index(msg("d")) == -1);
}

TEST_CASE("finish_outcome pulls sp from raw priors and lp from L0") {
    auto game = make_game({{{"a", 0.6}, {"b", 0.2}}, {{"a", 0.5}, {"b", 0.5}}},
                          {{0.3, 0.7}, {0.8, 0.2}}, 0);
    auto out = pragmatics::finish_outcome(game, 1, 0);
    CHECK(out.message == msg("b"));
    CHECK(out.choice == 0);
    CHECK(out.success);
    CHECK(out.sp == doctest::Approx(0.2).epsilon(1e-12)); // raw, not renormalized
    CHECK(out.lp == doctest::Approx(0.8).epsilon(1e-12));
}
