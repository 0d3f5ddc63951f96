#include "emprag/emergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "emprag/error.hpp"

namespace emprag::emergence {

namespace {

constexpr std::uint64_t kStreamTrain = 1;
constexpr std::uint64_t kStreamDistill = 2;

double entropy_of(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

policy::Message greedy_message(const policy::SpeakerPolicy& sp, const world::FeatureView& x) {
    auto probs = policy::position_probs(sp, x);
    policy::Message m;
    m.symbols.reserve(probs.size());
    for (const auto& row : probs) {
        int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        m.symbols.push_back(static_cast<std::uint8_t>(best));
    }
    return m;
}

} // namespace

double entropy_coefficient_at(const TrainConfig& cfg, long long step) {
    const double ramp = cfg.entropy_fraction * static_cast<double>(cfg.n_steps);
    if (cfg.entropy_coefficient <= 0.0 || ramp <= 0.0 || static_cast<double>(step) >= ramp)
        return 0.0;
    return cfg.entropy_coefficient * (1.0 - static_cast<double>(step) / ramp);
}

StepResult reinforce_step(policy::SpeakerPolicy& sp, policy::ListenerPolicy& lp,
                          const world::GameInstance& instance, Rng& rng, const TrainConfig& cfg,
                          TrainState& state) {
    const world::FeatureView& x = instance.speaker_views[instance.target_index];
    const double baseline = state.reward.mean();
    const double coef = entropy_coefficient_at(cfg, state.step);
    const double lr = cfg.learning_rate;

    auto probs = policy::position_probs(sp, x);
    StepResult res;
    res.message.symbols.reserve(sp.max_len);
    for (int p = 0; p < sp.max_len; ++p)
        res.message.symbols.push_back(static_cast<std::uint8_t>(rng.categorical(probs[p])));

    auto q = policy::listener_prob(lp, res.message, instance.listener_views);
    res.choice = rng.categorical(q);
    res.reward = res.choice == instance.target_index ? 1.0 : 0.0;

    const double advantage = res.reward - baseline;

    // Speaker ascent: (R - b) grad log P(m|x) + coef grad H, per position.
    double speaker_entropy = 0.0;
    for (int p = 0; p < sp.max_len; ++p) {
        const double h = entropy_of(probs[p]);
        speaker_entropy += h;
        for (int a = 0; a < sp.alphabet; ++a) {
            const double pa = probs[p][a];
            double g = advantage * ((a == res.message.symbols[p] ? 1.0 : 0.0) - pa);
            if (coef > 0.0 && pa > 0.0) g += coef * (-pa * (std::log(pa) + h));
            if (g == 0.0) continue;
            double* w = sp.row(p, a);
            const double scale = lr * g / sp.temperature;
            for (int d = 0; d < sp.dim; ++d) w[d] += scale * x.values[d];
        }
    }

    // Listener ascent. Every position's row for the received symbol shares the
    // same score gradient, accumulated over candidates.
    const double hl = entropy_of(q);
    const int n = instance.n_candidates();
    std::vector<double> v(lp.dim, 0.0);
    for (int i = 0; i < n; ++i) {
        double g = advantage * ((i == res.choice ? 1.0 : 0.0) - q[i]);
        if (coef > 0.0 && q[i] > 0.0) g += coef * (-q[i] * (std::log(q[i]) + hl));
        if (g == 0.0) continue;
        const auto& z = instance.listener_views[i].values;
        for (int d = 0; d < lp.dim; ++d) v[d] += g * z[d];
    }
    for (int p = 0; p < lp.max_len; ++p) {
        double* e = lp.row(p, res.message.symbols[p]);
        for (int d = 0; d < lp.dim; ++d) e[d] += lr * v[d];
    }

    state.reward.push(res.reward);
    state.speaker_entropy.push(speaker_entropy);
    state.listener_entropy.push(hl);
    ++state.step;
    return res;
}

TrainResult train(const world::Dataset& dataset, const TrainConfig& cfg) {
    if (dataset.train_objects.empty())
        throw Error(errc::bad_argument, "train: empty training split");
    if (!(cfg.learning_rate > 0.0) && cfg.learning_rate != 0.0)
        throw Error(errc::bad_argument, "train: learning rate must be nonnegative");

    Rng rng(derive_stream(cfg.seed, {kStreamTrain}));
    TrainResult out{policy::make_speaker(cfg.policy, rng), policy::make_listener(cfg.policy, rng), {}};
    TrainState state(cfg);

    for (long long step = 1; step <= cfg.n_steps; ++step) {
        auto instance =
            world::sample_instance(dataset, world::Split::train, cfg.n_candidates, cfg.world, rng);
        reinforce_step(out.speaker, out.listener, instance, rng, cfg, state);
        if (step % cfg.checkpoint_every == 0 || step == cfg.n_steps) {
            if (!all_finite(out.speaker.weights) || !all_finite(out.listener.embeddings))
                throw Error(errc::diverged,
                            "train: non-finite parameters at step " + std::to_string(step));
            if (out.log.checkpoints.empty() || out.log.checkpoints.back().step != step)
                out.log.checkpoints.push_back({step, state.reward.mean(),
                                               state.speaker_entropy.mean(),
                                               state.listener_entropy.mean()});
        }
    }
    return out;
}

VirtualPair distill_virtual(const policy::SpeakerPolicy& target_speaker,
                            const policy::ListenerPolicy& target_listener,
                            const world::Dataset& dataset, long long n_rounds,
                            const DistillConfig& cfg) {
    Rng rng(derive_stream(cfg.seed, {kStreamDistill}));
    VirtualPair virt{policy::make_speaker(cfg.policy, rng), policy::make_listener(cfg.policy, rng)};
    const double lr = cfg.learning_rate;

    for (long long round = 0; round < n_rounds; ++round) {
        auto instance =
            world::sample_instance(dataset, world::Split::train, cfg.n_candidates, cfg.world, rng);
        const world::FeatureView& x = instance.speaker_views[instance.target_index];

        // Cross-entropy descent of the virtual speaker toward the target's
        // full per-position distributions.
        auto pt = policy::position_probs(target_speaker, x);
        auto qv = policy::position_probs(virt.speaker, x);
        for (int p = 0; p < virt.speaker.max_len; ++p) {
            for (int a = 0; a < virt.speaker.alphabet; ++a) {
                const double g = qv[p][a] - pt[p][a];
                if (g == 0.0) continue;
                double* w = virt.speaker.row(p, a);
                const double scale = -lr * g / virt.speaker.temperature;
                for (int d = 0; d < virt.speaker.dim; ++d) w[d] += scale * x.values[d];
            }
        }

        // The listener is supervised on messages the target speaker actually
        // produces (sampled, to cover the code's support).
        auto m = policy::sample_message(target_speaker, x, rng);
        auto ptl = policy::listener_prob(target_listener, m, instance.listener_views);
        auto qvl = policy::listener_prob(virt.listener, m, instance.listener_views);
        std::vector<double> v(virt.listener.dim, 0.0);
        for (int i = 0; i < instance.n_candidates(); ++i) {
            const double g = qvl[i] - ptl[i];
            const auto& z = instance.listener_views[i].values;
            for (int d = 0; d < virt.listener.dim; ++d) v[d] += g * z[d];
        }
        for (int p = 0; p < virt.listener.max_len; ++p) {
            double* e = virt.listener.row(p, m.symbols[p]);
            for (int d = 0; d < virt.listener.dim; ++d) e[d] -= lr * v[d];
        }
    }
    return virt;
}

double fidelity(const policy::SpeakerPolicy& model, const policy::SpeakerPolicy& virt,
                const std::vector<world::GameInstance>& probes, double mass_threshold,
                int max_size) {
    if (probes.empty()) throw Error(errc::bad_argument, "fidelity: empty probe set");
    double total = 0.0;
    for (const auto& probe : probes) {
        const world::FeatureView& x = probe.speaker_views[probe.target_index];
        std::set<policy::Message> support;
        for (const auto& e : policy::proposal_set(model, x, mass_threshold, max_size).entries)
            support.insert(e.message);
        for (const auto& e : policy::proposal_set(virt, x, mass_threshold, max_size).entries)
            support.insert(e.message);
        std::vector<double> a, b;
        a.reserve(support.size());
        b.reserve(support.size());
        for (const auto& m : support) {
            a.push_back(policy::speaker_prob(model, x, m));
            b.push_back(policy::speaker_prob(virt, x, m));
        }
        total += cosine(a, b);
    }
    return total / static_cast<double>(probes.size());
}

double fidelity(const policy::ListenerPolicy& model, const policy::ListenerPolicy& virt,
                const policy::SpeakerPolicy& probe_speaker,
                const std::vector<world::GameInstance>& probes) {
    if (probes.empty()) throw Error(errc::bad_argument, "fidelity: empty probe set");
    double total = 0.0;
    for (const auto& probe : probes) {
        auto m = greedy_message(probe_speaker, probe.speaker_views[probe.target_index]);
        auto a = policy::listener_prob(model, m, probe.listener_views);
        auto b = policy::listener_prob(virt, m, probe.listener_views);
        total += cosine(a, b);
    }
    return total / static_cast<double>(probes.size());
}

void save_train_log(std::ostream& out, const TrainLog& log) {
    out << "step,reward_ma,speaker_entropy,listener_entropy\n";
    char buf[128];
    for (const auto& c : log.checkpoints) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n", c.step, c.reward_ma,
                      c.speaker_entropy, c.listener_entropy);
        out << buf;
    }
}

} // namespace emprag::emergence
