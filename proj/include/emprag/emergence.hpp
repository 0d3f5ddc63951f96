#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emprag/policy.hpp"
#include "emprag/rng.hpp"
#include "emprag/world.hpp"

namespace emprag::emergence {

struct TrainConfig {
    long long n_steps = 1'000'000;
    int n_candidates = 2;
    double learning_rate = 0.1;
    // Entropy bonus decays linearly from entropy_coefficient to 0 over the
    // first entropy_fraction of the run, then stays at 0.
    double entropy_coefficient = 0.05;
    double entropy_fraction = 0.2;
    int baseline_window = 1000;
    long long checkpoint_every = 1000;
    std::uint64_t seed = 0;
    policy::PolicyConfig policy;
    world::WorldConfig world;
};

struct Checkpoint {
    long long step = 0;        // 1-based step index of the checkpoint
    double reward_ma = 0.0;    // windowed moving averages
    double speaker_entropy = 0.0;
    double listener_entropy = 0.0;
};

struct TrainLog {
    std::vector<Checkpoint> checkpoints;
};

// Windowed running mean backed by a circular buffer.
class RunningMean {
public:
    explicit RunningMean(int window) : window_(window) {}

    void push(double v) {
        if (static_cast<int>(buf_.size()) < window_) {
            buf_.push_back(v);
            sum_ += v;
        } else {
            sum_ += v - buf_[next_];
            buf_[next_] = v;
            next_ = (next_ + 1) % window_;
        }
    }
    double mean() const { return buf_.empty() ? 0.0 : sum_ / static_cast<double>(buf_.size()); }
    bool empty() const { return buf_.empty(); }

private:
    int window_;
    std::size_t next_ = 0;
    double sum_ = 0.0;
    std::vector<double> buf_;
};

// Mutable cross-step state threaded through reinforce_step.
struct TrainState {
    long long step = 0; // completed steps
    RunningMean reward{1000};
    RunningMean speaker_entropy{1000};
    RunningMean listener_entropy{1000};

    explicit TrainState(const TrainConfig& cfg)
        : reward(cfg.baseline_window),
          speaker_entropy(cfg.baseline_window),
          listener_entropy(cfg.baseline_window) {}
};

struct StepResult {
    policy::Message message;
    int choice = 0;
    double reward = 0.0;
};

double entropy_coefficient_at(const TrainConfig& cfg, long long step);

// One sampled game followed by a REINFORCE ascent step on both policies with
// a running-mean reward baseline and the scheduled entropy bonus.
StepResult reinforce_step(policy::SpeakerPolicy& sp, policy::ListenerPolicy& lp,
                          const world::GameInstance& instance, Rng& rng, const TrainConfig& cfg,
                          TrainState& state);

struct TrainResult {
    policy::SpeakerPolicy speaker;
    policy::ListenerPolicy listener;
    TrainLog log;
};

TrainResult train(const world::Dataset& dataset, const TrainConfig& cfg);

struct DistillConfig {
    double learning_rate = 0.05;
    int n_candidates = 2;
    std::uint64_t seed = 0;
    policy::PolicyConfig policy;
    world::WorldConfig world;
};

struct VirtualPair {
    policy::SpeakerPolicy speaker;
    policy::ListenerPolicy listener;
};

// Fresh-initialized policies fitted by cross-entropy against the target
// models' full output distributions on sampled game instances. The targets
// are never mutated.
VirtualPair distill_virtual(const policy::SpeakerPolicy& target_speaker,
                            const policy::ListenerPolicy& target_listener,
                            const world::Dataset& dataset, long long n_rounds,
                            const DistillConfig& cfg);

// Mean cosine similarity between the two speakers' prior probabilities over
// the union of their proposal supports for each probe's target view.
double fidelity(const policy::SpeakerPolicy& model, const policy::SpeakerPolicy& virt,
                const std::vector<world::GameInstance>& probes, double mass_threshold = 0.75,
                int max_size = 16);

// Mean cosine similarity between candidate distributions; the probe message
// is the greedy message of probe_speaker for each probe's target view.
double fidelity(const policy::ListenerPolicy& model, const policy::ListenerPolicy& virt,
                const policy::SpeakerPolicy& probe_speaker,
                const std::vector<world::GameInstance>& probes);

void save_train_log(std::ostream& out, const TrainLog& log);

} // namespace emprag::emergence
