#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emprag/rng.hpp"
#include "emprag/world.hpp"

namespace emprag::policy {

struct PolicyConfig {
    int alphabet = 17;
    int max_len = 5;
    int dim = world::kFeatureDim;
    double temperature = 1.0;
    double init_scale = 0.01;
};

// Fixed-length symbol sequence. Symbols render as letters 'a'.. for CSV/TSV
// output.
struct Message {
    std::vector<std::uint8_t> symbols;

    auto operator<=>(const Message&) const = default;
};

std::string to_string(const Message& m);
Message message_from_string(const std::string& s);

// Position-factorized linear-softmax encoder: one logit matrix per message
// position. The full message distribution is the product of per-position
// softmaxes, so probabilities can be enumerated exactly.
struct SpeakerPolicy {
    int alphabet = 0;
    int max_len = 0;
    int dim = 0;
    double temperature = 1.0;
    std::vector<double> weights; // [max_len][alphabet][dim]

    double* row(int pos, int symbol) { return weights.data() + (static_cast<std::size_t>(pos) * alphabet + symbol) * dim; }
    const double* row(int pos, int symbol) const { return weights.data() + (static_cast<std::size_t>(pos) * alphabet + symbol) * dim; }
};

// Decodes a message by summing per-position symbol embeddings, then scores
// each candidate view by dot product; softmax over candidates.
struct ListenerPolicy {
    int alphabet = 0;
    int max_len = 0;
    int dim = 0;
    std::vector<double> embeddings; // [max_len][alphabet][dim]

    double* row(int pos, int symbol) { return embeddings.data() + (static_cast<std::size_t>(pos) * alphabet + symbol) * dim; }
    const double* row(int pos, int symbol) const { return embeddings.data() + (static_cast<std::size_t>(pos) * alphabet + symbol) * dim; }
};

struct ProposalEntry {
    Message message;
    double prob = 0.0; // prior speaker probability, unnormalized by mass
};

// Smallest high-probability prefix of the message distribution whose mass
// reaches the threshold, capped at max_size.
struct ProposalSet {
    std::vector<ProposalEntry> entries;
    double mass = 0.0;
};

SpeakerPolicy make_speaker(const PolicyConfig& cfg, Rng& rng);
ListenerPolicy make_listener(const PolicyConfig& cfg, Rng& rng);

// Per-position symbol distributions for one feature vector; rows sum to 1.
std::vector<std::vector<double>> position_probs(const SpeakerPolicy& sp, const world::FeatureView& features);

double speaker_prob(const SpeakerPolicy& sp, const world::FeatureView& features, const Message& m);

// Probability vector over candidates given listener views.
std::vector<double> listener_prob(const ListenerPolicy& lp, const Message& m,
                                  const std::vector<world::FeatureView>& views);

Message sample_message(const SpeakerPolicy& sp, const world::FeatureView& features, Rng& rng);
int sample_choice(const ListenerPolicy& lp, const Message& m,
                  const std::vector<world::FeatureView>& views, Rng& rng);

// Exact best-first search over the factorized symbol trie; no sampling. Ties
// in probability fall back to lexicographic message order.
ProposalSet proposal_set(const SpeakerPolicy& sp, const world::FeatureView& features,
                         double mass_threshold, int max_size);

// Entropy of the full factorized message distribution (sum over positions).
double speaker_entropy(const SpeakerPolicy& sp, const world::FeatureView& features);

// Message embedding used for listener scoring.
std::vector<double> decode_embedding(const ListenerPolicy& lp, const Message& m);

void save_speaker(std::ostream& out, const SpeakerPolicy& sp);
void save_listener(std::ostream& out, const ListenerPolicy& lp);
SpeakerPolicy load_speaker(std::istream& in);
ListenerPolicy load_listener(std::istream& in);

void save_policies(const std::string& speaker_path, const std::string& listener_path,
                   const SpeakerPolicy& sp, const ListenerPolicy& lp);

} // namespace emprag::policy
