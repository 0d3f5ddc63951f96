#include "emprag/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

#include "emprag/error.hpp"

namespace emprag::policy {

namespace {

constexpr const char* kMagic = "emprag-policy";
constexpr int kFormatVersion = 1;

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        z += probs[i];
    }
    for (double& p : probs) p /= z;
    return probs;
}

void check_message(int alphabet, int max_len, const Message& m) {
    if (m.symbols.empty() || static_cast<int>(m.symbols.size()) > max_len)
        throw Error(errc::bad_argument, "message length out of range");
    for (std::uint8_t s : m.symbols)
        if (s >= alphabet) throw Error(errc::bad_argument, "message symbol out of alphabet");
}

} // namespace

std::string to_string(const Message& m) {
    std::string out;
    out.reserve(m.symbols.size());
    for (std::uint8_t s : m.symbols) out.push_back(static_cast<char>('a' + s));
    return out;
}

Message message_from_string(const std::string& s) {
    Message m;
    for (char c : s) {
        if (c < 'a' || c > 'z') throw Error(errc::bad_argument, "bad message literal: " + s);
        m.symbols.push_back(static_cast<std::uint8_t>(c - 'a'));
    }
    return m;
}

SpeakerPolicy make_speaker(const PolicyConfig& cfg, Rng& rng) {
    SpeakerPolicy sp;
    sp.alphabet = cfg.alphabet;
    sp.max_len = cfg.max_len;
    sp.dim = cfg.dim;
    sp.temperature = cfg.temperature;
    sp.weights.resize(static_cast<std::size_t>(cfg.max_len) * cfg.alphabet * cfg.dim);
    for (double& w : sp.weights) w = cfg.init_scale * rng.normal();
    return sp;
}

ListenerPolicy make_listener(const PolicyConfig& cfg, Rng& rng) {
    ListenerPolicy lp;
    lp.alphabet = cfg.alphabet;
    lp.max_len = cfg.max_len;
    lp.dim = cfg.dim;
    lp.embeddings.resize(static_cast<std::size_t>(cfg.max_len) * cfg.alphabet * cfg.dim);
    for (double& e : lp.embeddings) e = cfg.init_scale * rng.normal();
    return lp;
}

std::vector<std::vector<double>> position_probs(const SpeakerPolicy& sp,
                                                const world::FeatureView& features) {
    if (features.dim() != sp.dim) throw Error(errc::dim_mismatch, "speaker: feature dim mismatch");
    std::vector<std::vector<double>> probs(sp.max_len);
    std::vector<double> logits(sp.alphabet);
    for (int p = 0; p < sp.max_len; ++p) {
        for (int a = 0; a < sp.alphabet; ++a) {
            const double* w = sp.row(p, a);
            double dot = 0.0;
            for (int d = 0; d < sp.dim; ++d) dot += w[d] * features.values[d];
            logits[a] = dot / sp.temperature;
        }
        probs[p] = softmax(logits);
    }
    return probs;
}

double speaker_prob(const SpeakerPolicy& sp, const world::FeatureView& features, const Message& m) {
    check_message(sp.alphabet, sp.max_len, m);
    if (static_cast<int>(m.symbols.size()) != sp.max_len)
        throw Error(errc::bad_argument, "message length must equal max_len (fixed-length code)");
    auto probs = position_probs(sp, features);
    double p = 1.0;
    for (int pos = 0; pos < sp.max_len; ++pos) p *= probs[pos][m.symbols[pos]];
    return p;
}

std::vector<double> listener_prob(const ListenerPolicy& lp, const Message& m,
                                  const std::vector<world::FeatureView>& views) {
    check_message(lp.alphabet, lp.max_len, m);
    if (views.empty()) throw Error(errc::bad_argument, "listener: no candidates");
    std::vector<double> g = decode_embedding(lp, m);
    std::vector<double> scores(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (views[i].dim() != lp.dim) throw Error(errc::dim_mismatch, "listener: view dim mismatch");
        double dot = 0.0;
        for (int d = 0; d < lp.dim; ++d) dot += g[d] * views[i].values[d];
        scores[i] = dot;
    }
    return softmax(scores);
}

std::vector<double> decode_embedding(const ListenerPolicy& lp, const Message& m) {
    std::vector<double> g(lp.dim, 0.0);
    for (std::size_t pos = 0; pos < m.symbols.size(); ++pos) {
        const double* e = lp.row(static_cast<int>(pos), m.symbols[pos]);
        for (int d = 0; d < lp.dim; ++d) g[d] += e[d];
    }
    return g;
}

Message sample_message(const SpeakerPolicy& sp, const world::FeatureView& features, Rng& rng) {
    auto probs = position_probs(sp, features);
    Message m;
    m.symbols.reserve(sp.max_len);
    for (int p = 0; p < sp.max_len; ++p)
        m.symbols.push_back(static_cast<std::uint8_t>(rng.categorical(probs[p])));
    return m;
}

int sample_choice(const ListenerPolicy& lp, const Message& m,
                  const std::vector<world::FeatureView>& views, Rng& rng) {
    return rng.categorical(listener_prob(lp, m, views));
}

namespace {

// Node in the best-first walk over the product of per-position sorted symbol
// lists. ranks[p] indexes the p-th position's probability-sorted symbols;
// branch_pos makes every rank vector reachable exactly once (increments only
// at positions >= branch_pos).
struct TrieNode {
    double prob;
    Message message;
    std::vector<int> ranks;
    int branch_pos;
};

struct TrieNodeWorse {
    bool operator()(const TrieNode& a, const TrieNode& b) const {
        if (a.prob != b.prob) return a.prob < b.prob;
        return a.message > b.message; // tie: lexicographically smaller first
    }
};

} // namespace

ProposalSet proposal_set(const SpeakerPolicy& sp, const world::FeatureView& features,
                         double mass_threshold, int max_size) {
    if (!(mass_threshold > 0.0) || mass_threshold > 1.0)
        throw Error(errc::bad_argument, "proposal_set: mass_threshold must be in (0, 1]");
    if (max_size <= 0) throw Error(errc::bad_argument, "proposal_set: max_size must be positive");

    auto probs = position_probs(sp, features);

    // Per position: symbols sorted by (prob desc, symbol asc).
    std::vector<std::vector<int>> order(sp.max_len);
    for (int p = 0; p < sp.max_len; ++p) {
        order[p].resize(sp.alphabet);
        for (int a = 0; a < sp.alphabet; ++a) order[p][a] = a;
        std::stable_sort(order[p].begin(), order[p].end(),
                         [&](int a, int b) { return probs[p][a] > probs[p][b]; });
    }

    auto build = [&](const std::vector<int>& ranks) {
        TrieNode node;
        node.ranks = ranks;
        node.message.symbols.resize(sp.max_len);
        node.prob = 1.0;
        for (int p = 0; p < sp.max_len; ++p) {
            int sym = order[p][ranks[p]];
            node.message.symbols[p] = static_cast<std::uint8_t>(sym);
            node.prob *= probs[p][sym];
        }
        return node;
    };

    std::priority_queue<TrieNode, std::vector<TrieNode>, TrieNodeWorse> frontier;
    TrieNode root = build(std::vector<int>(sp.max_len, 0));
    root.branch_pos = 0;
    frontier.push(std::move(root));

    ProposalSet out;
    while (!frontier.empty() && static_cast<int>(out.entries.size()) < max_size) {
        TrieNode node = frontier.top();
        frontier.pop();
        out.mass += node.prob;
        out.entries.push_back({node.message, node.prob});
        if (out.mass >= mass_threshold) break;
        for (int p = node.branch_pos; p < sp.max_len; ++p) {
            if (node.ranks[p] + 1 >= sp.alphabet) continue;
            std::vector<int> ranks = node.ranks;
            ranks[p] += 1;
            TrieNode child = build(ranks);
            child.branch_pos = p;
            frontier.push(std::move(child));
        }
    }
    return out;
}

double speaker_entropy(const SpeakerPolicy& sp, const world::FeatureView& features) {
    auto probs = position_probs(sp, features);
    double h = 0.0;
    for (const auto& row : probs)
        for (double p : row)
            if (p > 0.0) h -= p * std::log(p);
    return h;
}

namespace {

void write_matrix(std::ostream& out, const std::vector<double>& data, int row_len) {
    char buf[32];
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", data[i]);
        out << buf << ((static_cast<int>(i) % row_len == row_len - 1) ? '\n' : ' ');
    }
}

void read_header(std::istream& in, const std::string& expected_kind, int& alphabet, int& max_len,
                 int& dim, double& temperature) {
    std::string magic, kind;
    int version = 0;
    in >> magic >> version >> kind >> alphabet >> max_len >> dim >> temperature;
    if (!in || magic != kMagic)
        throw Error(errc::io, "not a policy file");
    if (version != kFormatVersion)
        throw Error(errc::io, "unsupported policy format version");
    if (kind != expected_kind)
        throw Error(errc::io, "policy kind mismatch: expected " + expected_kind + ", got " + kind);
}

} // namespace

void save_speaker(std::ostream& out, const SpeakerPolicy& sp) {
    out << kMagic << ' ' << kFormatVersion << " speaker " << sp.alphabet << ' ' << sp.max_len << ' '
        << sp.dim << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", sp.temperature);
    out << buf << '\n';
    write_matrix(out, sp.weights, sp.dim);
}

void save_listener(std::ostream& out, const ListenerPolicy& lp) {
    out << kMagic << ' ' << kFormatVersion << " listener " << lp.alphabet << ' ' << lp.max_len
        << ' ' << lp.dim << " 1\n";
    write_matrix(out, lp.embeddings, lp.dim);
}

SpeakerPolicy load_speaker(std::istream& in) {
    SpeakerPolicy sp;
    read_header(in, "speaker", sp.alphabet, sp.max_len, sp.dim, sp.temperature);
    sp.weights.resize(static_cast<std::size_t>(sp.max_len) * sp.alphabet * sp.dim);
    for (double& w : sp.weights)
        if (!(in >> w)) throw Error(errc::io, "truncated speaker policy file");
    return sp;
}

ListenerPolicy load_listener(std::istream& in) {
    ListenerPolicy lp;
    double ignored_temperature = 1.0;
    read_header(in, "listener", lp.alphabet, lp.max_len, lp.dim, ignored_temperature);
    lp.embeddings.resize(static_cast<std::size_t>(lp.max_len) * lp.alphabet * lp.dim);
    for (double& e : lp.embeddings)
        if (!(in >> e)) throw Error(errc::io, "truncated listener policy file");
    return lp;
}

void save_policies(const std::string& speaker_path, const std::string& listener_path,
                   const SpeakerPolicy& sp, const ListenerPolicy& lp) {
    std::ofstream sf(speaker_path), lf(listener_path);
    if (!sf || !lf) throw Error(errc::io, "cannot open policy files for writing");
    save_speaker(sf, sp);
    save_listener(lf, lp);
}

} // namespace emprag::policy
