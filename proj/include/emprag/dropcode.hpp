#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emprag/rng.hpp"

namespace emprag::dropcode {

// Gaussian embedding source: f ~ N(mean, transition_scale^2 I), optionally
// followed by raw-message noise s_r(f) ~ N(s, message_noise^2 I).
struct EmbeddingModel {
    int dim = 8;
    std::vector<double> mean;      // length dim
    double transition_scale = 1.0; // unit covariance by default
    double message_noise = 0.0;
};

struct CodedMessage {
    std::vector<double> values;  // dropped entries zeroed
    std::vector<bool> drop_mask; // true = dropped
};

enum class Encoder { identity, whitened };

std::string encoder_name(Encoder e);
Encoder encoder_from_string(const std::string& s);

// s(f) = f - mean.
std::vector<double> whiten_encode(const std::vector<double>& f, const std::vector<double>& mean);

// l(s) = s + mean; inverse of whiten_encode when nothing was dropped.
std::vector<double> decode(const std::vector<double>& s, const std::vector<double>& mean);

// Independently masks each coordinate with probability p and zeroes it.
CodedMessage simulate_drop(const std::vector<double>& message, double p, Rng& rng);

struct DropPoint {
    double p = 0.0;
    double mean_l1 = 0.0; // mean L1 reconstruction error per message
    double ci95 = 0.0;    // 1.96 * standard error of the mean
};

// Monte-Carlo estimate of E |decode(dropped encode(f)) - f|_1 on each grid
// point. One draw set per sample is shared across the whole grid (common
// random numbers), so the estimated curve is monotone in p by construction.
// Deterministic per seed; the parallel and serial paths produce identical
// results because every sample owns a derived RNG stream and the reduction
// runs in index order.
std::vector<DropPoint> drop_benchmark(const EmbeddingModel& model,
                                      const std::vector<double>& p_grid, Encoder encoder,
                                      long long n_samples, std::uint64_t seed);

// Plain-loop reference implementation with identical output.
std::vector<DropPoint> drop_benchmark_serial(const EmbeddingModel& model,
                                             const std::vector<double>& p_grid, Encoder encoder,
                                             long long n_samples, std::uint64_t seed);

// CSV rows `p,encoder,mean_l1_error,ci95` (no header written here).
void append_drop_csv(std::ostream& out, Encoder encoder, const std::vector<DropPoint>& points);

// Closed-form E|N(mu, sigma^2)| of the folded normal, used by oracles.
double folded_normal_mean(double mu, double sigma);

} // namespace emprag::dropcode
