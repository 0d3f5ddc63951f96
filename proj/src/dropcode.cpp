#include "emprag/dropcode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "emprag/error.hpp"

namespace emprag::dropcode {

namespace {

constexpr std::uint64_t kStreamDrop = 3;

void check_model(const EmbeddingModel& model) {
    if (model.dim < 1) throw Error(errc::bad_argument, "dropcode: dimension must be >= 1");
    if (static_cast<int>(model.mean.size()) != model.dim)
        throw Error(errc::dim_mismatch, "dropcode: mean length != dimension");
    for (double m : model.mean)
        if (!std::isfinite(m)) throw Error(errc::bad_argument, "dropcode: non-finite mean");
    if (model.transition_scale < 0.0 || model.message_noise < 0.0)
        throw Error(errc::bad_argument, "dropcode: negative noise scale");
}

void check_grid(const std::vector<double>& grid) {
    for (double p : grid)
        if (!(p >= 0.0 && p <= 1.0))
            throw Error(errc::bad_argument, "dropcode: drop probability outside [0, 1]");
}

// Shared-draw error evaluation for one sample across the whole grid. The
// encoder consumes no randomness, so the stream layout is encoder-independent
// and the identity/whitened estimates are paired.
void sample_errors(const EmbeddingModel& model, const std::vector<double>& grid, Encoder encoder,
                   std::uint64_t seed, long long sample, double* out) {
    Rng rng(derive_stream(seed, {kStreamDrop, static_cast<std::uint64_t>(sample)}));
    const int d = model.dim;
    std::vector<double> f(d), s(d), u(d);
    for (int i = 0; i < d; ++i) f[i] = model.mean[i] + model.transition_scale * rng.normal();
    for (int i = 0; i < d; ++i) s[i] = encoder == Encoder::whitened ? f[i] - model.mean[i] : f[i];
    if (model.message_noise > 0.0)
        for (int i = 0; i < d; ++i) s[i] += model.message_noise * rng.normal();
    for (int i = 0; i < d; ++i) u[i] = rng.uniform();

    for (std::size_t k = 0; k < grid.size(); ++k) {
        double err = 0.0;
        for (int i = 0; i < d; ++i) {
            const double received = u[i] < grid[k] ? 0.0 : s[i];
            const double rec = encoder == Encoder::whitened ? received + model.mean[i] : received;
            err += std::abs(rec - f[i]);
        }
        out[k] = err;
    }
}

std::vector<DropPoint> reduce_errors(const std::vector<double>& grid, long long n,
                                     const std::vector<double>& errs) {
    std::vector<DropPoint> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double sum = 0.0, sumsq = 0.0;
        for (long long i = 0; i < n; ++i) {
            const double e = errs[static_cast<std::size_t>(i) * grid.size() + k];
            sum += e;
            sumsq += e * e;
        }
        const double mean = sum / static_cast<double>(n);
        double var = 0.0;
        if (n > 1) var = std::max(0.0, (sumsq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
        out[k] = {grid[k], mean, 1.96 * std::sqrt(var / static_cast<double>(n))};
    }
    return out;
}

} // namespace

std::string encoder_name(Encoder e) {
    return e == Encoder::whitened ? "whitened" : "identity";
}

Encoder encoder_from_string(const std::string& s) {
    if (s == "identity") return Encoder::identity;
    if (s == "whitened") return Encoder::whitened;
    throw Error(errc::bad_argument, "unknown encoder: " + s);
}

std::vector<double> whiten_encode(const std::vector<double>& f, const std::vector<double>& mean) {
    if (f.size() != mean.size()) throw Error(errc::dim_mismatch, "whiten_encode: length mismatch");
    std::vector<double> s(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) s[i] = f[i] - mean[i];
    return s;
}

std::vector<double> decode(const std::vector<double>& s, const std::vector<double>& mean) {
    if (s.size() != mean.size()) throw Error(errc::dim_mismatch, "decode: length mismatch");
    std::vector<double> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f[i] = s[i] + mean[i];
    return f;
}

CodedMessage simulate_drop(const std::vector<double>& message, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0))
        throw Error(errc::bad_argument, "simulate_drop: probability outside [0, 1]");
    CodedMessage out;
    out.values.resize(message.size());
    out.drop_mask.resize(message.size());
    for (std::size_t i = 0; i < message.size(); ++i) {
        const bool dropped = rng.uniform() < p;
        out.drop_mask[i] = dropped;
        out.values[i] = dropped ? 0.0 : message[i];
    }
    return out;
}

std::vector<DropPoint> drop_benchmark(const EmbeddingModel& model, const std::vector<double>& p_grid,
                                      Encoder encoder, long long n_samples, std::uint64_t seed) {
    check_model(model);
    check_grid(p_grid);
    if (n_samples < 1) throw Error(errc::bad_argument, "drop_benchmark: need at least one sample");
    std::vector<double> errs(static_cast<std::size_t>(n_samples) * p_grid.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n_samples; ++i)
        sample_errors(model, p_grid, encoder, seed, i,
                      errs.data() + static_cast<std::size_t>(i) * p_grid.size());
    return reduce_errors(p_grid, n_samples, errs);
}

std::vector<DropPoint> drop_benchmark_serial(const EmbeddingModel& model,
                                             const std::vector<double>& p_grid, Encoder encoder,
                                             long long n_samples, std::uint64_t seed) {
    check_model(model);
    check_grid(p_grid);
    if (n_samples < 1) throw Error(errc::bad_argument, "drop_benchmark: need at least one sample");
    std::vector<double> errs(static_cast<std::size_t>(n_samples) * p_grid.size());
    for (long long i = 0; i < n_samples; ++i)
        sample_errors(model, p_grid, encoder, seed, i,
                      errs.data() + static_cast<std::size_t>(i) * p_grid.size());
    return reduce_errors(p_grid, n_samples, errs);
}

void append_drop_csv(std::ostream& out, Encoder encoder, const std::vector<DropPoint>& points) {
    char buf[160];
    for (const auto& pt : points) {
        std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g\n", pt.p, encoder_name(encoder).c_str(),
                      pt.mean_l1, pt.ci95);
        out << buf;
    }
}

double folded_normal_mean(double mu, double sigma) {
    if (sigma == 0.0) return std::abs(mu);
    const double a = mu / (sigma * std::numbers::sqrt2);
    return sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mu * mu / (2.0 * sigma * sigma)) +
           mu * std::erf(a);
}

} // namespace emprag::dropcode
