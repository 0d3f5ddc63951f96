#include "emprag/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emprag/error.hpp"

namespace emprag::world {

namespace {

void validate_config(const WorldConfig& cfg) {
    if (cfg.n_colors < 1 || cfg.n_colors > kMaxColors)
        throw Error(errc::bad_config, "n_colors must be in [1, 8]");
    if (cfg.n_shapes < 1 || cfg.n_shapes > kMaxShapes)
        throw Error(errc::bad_config, "n_shapes must be in [1, 5]");
    if (cfg.dedup_grid < 1) throw Error(errc::bad_config, "dedup_grid must be positive");
}

int bucket(double x, int grid) {
    int b = static_cast<int>(x * grid);
    return std::min(std::max(b, 0), grid - 1);
}

} // namespace

std::uint64_t spec_key(const ObjectSpec& obj, const WorldConfig& cfg) {
    const int g = cfg.dedup_grid;
    std::uint64_t key = static_cast<std::uint64_t>(obj.color);
    key = key * cfg.n_shapes + obj.shape;
    key = key * g + bucket(obj.position[0], g);
    key = key * g + bucket(obj.position[1], g);
    return key;
}

Dataset generate_dataset(const WorldConfig& cfg, int n_train, int n_test, std::uint64_t seed) {
    validate_config(cfg);
    if (n_train <= 0 || n_test <= 0)
        throw Error(errc::bad_argument, "generate_dataset: split sizes must be positive");

    const std::uint64_t g = cfg.dedup_grid;
    const std::uint64_t n_keys =
        static_cast<std::uint64_t>(cfg.n_colors) * cfg.n_shapes * g * g;
    const std::uint64_t requested = static_cast<std::uint64_t>(n_train) + n_test;
    if (requested > n_keys) {
        throw Error(errc::capacity,
                    "attribute space holds " + std::to_string(n_keys) +
                        " distinct specs, cannot produce " + std::to_string(requested) +
                        " disjoint objects");
    }

    // Draw keys without replacement (partial Fisher-Yates), then sample a
    // uniform position inside each key's bucket. Marginally every attribute
    // stays uniform while the disjointness rule holds by construction.
    Rng rng(derive_stream(seed, {0x0d5e}));
    std::vector<std::uint64_t> keys(n_keys);
    std::iota(keys.begin(), keys.end(), std::uint64_t{0});
    for (std::uint64_t i = 0; i < requested; ++i) {
        std::uint64_t j = i + rng.uniform_int(static_cast<int>(n_keys - i));
        std::swap(keys[i], keys[j]);
    }

    auto make_object = [&](std::uint64_t key) {
        ObjectSpec obj;
        obj.position[1] = (static_cast<double>(key % g) + rng.uniform()) / g;
        key /= g;
        obj.position[0] = (static_cast<double>(key % g) + rng.uniform()) / g;
        key /= g;
        obj.shape = static_cast<int>(key % cfg.n_shapes);
        obj.color = static_cast<int>(key / cfg.n_shapes);
        return obj;
    };

    Dataset ds;
    ds.seed = seed;
    ds.train_objects.reserve(n_train);
    ds.test_objects.reserve(n_test);
    for (int i = 0; i < n_train; ++i) ds.train_objects.push_back(make_object(keys[i]));
    for (int i = 0; i < n_test; ++i) ds.test_objects.push_back(make_object(keys[n_train + i]));
    return ds;
}

FeatureView embed(const ObjectSpec& obj, const WorldConfig& cfg) {
    FeatureView view;
    view.values.assign(kFeatureDim, 0.0);
    view.values[obj.color] = 1.0;
    for (const auto& group : cfg.color_similarity) {
        if (std::find(group.begin(), group.end(), obj.color) == group.end()) continue;
        for (int other : group)
            if (other != obj.color && other >= 0 && other < kMaxColors)
                view.values[other] = cfg.color_overlap;
    }
    view.values[kMaxColors + obj.shape] = cfg.shape_scale;
    view.values[kMaxColors + kMaxShapes + 0] = cfg.position_scale * obj.position[0];
    view.values[kMaxColors + kMaxShapes + 1] = cfg.position_scale * obj.position[1];
    view.values[kFeatureDim - 1] = 1.0; // bias slot
    return view;
}

FeatureView featurize(const ObjectSpec& obj, const WorldConfig& cfg, double noise_scale, Rng& rng) {
    if (noise_scale < 0.0)
        throw Error(errc::bad_argument, "featurize: noise_scale must be nonnegative");
    FeatureView view = embed(obj, cfg);
    if (noise_scale > 0.0) {
        for (double& v : view.values) v += noise_scale * rng.normal();
    }
    return view;
}

namespace {

std::vector<int> distinct_indices(int n_pool, int n_pick, Rng& rng) {
    // Rejection sampling; evaluation pools are much larger than n_pick.
    std::vector<int> picked;
    picked.reserve(n_pick);
    while (static_cast<int>(picked.size()) < n_pick) {
        int idx = rng.uniform_int(n_pool);
        if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
    }
    return picked;
}

GameInstance finish_instance(const std::vector<ObjectSpec>& pool, const std::vector<int>& chosen,
                             int target_index, const WorldConfig& cfg, Rng& rng) {
    GameInstance inst;
    inst.target_index = target_index;
    for (int idx : chosen) inst.candidates.push_back(pool[idx]);
    for (const ObjectSpec& obj : inst.candidates)
        inst.speaker_views.push_back(featurize(obj, cfg, cfg.noise_scale, rng));
    for (const ObjectSpec& obj : inst.candidates)
        inst.listener_views.push_back(featurize(obj, cfg, cfg.noise_scale, rng));
    return inst;
}

} // namespace

GameInstance sample_instance(const Dataset& dataset, Split split, int n_candidates,
                             const WorldConfig& cfg, Rng& rng) {
    const auto& pool = dataset.split(split == Split::test);
    if (pool.empty()) throw Error(errc::bad_argument, "sample_instance: empty split");
    if (n_candidates < 1 || n_candidates > static_cast<int>(pool.size()))
        throw Error(errc::bad_argument, "sample_instance: n_candidates exceeds split size");

    std::vector<int> chosen = distinct_indices(static_cast<int>(pool.size()), n_candidates, rng);
    int target = rng.uniform_int(n_candidates);
    return finish_instance(pool, chosen, target, cfg, rng);
}

GameInstance instance_for_target(const Dataset& dataset, Split split, int target_pos,
                                 int n_candidates, const WorldConfig& cfg, Rng& rng) {
    const auto& pool = dataset.split(split == Split::test);
    if (target_pos < 0 || target_pos >= static_cast<int>(pool.size()))
        throw Error(errc::bad_argument, "instance_for_target: target out of range");
    if (n_candidates < 1 || n_candidates > static_cast<int>(pool.size()))
        throw Error(errc::bad_argument, "instance_for_target: n_candidates exceeds split size");

    std::vector<int> chosen{target_pos};
    while (static_cast<int>(chosen.size()) < n_candidates) {
        int idx = rng.uniform_int(static_cast<int>(pool.size()));
        if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) chosen.push_back(idx);
    }
    // Shuffle so the target slot carries no information.
    for (int i = n_candidates - 1; i > 0; --i) {
        int j = rng.uniform_int(i + 1);
        std::swap(chosen[i], chosen[j]);
    }
    int target_index =
        static_cast<int>(std::find(chosen.begin(), chosen.end(), target_pos) - chosen.begin());
    return finish_instance(pool, chosen, target_index, cfg, rng);
}

bool colors_similar(int a, int b, const WorldConfig& cfg) {
    if (a == b) return true;
    for (const auto& group : cfg.color_similarity) {
        bool has_a = std::find(group.begin(), group.end(), a) != group.end();
        bool has_b = std::find(group.begin(), group.end(), b) != group.end();
        if (has_a && has_b) return true;
    }
    return false;
}

bool is_challenge(const GameInstance& instance, const WorldConfig& cfg) {
    const auto& cands = instance.candidates;
    if (cands.size() < 2) return false; // no confusable pair exists

    for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t j = i + 1; j < cands.size(); ++j)
            if (!colors_similar(cands[i].color, cands[j].color, cfg)) return false;
    return true;
}

void save_objects(std::ostream& out, const std::vector<ObjectSpec>& objects) {
    char buf[128];
    for (const ObjectSpec& obj : objects) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g\n", obj.color, obj.shape,
                      obj.position[0], obj.position[1]);
        out << buf;
    }
}

std::vector<ObjectSpec> load_objects(std::istream& in) {
    std::vector<ObjectSpec> objects;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ObjectSpec obj;
        if (!(ls >> obj.color >> obj.shape >> obj.position[0] >> obj.position[1]))
            throw Error(errc::io, "malformed object line: " + line);
        objects.push_back(obj);
    }
    return objects;
}

void save_dataset(const std::string& train_path, const std::string& test_path, const Dataset& ds) {
    std::ofstream train(train_path), test(test_path);
    if (!train || !test) throw Error(errc::io, "cannot open dataset files for writing");
    save_objects(train, ds.train_objects);
    save_objects(test, ds.test_objects);
}

Dataset load_dataset(const std::string& train_path, const std::string& test_path) {
    std::ifstream train(train_path), test(test_path);
    if (!train) throw Error(errc::missing_artifact, "missing dataset file: " + train_path);
    if (!test) throw Error(errc::missing_artifact, "missing dataset file: " + test_path);
    Dataset ds;
    ds.train_objects = load_objects(train);
    ds.test_objects = load_objects(test);
    return ds;
}

} // namespace emprag::world
