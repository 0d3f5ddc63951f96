#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emprag/rng.hpp"

namespace emprag::world {

inline constexpr int kMaxColors = 8;
inline constexpr int kMaxShapes = 5;
// color one-hot (8) + shape one-hot (5) + position (2) + bias
inline constexpr int kFeatureDim = 16;

// Attribute-space configuration. Colors are referred to by id; the default
// similarity partition groups 0 (red) and 1 (magenta), every other color is
// similar only to itself.
struct WorldConfig {
    int n_colors = kMaxColors;
    int n_shapes = kMaxShapes;
    int dedup_grid = 16;       // position buckets per axis used for dataset disjointness
    double noise_scale = 0.25; // per-view additive Gaussian noise
    double shape_scale = 0.5;  // embedding magnitude of the shape block
    double position_scale = 0.5;
    std::vector<std::vector<int>> color_similarity = {{0, 1}};
    // Feature mass that similar colors share: each color's embedding also
    // lights up its partners' slots at this level, so similar colors are
    // genuinely confusable under view noise, not merely labeled as such.
    double color_overlap = 0.75;
};

struct ObjectSpec {
    int color = 0;
    int shape = 0;
    std::array<double, 2> position{0.0, 0.0};

    bool operator==(const ObjectSpec&) const = default;
};

struct FeatureView {
    std::vector<double> values;

    int dim() const { return static_cast<int>(values.size()); }
};

struct GameInstance {
    std::vector<ObjectSpec> candidates;
    int target_index = 0;
    std::vector<FeatureView> speaker_views;
    std::vector<FeatureView> listener_views;

    int n_candidates() const { return static_cast<int>(candidates.size()); }
};

struct Dataset {
    std::vector<ObjectSpec> train_objects;
    std::vector<ObjectSpec> test_objects;
    std::uint64_t seed = 0;

    const std::vector<ObjectSpec>& split(bool test) const {
        return test ? test_objects : train_objects;
    }
};

enum class Split { train, test };

// Bucket key used for the dataset disjointness rule.
std::uint64_t spec_key(const ObjectSpec& obj, const WorldConfig& cfg);

// Uniformly drawn objects with pairwise-distinct (color, shape,
// position-bucket) keys across both splits. Throws errc::capacity when the
// attribute grid cannot host n_train + n_test distinct keys.
Dataset generate_dataset(const WorldConfig& cfg, int n_train, int n_test, std::uint64_t seed);

// Deterministic symbolic embedding plus additive view noise. Stands in for
// the per-agent perception stack: the two agents call this independently and
// therefore never see identical vectors for the same object.
FeatureView featurize(const ObjectSpec& obj, const WorldConfig& cfg, double noise_scale, Rng& rng);

// Noise-free part of featurize.
FeatureView embed(const ObjectSpec& obj, const WorldConfig& cfg);

// Distinct candidates sampled from a split, uniform target, fresh view noise.
GameInstance sample_instance(const Dataset& dataset, Split split, int n_candidates,
                             const WorldConfig& cfg, Rng& rng);

// Instance whose target is a fixed split member; distractors are sampled
// randomly and the candidate order is shuffled. Used by the evaluation pass
// where every test object serves as the target once.
GameInstance instance_for_target(const Dataset& dataset, Split split, int target_pos,
                                 int n_candidates, const WorldConfig& cfg, Rng& rng);

bool colors_similar(int a, int b, const WorldConfig& cfg);

// True iff every candidate pair has identical or similar colors.
bool is_challenge(const GameInstance& instance, const WorldConfig& cfg);

// Line-oriented object list: one `color shape x y` per line.
void save_objects(std::ostream& out, const std::vector<ObjectSpec>& objects);
std::vector<ObjectSpec> load_objects(std::istream& in);

void save_dataset(const std::string& train_path, const std::string& test_path, const Dataset& ds);
Dataset load_dataset(const std::string& train_path, const std::string& test_path);

} // namespace emprag::world
