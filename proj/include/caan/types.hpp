#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "caan/errors.hpp"

namespace caan {

// Per-frame appearance features, row-major frames x dim.
struct FeatureSequence {
    int frames = 0;
    int dim = 0;
    std::vector<float> values;

    float at(int f, int j) const { return values[static_cast<std::size_t>(f) * dim + j]; }
    float& at(int f, int j) { return values[static_cast<std::size_t>(f) * dim + j]; }
};

// Per-frame importance scores in [0, 1].
struct ScoreSequence {
    std::vector<float> values;

    int frames() const { return static_cast<int>(values.size()); }
};

// Contiguous partition of [0, F) into shots. boundaries holds
// 0 = b0 < b1 < ... < bm = F; shot i is [b_i, b_{i+1}).
struct ShotSegmentation {
    std::vector<int> boundaries;

    int shot_count() const { return static_cast<int>(boundaries.size()) - 1; }
    int frames() const { return boundaries.empty() ? 0 : boundaries.back(); }
    int shot_begin(int i) const { return boundaries[i]; }
    int shot_end(int i) const { return boundaries[i + 1]; }
    int shot_length(int i) const { return boundaries[i + 1] - boundaries[i]; }
};

// Key-shot selection: chosen shot indices plus the induced frame mask.
struct Summary {
    std::vector<int> selected_shots;
    std::vector<std::uint8_t> frame_mask;
    int budget_frames = 0;

    int selected_frames() const {
        int n = 0;
        for (auto m : frame_mask) n += m ? 1 : 0;
        return n;
    }
};

using Interval = std::pair<int, int>;  // half-open [first, second)

void validate_feature_sequence(const FeatureSequence& x);
void validate_segmentation(const ShotSegmentation& seg, int frames);

}  // namespace caan
