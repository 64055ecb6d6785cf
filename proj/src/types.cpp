#include "caan/types.hpp"

#include <cmath>

namespace caan {

void validate_feature_sequence(const FeatureSequence& x) {
    if (x.frames < 2)
        throw DegenerateInputError("feature sequence needs at least 2 frames, got " +
                                   std::to_string(x.frames));
    if (x.dim < 1) throw DimensionError("feature sequence has non-positive dimension");
    if (x.values.size() != static_cast<std::size_t>(x.frames) * static_cast<std::size_t>(x.dim))
        throw DimensionError("feature sequence holds " + std::to_string(x.values.size()) +
                             " values for " + std::to_string(x.frames) + "x" + std::to_string(x.dim));
    for (std::size_t i = 0; i < x.values.size(); ++i)
        if (!std::isfinite(x.values[i]))
            throw NonFiniteError("feature sequence has a non-finite value at index " + std::to_string(i));
}

void validate_segmentation(const ShotSegmentation& seg, int frames) {
    const auto& b = seg.boundaries;
    if (b.size() < 2 || b.front() != 0 || b.back() != frames)
        throw BoundsError("segmentation boundaries must start at 0 and end at " + std::to_string(frames));
    for (std::size_t i = 1; i < b.size(); ++i)
        if (b[i] <= b[i - 1])
            throw BoundsError("segmentation boundaries must be strictly increasing at position " +
                              std::to_string(i));
}

}  // namespace caan
