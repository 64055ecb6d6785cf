#pragma once

#include <optional>
#include <vector>

#include "caan/types.hpp"

namespace caan {

// Kernel temporal segmentation: dynamic program minimizing total
// within-segment scatter of the linear-kernel Gram matrix, with the
// segment count chosen by a penalized criterion
//   cost(m) + penalty * m * (log(F/m) + 1).
// penalty = nullopt estimates one from mean squared frame-to-frame
// differences. Ties prefer fewer segments and earlier boundaries.
ShotSegmentation kts_changepoints(const FeatureSequence& x, int max_segments,
                                  std::optional<double> penalty = std::nullopt);

// Mean frame score per shot.
std::vector<double> shot_scores(const ScoreSequence& s, const ShotSegmentation& seg);

// Exact 0/1 knapsack over integer frame capacity. Ties break toward fewer
// total frames, then the lexicographically smallest index set.
std::vector<int> knapsack_select(const std::vector<double>& values,
                                 const std::vector<int>& lengths, int budget);

// Full score-to-summary pipeline: segmentation (KTS when absent), shot
// score averaging, knapsack under floor(ratio * F) frames.
// value_by_length switches the knapsack value to mean * length.
Summary scores_to_summary(const FeatureSequence& x, const ScoreSequence& s,
                          const std::optional<ShotSegmentation>& seg = std::nullopt,
                          double ratio = 0.15, bool value_by_length = false);

// Same pipeline when a segmentation is already known; features not needed.
Summary scores_to_summary(const ScoreSequence& s, const ShotSegmentation& seg, double ratio = 0.15,
                          bool value_by_length = false);

int default_max_segments(int frames);

}  // namespace caan
