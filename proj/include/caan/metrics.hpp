#pragma once

#include <vector>

#include "caan/types.hpp"

namespace caan {

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;  // percent, 2PR/(P+R) * 100
};

PRF fscore(const std::vector<std::uint8_t>& pred_mask, const std::vector<std::uint8_t>& gt_mask);
PRF fscore(const Summary& pred, const Summary& gt);

enum class AggregationMode { Max, Mean };

double fscore_multi_user(const Summary& pred, const std::vector<Summary>& users, AggregationMode mode);

// Tie-corrected Kendall tau-b over all frame pairs.
double kendall_tau(const std::vector<float>& a, const std::vector<float>& b);

// Pearson correlation of midranks (ties get average ranks).
double spearman_rho(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace caan
