#include "caan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace caan {

PRF fscore(const std::vector<std::uint8_t>& pred_mask, const std::vector<std::uint8_t>& gt_mask) {
    if (pred_mask.size() != gt_mask.size())
        throw DimensionError("fscore: predicted mask covers " + std::to_string(pred_mask.size()) +
                             " frames, reference covers " + std::to_string(gt_mask.size()));
    std::int64_t overlap = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < pred_mask.size(); ++i) {
        const bool p = pred_mask[i] != 0, g = gt_mask[i] != 0;
        np += p;
        ng += g;
        overlap += p && g;
    }
    PRF out;
    out.precision = np > 0 ? static_cast<double>(overlap) / np : 0.0;
    out.recall = ng > 0 ? static_cast<double>(overlap) / ng : 0.0;
    const double pr = out.precision + out.recall;
    out.fscore = pr > 0.0 ? 2.0 * out.precision * out.recall / pr * 100.0 : 0.0;
    return out;
}

PRF fscore(const Summary& pred, const Summary& gt) { return fscore(pred.frame_mask, gt.frame_mask); }

double fscore_multi_user(const Summary& pred, const std::vector<Summary>& users, AggregationMode mode) {
    if (users.empty()) throw DegenerateInputError("fscore_multi_user: empty user summary list");
    double acc = mode == AggregationMode::Max ? -1.0 : 0.0;
    for (const auto& u : users) {
        const double f = fscore(pred, u).fscore;
        if (mode == AggregationMode::Max)
            acc = std::max(acc, f);
        else
            acc += f;
    }
    return mode == AggregationMode::Max ? acc : acc / static_cast<double>(users.size());
}

double kendall_tau(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size())
        throw DimensionError("kendall_tau: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " differ");
    const std::size_t n = a.size();
    if (n < 2) throw DegenerateInputError("kendall_tau: need at least 2 observations");
    std::int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const float da = a[i] - a[j];
            const float db = b[i] - b[j];
            if (da == 0.0f) ++ties_a;
            if (db == 0.0f) ++ties_b;
            if (da == 0.0f || db == 0.0f) continue;
            if ((da > 0.0f) == (db > 0.0f))
                ++concordant;
            else
                ++discordant;
        }
    const std::int64_t n0 = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    const double denom =
        std::sqrt(static_cast<double>(n0 - ties_a) * static_cast<double>(n0 - ties_b));
    if (denom == 0.0)
        throw UndefinedCorrelationError("kendall_tau: an input is entirely tied");
    return static_cast<double>(concordant - discordant) / denom;
}

namespace {

// Midranks: equal values share the average of their rank positions.
std::vector<double> midranks(const std::vector<float>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size())
        throw DimensionError("spearman_rho: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " differ");
    if (a.size() < 2) throw DegenerateInputError("spearman_rho: need at least 2 observations");
    const std::vector<double> ra = midranks(a);
    const std::vector<double> rb = midranks(b);
    const double n = static_cast<double>(a.size());
    double sa = 0.0, sb = 0.0, sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sa += ra[i];
        sb += rb[i];
        sab += ra[i] * rb[i];
        saa += ra[i] * ra[i];
        sbb += rb[i] * rb[i];
    }
    const double var_a = n * saa - sa * sa;
    const double var_b = n * sbb - sb * sb;
    if (var_a <= 0.0 || var_b <= 0.0)
        throw UndefinedCorrelationError("spearman_rho: zero rank variance in an input");
    return (n * sab - sa * sb) / std::sqrt(var_a * var_b);
}

}  // namespace caan
