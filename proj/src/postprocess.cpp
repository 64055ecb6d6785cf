#include "caan/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace caan {

int default_max_segments(int frames) { return std::max(1, frames / 8); }

ShotSegmentation kts_changepoints(const FeatureSequence& x, int max_segments,
                                  std::optional<double> penalty) {
    validate_feature_sequence(x);
    if (x.frames < 2)
        throw DegenerateInputError("kts: need at least 2 frames, got " + std::to_string(x.frames));
    if (max_segments < 1) throw ConfigError("kts: max_segments must be at least 1");

    const int n = x.frames, d = x.dim;
    const int m_max = std::min(max_segments, n);

    // Linear-kernel Gram matrix and its 2-d prefix sums, all in double.
    std::vector<double> gram(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            const float* xi = x.values.data() + static_cast<std::size_t>(i) * d;
            const float* xj = x.values.data() + static_cast<std::size_t>(j) * d;
            for (int k = 0; k < d; ++k) acc += static_cast<double>(xi[k]) * xj[k];
            gram[static_cast<std::size_t>(i) * n + j] = acc;
            gram[static_cast<std::size_t>(j) * n + i] = acc;
        }
    std::vector<double> pfx(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            pfx[static_cast<std::size_t>(i + 1) * (n + 1) + (j + 1)] =
                gram[static_cast<std::size_t>(i) * n + j] +
                pfx[static_cast<std::size_t>(i) * (n + 1) + (j + 1)] +
                pfx[static_cast<std::size_t>(i + 1) * (n + 1) + j] -
                pfx[static_cast<std::size_t>(i) * (n + 1) + j];
    std::vector<double> diag(static_cast<std::size_t>(n + 1), 0.0);
    for (int i = 0; i < n; ++i)
        diag[static_cast<std::size_t>(i + 1)] = diag[static_cast<std::size_t>(i)] +
                                                gram[static_cast<std::size_t>(i) * n + i];

    // Within-segment scatter of [a, b) from kernel sums.
    auto seg_cost = [&](int a, int b) -> double {
        const double block = pfx[static_cast<std::size_t>(b) * (n + 1) + b] -
                             pfx[static_cast<std::size_t>(a) * (n + 1) + b] -
                             pfx[static_cast<std::size_t>(b) * (n + 1) + a] +
                             pfx[static_cast<std::size_t>(a) * (n + 1) + a];
        return (diag[static_cast<std::size_t>(b)] - diag[static_cast<std::size_t>(a)]) -
               block / (b - a);
    };

    const double inf = std::numeric_limits<double>::infinity();
    // cost[m][f]: best scatter splitting the first f frames into m segments.
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(m_max + 1),
                                          std::vector<double>(static_cast<std::size_t>(n + 1), inf));
    std::vector<std::vector<int>> from(static_cast<std::size_t>(m_max + 1),
                                       std::vector<int>(static_cast<std::size_t>(n + 1), -1));
    for (int f = 1; f <= n; ++f) {
        cost[1][static_cast<std::size_t>(f)] = seg_cost(0, f);
        from[1][static_cast<std::size_t>(f)] = 0;
    }
    for (int m = 2; m <= m_max; ++m)
        for (int f = m; f <= n; ++f) {
            double best = inf;
            int best_t = -1;
            for (int t = m - 1; t < f; ++t) {
                const double c = cost[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(t)] +
                                 seg_cost(t, f);
                if (c < best) {  // strict: earliest split wins ties
                    best = c;
                    best_t = t;
                }
            }
            cost[static_cast<std::size_t>(m)][static_cast<std::size_t>(f)] = best;
            from[static_cast<std::size_t>(m)][static_cast<std::size_t>(f)] = best_t;
        }

    double pen = 0.0;
    if (penalty) {
        pen = *penalty;
    } else {
        // Noise-scale estimate from half the mean squared frame step.
        double acc = 0.0;
        for (int t = 0; t + 1 < n; ++t) {
            const float* a = x.values.data() + static_cast<std::size_t>(t) * d;
            const float* b = x.values.data() + static_cast<std::size_t>(t + 1) * d;
            for (int k = 0; k < d; ++k) {
                const double diff = static_cast<double>(b[k]) - a[k];
                acc += diff * diff;
            }
        }
        pen = acc / (2.0 * (n - 1));
    }

    int best_m = 1;
    double best_score = inf;
    for (int m = 1; m <= m_max; ++m) {
        const double total = cost[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] +
                             pen * m * (std::log(static_cast<double>(n) / m) + 1.0);
        if (total < best_score) {  // strict: fewer segments win ties
            best_score = total;
            best_m = m;
        }
    }

    ShotSegmentation seg;
    seg.boundaries.assign(static_cast<std::size_t>(best_m + 1), 0);
    seg.boundaries[static_cast<std::size_t>(best_m)] = n;
    int f = n;
    for (int m = best_m; m >= 1; --m) {
        f = from[static_cast<std::size_t>(m)][static_cast<std::size_t>(f)];
        seg.boundaries[static_cast<std::size_t>(m - 1)] = f;
    }
    validate_segmentation(seg, n);
    return seg;
}

std::vector<double> shot_scores(const ScoreSequence& s, const ShotSegmentation& seg) {
    validate_segmentation(seg, seg.frames());
    if (s.frames() != seg.frames())
        throw DimensionError("shot_scores: " + std::to_string(s.frames()) + " scores for a segmentation of " +
                             std::to_string(seg.frames()) + " frames");
    std::vector<double> out(static_cast<std::size_t>(seg.shot_count()));
    for (int i = 0; i < seg.shot_count(); ++i) {
        double acc = 0.0;
        for (int f = seg.shot_begin(i); f < seg.shot_end(i); ++f)
            acc += static_cast<double>(s.values[static_cast<std::size_t>(f)]);
        out[static_cast<std::size_t>(i)] = acc / seg.shot_length(i);
    }
    return out;
}

namespace {

// Selection bitset sized for the item count.
struct ItemSet {
    std::vector<std::uint64_t> bits;

    explicit ItemSet(int n) : bits(static_cast<std::size_t>((n + 63) / 64), 0) {}
    void set(int i) { bits[static_cast<std::size_t>(i) / 64] |= 1ULL << (i % 64); }
    bool test(int i) const { return bits[static_cast<std::size_t>(i) / 64] >> (i % 64) & 1ULL; }

    // True when this sorted index sequence is lexicographically smaller.
    // Only called for sets of equal total frame count, so neither can be a
    // strict subset of the other; the lowest differing member decides.
    bool lex_before(const ItemSet& o) const {
        for (std::size_t w = 0; w < bits.size(); ++w) {
            const std::uint64_t diff = bits[w] ^ o.bits[w];
            if (diff) {
                const std::uint64_t lowest = diff & (~diff + 1);
                return (bits[w] & lowest) != 0;
            }
        }
        return false;
    }
};

struct Candidate {
    double value = 0.0;
    int frames = 0;
    ItemSet set;

    explicit Candidate(int n) : set(n) {}
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.frames != b.frames) return a.frames < b.frames;
    return a.set.lex_before(b.set);
}

}  // namespace

std::vector<int> knapsack_select(const std::vector<double>& values, const std::vector<int>& lengths,
                                 int budget) {
    if (values.size() != lengths.size())
        throw DimensionError("knapsack: " + std::to_string(values.size()) + " values for " +
                             std::to_string(lengths.size()) + " lengths");
    if (budget < 0) throw ConfigError("knapsack: negative budget");
    const int n = static_cast<int>(values.size());
    for (int i = 0; i < n; ++i)
        if (lengths[static_cast<std::size_t>(i)] < 1)
            throw ConfigError("knapsack: shot " + std::to_string(i) + " has non-positive length");

    // dp[c] is the best selection with total length <= c over the items
    // processed so far, under the (value, frames, lexicographic) order.
    std::vector<Candidate> dp(static_cast<std::size_t>(budget + 1), Candidate(n));
    for (int i = 0; i < n; ++i) {
        const int w = lengths[static_cast<std::size_t>(i)];
        const double v = values[static_cast<std::size_t>(i)];
        for (int c = budget; c >= w; --c) {
            Candidate cand = dp[static_cast<std::size_t>(c - w)];
            cand.value += v;
            cand.frames += w;
            cand.set.set(i);
            if (better(cand, dp[static_cast<std::size_t>(c)])) dp[static_cast<std::size_t>(c)] = std::move(cand);
        }
    }
    std::vector<int> selected;
    for (int i = 0; i < n; ++i)
        if (dp[static_cast<std::size_t>(budget)].set.test(i)) selected.push_back(i);
    return selected;
}

Summary scores_to_summary(const ScoreSequence& s, const ShotSegmentation& seg, double ratio,
                          bool value_by_length) {
    const int frames = seg.frames();
    validate_segmentation(seg, frames);
    if (s.frames() != frames)
        throw DimensionError("scores_to_summary: " + std::to_string(s.frames()) + " scores for " +
                             std::to_string(frames) + " frames");
    const int budget = static_cast<int>(std::floor(ratio * static_cast<double>(frames) + 1e-9));

    std::vector<double> values = shot_scores(s, seg);
    std::vector<int> lengths(static_cast<std::size_t>(seg.shot_count()));
    for (int i = 0; i < seg.shot_count(); ++i) {
        lengths[static_cast<std::size_t>(i)] = seg.shot_length(i);
        if (value_by_length) values[static_cast<std::size_t>(i)] *= seg.shot_length(i);
    }

    Summary out;
    out.budget_frames = budget;
    out.selected_shots = knapsack_select(values, lengths, budget);
    out.frame_mask.assign(static_cast<std::size_t>(frames), 0);
    for (int i : out.selected_shots)
        for (int f = seg.shot_begin(i); f < seg.shot_end(i); ++f)
            out.frame_mask[static_cast<std::size_t>(f)] = 1;
    return out;
}

Summary scores_to_summary(const FeatureSequence& x, const ScoreSequence& s,
                          const std::optional<ShotSegmentation>& seg, double ratio,
                          bool value_by_length) {
    if (s.frames() != x.frames)
        throw DimensionError("scores_to_summary: " + std::to_string(s.frames()) + " scores for " +
                             std::to_string(x.frames) + " frames");
    ShotSegmentation segmentation =
        seg ? *seg : kts_changepoints(x, default_max_segments(x.frames), std::nullopt);
    return scores_to_summary(s, segmentation, ratio, value_by_length);
}

}  // namespace caan
