#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "caan/checks.hpp"
#include "caan/postprocess.hpp"
#include "caan/rng.hpp"

using namespace caan;

namespace {

FeatureSequence random_features(int frames, int dim, Rng& rng, float lo = -2.0f, float hi = 2.0f) {
    FeatureSequence x;
    x.frames = frames;
    x.dim = dim;
    x.values.resize(static_cast<std::size_t>(frames) * dim);
    for (auto& v : x.values) v = rng.uniform_f(lo, hi);
    return x;
}

}  // namespace

TEST_CASE("constant sequences stay a single segment under any positive penalty") {
    FeatureSequence x;
    x.frames = 24;
    x.dim = 3;
    x.values.assign(24 * 3, 1.25f);
    ShotSegmentation seg = kts_changepoints(x, 6, 0.1);
    CHECK(seg.boundaries == std::vector<int>({0, 24}));
}

TEST_CASE("two-level sequence yields exactly one boundary at the step") {
    FeatureSequence x;
    x.frames = 20;
    x.dim = 4;
    x.values.resize(20 * 4);
    for (int f = 0; f < 20; ++f)
        for (int k = 0; k < 4; ++k) x.at(f, k) = f < 10 ? 0.8f : -0.5f;
    ShotSegmentation seg = kts_changepoints(x, 4, 1e-6);
    CHECK(seg.boundaries == std::vector<int>({0, 10, 20}));

    // exhaustive confirmation on the same instance
    auto best = checks::exhaustive_segmentation(x, 4, 1e-6);
    CHECK(best.boundaries == seg.boundaries);
}

TEST_CASE("dp segmentation cost equals exhaustive enumeration on random instances") {
    Rng rng(7);
    for (int inst = 0; inst < 30; ++inst) {
        const int frames = rng.uniform_int(4, 24);
        const int dim = rng.uniform_int(1, 4);
        FeatureSequence x = random_features(frames, dim, rng);
        const int m_max = rng.uniform_int(1, 4);
        const double penalty = rng.uniform(0.0, 3.0);
        ShotSegmentation got = kts_changepoints(x, m_max, penalty);
        const double got_cost =
            checks::segmentation_cost(x, got.boundaries) +
            penalty * got.shot_count() *
                (std::log(static_cast<double>(frames) / got.shot_count()) + 1.0);
        auto want = checks::exhaustive_segmentation(x, m_max, penalty);
        INFO("instance ", inst, " got ", got_cost, " want ", want.cost);
        CHECK(std::fabs(got_cost - want.cost) <= 1e-6 * std::max(1.0, std::fabs(want.cost)));
    }
}

TEST_CASE("segmentation is always a valid partition") {
    Rng rng(11);
    for (int inst = 0; inst < 40; ++inst) {
        const int frames = rng.uniform_int(2, 60);
        FeatureSequence x = random_features(frames, rng.uniform_int(1, 6), rng);
        ShotSegmentation seg = kts_changepoints(x, rng.uniform_int(1, 10), std::nullopt);
        CHECK_NOTHROW(validate_segmentation(seg, frames));
        int covered = 0;
        for (int i = 0; i < seg.shot_count(); ++i) {
            CHECK(seg.shot_length(i) >= 1);
            covered += seg.shot_length(i);
        }
        CHECK(covered == frames);
    }
}

TEST_CASE("kts input validation") {
    FeatureSequence one;
    one.frames = 1;
    one.dim = 2;
    one.values = {0.0f, 0.0f};
    CHECK_THROWS_AS(kts_changepoints(one, 3, 1.0), DegenerateInputError);
    Rng rng(13);
    FeatureSequence ok = random_features(8, 2, rng);
    CHECK_THROWS_AS(kts_changepoints(ok, 0, 1.0), ConfigError);
}

TEST_CASE("shot scores are per-shot means") {
    ScoreSequence s;
    s.values = {0.2f, 0.4f, 0.6f, 0.8f, 1.0f, 0.0f};
    ShotSegmentation seg;
    seg.boundaries = {0, 2, 6};
    auto scores = shot_scores(s, seg);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(scores[1] == doctest::Approx(0.6).epsilon(1e-6));

    ShotSegmentation whole;
    whole.boundaries = {0, 6};
    CHECK(shot_scores(s, whole)[0] == doctest::Approx(0.5).epsilon(1e-6));

    ScoreSequence constant;
    constant.values.assign(6, 0.7f);
    for (double v : shot_scores(constant, seg)) CHECK(v == doctest::Approx(0.7).epsilon(1e-7));

    ScoreSequence wrong;
    wrong.values.assign(5, 0.5f);
    CHECK_THROWS_AS(shot_scores(wrong, seg), DimensionError);
}

TEST_CASE("knapsack basics") {
    CHECK(knapsack_select({0.9}, {5}, 0).empty());
    CHECK(knapsack_select({0.9}, {5}, 5) == std::vector<int>({0}));
    CHECK(knapsack_select({0.9}, {5}, 4).empty());
}

TEST_CASE("knapsack matches brute force on 200 random instances") {
    Rng rng(17);
    for (int inst = 0; inst < 200; ++inst) {
        const int n = rng.uniform_int(1, 18);
        std::vector<double> values(static_cast<std::size_t>(n));
        std::vector<int> lengths(static_cast<std::size_t>(n));
        int total = 0;
        for (int i = 0; i < n; ++i) {
            values[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1.0);
            lengths[static_cast<std::size_t>(i)] = rng.uniform_int(1, 15);
            total += lengths[static_cast<std::size_t>(i)];
        }
        const int budget = rng.uniform_int(0, total + 3);
        auto got = knapsack_select(values, lengths, budget);
        auto want = checks::exhaustive_knapsack(values, lengths, budget);
        double got_value = 0.0;
        int frames = 0;
        for (int i : got) {
            got_value += values[static_cast<std::size_t>(i)];
            frames += lengths[static_cast<std::size_t>(i)];
        }
        CHECK(frames <= budget);
        CHECK(got_value == want.value);
        CHECK(got == want.selected);
    }
}

TEST_CASE("knapsack tie-breaks prefer fewer frames then the smallest index set") {
    // two ways to reach value 1.0: {0} with 4 frames or {1,2} with 2 frames
    auto fewer = knapsack_select({1.0, 0.5, 0.5}, {4, 1, 1}, 4);
    CHECK(fewer == std::vector<int>({1, 2}));
    // identical value and frames: lexicographically smallest set wins
    auto lex = knapsack_select({0.5, 0.5, 0.5}, {2, 2, 2}, 4);
    CHECK(lex == std::vector<int>({0, 1}));
}

TEST_CASE("raising the score of a selected shot never evicts it") {
    Rng rng(19);
    for (int inst = 0; inst < 60; ++inst) {
        const int n = rng.uniform_int(2, 12);
        std::vector<double> values(static_cast<std::size_t>(n));
        std::vector<int> lengths(static_cast<std::size_t>(n));
        int total = 0;
        for (int i = 0; i < n; ++i) {
            values[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1.0);
            lengths[static_cast<std::size_t>(i)] = rng.uniform_int(1, 8);
            total += lengths[static_cast<std::size_t>(i)];
        }
        const int budget = rng.uniform_int(1, total);
        auto selected = knapsack_select(values, lengths, budget);
        if (selected.empty()) continue;
        const int lucky = selected[static_cast<std::size_t>(rng.uniform_int(
            0, static_cast<int>(selected.size()) - 1))];
        values[static_cast<std::size_t>(lucky)] += rng.uniform(0.01, 1.0);
        auto after = knapsack_select(values, lengths, budget);
        CHECK(std::find(after.begin(), after.end(), lucky) != after.end());
    }
}

TEST_CASE("scores_to_summary composes segmentation, averaging and selection") {
    Rng rng(23);
    const int frames = 100;
    FeatureSequence x = random_features(frames, 4, rng);
    ScoreSequence s;
    for (int i = 0; i < frames; ++i) s.values.push_back(rng.uniform_f(0.0f, 1.0f));

    Summary sum = scores_to_summary(x, s, std::nullopt, 0.15);
    CHECK(sum.budget_frames == 15);
    CHECK(sum.selected_frames() <= 15);
    CHECK(static_cast<int>(sum.frame_mask.size()) == frames);

    // deterministic for fixed inputs
    Summary again = scores_to_summary(x, s, std::nullopt, 0.15);
    CHECK(sum.frame_mask == again.frame_mask);
    CHECK(sum.selected_shots == again.selected_shots);
}

TEST_CASE("summary respects the budget for every ratio and length") {
    Rng rng(29);
    for (int inst = 0; inst < 25; ++inst) {
        const int frames = rng.uniform_int(4, 80);
        FeatureSequence x = random_features(frames, 3, rng);
        ScoreSequence s;
        for (int i = 0; i < frames; ++i) s.values.push_back(rng.uniform_f(0.0f, 1.0f));
        const double ratio = rng.uniform(0.05, 0.5);
        Summary sum = scores_to_summary(x, s, std::nullopt, ratio);
        CHECK(sum.selected_frames() <= static_cast<int>(std::floor(ratio * frames + 1e-9)));
        // frame mask is exactly the union of selected shots
        int from_shots = 0;
        ShotSegmentation seg = kts_changepoints(x, default_max_segments(frames), std::nullopt);
        for (int shot : sum.selected_shots) from_shots += seg.shot_length(shot);
        CHECK(from_shots == sum.selected_frames());
    }
}

TEST_CASE("planted high-score shots short enough to fit are selected") {
    // three shots of clearly different prototypes; the two short high-score
    // shots fit the budget, the long low-score one does not
    FeatureSequence x;
    x.frames = 40;
    x.dim = 3;
    x.values.resize(40 * 3);
    ScoreSequence s;
    s.values.resize(40);
    ShotSegmentation seg;
    seg.boundaries = {0, 3, 34, 40};
    for (int f = 0; f < 40; ++f) {
        const int shot = f < 3 ? 0 : (f < 34 ? 1 : 2);
        for (int k = 0; k < 3; ++k) x.at(f, k) = static_cast<float>(shot * 2 + k);
        s.values[static_cast<std::size_t>(f)] = shot == 1 ? 0.1f : 0.95f;
    }
    Summary sum = scores_to_summary(x, s, seg, 0.25);  // budget 10 frames
    CHECK(sum.selected_shots == std::vector<int>({0, 2}));
    CHECK(sum.selected_frames() == 9);
}

TEST_CASE("value-by-length flag switches the knapsack objective") {
    ScoreSequence s;
    s.values = {0.9f, 0.9f, 0.5f, 0.5f, 0.5f, 0.5f, 0.5f, 0.5f, 0.5f, 0.5f};
    ShotSegmentation seg;
    seg.boundaries = {0, 2, 10};
    // budget 8: mean-score objective picks the short high shot; the
    // length-weighted objective prefers the long one (0.5*8 > 0.9*2)
    Summary by_mean = scores_to_summary(s, seg, 0.8, false);
    CHECK(by_mean.selected_shots == std::vector<int>({0}));
    Summary by_mass = scores_to_summary(s, seg, 0.8, true);
    CHECK(by_mass.selected_shots == std::vector<int>({1}));
}

TEST_CASE("kts recovers planted boundaries from noiseless synthetic structure") {
    Rng rng(31);
    FeatureSequence x;
    x.frames = 48;
    x.dim = 6;
    x.values.resize(48 * 6);
    std::vector<int> planted{0, 11, 25, 36, 48};
    for (std::size_t s = 0; s + 1 < planted.size(); ++s) {
        std::vector<float> proto(6);
        for (auto& v : proto) v = rng.uniform_f(-2.0f, 2.0f);
        for (int f = planted[s]; f < planted[s + 1]; ++f)
            for (int k = 0; k < 6; ++k) x.at(f, k) = proto[static_cast<std::size_t>(k)];
    }
    ShotSegmentation seg = kts_changepoints(x, 8, std::nullopt);
    CHECK(seg.boundaries == planted);
}
