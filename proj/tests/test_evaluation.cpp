#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "caan/evaluation.hpp"
#include "caan/metrics.hpp"
#include "caan/rng.hpp"

using namespace caan;

namespace {

Summary mask_of(std::initializer_list<int> selected, int frames) {
    Summary s;
    s.frame_mask.assign(static_cast<std::size_t>(frames), 0);
    for (int f : selected) s.frame_mask[static_cast<std::size_t>(f)] = 1;
    s.budget_frames = static_cast<int>(selected.size());
    return s;
}

Summary range_mask(int begin, int end, int frames) {
    Summary s;
    s.frame_mask.assign(static_cast<std::size_t>(frames), 0);
    for (int f = begin; f < end; ++f) s.frame_mask[static_cast<std::size_t>(f)] = 1;
    return s;
}

}  // namespace

TEST_CASE("fscore tabulated cases") {
    Summary a = range_mask(0, 20, 60);
    PRF same = fscore(a, a);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.fscore == 100.0);

    Summary b = range_mask(20, 40, 60);
    CHECK(fscore(a, b).fscore == 0.0);

    Summary c = range_mask(10, 30, 60);
    PRF half = fscore(a, c);
    CHECK(half.precision == 0.5);
    CHECK(half.recall == 0.5);
    CHECK(half.fscore == 50.0);
}

TEST_CASE("fscore conventions for empty summaries and mismatched lengths") {
    Summary empty = range_mask(0, 0, 40);
    Summary full = range_mask(0, 10, 40);
    CHECK(fscore(empty, full).fscore == 0.0);
    CHECK(fscore(full, empty).fscore == 0.0);
    CHECK(fscore(empty, empty).fscore == 0.0);
    Summary other = range_mask(0, 10, 50);
    CHECK_THROWS_AS(fscore(full, other), DimensionError);
}

TEST_CASE("fscore is symmetric in its arguments") {
    Rng rng(3);
    for (int inst = 0; inst < 50; ++inst) {
        const int frames = rng.uniform_int(5, 120);
        Summary a, b;
        a.frame_mask.resize(static_cast<std::size_t>(frames));
        b.frame_mask.resize(static_cast<std::size_t>(frames));
        for (int f = 0; f < frames; ++f) {
            a.frame_mask[static_cast<std::size_t>(f)] = rng.uniform() < 0.3 ? 1 : 0;
            b.frame_mask[static_cast<std::size_t>(f)] = rng.uniform() < 0.3 ? 1 : 0;
        }
        CHECK(fscore(a, b).fscore == doctest::Approx(fscore(b, a).fscore).epsilon(1e-12));
    }
}

TEST_CASE("multi-user aggregation by max and mean") {
    Summary pred = range_mask(0, 10, 40);
    std::vector<Summary> users{range_mask(0, 10, 40), range_mask(20, 30, 40)};
    CHECK(fscore_multi_user(pred, users, AggregationMode::Max) == 100.0);
    CHECK(fscore_multi_user(pred, users, AggregationMode::Mean) == 50.0);

    std::vector<Summary> one{range_mask(5, 15, 40)};
    CHECK(fscore_multi_user(pred, one, AggregationMode::Max) ==
          doctest::Approx(fscore(pred, one[0]).fscore));
    CHECK_THROWS_AS(fscore_multi_user(pred, {}, AggregationMode::Max), DegenerateInputError);

    // two users engineered to f-scores of 40% and 60%
    Summary p2 = range_mask(0, 10, 100);
    std::vector<Summary> two{mask_of({0, 1, 11, 12, 13, 14, 15}, 100), Summary{}};
    two[1] = range_mask(0, 10, 100);
    // first user: overlap 2, |pred|=10, |gt|=7 -> P=0.2 R=2/7 F=2*0.2*(2/7)/(0.2+2/7)*100
    const double f1 = fscore(p2, two[0]).fscore;
    const double f2 = fscore(p2, two[1]).fscore;
    CHECK(fscore_multi_user(p2, two, AggregationMode::Mean) ==
          doctest::Approx((f1 + f2) / 2.0).epsilon(1e-12));
    CHECK(fscore_multi_user(p2, two, AggregationMode::Max) == doctest::Approx(std::max(f1, f2)));
}

TEST_CASE("kendall tau at the extremes and against frozen tie-aware references") {
    std::vector<float> asc{1, 2, 3, 4, 5};
    std::vector<float> desc{5, 4, 3, 2, 1};
    CHECK(kendall_tau(asc, asc) == 1.0);
    CHECK(kendall_tau(asc, desc) == -1.0);

    // frozen tie-corrected references
    CHECK(kendall_tau({1, 2, 2, 3}, {1, 2, 3, 3}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(kendall_tau({0.5f, 0.5f, 0.1f, 0.9f, 0.9f, 0.2f}, {0.3f, 0.4f, 0.1f, 0.9f, 0.8f, 0.15f}) ==
          doctest::Approx(0.9309493362512627).epsilon(1e-12));
    CHECK(kendall_tau({1, 1, 2, 3}, {2, 2, 2, 1}) ==
          doctest::Approx(-0.7745966692414834).epsilon(1e-12));

    CHECK_THROWS_AS(kendall_tau({1.0f}, {1.0f}), DegenerateInputError);
    CHECK_THROWS_AS(kendall_tau({1, 2, 3}, {1, 2}), DimensionError);
    CHECK_THROWS_AS(kendall_tau({1, 1, 1}, {1, 2, 3}), UndefinedCorrelationError);
}

TEST_CASE("spearman rho at the extremes and against direct rank-pearson recomputation") {
    std::vector<float> asc{0.1f, 0.2f, 0.3f, 0.4f};
    std::vector<float> desc{0.4f, 0.3f, 0.2f, 0.1f};
    CHECK(spearman_rho(asc, asc) == 1.0);
    CHECK(spearman_rho(asc, desc) == -1.0);

    // frozen tie-aware references
    CHECK(spearman_rho({1, 2, 2, 3}, {1, 2, 3, 3}) ==
          doctest::Approx(0.8333333333333335).epsilon(1e-10));
    CHECK(spearman_rho({0.5f, 0.5f, 0.1f, 0.9f, 0.9f, 0.2f}, {0.3f, 0.4f, 0.1f, 0.9f, 0.8f, 0.15f}) ==
          doctest::Approx(0.9710083124552246).epsilon(1e-10));

    // direct rank-then-pearson oracle on random data
    Rng rng(7);
    std::vector<float> a(50), b(50);
    for (auto& v : a) v = rng.uniform_f(0.0f, 1.0f);
    for (auto& v : b) v = rng.uniform_f(0.0f, 1.0f);
    auto rank = [](const std::vector<float>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0.0, equal = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (v[j] < v[i]) ++less;
                if (v[j] == v[i]) ++equal;
            }
            r[i] = less + (equal + 1.0) / 2.0;
        }
        return r;
    };
    auto ra = rank(a), rb = rank(b);
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sa += ra[i];
        sb += rb[i];
        saa += ra[i] * ra[i];
        sbb += rb[i] * rb[i];
        sab += ra[i] * rb[i];
    }
    const double n = 50.0;
    const double want = (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
    CHECK(spearman_rho(a, b) == doctest::Approx(want).epsilon(1e-10));

    CHECK_THROWS_AS(spearman_rho({1, 1, 1}, {1, 2, 3}), UndefinedCorrelationError);
}

TEST_CASE("correlations are invariant under strictly increasing transforms") {
    Rng rng(11);
    std::vector<float> a(40), b(40);
    for (auto& v : a) v = rng.uniform_f(0.0f, 1.0f);
    for (auto& v : b) v = rng.uniform_f(0.0f, 1.0f);
    std::vector<float> a2(40), b2(40);
    for (std::size_t i = 0; i < 40; ++i) {
        a2[i] = 3.0f * a[i] + 1.0f;                       // affine increasing
        b2[i] = std::exp(b[i]);                           // nonlinear increasing
    }
    CHECK(kendall_tau(a, b) == doctest::Approx(kendall_tau(a2, b2)).epsilon(1e-12));
    CHECK(spearman_rho(a, b) == doctest::Approx(spearman_rho(a2, b2)).epsilon(1e-12));
}

TEST_CASE("independent random scores decorrelate at F=1000") {
    Rng rng(13);
    for (int seed = 0; seed < 20; ++seed) {
        std::vector<float> a(1000), b(1000);
        for (auto& v : a) v = rng.uniform_f(0.0f, 1.0f);
        for (auto& v : b) v = rng.uniform_f(0.0f, 1.0f);
        CHECK(std::fabs(kendall_tau(a, b)) < 0.08);
        CHECK(std::fabs(spearman_rho(a, b)) < 0.08);
    }
}

TEST_CASE("fold plans partition the ids with near-equal sizes deterministically") {
    std::vector<std::string> ids;
    for (int i = 0; i < 25; ++i) ids.push_back("v" + std::to_string(i));
    FoldPlan plan = make_fold_plan(ids, 5, 99);
    REQUIRE(plan.folds.size() == 5);
    std::set<std::string> seen;
    for (const auto& fold : plan.folds) {
        CHECK(fold.size() == 5);
        for (const auto& id : fold) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 25);

    FoldPlan again = make_fold_plan(ids, 5, 99);
    CHECK(plan.folds == again.folds);
    FoldPlan other = make_fold_plan(ids, 5, 100);
    CHECK(plan.folds != other.folds);

    // 27 videos: sizes differ by at most one
    for (int i = 25; i < 27; ++i) ids.push_back("v" + std::to_string(i));
    FoldPlan uneven = make_fold_plan(ids, 5, 1);
    std::vector<std::size_t> sizes;
    for (const auto& f : uneven.folds) sizes.push_back(f.size());
    CHECK(*std::max_element(sizes.begin(), sizes.end()) -
              *std::min_element(sizes.begin(), sizes.end()) <=
          1);
}

TEST_CASE("five fold cross validation evaluates every video exactly once") {
    SyntheticSpec spec;
    spec.videos = 10;
    spec.frames_min = 16;
    spec.frames_max = 24;
    spec.dim = 8;
    spec.segments_min = 2;
    spec.segments_max = 3;
    spec.seed = 5;
    auto dataset = gen_synthetic(spec);

    TrainingConfig cfg;
    cfg.feature_dim = 8;
    cfg.base_channels = 4;
    cfg.score_hidden = 8;
    cfg.disc_hidden = 8;
    cfg.epochs = 0;  // evaluation-path test only
    EvalReport report = five_fold_cv(dataset, cfg, 7, AggregationMode::Max);
    REQUIRE(report.folds.size() == 5);
    std::set<std::string> tested;
    for (const auto& fold : report.folds)
        for (const auto& v : fold.videos) CHECK(tested.insert(v.id).second);
    CHECK(tested.size() == 10);

    EvalReport again = five_fold_cv(dataset, cfg, 7, AggregationMode::Max);
    CHECK(report.mean_fscore == again.mean_fscore);
    for (std::size_t f = 0; f < 5; ++f)
        for (std::size_t v = 0; v < report.folds[f].videos.size(); ++v) {
            CHECK(report.folds[f].videos[v].fscore == again.folds[f].videos[v].fscore);
            CHECK(report.folds[f].videos[v].tau == again.folds[f].videos[v].tau);
        }
}

TEST_CASE("cross validation needs at least five videos") {
    SyntheticSpec spec;
    spec.videos = 4;
    spec.frames_min = 16;
    spec.frames_max = 20;
    spec.dim = 8;
    spec.seed = 1;
    auto dataset = gen_synthetic(spec);
    TrainingConfig cfg;
    cfg.feature_dim = 8;
    CHECK_THROWS_AS(five_fold_cv(dataset, cfg, 1, AggregationMode::Max), ConfigError);
}

TEST_CASE("extra training videos colliding with test ids are a leak") {
    SyntheticSpec spec;
    spec.videos = 6;
    spec.frames_min = 16;
    spec.frames_max = 20;
    spec.dim = 8;
    spec.segments_min = 2;
    spec.segments_max = 3;
    spec.seed = 4;
    auto dataset = gen_synthetic(spec);
    TrainingConfig cfg;
    cfg.feature_dim = 8;
    cfg.base_channels = 4;
    cfg.score_hidden = 8;
    cfg.disc_hidden = 8;
    cfg.epochs = 0;
    std::vector<VideoRecord> extra{dataset[0]};  // same id appears on both sides
    CHECK_THROWS_AS(five_fold_cv(dataset, cfg, 3, AggregationMode::Max, extra), LeakError);
}

TEST_CASE("transfer evaluation tests the whole target") {
    SyntheticSpec spec;
    spec.videos = 6;
    spec.frames_min = 16;
    spec.frames_max = 20;
    spec.dim = 8;
    spec.segments_min = 2;
    spec.segments_max = 3;
    spec.seed = 2;
    auto aux = gen_synthetic(spec);
    spec.seed = 3;
    auto target = gen_synthetic(spec);
    for (auto& rec : target) rec.id = "target_" + rec.id;  // ids are namespaced per dataset

    TrainingConfig cfg;
    cfg.feature_dim = 8;
    cfg.base_channels = 4;
    cfg.score_hidden = 8;
    cfg.disc_hidden = 8;
    cfg.epochs = 0;
    EvalReport report = transfer_eval(aux, target, cfg, 11, AggregationMode::Max);
    REQUIRE(report.folds.size() == 1);
    CHECK(report.folds[0].videos.size() == target.size());
}
