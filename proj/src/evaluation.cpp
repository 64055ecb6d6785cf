#include "caan/evaluation.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "caan/postprocess.hpp"

namespace caan {

FoldPlan make_fold_plan(const std::vector<std::string>& ids, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold plan: need at least 2 folds");
    if (static_cast<int>(ids.size()) < k)
        throw ConfigError("fold plan: " + std::to_string(ids.size()) + " videos cannot form " +
                          std::to_string(k) + " folds");
    std::vector<std::string> shuffled = ids;
    Rng rng(seed);
    rng.shuffle(shuffled);
    FoldPlan plan;
    plan.seed = seed;
    const int n = static_cast<int>(shuffled.size());
    const int base = n / k, extra = n % k;
    int pos = 0;
    for (int f = 0; f < k; ++f) {
        const int len = base + (f < extra ? 1 : 0);
        plan.folds.emplace_back(shuffled.begin() + pos, shuffled.begin() + pos + len);
        pos += len;
    }
    return plan;
}

Summary summary_from_intervals(const std::vector<Interval>& intervals, int frames) {
    Summary s;
    s.frame_mask.assign(static_cast<std::size_t>(frames), 0);
    for (const auto& iv : intervals) {
        if (iv.first < 0 || iv.second > frames || iv.first >= iv.second)
            throw BoundsError("interval [" + std::to_string(iv.first) + "," + std::to_string(iv.second) +
                              ") outside [0," + std::to_string(frames) + ")");
        for (int f = iv.first; f < iv.second; ++f) s.frame_mask[static_cast<std::size_t>(f)] = 1;
    }
    s.budget_frames = s.selected_frames();
    return s;
}

VideoEval evaluate_video(Generator& g, const VideoRecord& rec, double ratio, AggregationMode mode) {
    VideoEval ev;
    ev.id = rec.id;
    GenerateResult gen = g.generate(rec.features);
    Summary pred = scores_to_summary(rec.features, gen.score_values, rec.change_points, ratio);

    if (!rec.user_summaries.empty()) {
        std::vector<Summary> users;
        users.reserve(rec.user_summaries.size());
        for (const auto& u : rec.user_summaries)
            users.push_back(summary_from_intervals(u, rec.features.frames));
        double sum_p = 0.0, sum_r = 0.0;
        for (const auto& u : users) {
            PRF prf = fscore(pred, u);
            sum_p += prf.precision;
            sum_r += prf.recall;
        }
        ev.fscore = fscore_multi_user(pred, users, mode);
        ev.precision = sum_p / static_cast<double>(users.size());
        ev.recall = sum_r / static_cast<double>(users.size());
    }
    if (rec.gt_scores) {
        try {
            ev.tau = kendall_tau(gen.score_values.values, rec.gt_scores->values);
            ev.rho = spearman_rho(gen.score_values.values, rec.gt_scores->values);
            ev.has_correlation = true;
        } catch (const UndefinedCorrelationError&) {
            ev.has_correlation = false;
        }
    }
    return ev;
}

namespace {

EvalReport finish_report(EvalReport report) {
    double f = 0.0, tau = 0.0, rho = 0.0;
    int videos = 0, corr = 0;
    for (const auto& fold : report.folds)
        for (const auto& v : fold.videos) {
            f += v.fscore;
            ++videos;
            if (v.has_correlation) {
                tau += v.tau;
                rho += v.rho;
                ++corr;
            }
        }
    report.mean_fscore = videos > 0 ? f / videos : 0.0;
    report.correlation_count = corr;
    report.mean_tau = corr > 0 ? tau / corr : 0.0;
    report.mean_rho = corr > 0 ? rho / corr : 0.0;
    return report;
}

FoldReport run_fold(int fold_index, const std::vector<const VideoRecord*>& train,
                    const std::vector<const VideoRecord*>& test, const TrainingConfig& config,
                    std::uint64_t fold_seed, AggregationMode mode, double ratio) {
    {
        std::set<std::string> train_ids;
        for (const auto* r : train) train_ids.insert(r->id);
        for (const auto* r : test)
            if (train_ids.count(r->id))
                throw LeakError("cross-validation: id " + r->id + " appears in both train and test");
    }
    TrainingConfig cfg = config;
    cfg.seed = fold_seed;
    Trainer trainer(cfg);
    std::vector<TrainVideo> items;
    items.reserve(train.size());
    for (const auto* r : train) {
        TrainVideo tv;
        tv.features = r->features;
        if (r->gt_scores) tv.gt_scores = r->gt_scores;
        items.push_back(std::move(tv));
    }
    trainer.train(items);

    FoldReport report;
    report.fold = fold_index;
    double mean_f = 0.0;
    for (const auto* r : test) {
        VideoEval ev = evaluate_video(trainer.generator(), *r, ratio, mode);
        mean_f += ev.fscore;
        report.videos.push_back(std::move(ev));
    }
    report.mean_fscore = test.empty() ? 0.0 : mean_f / static_cast<double>(test.size());
    return report;
}

}  // namespace

EvalReport five_fold_cv(const std::vector<VideoRecord>& dataset, const TrainingConfig& config,
                        std::uint64_t seed, AggregationMode mode,
                        const std::vector<VideoRecord>& extra_train, double ratio) {
    if (dataset.size() < 5)
        throw ConfigError("five_fold_cv: need at least 5 videos, got " + std::to_string(dataset.size()));
    std::vector<std::string> ids;
    std::map<std::string, const VideoRecord*> by_id;
    for (const auto& r : dataset) {
        ids.push_back(r.id);
        by_id[r.id] = &r;
    }
    FoldPlan plan = make_fold_plan(ids, 5, seed);

    EvalReport report;
    for (int f = 0; f < 5; ++f) {
        std::vector<const VideoRecord*> train, test;
        for (const auto& id : plan.folds[static_cast<std::size_t>(f)]) test.push_back(by_id.at(id));
        for (int g = 0; g < 5; ++g)
            if (g != f)
                for (const auto& id : plan.folds[static_cast<std::size_t>(g)])
                    train.push_back(by_id.at(id));
        for (const auto& r : extra_train) train.push_back(&r);
        report.folds.push_back(
            run_fold(f, train, test, config, Rng::mix(seed, static_cast<std::uint64_t>(f)), mode, ratio));
    }
    return finish_report(std::move(report));
}

EvalReport transfer_eval(const std::vector<VideoRecord>& train_videos,
                         const std::vector<VideoRecord>& target, const TrainingConfig& config,
                         std::uint64_t seed, AggregationMode mode, double ratio) {
    if (train_videos.empty()) throw ConfigError("transfer_eval: empty training set");
    if (target.empty()) throw ConfigError("transfer_eval: empty target set");
    std::vector<const VideoRecord*> train, test;
    for (const auto& r : train_videos) train.push_back(&r);
    for (const auto& r : target) test.push_back(&r);
    EvalReport report;
    report.folds.push_back(run_fold(0, train, test, config, Rng::mix(seed, 0), mode, ratio));
    return finish_report(std::move(report));
}

}  // namespace caan
