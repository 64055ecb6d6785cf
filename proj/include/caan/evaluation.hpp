#pragma once

#include <string>
#include <vector>

#include "caan/data_io.hpp"
#include "caan/metrics.hpp"
#include "caan/training.hpp"

namespace caan {

struct FoldPlan {
    std::vector<std::vector<std::string>> folds;  // disjoint, sizes differ by at most 1
    std::uint64_t seed = 0;
};

FoldPlan make_fold_plan(const std::vector<std::string>& ids, int k, std::uint64_t seed);

struct VideoEval {
    std::string id;
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;  // percent, aggregated over users
    double tau = 0.0;
    double rho = 0.0;
    bool has_correlation = false;
};

struct FoldReport {
    int fold = 0;
    std::vector<VideoEval> videos;
    double mean_fscore = 0.0;
};

struct EvalReport {
    std::vector<FoldReport> folds;
    double mean_fscore = 0.0;  // mean over all evaluated videos
    double mean_tau = 0.0;
    double mean_rho = 0.0;
    int correlation_count = 0;
};

// Scores a single video with a trained generator and compares the key-shot
// summary against the record's user summaries. Stored change points, when
// present, bypass KTS.
VideoEval evaluate_video(Generator& g, const VideoRecord& rec, double ratio, AggregationMode mode);

// Seeded 5-fold cross-validation: train on four folds (plus optional extra
// videos), test on the held-out fold, rotate. Asserts that no id leaks
// between the train and test side of any fold.
EvalReport five_fold_cv(const std::vector<VideoRecord>& dataset, const TrainingConfig& config,
                        std::uint64_t seed, AggregationMode mode,
                        const std::vector<VideoRecord>& extra_train = {}, double ratio = 0.15);

// Transfer setting: train once on the auxiliary videos, test on the target.
EvalReport transfer_eval(const std::vector<VideoRecord>& train_videos,
                         const std::vector<VideoRecord>& target, const TrainingConfig& config,
                         std::uint64_t seed, AggregationMode mode, double ratio = 0.15);

Summary summary_from_intervals(const std::vector<Interval>& intervals, int frames);

}  // namespace caan
