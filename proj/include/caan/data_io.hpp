#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "caan/types.hpp"

namespace caan {

// One video with its optional annotations. Sidecar fields always agree
// with features.frames; loaders reject rather than repair.
struct VideoRecord {
    std::string id;
    FeatureSequence features;
    std::optional<ScoreSequence> gt_scores;
    std::vector<std::vector<Interval>> user_summaries;  // per user, half-open, non-overlapping
    std::optional<ShotSegmentation> change_points;
};

// Binary feature file: magic "CAAN", version byte 0x01, uint32 LE frame
// count, uint32 LE dimension, then frames*dim float32 LE row-major.
void save_features(const std::filesystem::path& path, const FeatureSequence& x);
FeatureSequence load_features(const std::filesystem::path& path);

// JSON annotation sidecar (gt_scores, change_points, user_summaries).
void save_annotations(const std::filesystem::path& path, const VideoRecord& rec);
void load_annotations(const std::filesystem::path& path, VideoRecord& rec);

// Directory convention: <id>.feat + <id>.json per video.
void save_dataset(const std::filesystem::path& dir, const std::vector<VideoRecord>& records);
std::vector<VideoRecord> load_dataset(const std::filesystem::path& dir);

// Synthetic data with planted structure: piecewise-constant segment
// prototypes plus Gaussian noise; a seeded subset of segments is marked
// important and receives boosted-magnitude prototypes and high scores.
struct SyntheticSpec {
    int videos = 20;
    int frames_min = 96;
    int frames_max = 160;
    int dim = 64;
    int segments_min = 4;
    int segments_max = 8;
    float important_fraction = 0.25f;
    float noise_sigma = 0.1f;
    float importance_boost = 3.0f;  // prototype magnitude factor for important segments
    std::uint64_t seed = 0;

    void validate() const;
};

std::vector<VideoRecord> gen_synthetic(const SyntheticSpec& spec);

// Dataset split assembly for the three evaluation settings.
enum class SplitMode { Canonical, Augmented, Transfer };

struct Split {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

std::vector<Split> assemble_split(SplitMode mode, const std::vector<std::string>& target_ids,
                                  const std::vector<std::string>& aux_ids, int k, std::uint64_t seed);

}  // namespace caan
