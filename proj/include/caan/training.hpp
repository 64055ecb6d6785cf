#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "caan/discriminator.hpp"
#include "caan/generator.hpp"
#include "caan/types.hpp"

namespace caan {

struct TrainingConfig {
    float alpha = 0.3f;               // target mean score
    float lr_generator = 3e-5f;
    float lr_discriminator = 1e-5f;
    int epochs = 100;
    int steps_per_video = 1;
    std::uint64_t seed = 0;
    int feature_dim = 1024;
    int base_channels = 64;
    int score_hidden = 1024;
    int disc_hidden = 1024;
    bool supervised = false;
    bool non_saturating_g_loss = false;
    float clip_norm = 5.0f;
    int checkpoint_every = 0;         // epochs between checkpoints; 0 = none
    int early_stop_patience = 20;     // epochs without total-loss improvement

    void validate() const;
    GeneratorConfig generator_config() const { return {feature_dim, base_channels, score_hidden}; }
    DiscriminatorConfig discriminator_config() const { return {feature_dim, disc_hidden}; }
};

struct LossReport {
    double adv_d = 0.0;
    double adv_g = 0.0;
    double rec = 0.0;
    double spar = 0.0;
    double sup = 0.0;
    double total = 0.0;
    bool has_sup = false;
};

struct TrainVideo {
    FeatureSequence features;
    std::optional<ScoreSequence> gt_scores;
};

// Alternating adversarial trainer: per video, one discriminator update on
// detached generator outputs, then one generator update through the full
// graph. All loss terms enter with unit weight.
class Trainer {
public:
    explicit Trainer(const TrainingConfig& cfg);

    LossReport train_step(const FeatureSequence& video, const ScoreSequence* gt = nullptr);

    // on_epoch(epoch, mean report); on_checkpoint(epoch) fires per cadence.
    std::vector<LossReport> train(const std::vector<TrainVideo>& dataset,
                                  const std::function<void(int, const LossReport&)>& on_epoch = {},
                                  const std::function<void(int)>& on_checkpoint = {});

    Generator& generator() { return *generator_; }
    Discriminator& discriminator() { return *discriminator_; }
    const TrainingConfig& config() const { return cfg_; }

private:
    TrainingConfig cfg_;
    std::unique_ptr<Generator> generator_;
    std::unique_ptr<Discriminator> discriminator_;
    std::unique_ptr<Adam> opt_g_;
    std::unique_ptr<Adam> opt_d_;
};

}  // namespace caan
