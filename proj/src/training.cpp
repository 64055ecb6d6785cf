#include "caan/training.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "caan/losses.hpp"

namespace caan {

void TrainingConfig::validate() const {
    if (!(alpha > 0.0f && alpha < 1.0f))
        throw ConfigError("training: alpha must be in (0,1), got " + std::to_string(alpha));
    if (!(lr_generator > 0.0f) && lr_generator != 0.0f)
        throw ConfigError("training: generator learning rate must be non-negative");
    if (!(lr_discriminator > 0.0f) && lr_discriminator != 0.0f)
        throw ConfigError("training: discriminator learning rate must be non-negative");
    if (epochs < 0) throw ConfigError("training: epochs must be non-negative");
    if (steps_per_video < 1) throw ConfigError("training: steps_per_video must be positive");
    if (feature_dim < 1 || base_channels < 1 || score_hidden < 1 || disc_hidden < 1)
        throw ConfigError("training: model dimensions must be positive");
    if (clip_norm <= 0.0f) throw ConfigError("training: clip_norm must be positive");
}

Trainer::Trainer(const TrainingConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    generator_ = std::make_unique<Generator>(cfg_.generator_config(), Rng::mix(cfg_.seed, 1));
    discriminator_ = std::make_unique<Discriminator>(cfg_.discriminator_config(), Rng::mix(cfg_.seed, 2));
    AdamConfig ag;
    ag.lr = cfg_.lr_generator;
    AdamConfig ad;
    ad.lr = cfg_.lr_discriminator;
    opt_g_ = std::make_unique<Adam>(ag, generator_->params());
    opt_d_ = std::make_unique<Adam>(ad, discriminator_->params());
}

namespace {

double checked(const Tensor& t, const char* component) {
    const double v = static_cast<double>(t.item());
    if (!std::isfinite(v))
        throw NanError(std::string("non-finite loss component: ") + component);
    return v;
}

}  // namespace

LossReport Trainer::train_step(const FeatureSequence& video, const ScoreSequence* gt) {
    if (cfg_.supervised && gt == nullptr)
        throw ConfigError("train_step: supervised mode requires ground-truth scores");
    if (gt && static_cast<int>(gt->values.size()) != video.frames)
        throw DimensionError("train_step: " + std::to_string(gt->values.size()) +
                             " ground-truth scores for " + std::to_string(video.frames) + " frames");
    validate_feature_sequence(video);

    Tensor x = tensor_from_features(video);
    LossReport report;
    report.has_sup = cfg_.supervised;

    // Discriminator update. Generator outputs are computed without a tape,
    // so they enter as constants detached from the generator parameters.
    {
        GenerateResult frozen = generator_->generate(x);
        Tensor weighted = frozen.weighted.detach();
        zero_grads(discriminator_->params());
        Tape tape;
        {
            Tape::Scope scope(&tape);
            DiscriminatorResult on_real = discriminator_->discriminate(x);
            DiscriminatorResult on_weighted = discriminator_->discriminate(weighted);
            AdversarialLosses adv =
                adversarial_losses(on_real.prob, on_weighted.prob, cfg_.non_saturating_g_loss);
            report.adv_d = checked(adv.d_loss, "adv_d");
            tape.backward(adv.d_loss);
        }
        clip_grad_norm(discriminator_->params(), cfg_.clip_norm);
        opt_d_->step(discriminator_->params());
        tape.reset();
    }

    // Generator update through the recomputed graph.
    {
        zero_grads(generator_->params());
        zero_grads(discriminator_->params());
        Tape tape;
        {
            Tape::Scope scope(&tape);
            GenerateResult gen = generator_->generate(x);
            DiscriminatorResult on_weighted = discriminator_->discriminate(gen.weighted);
            Tensor phi_real;
            {
                Tape::Scope no_grad(nullptr);
                phi_real = discriminator_->discriminate(x).phi.detach();
            }
            Tensor g_adv = generator_adversarial_loss(on_weighted.prob, cfg_.non_saturating_g_loss);
            Tensor rec = reconstruction_loss(phi_real, on_weighted.phi);
            Tensor spar = sparsity_loss(gen.scores, cfg_.alpha);
            Tensor total = add(add(g_adv, rec), spar);
            if (cfg_.supervised) {
                Tensor sup = supervised_loss(gen.scores, *gt);
                total = add(total, sup);
                report.sup = checked(sup, "sup");
            }
            report.adv_g = checked(g_adv, "adv_g");
            report.rec = checked(rec, "rec");
            report.spar = checked(spar, "spar");
            report.total = checked(total, "total");
            tape.backward(total);
        }
        clip_grad_norm(generator_->params(), cfg_.clip_norm);
        opt_g_->step(generator_->params());
        // Gradients that flowed through the discriminator are discarded.
        zero_grads(discriminator_->params());
        tape.reset();
    }
    return report;
}

std::vector<LossReport> Trainer::train(const std::vector<TrainVideo>& dataset,
                                       const std::function<void(int, const LossReport&)>& on_epoch,
                                       const std::function<void(int)>& on_checkpoint) {
    if (dataset.empty()) throw ConfigError("train: empty dataset");
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        validate_feature_sequence(dataset[i].features);
        if (cfg_.supervised && !dataset[i].gt_scores)
            throw ConfigError("train: supervised mode but video " + std::to_string(i) +
                              " has no ground-truth scores");
    }

    Rng shuffle_rng(Rng::mix(cfg_.seed, 3));
    std::vector<LossReport> history;
    double best_total = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::vector<std::size_t> order(dataset.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle_rng.shuffle(order);

        LossReport mean;
        mean.has_sup = cfg_.supervised;
        int steps = 0;
        for (std::size_t idx : order) {
            const auto& item = dataset[idx];
            const ScoreSequence* gt = item.gt_scores ? &*item.gt_scores : nullptr;
            for (int s = 0; s < cfg_.steps_per_video; ++s) {
                LossReport r = train_step(item.features, gt);
                mean.adv_d += r.adv_d;
                mean.adv_g += r.adv_g;
                mean.rec += r.rec;
                mean.spar += r.spar;
                mean.sup += r.sup;
                mean.total += r.total;
                ++steps;
            }
        }
        mean.adv_d /= steps;
        mean.adv_g /= steps;
        mean.rec /= steps;
        mean.spar /= steps;
        mean.sup /= steps;
        mean.total /= steps;
        history.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
        if (cfg_.checkpoint_every > 0 && (epoch + 1) % cfg_.checkpoint_every == 0 && on_checkpoint)
            on_checkpoint(epoch);

        if (mean.total < best_total - 1e-6) {
            best_total = mean.total;
            stale_epochs = 0;
        } else if (++stale_epochs >= cfg_.early_stop_patience && cfg_.early_stop_patience > 0) {
            break;
        }
    }
    return history;
}

}  // namespace caan
