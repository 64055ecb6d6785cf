#include "caan/discriminator.hpp"

#include "caan/generator.hpp"

namespace caan {

Discriminator::Discriminator(DiscriminatorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.feature_dim < 1 || cfg.hidden < 1)
        throw ConfigError("discriminator: dimensions must be positive");
    Rng rng(seed);
    const int d = cfg.feature_dim, h = cfg.hidden;
    auto track = [this](const std::string& name, Tensor t) {
        params_.push_back(t);
        names_.push_back(name);
        return t;
    };
    lstm_.w_input = Tensor::zeros({d, 4 * h}, true);
    init_uniform_fanin(lstm_.w_input, d, rng);
    track("lstm.w_input", lstm_.w_input);
    lstm_.w_hidden = Tensor::zeros({h, 4 * h}, true);
    init_uniform_fanin(lstm_.w_hidden, h, rng);
    track("lstm.w_hidden", lstm_.w_hidden);
    lstm_.bias = track("lstm.bias", Tensor::zeros({4 * h}, true));
    fc_w_ = Tensor::zeros({h, 1}, true);
    init_uniform_fanin(fc_w_, h, rng);
    track("fc.weight", fc_w_);
    fc_b_ = track("fc.bias", Tensor::zeros({1}, true));
}

DiscriminatorResult Discriminator::discriminate(const Tensor& seq) {
    if (seq.ndim() != 2 || seq.dim(1) != cfg_.feature_dim)
        throw DimensionError("discriminator: input " + shape_str(seq.shape()) +
                             " does not match feature dim " + std::to_string(cfg_.feature_dim));
    LstmOutput lstm = lstm_forward(seq, lstm_);
    Tensor last = slice_rows(lstm.hidden_all, seq.dim(0) - 1, seq.dim(0));  // 1 x H
    Tensor logit = add_rowvec(matmul(last, fc_w_), fc_b_);
    Tensor prob = reshape(sigmoid(logit), {1});
    return {prob, lstm.hidden_last};
}

DiscriminatorResult Discriminator::discriminate(const FeatureSequence& seq) {
    validate_feature_sequence(seq);
    return discriminate(tensor_from_features(seq));
}

std::int64_t Discriminator::param_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
}

std::int64_t Discriminator::expected_param_count(const DiscriminatorConfig& cfg) {
    const std::int64_t d = cfg.feature_dim, h = cfg.hidden;
    return d * 4 * h + h * 4 * h + 4 * h + h + 1;
}

}  // namespace caan
