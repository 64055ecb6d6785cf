#include "caan/generator.hpp"

#include <cmath>

namespace caan {

namespace {
constexpr float kNormEps = 1e-5f;
constexpr int kStages = 4;  // pooling/deconvolution levels
}

Tensor tensor_from_features(const FeatureSequence& x, bool requires_grad) {
    std::vector<double> values(x.values.begin(), x.values.end());
    return Tensor::from_values({x.frames, x.dim}, std::move(values), requires_grad);
}

ScoreSequence scores_from_tensor(const Tensor& s) {
    ScoreSequence out;
    out.values.reserve(s.values().size());
    for (double v : s.values()) out.values.push_back(static_cast<float>(v));
    return out;
}

Tensor Generator::add_param(const std::string& name, Shape shape, int fan_in, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    init_uniform_fanin(t, fan_in, rng);
    params_.push_back(t);
    names_.push_back(name);
    return t;
}

Tensor Generator::add_affine(const std::string& name, int n, float value) {
    Tensor t = Tensor::full({n}, value, true);
    params_.push_back(t);
    names_.push_back(name);
    return t;
}

Generator::ConvBlock Generator::make_block(const std::string& name, int c_in, int c_out, Rng& rng) {
    ConvBlock b;
    b.k1 = add_param(name + ".conv1.kernel", {3, c_in, c_out}, 3 * c_in, rng);
    b.g1 = add_affine(name + ".norm1.gamma", c_out, 1.0f);
    b.b1 = add_affine(name + ".norm1.beta", c_out, 0.0f);
    b.k2 = add_param(name + ".conv2.kernel", {3, c_out, c_out}, 3 * c_out, rng);
    b.g2 = add_affine(name + ".norm2.gamma", c_out, 1.0f);
    b.b2 = add_affine(name + ".norm2.beta", c_out, 0.0f);
    return b;
}

Generator::Generator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.feature_dim < 1 || cfg.base_channels < 1 || cfg.score_hidden < 1)
        throw ConfigError("generator: dimensions must be positive");
    Rng rng(seed);
    const int d = cfg.feature_dim;
    const int c0 = cfg.base_channels;
    // Channel schedule c0, 2c0, ... 16c0 across the four encoder stages.
    std::vector<int> ch(kStages + 1);
    for (int i = 0; i <= kStages; ++i) ch[static_cast<std::size_t>(i)] = c0 << i;

    stem_ = make_block("fcsn.stem", d, ch[0], rng);
    for (int i = 0; i < kStages; ++i)
        enc_.push_back(make_block("fcsn.enc" + std::to_string(i), ch[static_cast<std::size_t>(i)],
                                  ch[static_cast<std::size_t>(i + 1)], rng));
    for (int i = 0; i < kStages; ++i) {
        const int c_in = ch[static_cast<std::size_t>(kStages - i)];
        const int c_out = ch[static_cast<std::size_t>(kStages - i - 1)];
        DecoderStage st;
        st.up = add_param("fcsn.dec" + std::to_string(i) + ".up.kernel", {2, c_out, c_in}, c_in, rng);
        st.block = make_block("fcsn.dec" + std::to_string(i), 2 * c_out, c_out, rng);
        dec_.push_back(st);
    }
    final_kernel_ = add_param("fcsn.final.kernel", {1, ch[0], d}, ch[0], rng);
    final_bias_ = add_affine("fcsn.final.bias", d, 0.0f);

    wq_ = add_param("attn.wq", {d, d}, d, rng);
    wk_ = add_param("attn.wk", {d, d}, d, rng);
    wv_ = add_param("attn.wv", {d, d}, d, rng);
    ln_gamma_ = add_affine("attn.norm.gamma", d, 1.0f);
    ln_beta_ = add_affine("attn.norm.beta", d, 0.0f);
    score_w1_ = add_param("score.fc1.weight", {d, cfg.score_hidden}, d, rng);
    score_b1_ = add_affine("score.fc1.bias", cfg.score_hidden, 0.0f);
    score_w2_ = add_param("score.fc2.weight", {cfg.score_hidden, 1}, cfg.score_hidden, rng);
    score_b2_ = add_affine("score.fc2.bias", 1, 0.0f);
}

Tensor Generator::double_conv(const ConvBlock& b, const Tensor& x) {
    // The deepest stage can be a single time step after four poolings;
    // normalization there degenerates to its beta offset.
    Tensor h = conv1d(x, b.k1, 1, 1);
    h = detail::norm_layer_impl(h, b.g1, b.b1, kNormEps, NormAxis::Temporal, true);
    h = relu(h);
    h = conv1d(h, b.k2, 1, 1);
    h = detail::norm_layer_impl(h, b.g2, b.b2, kNormEps, NormAxis::Temporal, true);
    return relu(h);
}

Tensor Generator::fcsn_forward(const Tensor& x) {
    if (x.ndim() != 2 || x.dim(1) != cfg_.feature_dim)
        throw DimensionError("fcsn: input " + shape_str(x.shape()) + " does not match feature dim " +
                             std::to_string(cfg_.feature_dim));
    const int frames = x.dim(0);
    if (frames < 2) throw DegenerateInputError("fcsn: need at least 2 frames, got " + std::to_string(frames));

    const int mult = 1 << kStages;
    const int padded = (frames + mult - 1) / mult * mult;
    Tensor cur = padded > frames ? pad_rows(x, padded) : x;

    std::vector<Tensor> skips;
    cur = double_conv(stem_, cur);
    skips.push_back(cur);
    for (int i = 0; i < kStages; ++i) {
        cur = max_pool1d(cur, 2, 2);
        cur = double_conv(enc_[static_cast<std::size_t>(i)], cur);
        if (i + 1 < kStages) skips.push_back(cur);
    }
    for (int i = 0; i < kStages; ++i) {
        const auto& st = dec_[static_cast<std::size_t>(i)];
        Tensor up = conv1d_transpose(cur, st.up, 2, 0);
        Tensor cat = concat_cols(up, skips[static_cast<std::size_t>(kStages - 1 - i)]);
        cur = double_conv(st.block, cat);
    }
    Tensor y = add_rowvec(conv1d(cur, final_kernel_, 1, 0), final_bias_);
    if (padded > frames) y = slice_rows(y, 0, frames);
    return y;
}

AttentionResult Generator::attention_forward(const Tensor& x, const Tensor& y) {
    if (x.shape() != y.shape())
        throw DimensionError("attention: query features " + shape_str(x.shape()) +
                             " and key/value features " + shape_str(y.shape()) + " differ");
    if (x.dim(1) != cfg_.feature_dim)
        throw DimensionError("attention: input " + shape_str(x.shape()) + " does not match feature dim " +
                             std::to_string(cfg_.feature_dim));
    const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(cfg_.feature_dim));
    Tensor q = matmul(x, wq_);
    Tensor k = matmul(y, wk_);
    Tensor v = matmul(y, wv_);
    Tensor weights = softmax_rows(scale_add(matmul(q, transpose(k)), inv_sqrt_d, 0.0f));
    Tensor attended = matmul(weights, v);
    Tensor normed = norm_layer(add(attended, x), ln_gamma_, ln_beta_, kNormEps, NormAxis::Feature);
    Tensor hidden = relu(add_rowvec(matmul(normed, score_w1_), score_b1_));
    Tensor scores = sigmoid(add_rowvec(matmul(hidden, score_w2_), score_b2_));
    return {scores, attended, weights};
}

Tensor Generator::weighted_features(const Tensor& x, const Tensor& scores) {
    if (scores.numel() != x.dim(0))
        throw DimensionError("weighted_features: " + std::to_string(scores.numel()) +
                             " scores for " + std::to_string(x.dim(0)) + " frames");
    return rowwise_scale(x, scores);
}

GenerateResult Generator::generate(const Tensor& x) {
    Tensor y = fcsn_forward(x);
    AttentionResult att = attention_forward(x, y);
    Tensor weighted = weighted_features(x, att.scores);
    return {att.scores, weighted, scores_from_tensor(att.scores)};
}

GenerateResult Generator::generate(const FeatureSequence& x) {
    validate_feature_sequence(x);
    return generate(tensor_from_features(x));
}

std::int64_t Generator::param_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
}

std::int64_t Generator::expected_param_count(const GeneratorConfig& cfg) {
    const std::int64_t d = cfg.feature_dim, c0 = cfg.base_channels, hs = cfg.score_hidden;
    auto block = [](std::int64_t ci, std::int64_t co) { return 3 * ci * co + 3 * co * co + 4 * co; };
    std::int64_t n = block(d, c0);
    for (int i = 0; i < kStages; ++i) {
        const std::int64_t ci = c0 << i;
        n += block(ci, 2 * ci);
    }
    for (int i = 0; i < kStages; ++i) {
        const std::int64_t co = c0 << (kStages - 1 - i);
        n += 2 * co * (2 * co);        // deconvolution kernel
        n += block(2 * co, co);        // post-concat double conv
    }
    n += c0 * d + d;                   // final 1x1 conv + bias
    n += 3 * d * d + 2 * d;            // attention projections + layer norm
    n += d * hs + hs + hs + 1;         // score head
    return n;
}

}  // namespace caan
