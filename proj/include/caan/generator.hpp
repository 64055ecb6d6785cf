#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "caan/tensor.hpp"
#include "caan/types.hpp"

namespace caan {

struct GeneratorConfig {
    int feature_dim = 1024;   // d
    int base_channels = 64;   // first double-conv width; doubles 4 times
    int score_hidden = 1024;  // width of the first score-head linear
};

struct AttentionResult {
    Tensor scores;    // F x 1, strictly in (0,1)
    Tensor attended;  // F x d, softmax(QK^T/sqrt(d)) V
    Tensor weights;   // F x F, row-stochastic
};

struct GenerateResult {
    Tensor scores;    // F x 1
    Tensor weighted;  // F x d, rows scaled by score
    ScoreSequence score_values;
};

// Convolutional-attentive score generator: a temporal encoder-decoder
// (double convolutions, 4x pooling/deconvolution, skip connections at every
// resolution) refines the input features, then scaled dot-product attention
// with the raw features as query produces per-frame importance scores.
class Generator {
public:
    Generator(GeneratorConfig cfg, std::uint64_t seed);

    Tensor fcsn_forward(const Tensor& x);
    AttentionResult attention_forward(const Tensor& x, const Tensor& y);
    static Tensor weighted_features(const Tensor& x, const Tensor& scores);
    GenerateResult generate(const Tensor& x);
    GenerateResult generate(const FeatureSequence& x);

    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<std::string>& param_names() const { return names_; }
    std::int64_t param_count() const;
    static std::int64_t expected_param_count(const GeneratorConfig& cfg);
    const GeneratorConfig& config() const { return cfg_; }

private:
    struct ConvBlock {
        Tensor k1, g1, b1;  // conv kernel + norm affine
        Tensor k2, g2, b2;
    };
    struct DecoderStage {
        Tensor up;  // width-2 stride-2 deconvolution kernel
        ConvBlock block;
    };

    Tensor double_conv(const ConvBlock& b, const Tensor& x);
    ConvBlock make_block(const std::string& name, int c_in, int c_out, Rng& rng);
    Tensor add_param(const std::string& name, Shape shape, int fan_in, Rng& rng);
    Tensor add_affine(const std::string& name, int n, float value);

    GeneratorConfig cfg_;
    std::vector<Tensor> params_;
    std::vector<std::string> names_;

    ConvBlock stem_;
    std::vector<ConvBlock> enc_;
    std::vector<DecoderStage> dec_;
    Tensor final_kernel_, final_bias_;
    Tensor wq_, wk_, wv_;
    Tensor ln_gamma_, ln_beta_;
    Tensor score_w1_, score_b1_, score_w2_, score_b2_;
};

Tensor tensor_from_features(const FeatureSequence& x, bool requires_grad = false);
ScoreSequence scores_from_tensor(const Tensor& s);

}  // namespace caan
