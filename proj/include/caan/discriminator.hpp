#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "caan/tensor.hpp"
#include "caan/types.hpp"

namespace caan {

struct DiscriminatorConfig {
    int feature_dim = 1024;
    int hidden = 1024;
};

struct DiscriminatorResult {
    Tensor prob;  // scalar, strictly in (0,1)
    Tensor phi;   // last LSTM hidden state, length hidden
};

// Sequence classifier: single unidirectional LSTM with zero initial state,
// fully connected layer on the last hidden state, sigmoid output. phi is
// exposed for the reconstruction objective.
class Discriminator {
public:
    Discriminator(DiscriminatorConfig cfg, std::uint64_t seed);

    DiscriminatorResult discriminate(const Tensor& seq);
    DiscriminatorResult discriminate(const FeatureSequence& seq);

    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<std::string>& param_names() const { return names_; }
    std::int64_t param_count() const;
    static std::int64_t expected_param_count(const DiscriminatorConfig& cfg);
    const DiscriminatorConfig& config() const { return cfg_; }

private:
    DiscriminatorConfig cfg_;
    std::vector<Tensor> params_;
    std::vector<std::string> names_;
    LstmParams lstm_;
    Tensor fc_w_, fc_b_;
};

}  // namespace caan
