#pragma once

#include "caan/tensor.hpp"
#include "caan/types.hpp"

namespace caan {

struct AdversarialLosses {
    Tensor d_loss;  // -log p(X) - log(1 - p(X~))
    Tensor g_loss;  // log(1 - p(X~)), or -log p(X~) in non-saturating mode
};

// Probabilities are clamped to [1e-7, 1-1e-7] before any logarithm.
AdversarialLosses adversarial_losses(const Tensor& prob_real, const Tensor& prob_weighted,
                                     bool non_saturating = false);

// Just the generator side of the minimax objective.
Tensor generator_adversarial_loss(const Tensor& prob_weighted, bool non_saturating = false);

// Euclidean distance (not squared) between the two embeddings.
Tensor reconstruction_loss(const Tensor& phi_real, const Tensor& phi_weighted);

// Absolute deviation of the mean score from the target fraction alpha.
Tensor sparsity_loss(const Tensor& scores, float alpha);

// Mean squared error against ground-truth scores.
Tensor supervised_loss(const Tensor& scores, const ScoreSequence& gt);

}  // namespace caan
