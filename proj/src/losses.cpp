#include "caan/losses.hpp"

namespace caan {

namespace {
constexpr float kProbEps = 1e-7f;
}

AdversarialLosses adversarial_losses(const Tensor& prob_real, const Tensor& prob_weighted,
                                     bool non_saturating) {
    if (prob_real.numel() != 1 || prob_weighted.numel() != 1)
        throw ContractError("adversarial_losses expects scalar probabilities");
    Tensor pr = clamp(prob_real, kProbEps, 1.0f - kProbEps);
    Tensor pw = clamp(prob_weighted, kProbEps, 1.0f - kProbEps);
    Tensor log_pr = log_elem(pr);
    Tensor log_one_minus_pw = log_elem(scale_add(pw, -1.0f, 1.0f));
    AdversarialLosses out;
    out.d_loss = scale_add(add(log_pr, log_one_minus_pw), -1.0f, 0.0f);
    out.g_loss = non_saturating ? scale_add(log_elem(pw), -1.0f, 0.0f) : log_one_minus_pw;
    return out;
}

Tensor generator_adversarial_loss(const Tensor& prob_weighted, bool non_saturating) {
    if (prob_weighted.numel() != 1)
        throw ContractError("generator_adversarial_loss expects a scalar probability");
    Tensor pw = clamp(prob_weighted, kProbEps, 1.0f - kProbEps);
    return non_saturating ? scale_add(log_elem(pw), -1.0f, 0.0f)
                          : log_elem(scale_add(pw, -1.0f, 1.0f));
}

Tensor reconstruction_loss(const Tensor& phi_real, const Tensor& phi_weighted) {
    if (phi_real.shape() != phi_weighted.shape())
        throw DimensionError("reconstruction_loss: embedding shapes " + shape_str(phi_real.shape()) +
                             " and " + shape_str(phi_weighted.shape()) + " differ");
    Tensor diff = sub(phi_real, phi_weighted);
    return sqrt_elem(sum(mul(diff, diff)));
}

Tensor sparsity_loss(const Tensor& scores, float alpha) {
    if (scores.numel() == 0) throw DegenerateInputError("sparsity_loss: empty score sequence");
    return abs_elem(scale_add(mean(scores), 1.0f, -alpha));
}

Tensor supervised_loss(const Tensor& scores, const ScoreSequence& gt) {
    if (scores.numel() != static_cast<std::int64_t>(gt.values.size()))
        throw DimensionError("supervised_loss: " + std::to_string(scores.numel()) +
                             " predictions for " + std::to_string(gt.values.size()) + " targets");
    Tensor target = Tensor::from_values(scores.shape(),
                                        std::vector<double>(gt.values.begin(), gt.values.end()));
    Tensor diff = sub(scores, target);
    return mean(mul(diff, diff));
}

}  // namespace caan
