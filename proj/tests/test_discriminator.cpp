#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "caan/checks.hpp"
#include "caan/discriminator.hpp"
#include "caan/losses.hpp"

using namespace caan;

namespace {

DiscriminatorConfig tiny_config() {
    DiscriminatorConfig cfg;
    cfg.feature_dim = 8;
    cfg.hidden = 8;
    return cfg;
}

Tensor rand_input(int frames, int dim, Rng& rng, float scale = 1.0f) {
    Tensor t = Tensor::zeros({frames, dim});
    for (auto& v : t.values()) v = rng.uniform_f(-scale, scale);
    return t;
}

}  // namespace

TEST_CASE("all-zero parameters give probability one half") {
    Discriminator d(tiny_config(), 1);
    for (auto& p : d.params()) std::fill(p.values().begin(), p.values().end(), 0.0f);
    Rng rng(2);
    for (int trial = 0; trial < 3; ++trial) {
        DiscriminatorResult out = d.discriminate(rand_input(6, 8, rng));
        CHECK(out.prob.item() == 0.5f);
    }
}

TEST_CASE("identical inputs give identical phi and probabilities stay strictly inside (0,1)") {
    Discriminator d(tiny_config(), 3);
    Rng rng(4);
    Tensor x = rand_input(10, 8, rng, 3.0f);
    DiscriminatorResult a = d.discriminate(x);
    DiscriminatorResult b = d.discriminate(x);
    CHECK(a.phi.values() == b.phi.values());
    CHECK(a.prob.item() == b.prob.item());
    CHECK(a.prob.item() > 0.0f);
    CHECK(a.prob.item() < 1.0f);
    CHECK(a.phi.shape() == Shape({8}));
}

TEST_CASE("phi depends on the whole sequence including the last frame") {
    Discriminator d(tiny_config(), 5);
    Rng rng(6);
    Tensor x = rand_input(9, 8, rng);
    DiscriminatorResult base = d.discriminate(x);
    Tensor y = x.detach();
    y.values()[static_cast<std::size_t>(8) * 8 + 3] += 0.5f;
    DiscriminatorResult changed = d.discriminate(y);
    double diff = 0.0;
    for (std::size_t i = 0; i < base.phi.values().size(); ++i) {
        const double delta = base.phi.values()[i] - changed.phi.values()[i];
        diff += delta * delta;
    }
    CHECK(diff > 0.0);
}

TEST_CASE("discriminator rejects mismatched feature dimensions") {
    Discriminator d(tiny_config(), 7);
    CHECK_THROWS_AS(d.discriminate(Tensor::zeros({5, 9})), DimensionError);
}

TEST_CASE("parameter count matches the closed form") {
    Discriminator tiny(tiny_config(), 8);
    CHECK(tiny.param_count() == Discriminator::expected_param_count(tiny_config()));
    DiscriminatorConfig canonical;  // d = 1024, hidden = 1024
    CHECK(Discriminator::expected_param_count(canonical) ==
          1024 * 4096 + 1024 * 4096 + 4096 + 1024 + 1);
}

TEST_CASE("gradient of -log prob matches finite differences on the tiny configuration") {
    DiscriminatorConfig cfg = tiny_config();
    Discriminator d(cfg, 9);
    Rng rng(10);
    Tensor x = rand_input(6, 8, rng);
    auto loss = [&] {
        Tensor p = clamp(d.discriminate(x).prob, 1e-7f, 1.0f - 1e-7f);
        return scale_add(log_elem(p), -1.0f, 0.0f);
    };
    Rng coords(11);
    auto res = checks::grad_check(loss, d.params(), d.param_names(), coords, 1e-6, 1e-3, 6);
    INFO(res.worst);
    CHECK(res.pass);
}

TEST_CASE("discriminator separates X from 0.3X within 200 adam steps") {
    DiscriminatorConfig cfg;
    cfg.feature_dim = 16;
    cfg.hidden = 16;
    Discriminator d(cfg, 12);
    Adam opt({.lr = 5e-3f}, d.params());
    Rng rng(13);

    // fixed synthetic task: original sequences vs the same scaled by 0.3
    std::vector<Tensor> originals;
    for (int i = 0; i < 8; ++i) originals.push_back(rand_input(12, 16, rng, 1.5f));

    for (int step = 0; step < 200; ++step) {
        const Tensor& x = originals[static_cast<std::size_t>(step % originals.size())];
        Tensor weak = scale_add(x, 0.3f, 0.0f).detach();
        zero_grads(d.params());
        Tape tape;
        {
            Tape::Scope scope(&tape);
            AdversarialLosses adv = adversarial_losses(d.discriminate(x).prob, d.discriminate(weak).prob);
            tape.backward(adv.d_loss);
        }
        clip_grad_norm(d.params(), 5.0);
        opt.step(d.params());
    }

    int correct = 0, total = 0;
    for (const auto& x : originals) {
        Tensor weak = scale_add(x, 0.3f, 0.0f).detach();
        correct += d.discriminate(x).prob.item() > 0.5f ? 1 : 0;
        correct += d.discriminate(weak).prob.item() < 0.5f ? 1 : 0;
        total += 2;
    }
    CHECK(static_cast<double>(correct) / total >= 0.95);
}
