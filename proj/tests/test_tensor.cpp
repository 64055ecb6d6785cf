#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "caan/checks.hpp"
#include "caan/tensor.hpp"

using namespace caan;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform_f(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("matmul identity and selector rows") {
    Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
    Tensor eye = Tensor::from_values({2, 2}, {1, 0, 0, 1});
    CHECK(matmul(a, eye).values() == std::vector<double>({1, 2, 3, 4}));

    Tensor sel = Tensor::from_values({2, 2}, {1, 0, 0, 0});
    Tensor b = Tensor::from_values({2, 2}, {5, 6, 7, 8});
    CHECK(matmul(sel, b).values() == std::vector<double>({5, 6, 0, 0}));
}

TEST_CASE("matmul matches the naive triple loop") {
    Rng rng(7);
    Tensor a = rand_tensor({4, 3}, rng);
    Tensor b = rand_tensor({3, 5}, rng);
    auto got = matmul(a, b).values();
    auto want = checks::naive_matmul(a.values(), 4, 3, b.values(), 5);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-6));
}

TEST_CASE("matmul rejects mismatched shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), DimensionError);
}

TEST_CASE("conv1d boundary sums with all-ones kernel") {
    Tensor x = Tensor::full({5, 1}, 1.0f);
    Tensor k = Tensor::full({3, 1, 1}, 1.0f);
    CHECK(conv1d(x, k, 1, 1).values() == std::vector<double>({2, 3, 3, 3, 2}));
}

TEST_CASE("conv1d with a centered delta kernel is the identity") {
    Rng rng(3);
    Tensor x = rand_tensor({6, 2}, rng);
    Tensor k = Tensor::zeros({3, 2, 2});
    // middle tap, channel-preserving
    k.values()[1 * 4 + 0 * 2 + 0] = 1.0f;
    k.values()[1 * 4 + 1 * 2 + 1] = 1.0f;
    CHECK(conv1d(x, k, 1, 1).values() == x.values());
}

TEST_CASE("conv1d matches the sliding-window oracle") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const int frames = rng.uniform_int(3, 9);
        const int cin = rng.uniform_int(1, 3), cout = rng.uniform_int(1, 3);
        const int stride = rng.uniform_int(1, 2), padding = rng.uniform_int(0, 2);
        const int width = rng.uniform_int(1, 3);
        if (width > frames + 2 * padding) continue;
        Tensor x = rand_tensor({frames, cin}, rng);
        Tensor k = rand_tensor({width, cin, cout}, rng);
        auto got = conv1d(x, k, stride, padding).values();
        auto want = checks::naive_conv1d(x.values(), frames, cin, k.values(), width, cout, stride, padding);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-5));
    }
}

TEST_CASE("conv1d rejects kernels wider than the padded input") {
    Tensor x = Tensor::zeros({2, 1});
    Tensor k = Tensor::zeros({5, 1, 1});
    CHECK_THROWS_AS(conv1d(x, k, 1, 1), DimensionError);
}

TEST_CASE("transposed convolution doubles the length at stride 2") {
    Rng rng(5);
    for (int frames : {1, 3, 8}) {
        Tensor x = rand_tensor({frames, 3}, rng);
        Tensor k = rand_tensor({2, 2, 3}, rng);
        CHECK(conv1d_transpose(x, k, 2, 0).dim(0) == 2 * frames);
    }
}

TEST_CASE("transposed convolution of zero input is zero") {
    Tensor x = Tensor::zeros({4, 2});
    Tensor k = Tensor::full({2, 3, 2}, 0.7f);
    Tensor y = conv1d_transpose(x, k, 2, 0);
    for (double v : y.values()) CHECK(v == 0.0f);
}

TEST_CASE("conv transpose is the adjoint of conv") {
    Rng rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const int frames = rng.uniform_int(2, 10);
        const int cin = rng.uniform_int(1, 3), cout = rng.uniform_int(1, 3);
        const int stride = rng.uniform_int(1, 3);
        const int padding = rng.uniform_int(0, 1);
        const int width = rng.uniform_int(1, 3);
        if (width > frames + 2 * padding) continue;
        if ((frames + 2 * padding - width) % stride != 0) continue;  // exact fit maps back to F
        Tensor x = rand_tensor({frames, cin}, rng);
        Tensor k = rand_tensor({width, cin, cout}, rng);
        Tensor cx = conv1d(x, k, stride, padding);
        Tensor y = rand_tensor({cx.dim(0), cout}, rng);
        Tensor ty = conv1d_transpose(y, k, stride, padding);
        REQUIRE(ty.shape() == x.shape());
        const double lhs = checks::dot(cx.values(), y.values());
        const double rhs = checks::dot(x.values(), ty.values());
        CHECK(std::fabs(lhs - rhs) <= 1e-5 * std::max(1.0, std::fabs(lhs)));
    }
}

TEST_CASE("conv transpose rejects channel mismatch") {
    Tensor x = Tensor::zeros({4, 3});
    Tensor k = Tensor::zeros({2, 2, 5});
    CHECK_THROWS_AS(conv1d_transpose(x, k, 2, 0), DimensionError);
}

TEST_CASE("max pooling basics") {
    Tensor x = Tensor::from_values({4, 1}, {1, 3, 2, 5});
    CHECK(max_pool1d(x).values() == std::vector<double>({3, 5}));
    CHECK_THROWS_AS(max_pool1d(Tensor::zeros({1, 1})), DimensionError);
}

TEST_CASE("max pooling matches the window scan and ties route to the first element") {
    Rng rng(17);
    Tensor x = rand_tensor({9, 4}, rng);
    auto got = max_pool1d(x).values();
    auto want = checks::naive_max_pool1d(x.values(), 9, 4, 2, 2);
    CHECK(got == want);

    Tensor flat = Tensor::full({4, 2}, 1.5f, true);
    Tape tape;
    {
        Tape::Scope scope(&tape);
        tape.backward(sum(max_pool1d(flat)));
    }
    // earliest element of each window carries the gradient
    CHECK(flat.grad() == std::vector<double>({1, 1, 0, 0, 1, 1, 0, 0}));
}

TEST_CASE("activation examples") {
    Tensor x = Tensor::from_values({3}, {-1, 0, 2});
    CHECK(relu(x).values() == std::vector<double>({0, 0, 2}));
    CHECK(sigmoid(Tensor::scalar(0.0f)).item() == 0.5f);

    Tensor z = Tensor::scalar(0.0f, true);
    Tape tape;
    {
        Tape::Scope scope(&tape);
        tape.backward(sigmoid(z));
    }
    CHECK(z.grad()[0] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("sigmoid stays strictly inside (0,1) even in saturation") {
    Tensor x = Tensor::from_values({4}, {-200.0f, -30.0f, 30.0f, 200.0f});
    Tensor y = sigmoid(x);
    for (double v : y.values()) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("softmax rows are stochastic and shift invariant") {
    Rng rng(19);
    Tensor x = rand_tensor({5, 7}, rng, -3.0f, 3.0f);
    Tensor p = softmax_rows(x);
    for (int i = 0; i < 5; ++i) {
        double s = 0.0;
        for (int j = 0; j < 7; ++j) s += p.values()[static_cast<std::size_t>(i) * 7 + j];
        CHECK(std::fabs(s - 1.0) < 1e-6);
    }
    Tensor shifted = scale_add(x, 1.0f, 42.5f);
    Tensor q = softmax_rows(shifted);
    for (std::size_t i = 0; i < q.values().size(); ++i)
        CHECK(q.values()[i] == doctest::Approx(p.values()[i]).epsilon(1e-5));

    Tensor flat = Tensor::full({2, 4}, 0.3f);
    Tensor uniform = softmax_rows(flat);
    for (double v : uniform.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("norm layer leaves standardized input unchanged and matches requested moments") {
    Rng rng(23);
    const int frames = 50, cols = 3;
    Tensor x = rand_tensor({frames, cols}, rng, -2.0f, 2.0f);
    // standardize per column first
    for (int c = 0; c < cols; ++c) {
        double mu = 0.0, var = 0.0;
        for (int f = 0; f < frames; ++f) mu += x.values()[static_cast<std::size_t>(f) * cols + c];
        mu /= frames;
        for (int f = 0; f < frames; ++f) {
            const double d = x.values()[static_cast<std::size_t>(f) * cols + c] - mu;
            var += d * d;
        }
        var /= frames;
        for (int f = 0; f < frames; ++f) {
            auto& v = x.values()[static_cast<std::size_t>(f) * cols + c];
            v = static_cast<float>((v - mu) / std::sqrt(var));
        }
    }
    Tensor unit_gamma = Tensor::full({cols}, 1.0f);
    Tensor zero_beta = Tensor::zeros({cols});
    Tensor y = norm_layer(x, unit_gamma, zero_beta, 1e-5f, NormAxis::Temporal);
    for (std::size_t i = 0; i < y.values().size(); ++i)
        CHECK(y.values()[i] == doctest::Approx(x.values()[i]).epsilon(1e-5));

    Tensor gamma = Tensor::from_values({cols}, {2.0f, -1.5f, 0.5f});
    Tensor beta = Tensor::from_values({cols}, {0.1f, 0.2f, -0.3f});
    Tensor z = norm_layer(x, gamma, beta, 1e-5f, NormAxis::Temporal);
    for (int c = 0; c < cols; ++c) {
        double mu = 0.0, var = 0.0;
        for (int f = 0; f < frames; ++f) mu += z.values()[static_cast<std::size_t>(f) * cols + c];
        mu /= frames;
        for (int f = 0; f < frames; ++f) {
            const double d = z.values()[static_cast<std::size_t>(f) * cols + c] - mu;
            var += d * d;
        }
        CHECK(std::fabs(mu - beta.values()[static_cast<std::size_t>(c)]) < 1e-4);
        CHECK(std::fabs(std::sqrt(var / frames) -
                        std::fabs(gamma.values()[static_cast<std::size_t>(c)])) < 1e-4);
    }
}

TEST_CASE("norm layer rejects a degenerate temporal axis") {
    Tensor x = Tensor::zeros({1, 4});
    Tensor gamma = Tensor::full({4}, 1.0f);
    Tensor beta = Tensor::zeros({4});
    CHECK_THROWS_AS(norm_layer(x, gamma, beta, 1e-5f, NormAxis::Temporal), DegenerateInputError);
}

TEST_CASE("norm layer gradients match finite differences on both axes") {
    Rng rng(31);
    for (NormAxis axis : {NormAxis::Temporal, NormAxis::Feature}) {
        Tensor x = rand_tensor({6, 4}, rng);
        Tensor gamma = rand_tensor({4}, rng, 0.5f, 1.5f);
        Tensor beta = rand_tensor({4}, rng);
        Tensor w = rand_tensor({6, 4}, rng);  // random projection keeps the loss generic
        auto loss = [&] { return sum(mul(norm_layer(x, gamma, beta, 1e-5f, axis), w)); };
        auto res = checks::grad_check(loss, {x, gamma, beta}, {"x", "gamma", "beta"}, rng, 1e-6, 1e-3, 64);
        INFO(res.worst);
        CHECK(res.pass);
    }
}

TEST_CASE("lstm zero weights give zero hidden states and shape contracts hold") {
    const int frames = 7, din = 3, hidden = 4;
    LstmParams p;
    p.w_input = Tensor::zeros({din, 4 * hidden});
    p.w_hidden = Tensor::zeros({hidden, 4 * hidden});
    p.bias = Tensor::zeros({4 * hidden});
    Rng rng(37);
    Tensor x = rand_tensor({frames, din}, rng);
    LstmOutput out = lstm_forward(x, p);
    CHECK(out.hidden_all.shape() == Shape({frames, hidden}));
    CHECK(out.hidden_last.shape() == Shape({hidden}));
    for (double v : out.hidden_all.values()) CHECK(v == 0.0f);
}

TEST_CASE("lstm gradient of a last-hidden loss matches finite differences") {
    Rng rng(41);
    const int frames = 5, din = 3, hidden = 4;
    Tensor x = rand_tensor({frames, din}, rng);
    LstmParams p;
    p.w_input = rand_tensor({din, 4 * hidden}, rng, -0.5f, 0.5f);
    p.w_hidden = rand_tensor({hidden, 4 * hidden}, rng, -0.5f, 0.5f);
    p.bias = rand_tensor({4 * hidden}, rng, -0.2f, 0.2f);
    Tensor w = rand_tensor({hidden}, rng);
    auto loss = [&] {
        LstmOutput out = lstm_forward(x, p);
        return sum(mul(out.hidden_last, w));
    };
    auto res = checks::grad_check(loss, {x, p.w_input, p.w_hidden, p.bias},
                                  {"x", "w_input", "w_hidden", "bias"}, rng, 1e-6, 1e-3, 64);
    INFO(res.worst);
    CHECK(res.pass);
}

TEST_CASE("lstm rejects mismatched dimensions") {
    LstmParams p;
    p.w_input = Tensor::zeros({3, 16});
    p.w_hidden = Tensor::zeros({4, 16});
    p.bias = Tensor::zeros({16});
    CHECK_THROWS_AS(lstm_forward(Tensor::zeros({5, 7}), p), DimensionError);
}

TEST_CASE("backward: sum of squares doubles the input, unrelated parameters stay zero") {
    Tensor x = Tensor::from_values({3}, {1.0f, -2.0f, 0.5f}, true);
    Tensor unused = Tensor::from_values({2}, {3.0f, 4.0f}, true);
    Tape tape;
    {
        Tape::Scope scope(&tape);
        tape.backward(sum(mul(x, x)));
    }
    CHECK(x.grad() == std::vector<double>({2.0f, -4.0f, 1.0f}));
    CHECK(unused.grad() == std::vector<double>({0.0f, 0.0f}));
}

TEST_CASE("backward twice on the same tape doubles every gradient") {
    Rng rng(43);
    Tensor x = rand_tensor({4, 3}, rng);
    x.set_requires_grad(true);
    Tensor w = rand_tensor({3, 2}, rng);
    w.set_requires_grad(true);
    Tape tape;
    Tensor loss;
    {
        Tape::Scope scope(&tape);
        loss = sum(sigmoid(matmul(x, w)));
    }
    tape.backward(loss);
    auto gx = x.grad();
    auto gw = w.grad();
    tape.backward(loss);
    auto gx2 = x.grad();
    auto gw2 = w.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) CHECK(gx2[i] == doctest::Approx(2.0f * gx[i]));
    for (std::size_t i = 0; i < gw.size(); ++i) CHECK(gw2[i] == doctest::Approx(2.0f * gw[i]));
}

TEST_CASE("backward rejects non-scalar losses and empty tapes") {
    Tensor x = Tensor::zeros({2, 2}, true);
    Tape tape;
    {
        Tape::Scope scope(&tape);
        Tensor y = scale_add(x, 2.0f, 0.0f);
        CHECK_THROWS_AS(tape.backward(y), ContractError);
    }
    Tape empty;
    CHECK_THROWS_AS(empty.backward(Tensor::scalar(1.0f)), ContractError);
}

TEST_CASE("composite graph gradient matches finite differences") {
    Rng rng(47);
    Tensor a = rand_tensor({4, 4}, rng);
    Tensor b = rand_tensor({4, 4}, rng);
    Tensor c = rand_tensor({4}, rng);
    auto loss = [&] {
        Tensor h = tanh_act(add_rowvec(matmul(a, b), c));
        Tensor p = softmax_rows(h);
        return mean(mul(p, h));
    };
    auto res = checks::grad_check(loss, {a, b, c}, {"a", "b", "c"}, rng, 1e-3, 1e-3, 64);
    INFO(res.worst);
    CHECK(res.pass);
}

TEST_CASE("randomized per-op gradient checks stay under tolerance") {
    Rng rng(53);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = rand_tensor({4, 4}, rng, 0.1f, 2.0f);  // positive for log/sqrt paths
        Tensor y = rand_tensor({4, 4}, rng, 0.1f, 2.0f);
        auto loss = [&] {
            Tensor t = add(mul(log_elem(x), sqrt_elem(y)), sub(x, y));
            t = clamp(t, -5.0f, 5.0f);
            return sum(abs_elem(t));
        };
        auto res = checks::grad_check(loss, {x, y}, {"x", "y"}, rng, 1e-3, 1e-3, 16);
        INFO(res.worst);
        CHECK(res.pass);
    }
}

TEST_CASE("shape and broadcast op gradients match finite differences") {
    Rng rng(67);
    Tensor x = rand_tensor({5, 4}, rng);
    Tensor s = rand_tensor({5, 1}, rng, 0.1f, 0.9f);
    Tensor b = rand_tensor({4}, rng);
    Tensor other = rand_tensor({5, 3}, rng);
    Tensor w = rand_tensor({5, 5}, rng);  // projection for the sliced block
    auto loss = [&] {
        Tensor scaled = rowwise_scale(add_rowvec(x, b), s);
        Tensor wide = concat_cols(scaled, other);          // 5 x 7
        Tensor tall = pad_rows(transpose(wide), 8);        // 8 x 5
        Tensor part = slice_rows(tall, 1, 6);              // 5 x 5
        return sum(mul(reshape(part, {25, 1}), reshape(mul(w, w), {25, 1}).detach()));
    };
    auto res = checks::grad_check(loss, {x, s, b, other}, {"x", "scale", "bias", "other"}, rng,
                                  1e-5, 1e-3, 64);
    INFO(res.worst);
    CHECK(res.pass);
}

TEST_CASE("forward determinism is bit exact") {
    Rng rng(59);
    Tensor x = rand_tensor({12, 6}, rng);
    Tensor k = rand_tensor({3, 6, 4}, rng);
    auto a = relu(conv1d(x, k, 1, 1)).values();
    auto b = relu(conv1d(x, k, 1, 1)).values();
    CHECK(a == b);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::from_values({3}, {1.0f, 2.0f, 3.0f}, true);
    std::vector<Tensor> params{p};
    Adam opt({.lr = 0.1f}, params);
    p.zero_grad();
    opt.step(params);
    CHECK(p.values() == std::vector<double>({1.0f, 2.0f, 3.0f}));
}

TEST_CASE("adam: first step moves by about -lr * sign(g)") {
    Tensor p = Tensor::from_values({2}, {0.0f, 0.0f}, true);
    std::vector<Tensor> params{p};
    Adam opt({.lr = 0.01f}, params);
    auto& g = p.node->grad_buffer();
    g[0] = 3.7f;
    g[1] = -0.002f;
    opt.step(params);
    CHECK(p.values()[0] == doctest::Approx(-0.01).epsilon(1e-4));
    CHECK(p.values()[1] == doctest::Approx(0.01).epsilon(1e-3));
}

TEST_CASE("adam: 10-step trajectory matches the scalar reference recurrence") {
    const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Tensor p = Tensor::from_values({1}, {1.0f}, true);
    std::vector<Tensor> params{p};
    Adam opt({.lr = static_cast<float>(lr)}, params);

    double ref = 1.0, m = 0.0, v = 0.0;
    Rng rng(61);
    for (int t = 1; t <= 10; ++t) {
        const double g = rng.uniform(-2.0, 2.0);
        p.zero_grad();
        p.node->grad_buffer()[0] = static_cast<float>(g);
        opt.step(params);

        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        ref -= lr * mhat / (std::sqrt(vhat) + eps);
        CHECK(p.values()[0] == doctest::Approx(ref).epsilon(1e-5));
    }
}

TEST_CASE("adam rejects shape changes") {
    Tensor p = Tensor::zeros({3}, true);
    std::vector<Tensor> params{p};
    Adam opt({.lr = 0.1f}, params);
    std::vector<Tensor> wrong{Tensor::zeros({4}, true)};
    CHECK_THROWS_AS(opt.step(wrong), DimensionError);
}

TEST_CASE("gradient clipping rescales only above the threshold") {
    Tensor p = Tensor::zeros({2}, true);
    auto& g = p.node->grad_buffer();
    g[0] = 3.0f;
    g[1] = 4.0f;  // norm 5
    std::vector<Tensor> params{p};
    clip_grad_norm(params, 10.0);
    CHECK(p.grad() == std::vector<double>({3.0f, 4.0f}));
    clip_grad_norm(params, 2.5);
    CHECK(p.grad()[0] == doctest::Approx(1.5f));
    CHECK(p.grad()[1] == doctest::Approx(2.0f));
}
