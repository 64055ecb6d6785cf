#include <cmath>
#include <cstdio>

#include "caan/checks.hpp"
#include "caan/discriminator.hpp"
#include "caan/generator.hpp"
#include "caan/losses.hpp"
#include "caan/metrics.hpp"
#include "caan/postprocess.hpp"

namespace caan::checks {

namespace {

void expect(SuiteResult& r, bool ok, const std::string& what) {
    if (!ok) {
        r.pass = false;
        r.failures.push_back(what);
    }
}

Tensor random_tensor(Shape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform_f(lo, hi);
    return t;
}

SuiteResult suite_gradcheck() {
    SuiteResult r;
    r.name = "gradcheck";
    Rng rng(11);

    {  // matmul + softmax + norm chain
        Tensor a = random_tensor({4, 3}, rng);
        Tensor b = random_tensor({3, 5}, rng);
        Tensor gamma = random_tensor({5}, rng, 0.5f, 1.5f);
        Tensor beta = random_tensor({5}, rng);
        auto loss = [&] {
            Tensor h = softmax_rows(matmul(a, b));
            return sum(mul(norm_layer(h, gamma, beta, 1e-5f, NormAxis::Feature), h));
        };
        auto res = grad_check(loss, {a, b, gamma, beta}, {"a", "b", "gamma", "beta"}, rng);
        expect(r, res.pass, "matmul/softmax/norm gradient: " + res.worst);
    }
    {  // convolution stack with pooling
        Tensor x = random_tensor({8, 3}, rng);
        Tensor k = random_tensor({3, 3, 4}, rng);
        auto loss = [&] { return sum(relu(max_pool1d(conv1d(x, k, 1, 1), 2, 2))); };
        auto res = grad_check(loss, {x, k}, {"x", "kernel"}, rng);
        expect(r, res.pass, "conv/pool gradient: " + res.worst);
    }
    {  // transposed convolution
        Tensor x = random_tensor({4, 4}, rng);
        Tensor k = random_tensor({2, 3, 4}, rng);
        auto loss = [&] { return sum(tanh_act(conv1d_transpose(x, k, 2, 0))); };
        auto res = grad_check(loss, {x, k}, {"x", "kernel"}, rng);
        expect(r, res.pass, "deconvolution gradient: " + res.worst);
    }
    {  // lstm
        const int frames = 5, din = 3, hidden = 4;
        Tensor x = random_tensor({frames, din}, rng);
        LstmParams p;
        p.w_input = random_tensor({din, 4 * hidden}, rng, -0.5f, 0.5f);
        p.w_hidden = random_tensor({hidden, 4 * hidden}, rng, -0.5f, 0.5f);
        p.bias = random_tensor({4 * hidden}, rng, -0.2f, 0.2f);
        auto loss = [&] { return sum(lstm_forward(x, p).hidden_all); };
        auto res = grad_check(loss, {x, p.w_input, p.w_hidden, p.bias},
                              {"x", "w_input", "w_hidden", "bias"}, rng);
        expect(r, res.pass, "lstm gradient: " + res.worst);
    }
    {  // composed generator, scaled configuration
        GeneratorConfig cfg;
        cfg.feature_dim = 8;
        cfg.base_channels = 4;
        cfg.score_hidden = 8;
        Generator g(cfg, 5);
        // generic point: zero norm offsets put the bottleneck exactly on
        // the relu kink where one-sided slopes disagree with the subgradient
        for (auto& p : g.params())
            for (auto& v : p.values()) v += rng.uniform(-0.05, 0.05);
        Tensor x = random_tensor({16, 8}, rng);
        auto loss = [&] { return sum(g.generate(x).scores); };
        std::vector<Tensor> tensors = g.params();
        tensors.push_back(x);
        std::vector<std::string> names = g.param_names();
        names.push_back("input");
        Rng coord_rng(17);
        auto res = grad_check(loss, tensors, names, coord_rng, 1e-6, 1e-3, 3);
        expect(r, res.pass, "generator gradient: " + res.worst);
    }
    {  // composed discriminator
        DiscriminatorConfig cfg;
        cfg.feature_dim = 8;
        cfg.hidden = 8;
        Discriminator d(cfg, 7);
        Tensor x = random_tensor({6, 8}, rng);
        auto loss = [&] {
            return scale_add(log_elem(clamp(d.discriminate(x).prob, 1e-7f, 1.0f - 1e-7f)), -1.0f, 0.0f);
        };
        auto res = grad_check(loss, d.params(), d.param_names(), rng);
        expect(r, res.pass, "discriminator gradient: " + res.worst);
    }
    {  // adjoint identity between conv1d and conv1d_transpose
        for (int trial = 0; trial < 20; ++trial) {
            const int frames = rng.uniform_int(3, 9);
            const int cin = rng.uniform_int(1, 3), cout = rng.uniform_int(1, 3);
            const int stride = rng.uniform_int(1, 2);
            const int width = rng.uniform_int(1, std::min(3, frames));
            const int padding = rng.uniform_int(0, 1);
            if (width > frames + 2 * padding) continue;
            if ((frames + 2 * padding - width) % stride != 0) continue;
            Tensor x = random_tensor({frames, cin}, rng);
            Tensor k = random_tensor({width, cin, cout}, rng);
            Tensor cx = conv1d(x, k, stride, padding);
            Tensor y = random_tensor({cx.dim(0), cout}, rng);
            Tensor ty = conv1d_transpose(y, k, stride, padding);
            const double lhs = dot(cx.values(), y.values());
            const double rhs = dot(x.values(), ty.values());
            const double rel = std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs));
            expect(r, rel < 1e-5,
                   "adjoint identity off by " + std::to_string(rel) + " at trial " + std::to_string(trial));
        }
    }
    return r;
}

SuiteResult suite_knapsack() {
    SuiteResult r;
    r.name = "knapsack";
    Rng rng(23);
    for (int inst = 0; inst < 200; ++inst) {
        const int n = rng.uniform_int(1, 18);
        std::vector<double> values(static_cast<std::size_t>(n));
        std::vector<int> lengths(static_cast<std::size_t>(n));
        int total = 0;
        for (int i = 0; i < n; ++i) {
            values[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1.0);
            lengths[static_cast<std::size_t>(i)] = rng.uniform_int(1, 12);
            total += lengths[static_cast<std::size_t>(i)];
        }
        const int budget = rng.uniform_int(0, total);
        auto got = knapsack_select(values, lengths, budget);
        auto want = exhaustive_knapsack(values, lengths, budget);
        double got_value = 0.0;
        int got_frames = 0;
        for (int i : got) {
            got_value += values[static_cast<std::size_t>(i)];
            got_frames += lengths[static_cast<std::size_t>(i)];
        }
        expect(r, got_frames <= budget, "instance " + std::to_string(inst) + " exceeds budget");
        expect(r, got_value == want.value,
               "instance " + std::to_string(inst) + " value " + std::to_string(got_value) +
                   " != exhaustive " + std::to_string(want.value));
        expect(r, got == want.selected, "instance " + std::to_string(inst) + " tie-break mismatch");
    }
    // budget fuzz: never exceed, never crash
    for (int inst = 0; inst < 10000; ++inst) {
        const int n = rng.uniform_int(1, 40);
        std::vector<double> values(static_cast<std::size_t>(n));
        std::vector<int> lengths(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            values[static_cast<std::size_t>(i)] = rng.uniform(0.0, 5.0);
            lengths[static_cast<std::size_t>(i)] = rng.uniform_int(1, 30);
        }
        const int budget = rng.uniform_int(0, 200);
        auto got = knapsack_select(values, lengths, budget);
        int frames = 0;
        for (int i : got) frames += lengths[static_cast<std::size_t>(i)];
        if (frames > budget) {
            expect(r, false, "fuzz instance " + std::to_string(inst) + " exceeds budget");
            break;
        }
    }
    return r;
}

SuiteResult suite_kts() {
    SuiteResult r;
    r.name = "kts";
    Rng rng(31);
    // DP cost equals exhaustive enumeration.
    for (int inst = 0; inst < 40; ++inst) {
        FeatureSequence x;
        x.frames = rng.uniform_int(4, 24);
        x.dim = rng.uniform_int(1, 4);
        x.values.resize(static_cast<std::size_t>(x.frames) * x.dim);
        for (auto& v : x.values) v = rng.uniform_f(-2.0f, 2.0f);
        const int m_max = rng.uniform_int(1, 4);
        const double penalty = rng.uniform(0.0, 2.0);
        ShotSegmentation got = kts_changepoints(x, m_max, penalty);
        const double got_cost =
            segmentation_cost(x, got.boundaries) +
            penalty * got.shot_count() *
                (std::log(static_cast<double>(x.frames) / got.shot_count()) + 1.0);
        SegmentationSolution want = exhaustive_segmentation(x, m_max, penalty);
        expect(r, std::fabs(got_cost - want.cost) <= 1e-6 * std::max(1.0, std::fabs(want.cost)),
               "instance " + std::to_string(inst) + " cost " + std::to_string(got_cost) +
                   " != exhaustive " + std::to_string(want.cost));
    }
    {  // planted two-level boundary
        FeatureSequence x;
        x.frames = 20;
        x.dim = 3;
        x.values.assign(static_cast<std::size_t>(x.frames) * x.dim, 0.0f);
        for (int f = 0; f < 10; ++f)
            for (int k = 0; k < 3; ++k) x.at(f, k) = 1.0f;
        for (int f = 10; f < 20; ++f)
            for (int k = 0; k < 3; ++k) x.at(f, k) = -1.0f;
        ShotSegmentation seg = kts_changepoints(x, 4, 1e-6);
        expect(r, seg.boundaries == std::vector<int>({0, 10, 20}),
               "planted boundary not recovered exactly");
    }
    {  // constant sequence stays one segment
        FeatureSequence x;
        x.frames = 16;
        x.dim = 2;
        x.values.assign(static_cast<std::size_t>(x.frames) * x.dim, 0.7f);
        ShotSegmentation seg = kts_changepoints(x, 5, 0.5);
        expect(r, seg.shot_count() == 1, "constant sequence split into several segments");
    }
    return r;
}

SuiteResult suite_metrics() {
    SuiteResult r;
    r.name = "metrics";
    {  // tabulated f-score cases
        Summary a, b;
        a.frame_mask.assign(40, 0);
        b.frame_mask.assign(40, 0);
        for (int i = 0; i < 20; ++i) a.frame_mask[static_cast<std::size_t>(i)] = 1;
        for (int i = 0; i < 20; ++i) b.frame_mask[static_cast<std::size_t>(i)] = 1;
        expect(r, std::fabs(fscore(a, b).fscore - 100.0) < 1e-12, "identical summaries != 100%");
        for (int i = 0; i < 40; ++i) b.frame_mask[static_cast<std::size_t>(i)] = i >= 20;
        expect(r, fscore(a, b).fscore == 0.0, "disjoint summaries != 0%");
        for (int i = 0; i < 40; ++i) b.frame_mask[static_cast<std::size_t>(i)] = i >= 10 && i < 30;
        PRF prf = fscore(a, b);
        expect(r, std::fabs(prf.precision - 0.5) < 1e-12 && std::fabs(prf.recall - 0.5) < 1e-12 &&
                      std::fabs(prf.fscore - 50.0) < 1e-12,
               "half-overlap case != 50%");
    }
    {  // rank correlations at the extremes
        std::vector<float> a{0.1f, 0.4f, 0.2f, 0.9f, 0.6f};
        std::vector<float> rev(a.rbegin(), a.rend());
        expect(r, kendall_tau(a, a) == 1.0, "tau of identical ranking != 1");
        expect(r, spearman_rho(a, a) == 1.0, "rho of identical ranking != 1");
        std::vector<float> desc{5.0f, 4.0f, 3.0f, 2.0f, 1.0f};
        std::vector<float> asc{1.0f, 2.0f, 3.0f, 4.0f, 5.0f};
        expect(r, kendall_tau(asc, desc) == -1.0, "tau of reversed ranking != -1");
        expect(r, spearman_rho(asc, desc) == -1.0, "rho of reversed ranking != -1");
    }
    {  // random scores decorrelate
        Rng rng(41);
        for (int seed = 0; seed < 20; ++seed) {
            std::vector<float> a(1000), b(1000);
            for (auto& v : a) v = rng.uniform_f(0.0f, 1.0f);
            for (auto& v : b) v = rng.uniform_f(0.0f, 1.0f);
            const double tau = kendall_tau(a, b);
            const double rho = spearman_rho(a, b);
            expect(r, std::fabs(tau) < 0.08,
                   "random tau " + std::to_string(tau) + " at seed " + std::to_string(seed));
            expect(r, std::fabs(rho) < 0.08,
                   "random rho " + std::to_string(rho) + " at seed " + std::to_string(seed));
        }
    }
    {  // loss unit values
        Tensor half = Tensor::scalar(0.5f);
        AdversarialLosses adv = adversarial_losses(half, half);
        expect(r, std::fabs(adv.d_loss.item() - 2.0 * std::log(2.0)) < 1e-6, "d_loss at p=0.5 != 2 ln 2");
        expect(r, std::fabs(adv.g_loss.item() - std::log(0.5)) < 1e-6, "g_loss at p=0.5 != ln 0.5");
        Tensor ones = Tensor::full({10, 1}, 1.0f);
        expect(r, std::fabs(sparsity_loss(ones, 0.3f).item() - 0.7) < 1e-6,
               "sparsity of all-ones at alpha=0.3 != 0.7");
    }
    return r;
}

}  // namespace

std::vector<std::string> suite_names() { return {"gradcheck", "knapsack", "kts", "metrics"}; }

SuiteResult run_suite(const std::string& name) {
    if (name == "gradcheck") return suite_gradcheck();
    if (name == "knapsack") return suite_knapsack();
    if (name == "kts") return suite_kts();
    if (name == "metrics") return suite_metrics();
    throw ConfigError("unknown verify suite '" + name + "'");
}

std::vector<SuiteResult> run_all_suites() {
    std::vector<SuiteResult> out;
    for (const auto& name : suite_names()) out.push_back(run_suite(name));
    return out;
}

}  // namespace caan::checks
