#include "caan/checks.hpp"

#include <algorithm>
#include <cmath>

#include "caan/discriminator.hpp"
#include "caan/generator.hpp"
#include "caan/metrics.hpp"
#include "caan/postprocess.hpp"

namespace caan::checks {

std::vector<double> naive_matmul(const std::vector<double>& a, int m, int k,
                                 const std::vector<double>& b, int n) {
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int kk = 0; kk < k; ++kk)
                acc += a[static_cast<std::size_t>(i) * k + kk] * b[static_cast<std::size_t>(kk) * n + j];
            out[static_cast<std::size_t>(i) * n + j] = acc;
        }
    return out;
}

std::vector<double> naive_conv1d(const std::vector<double>& x, int frames, int c_in,
                                 const std::vector<double>& kernel, int width, int c_out, int stride,
                                 int padding) {
    const int fout = (frames + 2 * padding - width) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(fout) * c_out, 0.0);
    for (int t = 0; t < fout; ++t)
        for (int co = 0; co < c_out; ++co) {
            double acc = 0.0;
            for (int kk = 0; kk < width; ++kk) {
                const int src = t * stride + kk - padding;
                if (src < 0 || src >= frames) continue;
                for (int ci = 0; ci < c_in; ++ci)
                    acc += x[static_cast<std::size_t>(src) * c_in + ci] *
                           kernel[(static_cast<std::size_t>(kk) * c_in + ci) * c_out + co];
            }
            out[static_cast<std::size_t>(t) * c_out + co] = acc;
        }
    return out;
}

std::vector<double> naive_max_pool1d(const std::vector<double>& x, int frames, int cols, int window,
                                     int stride) {
    const int fout = (frames - window) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(fout) * cols);
    for (int t = 0; t < fout; ++t)
        for (int c = 0; c < cols; ++c) {
            double best = x[static_cast<std::size_t>(t * stride) * cols + c];
            for (int kk = 1; kk < window; ++kk)
                best = std::max(best, x[static_cast<std::size_t>(t * stride + kk) * cols + c]);
            out[static_cast<std::size_t>(t) * cols + c] = best;
        }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

KnapsackSolution exhaustive_knapsack(const std::vector<double>& values,
                                     const std::vector<int>& lengths, int budget) {
    const int n = static_cast<int>(values.size());
    KnapsackSolution best;
    bool found = false;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double value = 0.0;
        int frames = 0;
        for (int i = 0; i < n; ++i)
            if (mask >> i & 1u) {
                value += values[static_cast<std::size_t>(i)];
                frames += lengths[static_cast<std::size_t>(i)];
            }
        if (frames > budget) continue;
        bool take = !found;
        if (found) {
            if (value != best.value) {
                take = value > best.value;
            } else if (frames != best.frames) {
                take = frames < best.frames;
            } else {
                // lexicographic on sorted index sequences
                std::vector<int> cand;
                for (int i = 0; i < n; ++i)
                    if (mask >> i & 1u) cand.push_back(i);
                take = cand < best.selected;
            }
        }
        if (take) {
            best.value = value;
            best.frames = frames;
            best.selected.clear();
            for (int i = 0; i < n; ++i)
                if (mask >> i & 1u) best.selected.push_back(i);
            found = true;
        }
    }
    return best;
}

double segmentation_cost(const FeatureSequence& x, const std::vector<int>& boundaries) {
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
        const int a = boundaries[s], b = boundaries[s + 1];
        const int len = b - a;
        std::vector<double> mean(static_cast<std::size_t>(x.dim), 0.0);
        for (int f = a; f < b; ++f)
            for (int k = 0; k < x.dim; ++k) mean[static_cast<std::size_t>(k)] += x.at(f, k);
        for (auto& m : mean) m /= len;
        for (int f = a; f < b; ++f)
            for (int k = 0; k < x.dim; ++k) {
                const double d = static_cast<double>(x.at(f, k)) - mean[static_cast<std::size_t>(k)];
                total += d * d;
            }
    }
    return total;
}

namespace {

void enumerate_segmentations(int frames, int segments, std::vector<int>& bounds,
                             const std::function<void(const std::vector<int>&)>& visit) {
    if (static_cast<int>(bounds.size()) == segments) {
        bounds.push_back(frames);
        visit(bounds);
        bounds.pop_back();
        return;
    }
    const int start = bounds.back() + 1;
    const int remaining = segments - static_cast<int>(bounds.size());
    for (int b = start; b <= frames - remaining + 1; ++b) {
        bounds.push_back(b);
        enumerate_segmentations(frames, segments, bounds, visit);
        bounds.pop_back();
    }
}

}  // namespace

SegmentationSolution exhaustive_segmentation(const FeatureSequence& x, int max_segments,
                                             double penalty) {
    SegmentationSolution best;
    bool found = false;
    for (int m = 1; m <= std::min(max_segments, x.frames); ++m) {
        std::vector<int> bounds{0};
        enumerate_segmentations(x.frames, m, bounds, [&](const std::vector<int>& b) {
            const double cost = segmentation_cost(x, b) +
                                penalty * m * (std::log(static_cast<double>(x.frames) / m) + 1.0);
            if (!found || cost < best.cost) {
                best.cost = cost;
                best.boundaries = b;
                found = true;
            }
        });
    }
    return best;
}

GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> tensors,
                           const std::vector<std::string>& names, Rng& rng, double h, double tol,
                           int max_coords_per_tensor) {
    GradCheckResult result;
    // The whole check runs with storage rounding suspended: the oracle is
    // the same graph evaluated in 64-bit arithmetic.
    HighPrecisionScope high_precision;
    for (auto& t : tensors) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tape tape;
    {
        Tape::Scope scope(&tape);
        Tensor loss = loss_fn();
        tape.backward(loss);
    }
    std::vector<std::vector<double>> grads;
    grads.reserve(tensors.size());
    for (auto& t : tensors) grads.push_back(t.grad());

    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        auto& t = tensors[ti];
        const std::int64_t n = t.numel();
        std::vector<std::int64_t> coords;
        if (n <= max_coords_per_tensor) {
            for (std::int64_t i = 0; i < n; ++i) coords.push_back(i);
        } else {
            for (int i = 0; i < max_coords_per_tensor; ++i)
                coords.push_back(static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(n)));
        }
        for (std::int64_t ci : coords) {
            auto& v = t.values()[static_cast<std::size_t>(ci)];
            const double orig = v;
            v = orig + h;
            const double up = loss_fn().item_double();
            v = orig - h;
            const double down = loss_fn().item_double();
            v = orig;
            const double fd = (up - down) / (2.0 * h);
            const double ad = grads[ti][static_cast<std::size_t>(ci)];
            const double rel = std::fabs(ad - fd) / std::max({std::fabs(ad), std::fabs(fd), 0.1});
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst = (ti < names.size() ? names[ti] : "tensor" + std::to_string(ti)) + "[" +
                               std::to_string(ci) + "] ad=" + std::to_string(ad) +
                               " fd=" + std::to_string(fd);
            }
            if (rel > tol) result.pass = false;
        }
    }
    return result;
}

}  // namespace caan::checks
