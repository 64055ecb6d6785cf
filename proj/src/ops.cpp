#include <algorithm>
#include <cmath>
#include <limits>

#include "caan/tensor.hpp"
#include "op_common.hpp"

namespace caan {

using detail::acc_grad;
using detail::NodePtr;
using detail::record_op;
using detail::store_round;
using detail::wants_grad;

namespace {

void require_2d(const Tensor& t, const char* op) {
    if (t.ndim() != 2)
        throw DimensionError(std::string(op) + ": expected a 2-d tensor, got " + shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) +
                             " does not match shape " + shape_str(b.shape()));
}

}  // namespace

// --- matmul / transpose ---------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2)
        throw DimensionError("matmul: inner dimensions of " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " do not match");
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < m; ++i) {
        double* orow = out.data() + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double s = av[static_cast<std::size_t>(i) * k + kk];
            const double* brow = bv.data() + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) orow[j] += s * brow[j];
        }
    }
    for (auto& v : out) v = store_round(v);
    Tensor res = make_op_output({m, n}, std::move(out), a.requires_grad() || b.requires_grad());
    record_op(res, [an = a.node, bn = b.node, on = res.node, m, k, n] {
        const auto& g = on->grad;
        if (wants_grad(an)) {
            auto& da = acc_grad(an);
            for (int i = 0; i < m; ++i)
                for (int kk = 0; kk < k; ++kk) {
                    const double* grow = g.data() + static_cast<std::size_t>(i) * n;
                    const double* brow = bn->value.data() + static_cast<std::size_t>(kk) * n;
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    da[static_cast<std::size_t>(i) * k + kk] += acc;
                }
        }
        if (wants_grad(bn)) {
            auto& db = acc_grad(bn);
            for (int i = 0; i < m; ++i)
                for (int kk = 0; kk < k; ++kk) {
                    const double s = an->value[static_cast<std::size_t>(i) * k + kk];
                    const double* grow = g.data() + static_cast<std::size_t>(i) * n;
                    double* drow = db.data() + static_cast<std::size_t>(kk) * n;
                    for (int j = 0; j < n; ++j) drow[j] += s * grow[j];
                }
        }
    });
    return res;
}

Tensor transpose(const Tensor& a) {
    require_2d(a, "transpose");
    const int m = a.dim(0), n = a.dim(1);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    const auto& av = a.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<std::size_t>(j) * m + i] = av[static_cast<std::size_t>(i) * n + j];
    Tensor res = make_op_output({n, m}, std::move(out), a.requires_grad());
    record_op(res, [an = a.node, on = res.node, m, n] {
        if (!wants_grad(an)) return;
        auto& da = acc_grad(an);
        const auto& g = on->grad;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                da[static_cast<std::size_t>(i) * n + j] += g[static_cast<std::size_t>(j) * m + i];
    });
    return res;
}

// --- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = store_round(out[i] + bv[i]);
    Tensor res = make_op_output(a.shape(), std::move(out), a.requires_grad() || b.requires_grad());
    record_op(res, [an = a.node, bn = b.node, on = res.node] {
        const auto& g = on->grad;
        if (wants_grad(an)) {
            auto& da = acc_grad(an);
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (wants_grad(bn)) {
            auto& db = acc_grad(bn);
            for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
        }
    });
    return res;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = store_round(out[i] - bv[i]);
    Tensor res = make_op_output(a.shape(), std::move(out), a.requires_grad() || b.requires_grad());
    record_op(res, [an = a.node, bn = b.node, on = res.node] {
        const auto& g = on->grad;
        if (wants_grad(an)) {
            auto& da = acc_grad(an);
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (wants_grad(bn)) {
            auto& db = acc_grad(bn);
            for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
        }
    });
    return res;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = store_round(out[i] * bv[i]);
    Tensor res = make_op_output(a.shape(), std::move(out), a.requires_grad() || b.requires_grad());
    record_op(res, [an = a.node, bn = b.node, on = res.node] {
        const auto& g = on->grad;
        if (wants_grad(an)) {
            auto& da = acc_grad(an);
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bn->value[i];
        }
        if (wants_grad(bn)) {
            auto& db = acc_grad(bn);
            for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * an->value[i];
        }
    });
    return res;
}

Tensor add_rowvec(const Tensor& x, const Tensor& bias) {
    require_2d(x, "add_rowvec");
    const int rows = x.dim(0), cols = x.dim(1);
    if (bias.numel() != cols)
        throw DimensionError("add_rowvec: bias " + shape_str(bias.shape()) + " does not match columns of " +
                             shape_str(x.shape()));
    std::vector<double> out(x.values());
    const auto& bv = bias.values();
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            auto& v = out[static_cast<std::size_t>(i) * cols + j];
            v = store_round(v + bv[static_cast<std::size_t>(j)]);
        }
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad() || bias.requires_grad());
    record_op(res, [xn = x.node, bn = bias.node, on = res.node, rows, cols] {
        const auto& g = on->grad;
        if (wants_grad(xn)) {
            auto& dx = acc_grad(xn);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
        if (wants_grad(bn)) {
            auto& db = acc_grad(bn);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j)
                    db[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i) * cols + j];
        }
    });
    return res;
}

Tensor rowwise_scale(const Tensor& x, const Tensor& s) {
    require_2d(x, "rowwise_scale");
    const int rows = x.dim(0), cols = x.dim(1);
    if (s.numel() != rows)
        throw DimensionError("rowwise_scale: scale length " + std::to_string(s.numel()) +
                             " does not match rows of " + shape_str(x.shape()));
    std::vector<double> out(x.values());
    const auto& sv = s.values();
    for (int i = 0; i < rows; ++i) {
        const double f = sv[static_cast<std::size_t>(i)];
        for (int j = 0; j < cols; ++j) {
            auto& v = out[static_cast<std::size_t>(i) * cols + j];
            v = store_round(v * f);
        }
    }
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad() || s.requires_grad());
    record_op(res, [xn = x.node, sn = s.node, on = res.node, rows, cols] {
        const auto& g = on->grad;
        if (wants_grad(xn)) {
            auto& dx = acc_grad(xn);
            for (int i = 0; i < rows; ++i) {
                const double f = sn->value[static_cast<std::size_t>(i)];
                for (int j = 0; j < cols; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * cols + j;
                    dx[idx] += g[idx] * f;
                }
            }
        }
        if (wants_grad(sn)) {
            auto& ds = acc_grad(sn);
            for (int i = 0; i < rows; ++i) {
                double acc = 0.0;
                for (int j = 0; j < cols; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * cols + j;
                    acc += g[idx] * xn->value[idx];
                }
                ds[static_cast<std::size_t>(i)] += acc;
            }
        }
    });
    return res;
}

Tensor scale_add(const Tensor& x, float m, float c) {
    std::vector<double> out(x.values());
    for (auto& v : out) v = store_round(static_cast<double>(m) * v + c);
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, m] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += m * g[i];
    });
    return res;
}

// --- activations --------------------------------------------------------------

Tensor activation(const Tensor& x, Activation kind) {
    std::vector<double> out(x.values().size());
    const auto& xv = x.values();
    switch (kind) {
        case Activation::Relu:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
            break;
        case Activation::Sigmoid: {
            // Stays strictly inside (0,1) at the active storage precision.
            const double hi = detail::rounding_enabled()
                                  ? static_cast<double>(std::nextafterf(1.0f, 0.0f))
                                  : std::nextafter(1.0, 0.0);
            const double lo = detail::rounding_enabled()
                                  ? static_cast<double>(std::numeric_limits<float>::denorm_min())
                                  : std::numeric_limits<double>::denorm_min();
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double z = xv[i];
                const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                          : std::exp(z) / (1.0 + std::exp(z));
                double f = store_round(s);
                if (f >= 1.0) f = hi;
                if (f <= 0.0) f = lo;
                out[i] = f;
            }
            break;
        }
        case Activation::Tanh:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = store_round(std::tanh(xv[i]));
            break;
    }
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, kind] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        const auto& y = on->value;
        switch (kind) {
            case Activation::Relu:
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (xn->value[i] > 0.0) dx[i] += g[i];
                break;
            case Activation::Sigmoid:
                for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
                break;
            case Activation::Tanh:
                for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
        }
    });
    return res;
}

Tensor relu(const Tensor& x) { return activation(x, Activation::Relu); }
Tensor sigmoid(const Tensor& x) { return activation(x, Activation::Sigmoid); }
Tensor tanh_act(const Tensor& x) { return activation(x, Activation::Tanh); }

Tensor softmax_rows(const Tensor& x) {
    require_2d(x, "softmax_rows");
    const int rows = x.dim(0), cols = x.dim(1);
    std::vector<double> out(x.values().size());
    const auto& xv = x.values();
    for (int i = 0; i < rows; ++i) {
        const double* row = xv.data() + static_cast<std::size_t>(i) * cols;
        double* orow = out.data() + static_cast<std::size_t>(i) * cols;
        double mx = row[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < cols; ++j) denom += std::exp(row[j] - mx);
        for (int j = 0; j < cols; ++j) orow[j] = store_round(std::exp(row[j] - mx) / denom);
    }
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, rows, cols] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        const auto& p = on->value;
        for (int i = 0; i < rows; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * cols;
            double dot = 0.0;
            for (int j = 0; j < cols; ++j) dot += g[off + j] * p[off + j];
            for (int j = 0; j < cols; ++j) dx[off + j] += p[off + j] * (g[off + j] - dot);
        }
    });
    return res;
}

Tensor log_elem(const Tensor& x) {
    std::vector<double> out(x.values().size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = store_round(std::log(xv[i]));
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / xn->value[i];
    });
    return res;
}

Tensor sqrt_elem(const Tensor& x) {
    std::vector<double> out(x.values().size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = store_round(std::sqrt(xv[i]));
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        const auto& y = on->value;
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * 0.5 / y[i];
    });
    return res;
}

Tensor abs_elem(const Tensor& x) {
    std::vector<double> out(x.values().size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(xv[i]);
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xn->value[i];
            dx[i] += v > 0.0 ? g[i] : (v < 0.0 ? -g[i] : 0.0);
        }
    });
    return res;
}

Tensor clamp(const Tensor& x, float lo, float hi) {
    std::vector<double> out(x.values().size());
    const auto& xv = x.values();
    // explicit comparisons keep NaN propagating instead of snapping to a bound
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = xv[i] < lo ? static_cast<double>(lo) : (xv[i] > hi ? static_cast<double>(hi) : xv[i]);
    Tensor res = make_op_output(x.shape(), std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, lo, hi] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xn->value[i];
            if (v > lo && v < hi) dx[i] += g[i];
        }
    });
    return res;
}

// --- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x) {
    if (x.numel() == 0) throw DegenerateInputError("sum: empty tensor");
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    Tensor res = make_op_output({1}, {store_round(acc)}, x.requires_grad());
    record_op(res, [xn = x.node, on = res.node] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const double g = on->grad[0];
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
    return res;
}

Tensor mean(const Tensor& x) {
    if (x.numel() == 0) throw DegenerateInputError("mean: empty tensor");
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    const double inv = 1.0 / static_cast<double>(x.numel());
    Tensor res = make_op_output({1}, {store_round(acc * inv)}, x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, inv] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const double g = on->grad[0] * inv;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
    return res;
}

// --- shape ops ----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel())
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    Tensor res = make_op_output(std::move(shape), x.values(), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    });
    return res;
}

Tensor pad_rows(const Tensor& x, int new_rows) {
    require_2d(x, "pad_rows");
    const int rows = x.dim(0), cols = x.dim(1);
    if (new_rows < rows)
        throw DimensionError("pad_rows: target rows " + std::to_string(new_rows) + " below current " +
                             std::to_string(rows));
    std::vector<double> out(static_cast<std::size_t>(new_rows) * cols, 0.0);
    std::copy(x.values().begin(), x.values().end(), out.begin());
    Tensor res = make_op_output({new_rows, cols}, std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, rows, cols] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) dx[i] += g[i];
    });
    return res;
}

Tensor slice_rows(const Tensor& x, int begin, int end) {
    require_2d(x, "slice_rows");
    const int rows = x.dim(0), cols = x.dim(1);
    if (begin < 0 || end > rows || begin >= end)
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                             ") invalid for " + shape_str(x.shape()));
    std::vector<double> out(x.values().begin() + static_cast<std::size_t>(begin) * cols,
                            x.values().begin() + static_cast<std::size_t>(end) * cols);
    Tensor res = make_op_output({end - begin, cols}, std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, begin, cols] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        const std::size_t off = static_cast<std::size_t>(begin) * cols;
        for (std::size_t i = 0; i < g.size(); ++i) dx[off + i] += g[i];
    });
    return res;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_2d(a, "concat_cols");
    require_2d(b, "concat_cols");
    if (a.dim(0) != b.dim(0))
        throw DimensionError("concat_cols: row counts of " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
    const int rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    std::vector<double> out(static_cast<std::size_t>(rows) * (ca + cb));
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < rows; ++i) {
        std::copy(av.begin() + static_cast<std::size_t>(i) * ca,
                  av.begin() + static_cast<std::size_t>(i + 1) * ca,
                  out.begin() + static_cast<std::size_t>(i) * (ca + cb));
        std::copy(bv.begin() + static_cast<std::size_t>(i) * cb,
                  bv.begin() + static_cast<std::size_t>(i + 1) * cb,
                  out.begin() + static_cast<std::size_t>(i) * (ca + cb) + ca);
    }
    Tensor res = make_op_output({rows, ca + cb}, std::move(out), a.requires_grad() || b.requires_grad());
    record_op(res, [an = a.node, bn = b.node, on = res.node, rows, ca, cb] {
        const auto& g = on->grad;
        if (wants_grad(an)) {
            auto& da = acc_grad(an);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < ca; ++j)
                    da[static_cast<std::size_t>(i) * ca + j] +=
                        g[static_cast<std::size_t>(i) * (ca + cb) + j];
        }
        if (wants_grad(bn)) {
            auto& db = acc_grad(bn);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cb; ++j)
                    db[static_cast<std::size_t>(i) * cb + j] +=
                        g[static_cast<std::size_t>(i) * (ca + cb) + ca + j];
        }
    });
    return res;
}

// --- temporal convolutions ---------------------------------------------------

Tensor conv1d(const Tensor& x, const Tensor& kernel, int stride, int padding) {
    require_2d(x, "conv1d");
    if (kernel.ndim() != 3)
        throw DimensionError("conv1d: kernel must be width x C_in x C_out, got " +
                             shape_str(kernel.shape()));
    if (stride < 1) throw ContractError("conv1d: stride must be positive");
    if (padding < 0) throw ContractError("conv1d: padding must be non-negative");
    const int frames = x.dim(0), cin = x.dim(1);
    const int w = kernel.dim(0), kci = kernel.dim(1), cout = kernel.dim(2);
    if (kci != cin)
        throw DimensionError("conv1d: input channels of " + shape_str(x.shape()) +
                             " do not match kernel " + shape_str(kernel.shape()));
    if (w > frames + 2 * padding)
        throw DimensionError("conv1d: kernel width " + std::to_string(w) +
                             " exceeds padded input length " + std::to_string(frames + 2 * padding));
    const int fout = (frames + 2 * padding - w) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(fout) * cout, 0.0);
    const auto& xv = x.values();
    const auto& kv = kernel.values();
    for (int t = 0; t < fout; ++t) {
        double* orow = out.data() + static_cast<std::size_t>(t) * cout;
        for (int kk = 0; kk < w; ++kk) {
            const int src = t * stride + kk - padding;
            if (src < 0 || src >= frames) continue;
            const double* xrow = xv.data() + static_cast<std::size_t>(src) * cin;
            const double* kslab = kv.data() + static_cast<std::size_t>(kk) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
                const double s = xrow[ci];
                const double* krow = kslab + static_cast<std::size_t>(ci) * cout;
                for (int co = 0; co < cout; ++co) orow[co] += s * krow[co];
            }
        }
        for (int co = 0; co < cout; ++co) orow[co] = store_round(orow[co]);
    }
    Tensor res = make_op_output({fout, cout}, std::move(out), x.requires_grad() || kernel.requires_grad());
    record_op(res, [xn = x.node, kn = kernel.node, on = res.node, frames, cin, w, cout, fout, stride,
                    padding] {
        const auto& g = on->grad;
        if (wants_grad(xn)) {
            auto& dx = acc_grad(xn);
            for (int t = 0; t < fout; ++t) {
                const double* grow = g.data() + static_cast<std::size_t>(t) * cout;
                for (int kk = 0; kk < w; ++kk) {
                    const int src = t * stride + kk - padding;
                    if (src < 0 || src >= frames) continue;
                    double* dxr = dx.data() + static_cast<std::size_t>(src) * cin;
                    const double* kslab = kn->value.data() + static_cast<std::size_t>(kk) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* krow = kslab + static_cast<std::size_t>(ci) * cout;
                        double acc = 0.0;
                        for (int co = 0; co < cout; ++co) acc += grow[co] * krow[co];
                        dxr[ci] += acc;
                    }
                }
            }
        }
        if (wants_grad(kn)) {
            auto& dk = acc_grad(kn);
            for (int t = 0; t < fout; ++t) {
                const double* grow = g.data() + static_cast<std::size_t>(t) * cout;
                for (int kk = 0; kk < w; ++kk) {
                    const int src = t * stride + kk - padding;
                    if (src < 0 || src >= frames) continue;
                    const double* xrow = xn->value.data() + static_cast<std::size_t>(src) * cin;
                    double* dkslab = dk.data() + static_cast<std::size_t>(kk) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double s = xrow[ci];
                        double* dkrow = dkslab + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) dkrow[co] += s * grow[co];
                    }
                }
            }
        }
    });
    return res;
}

Tensor conv1d_transpose(const Tensor& x, const Tensor& kernel, int stride, int padding) {
    require_2d(x, "conv1d_transpose");
    if (kernel.ndim() != 3)
        throw DimensionError("conv1d_transpose: kernel must be width x C_out x C_in, got " +
                             shape_str(kernel.shape()));
    if (stride < 1) throw ContractError("conv1d_transpose: stride must be positive");
    if (padding < 0) throw ContractError("conv1d_transpose: padding must be non-negative");
    const int frames = x.dim(0), cy = x.dim(1);
    const int w = kernel.dim(0), cx = kernel.dim(1), kcy = kernel.dim(2);
    if (kcy != cy)
        throw DimensionError("conv1d_transpose: channels of " + shape_str(x.shape()) +
                             " do not match kernel " + shape_str(kernel.shape()));
    const int fout = (frames - 1) * stride + w - 2 * padding;
    if (fout < 1)
        throw DimensionError("conv1d_transpose: output would be empty for input " +
                             shape_str(x.shape()));
    std::vector<double> out(static_cast<std::size_t>(fout) * cx, 0.0);
    const auto& xv = x.values();
    const auto& kv = kernel.values();
    for (int t = 0; t < frames; ++t) {
        const double* xrow = xv.data() + static_cast<std::size_t>(t) * cy;
        for (int kk = 0; kk < w; ++kk) {
            const int dst = t * stride + kk - padding;
            if (dst < 0 || dst >= fout) continue;
            double* orow = out.data() + static_cast<std::size_t>(dst) * cx;
            const double* kslab = kv.data() + static_cast<std::size_t>(kk) * cx * cy;
            for (int c = 0; c < cx; ++c) {
                const double* krow = kslab + static_cast<std::size_t>(c) * cy;
                double a = 0.0;
                for (int j = 0; j < cy; ++j) a += xrow[j] * krow[j];
                orow[c] += a;
            }
        }
    }
    for (auto& v : out) v = store_round(v);
    Tensor res = make_op_output({fout, cx}, std::move(out), x.requires_grad() || kernel.requires_grad());
    record_op(res, [xn = x.node, kn = kernel.node, on = res.node, frames, cy, w, cx, fout, stride,
                    padding] {
        const auto& g = on->grad;
        if (wants_grad(xn)) {
            auto& dx = acc_grad(xn);
            for (int t = 0; t < frames; ++t) {
                double* dxr = dx.data() + static_cast<std::size_t>(t) * cy;
                for (int kk = 0; kk < w; ++kk) {
                    const int dst = t * stride + kk - padding;
                    if (dst < 0 || dst >= fout) continue;
                    const double* grow = g.data() + static_cast<std::size_t>(dst) * cx;
                    const double* kslab = kn->value.data() + static_cast<std::size_t>(kk) * cx * cy;
                    for (int c = 0; c < cx; ++c) {
                        const double gv = grow[c];
                        const double* krow = kslab + static_cast<std::size_t>(c) * cy;
                        for (int j = 0; j < cy; ++j) dxr[j] += gv * krow[j];
                    }
                }
            }
        }
        if (wants_grad(kn)) {
            auto& dk = acc_grad(kn);
            for (int t = 0; t < frames; ++t) {
                const double* xrow = xn->value.data() + static_cast<std::size_t>(t) * cy;
                for (int kk = 0; kk < w; ++kk) {
                    const int dst = t * stride + kk - padding;
                    if (dst < 0 || dst >= fout) continue;
                    const double* grow = g.data() + static_cast<std::size_t>(dst) * cx;
                    double* dkslab = dk.data() + static_cast<std::size_t>(kk) * cx * cy;
                    for (int c = 0; c < cx; ++c) {
                        const double gv = grow[c];
                        double* dkrow = dkslab + static_cast<std::size_t>(c) * cy;
                        for (int j = 0; j < cy; ++j) dkrow[j] += gv * xrow[j];
                    }
                }
            }
        }
    });
    return res;
}

Tensor max_pool1d(const Tensor& x, int window, int stride) {
    require_2d(x, "max_pool1d");
    if (window < 1 || stride < 1) throw ContractError("max_pool1d: window and stride must be positive");
    const int frames = x.dim(0), cols = x.dim(1);
    if (frames < window)
        throw DimensionError("max_pool1d: input length " + std::to_string(frames) +
                             " shorter than window " + std::to_string(window));
    const int fout = (frames - window) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(fout) * cols);
    std::vector<int> argmax(out.size());
    const auto& xv = x.values();
    for (int t = 0; t < fout; ++t) {
        for (int c = 0; c < cols; ++c) {
            int best = t * stride;
            double bv = xv[static_cast<std::size_t>(best) * cols + c];
            for (int kk = 1; kk < window; ++kk) {
                const int idx = t * stride + kk;
                const double v = xv[static_cast<std::size_t>(idx) * cols + c];
                if (v > bv) {  // strict: ties keep the earliest index
                    bv = v;
                    best = idx;
                }
            }
            out[static_cast<std::size_t>(t) * cols + c] = bv;
            argmax[static_cast<std::size_t>(t) * cols + c] = best;
        }
    }
    Tensor res = make_op_output({fout, cols}, std::move(out), x.requires_grad());
    record_op(res, [xn = x.node, on = res.node, am = std::move(argmax), cols] {
        if (!wants_grad(xn)) return;
        auto& dx = acc_grad(xn);
        const auto& g = on->grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const int row = am[i];
            dx[static_cast<std::size_t>(row) * cols + (i % cols)] += g[i];
        }
    });
    return res;
}

// --- normalization --------------------------------------------------------

namespace detail {

Tensor norm_layer_impl(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps,
                       NormAxis axis, bool allow_unit_axis) {
    if (x.ndim() != 2)
        throw DimensionError("norm_layer: expected a 2-d tensor, got " + shape_str(x.shape()));
    const int rows = x.dim(0), cols = x.dim(1);
    if (gamma.numel() != cols || beta.numel() != cols)
        throw DimensionError("norm_layer: affine length " + std::to_string(gamma.numel()) +
                             " does not match channels of " + shape_str(x.shape()));
    if (axis == NormAxis::Temporal && rows < 2 && !allow_unit_axis)
        throw DegenerateInputError("norm_layer: temporal normalization needs at least 2 frames, got " +
                                   std::to_string(rows));
    if (axis == NormAxis::Feature && cols < 1)
        throw DegenerateInputError("norm_layer: empty feature axis");

    const auto& xv = x.values();
    const auto& gv = gamma.values();
    const auto& bv = beta.values();
    std::vector<double> xhat(xv.size());
    std::vector<double> out(xv.size());
    const int groups = axis == NormAxis::Temporal ? cols : rows;
    const int glen = axis == NormAxis::Temporal ? rows : cols;
    std::vector<double> inv_std(static_cast<std::size_t>(groups));

    auto elem_index = [&](int g, int e) -> std::size_t {
        // Temporal: group is a channel, elements run over rows.
        // Feature: group is a row, elements run over columns.
        return axis == NormAxis::Temporal ? static_cast<std::size_t>(e) * cols + g
                                          : static_cast<std::size_t>(g) * cols + e;
    };
    auto affine_index = [&](int g, int e) -> int { return axis == NormAxis::Temporal ? g : e; };

    for (int grp = 0; grp < groups; ++grp) {
        double s = 0.0;
        for (int e = 0; e < glen; ++e) s += xv[elem_index(grp, e)];
        const double mu = s / glen;
        double var = 0.0;
        for (int e = 0; e < glen; ++e) {
            const double d = xv[elem_index(grp, e)] - mu;
            var += d * d;
        }
        var /= glen;
        const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
        inv_std[static_cast<std::size_t>(grp)] = inv;
        for (int e = 0; e < glen; ++e) {
            const std::size_t idx = elem_index(grp, e);
            const double xh = store_round((xv[idx] - mu) * inv);
            xhat[idx] = xh;
            out[idx] = store_round(gv[static_cast<std::size_t>(affine_index(grp, e))] * xh +
                                   bv[static_cast<std::size_t>(affine_index(grp, e))]);
        }
    }

    Tensor res = make_op_output(x.shape(),
                                std::move(out),
                                x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    record_op(res, [xn = x.node, gn = gamma.node, bn = beta.node, on = res.node,
                    xh = std::move(xhat), istd = std::move(inv_std), rows, cols, axis] {
        const auto& g = on->grad;
        const int groups = axis == NormAxis::Temporal ? cols : rows;
        const int glen = axis == NormAxis::Temporal ? rows : cols;
        auto elem_index = [&](int grp, int e) -> std::size_t {
            return axis == NormAxis::Temporal ? static_cast<std::size_t>(e) * cols + grp
                                              : static_cast<std::size_t>(grp) * cols + e;
        };
        auto affine_index = [&](int grp, int e) -> int { return axis == NormAxis::Temporal ? grp : e; };

        if (wants_grad(gn)) {
            auto& dg = acc_grad(gn);
            for (int grp = 0; grp < groups; ++grp)
                for (int e = 0; e < glen; ++e) {
                    const std::size_t idx = elem_index(grp, e);
                    dg[static_cast<std::size_t>(affine_index(grp, e))] += g[idx] * xh[idx];
                }
        }
        if (wants_grad(bn)) {
            auto& db = acc_grad(bn);
            for (int grp = 0; grp < groups; ++grp)
                for (int e = 0; e < glen; ++e)
                    db[static_cast<std::size_t>(affine_index(grp, e))] += g[elem_index(grp, e)];
        }
        if (wants_grad(xn)) {
            auto& dx = acc_grad(xn);
            for (int grp = 0; grp < groups; ++grp) {
                double sum1 = 0.0, sum2 = 0.0;
                for (int e = 0; e < glen; ++e) {
                    const std::size_t idx = elem_index(grp, e);
                    const double dxh = g[idx] * gn->value[static_cast<std::size_t>(affine_index(grp, e))];
                    sum1 += dxh;
                    sum2 += dxh * xh[idx];
                }
                const double inv = istd[static_cast<std::size_t>(grp)];
                for (int e = 0; e < glen; ++e) {
                    const std::size_t idx = elem_index(grp, e);
                    const double dxh = g[idx] * gn->value[static_cast<std::size_t>(affine_index(grp, e))];
                    dx[idx] += inv * (dxh - sum1 / glen - xh[idx] * sum2 / glen);
                }
            }
        }
    });
    return res;
}

}  // namespace detail

Tensor norm_layer(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps, NormAxis axis) {
    return detail::norm_layer_impl(x, gamma, beta, eps, axis, false);
}

}  // namespace caan
