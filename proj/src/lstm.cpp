#include <cmath>

#include "caan/tensor.hpp"
#include "op_common.hpp"

namespace caan {

using detail::acc_grad;
using detail::store_round;
using detail::wants_grad;

namespace {

inline double sigmoid_d(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

LstmOutput lstm_forward(const Tensor& x, const LstmParams& p, const Tensor& h0, const Tensor& c0) {
    if (x.ndim() != 2) throw DimensionError("lstm: input must be frames x d_in, got " + shape_str(x.shape()));
    if (p.w_hidden.ndim() != 2) throw DimensionError("lstm: recurrent weights must be 2-d");
    const int frames = x.dim(0), din = x.dim(1);
    const int hidden = p.w_hidden.dim(0);
    const int gates = 4 * hidden;
    if (p.w_input.ndim() != 2 || p.w_input.dim(0) != din || p.w_input.dim(1) != gates)
        throw DimensionError("lstm: input weights " + shape_str(p.w_input.shape()) + " expected [" +
                             std::to_string(din) + "x" + std::to_string(gates) + "]");
    if (p.w_hidden.dim(1) != gates)
        throw DimensionError("lstm: recurrent weights " + shape_str(p.w_hidden.shape()) + " expected [" +
                             std::to_string(hidden) + "x" + std::to_string(gates) + "]");
    if (p.bias.numel() != gates)
        throw DimensionError("lstm: bias length " + std::to_string(p.bias.numel()) + " expected " +
                             std::to_string(gates));
    if (h0.numel() != hidden || c0.numel() != hidden)
        throw DimensionError("lstm: initial state length must be " + std::to_string(hidden));
    if (frames < 1) throw DegenerateInputError("lstm: empty input sequence");

    const auto& xv = x.values();
    const auto& wv = p.w_input.values();
    const auto& uv = p.w_hidden.values();
    const auto& bv = p.bias.values();

    std::vector<double> hall(static_cast<std::size_t>(frames) * hidden);
    // Saved activations for the backward pass.
    std::vector<double> gate(static_cast<std::size_t>(frames) * gates);  // i,f,g,o post-activation
    std::vector<double> cell(static_cast<std::size_t>(frames) * hidden);
    std::vector<double> tanhc(static_cast<std::size_t>(frames) * hidden);

    std::vector<double> z(static_cast<std::size_t>(gates));
    const double* hprev = h0.values().data();
    const double* cprev = c0.values().data();
    for (int t = 0; t < frames; ++t) {
        for (int j = 0; j < gates; ++j) z[static_cast<std::size_t>(j)] = bv[static_cast<std::size_t>(j)];
        const double* xrow = xv.data() + static_cast<std::size_t>(t) * din;
        for (int i = 0; i < din; ++i) {
            const double s = xrow[i];
            const double* wrow = wv.data() + static_cast<std::size_t>(i) * gates;
            for (int j = 0; j < gates; ++j) z[static_cast<std::size_t>(j)] += s * wrow[j];
        }
        for (int i = 0; i < hidden; ++i) {
            const double s = hprev[i];
            const double* urow = uv.data() + static_cast<std::size_t>(i) * gates;
            for (int j = 0; j < gates; ++j) z[static_cast<std::size_t>(j)] += s * urow[j];
        }
        double* grow = gate.data() + static_cast<std::size_t>(t) * gates;
        double* crow = cell.data() + static_cast<std::size_t>(t) * hidden;
        double* tcrow = tanhc.data() + static_cast<std::size_t>(t) * hidden;
        double* hrow = hall.data() + static_cast<std::size_t>(t) * hidden;
        for (int j = 0; j < hidden; ++j) {
            const double ig = store_round(sigmoid_d(z[static_cast<std::size_t>(j)]));
            const double fg = store_round(sigmoid_d(z[static_cast<std::size_t>(hidden + j)]));
            const double gg = store_round(std::tanh(z[static_cast<std::size_t>(2 * hidden + j)]));
            const double og = store_round(sigmoid_d(z[static_cast<std::size_t>(3 * hidden + j)]));
            const double c = store_round(fg * cprev[j] + ig * gg);
            const double tc = store_round(std::tanh(c));
            grow[j] = ig;
            grow[hidden + j] = fg;
            grow[2 * hidden + j] = gg;
            grow[3 * hidden + j] = og;
            crow[j] = c;
            tcrow[j] = tc;
            hrow[j] = store_round(og * tc);
        }
        hprev = hrow;
        cprev = crow;
    }

    const bool rg = x.requires_grad() || p.w_input.requires_grad() || p.w_hidden.requires_grad() ||
                    p.bias.requires_grad() || h0.requires_grad() || c0.requires_grad();
    Tensor hall_t = make_op_output({frames, hidden}, std::move(hall), rg);

    if (rg && Tape::active()) {
        Tape::active()->record(
            {hall_t.node},
            [xn = x.node, wn = p.w_input.node, un = p.w_hidden.node, bn = p.bias.node, h0n = h0.node,
             c0n = c0.node, on = hall_t.node, gate = std::move(gate), cell = std::move(cell),
             tanhc = std::move(tanhc), frames, din, hidden, gates] {
                const auto& gh = on->grad;
                const auto& hv = on->value;
                std::vector<double> dh(static_cast<std::size_t>(hidden), 0.0);  // recurrent carry
                std::vector<double> dc(static_cast<std::size_t>(hidden), 0.0);
                std::vector<double> dz(static_cast<std::size_t>(gates));

                const bool gx = wants_grad(xn), gw = wants_grad(wn), gu = wants_grad(un),
                           gb = wants_grad(bn), gh0 = wants_grad(h0n), gc0 = wants_grad(c0n);
                std::vector<double>* dxv = gx ? &acc_grad(xn) : nullptr;
                std::vector<double>* dwv = gw ? &acc_grad(wn) : nullptr;
                std::vector<double>* duv = gu ? &acc_grad(un) : nullptr;
                std::vector<double>* dbv = gb ? &acc_grad(bn) : nullptr;

                for (int t = frames - 1; t >= 0; --t) {
                    const double* grow = gate.data() + static_cast<std::size_t>(t) * gates;
                    const double* tcrow = tanhc.data() + static_cast<std::size_t>(t) * hidden;
                    const double* cprev = t > 0 ? cell.data() + static_cast<std::size_t>(t - 1) * hidden
                                                : c0n->value.data();
                    const double* hprev = t > 0 ? hv.data() + static_cast<std::size_t>(t - 1) * hidden
                                                : h0n->value.data();
                    const double* ghrow = gh.data() + static_cast<std::size_t>(t) * hidden;
                    for (int j = 0; j < hidden; ++j) {
                        const double dht = ghrow[j] + dh[static_cast<std::size_t>(j)];
                        const double ig = grow[j], fg = grow[hidden + j], gg = grow[2 * hidden + j],
                                     og = grow[3 * hidden + j];
                        const double tc = tcrow[j];
                        const double do_ = dht * tc;
                        const double dct = dc[static_cast<std::size_t>(j)] + dht * og * (1.0 - tc * tc);
                        const double di = dct * gg;
                        const double df = dct * cprev[j];
                        const double dg = dct * ig;
                        dz[static_cast<std::size_t>(j)] = di * ig * (1.0 - ig);
                        dz[static_cast<std::size_t>(hidden + j)] = df * fg * (1.0 - fg);
                        dz[static_cast<std::size_t>(2 * hidden + j)] = dg * (1.0 - gg * gg);
                        dz[static_cast<std::size_t>(3 * hidden + j)] = do_ * og * (1.0 - og);
                        dc[static_cast<std::size_t>(j)] = dct * fg;
                    }
                    if (gb)
                        for (int j = 0; j < gates; ++j)
                            (*dbv)[static_cast<std::size_t>(j)] += dz[static_cast<std::size_t>(j)];
                    if (gw) {
                        const double* xrow = xn->value.data() + static_cast<std::size_t>(t) * din;
                        for (int i = 0; i < din; ++i) {
                            const double s = xrow[i];
                            double* drow = dwv->data() + static_cast<std::size_t>(i) * gates;
                            for (int j = 0; j < gates; ++j) drow[j] += s * dz[static_cast<std::size_t>(j)];
                        }
                    }
                    if (gu) {
                        for (int i = 0; i < hidden; ++i) {
                            const double s = hprev[i];
                            double* drow = duv->data() + static_cast<std::size_t>(i) * gates;
                            for (int j = 0; j < gates; ++j) drow[j] += s * dz[static_cast<std::size_t>(j)];
                        }
                    }
                    if (gx) {
                        double* dxr = dxv->data() + static_cast<std::size_t>(t) * din;
                        const auto& wv = wn->value;
                        for (int i = 0; i < din; ++i) {
                            const double* wrow = wv.data() + static_cast<std::size_t>(i) * gates;
                            double acc = 0.0;
                            for (int j = 0; j < gates; ++j) acc += wrow[j] * dz[static_cast<std::size_t>(j)];
                            dxr[i] += acc;
                        }
                    }
                    // carry into step t-1 through the recurrent weights
                    const auto& uv = un->value;
                    for (int i = 0; i < hidden; ++i) {
                        const double* urow = uv.data() + static_cast<std::size_t>(i) * gates;
                        double acc = 0.0;
                        for (int j = 0; j < gates; ++j) acc += urow[j] * dz[static_cast<std::size_t>(j)];
                        dh[static_cast<std::size_t>(i)] = acc;
                    }
                }
                if (gh0) {
                    auto& d = acc_grad(h0n);
                    for (int i = 0; i < hidden; ++i)
                        d[static_cast<std::size_t>(i)] += dh[static_cast<std::size_t>(i)];
                }
                if (gc0) {
                    auto& d = acc_grad(c0n);
                    for (int i = 0; i < hidden; ++i)
                        d[static_cast<std::size_t>(i)] += dc[static_cast<std::size_t>(i)];
                }
            });
    }

    LstmOutput out;
    out.hidden_all = hall_t;
    out.hidden_last = reshape(slice_rows(hall_t, frames - 1, frames), {hidden});
    return out;
}

LstmOutput lstm_forward(const Tensor& x, const LstmParams& p) {
    const int hidden = p.w_hidden.dim(0);
    return lstm_forward(x, p, Tensor::zeros({hidden}), Tensor::zeros({hidden}));
}

}  // namespace caan
