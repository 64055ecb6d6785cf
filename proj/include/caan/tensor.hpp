#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "caan/errors.hpp"
#include "caan/rng.hpp"

namespace caan {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

namespace detail {

// Value + gradient storage shared by tensor handles and tape records.
// Values are held as doubles; in normal operation every op output is
// rounded through float32, so the observable numerics are 32-bit. The
// finite-difference oracle suspends that rounding (HighPrecisionScope)
// to evaluate the same graph in 64-bit.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until a gradient is accumulated
    bool requires_grad = false;
    bool leaf = true;

    std::int64_t numel() const { return static_cast<std::int64_t>(value.size()); }
    std::vector<double>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

using NodePtr = std::shared_ptr<Node>;

// Float32 storage rounding, suspended inside a HighPrecisionScope.
bool rounding_enabled();
inline double store_round(double x) {
    return rounding_enabled() ? static_cast<double>(static_cast<float>(x)) : x;
}

}  // namespace detail

// Disables the float32 storage rounding for the current thread while in
// scope. Used by gradient-check oracles so that central differences see
// a smooth 64-bit function.
class HighPrecisionScope {
public:
    HighPrecisionScope();
    ~HighPrecisionScope();
    HighPrecisionScope(const HighPrecisionScope&) = delete;

private:
    bool prev_;
};

// Dense float32 tensor handle. Copying a Tensor aliases the same storage;
// use detach() for an independent leaf copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node != nullptr; }
    const Shape& shape() const { return node->shape; }
    int ndim() const { return static_cast<int>(node->shape.size()); }
    int dim(int i) const { return node->shape[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const { return node->numel(); }

    const std::vector<double>& values() const { return node->value; }
    std::vector<double>& values() { return node->value; }

    bool requires_grad() const { return node->requires_grad; }
    void set_requires_grad(bool rg) { node->requires_grad = rg; }
    bool is_leaf() const { return node->leaf; }

    bool has_grad() const { return !node->grad.empty(); }
    // Copy of the gradient; zeros when nothing was accumulated yet.
    std::vector<double> grad() const {
        if (node->grad.empty()) return std::vector<double>(node->value.size(), 0.0);
        return node->grad;
    }
    void zero_grad() { node->grad.clear(); }

    float item() const;
    double item_double() const;
    Tensor detach() const;

    detail::NodePtr node;  // internal handle, used by the op implementations
};

// Ordered record of executed operations. Ops append themselves while a
// Tape::Scope is active; backward() replays the records in reverse.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    // Walks the tape in reverse from `loss` (a scalar), accumulating
    // gradients (+=) into every requires_grad tensor that contributed.
    // Leaf gradients persist across calls; running backward twice on the
    // same tape doubles them.
    void backward(const Tensor& loss);

    void reset() { records_.clear(); }
    std::size_t size() const { return records_.size(); }

    void record(std::vector<detail::NodePtr> outputs, std::function<void()> backward_fn);

    // Binds a tape (or nullptr, suspending recording) for the current thread.
    class Scope {
    public:
        explicit Scope(Tape* t);
        ~Scope();
        Scope(const Scope&) = delete;

    private:
        Tape* prev_;
    };

private:
    struct Record {
        std::vector<detail::NodePtr> outputs;
        std::function<void()> fn;
    };
    std::vector<Record> records_;
};

// Convenience: backward on the thread's active tape.
void backward(const Tensor& loss);

enum class Activation { Relu, Sigmoid, Tanh };
enum class NormAxis { Temporal, Feature };

// --- core ops -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// x (m x n) + bias (n), broadcast over rows
Tensor add_rowvec(const Tensor& x, const Tensor& bias);
// row f of x scaled by s[f]; s has numel == rows(x)
Tensor rowwise_scale(const Tensor& x, const Tensor& s);
// elementwise m * x + c
Tensor scale_add(const Tensor& x, float m, float c);
Tensor activation(const Tensor& x, Activation kind);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
Tensor log_elem(const Tensor& x);
Tensor sqrt_elem(const Tensor& x);
Tensor abs_elem(const Tensor& x);
Tensor clamp(const Tensor& x, float lo, float hi);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor pad_rows(const Tensor& x, int new_rows);
Tensor slice_rows(const Tensor& x, int begin, int end);
Tensor concat_cols(const Tensor& a, const Tensor& b);

// Temporal convolution: x is frames x C_in, kernel is width x C_in x C_out.
// Output has floor((F + 2*padding - width)/stride) + 1 frames.
Tensor conv1d(const Tensor& x, const Tensor& kernel, int stride = 1, int padding = 0);

// Linear adjoint of conv1d with the same kernel/stride/padding. Input is
// frames x C_out, output is ((F-1)*stride + width - 2*padding) x C_in.
Tensor conv1d_transpose(const Tensor& x, const Tensor& kernel, int stride = 2, int padding = 0);

// Windowed maximum over time. Gradient routes to the earliest maximal
// element of each window.
Tensor max_pool1d(const Tensor& x, int window = 2, int stride = 2);

// Zero mean / unit variance along the chosen axis, then gamma/beta affine.
// gamma and beta are indexed by column (channel) for both axes.
Tensor norm_layer(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps, NormAxis axis);

namespace detail {
// Internal variant used by the FCSN, where the deepest stage can have a
// single time step; normalization then degenerates to outputting beta.
Tensor norm_layer_impl(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps,
                       NormAxis axis, bool allow_unit_axis);
}  // namespace detail

// --- LSTM ---------------------------------------------------------------

// Combined-gate weights, column order [input, forget, candidate, output].
struct LstmParams {
    Tensor w_input;   // d_in x 4H
    Tensor w_hidden;  // H x 4H
    Tensor bias;      // 4H
};

struct LstmOutput {
    Tensor hidden_all;   // F x H
    Tensor hidden_last;  // H
};

LstmOutput lstm_forward(const Tensor& x, const LstmParams& p, const Tensor& h0, const Tensor& c0);
LstmOutput lstm_forward(const Tensor& x, const LstmParams& p);  // zero initial state

// --- optimizer ----------------------------------------------------------

struct AdamConfig {
    double lr = 3e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam. Moment buffers mirror the parameter shapes; the
// step counter is shared across parameters.
class Adam {
public:
    Adam(AdamConfig cfg, const std::vector<Tensor>& params);

    void step(std::vector<Tensor>& params);
    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<Shape> shapes_;
    std::vector<std::vector<float>> m_;  // 32-bit moment storage
    std::vector<std::vector<float>> v_;
};

// --- parameter helpers ----------------------------------------------------

void zero_grads(std::vector<Tensor>& params);
double global_grad_norm(const std::vector<Tensor>& params);
void clip_grad_norm(std::vector<Tensor>& params, double max_norm);
std::uint64_t params_hash(const std::vector<Tensor>& params);
// Uniform in +-sqrt(1/fan_in).
void init_uniform_fanin(Tensor& t, int fan_in, Rng& rng);

}  // namespace caan
