#include "caan/tensor.hpp"

#include <cmath>
#include <sstream>

namespace caan {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

namespace {
thread_local bool g_rounding = true;
}

namespace detail {
bool rounding_enabled() { return g_rounding; }
}  // namespace detail

HighPrecisionScope::HighPrecisionScope() : prev_(g_rounding) { g_rounding = false; }
HighPrecisionScope::~HighPrecisionScope() { g_rounding = prev_; }

static detail::NodePtr make_node(Shape shape, std::vector<double> values, bool requires_grad, bool leaf) {
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    n->leaf = leaf;
    return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = shape_numel(shape);
    Tensor t;
    t.node = make_node(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0),
                       requires_grad, true);
    return t;
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    auto n = shape_numel(shape);
    Tensor t;
    t.node = make_node(std::move(shape),
                       std::vector<double>(static_cast<std::size_t>(n), detail::store_round(v)),
                       requires_grad, true);
    return t;
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
        throw DimensionError("from_values: shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    for (auto& v : values) v = detail::store_round(v);
    Tensor t;
    t.node = make_node(std::move(shape), std::move(values), requires_grad, true);
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

float Tensor::item() const {
    if (!defined() || numel() != 1) throw ContractError("item() requires a one-element tensor");
    return static_cast<float>(node->value[0]);
}

double Tensor::item_double() const {
    if (!defined() || numel() != 1) throw ContractError("item_double() requires a one-element tensor");
    return node->value[0];
}

Tensor Tensor::detach() const {
    Tensor t;
    t.node = make_node(node->shape, node->value, false, true);
    return t;
}

// Output of an op: non-leaf, requires_grad inherited from inputs.
Tensor make_op_output(Shape shape, std::vector<double> values, bool requires_grad) {
    Tensor t;
    t.node = make_node(std::move(shape), std::move(values), requires_grad, false);
    return t;
}

// --- tape -----------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

Tape::Scope::Scope(Tape* t) : prev_(g_active_tape) { g_active_tape = t; }
Tape::Scope::~Scope() { g_active_tape = prev_; }

void Tape::record(std::vector<detail::NodePtr> outputs, std::function<void()> backward_fn) {
    records_.push_back({std::move(outputs), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward requires a scalar loss tensor");
    if (records_.empty()) throw ContractError("backward on an empty tape");

    // Fresh propagation buffers for intermediates; leaf gradients are left
    // alone so repeated calls accumulate.
    for (auto& rec : records_)
        for (auto& out : rec.outputs) out->grad.clear();

    loss.node->grad.assign(1, 1.0);

    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        bool any = false;
        for (auto& out : it->outputs)
            if (!out->grad.empty()) any = true;
        if (any) it->fn();
    }
}

void backward(const Tensor& loss) {
    Tape* t = Tape::active();
    if (!t) throw ContractError("backward called with no active tape");
    t->backward(loss);
}

// --- optimizer --------------------------------------------------------------

Adam::Adam(AdamConfig cfg, const std::vector<Tensor>& params) : cfg_(cfg) {
    if (cfg_.lr < 0.0) throw ConfigError("adam: learning rate must be non-negative");
    shapes_.reserve(params.size());
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        shapes_.push_back(p.shape());
        m_.emplace_back(p.values().size(), 0.0f);
        v_.emplace_back(p.values().size(), 0.0f);
    }
}

void Adam::step(std::vector<Tensor>& params) {
    if (params.size() != shapes_.size())
        throw DimensionError("adam: expected " + std::to_string(shapes_.size()) + " parameters, got " +
                             std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].shape() != shapes_[i])
            throw DimensionError("adam: parameter " + std::to_string(i) + " shape " +
                                 shape_str(params[i].shape()) + " does not match state shape " +
                                 shape_str(shapes_[i]));
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& val = params[i].values();
        auto& m = m_[i];
        auto& v = v_[i];
        const auto& g = params[i].node->grad;
        for (std::size_t j = 0; j < val.size(); ++j) {
            const double gj = g.empty() ? 0.0 : g[j];
            const double mj = b1 * m[j] + (1.0 - b1) * gj;
            const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            const double mhat = mj / corr1;
            const double vhat = vj / corr2;
            val[j] = detail::store_round(val[j] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }
}

// --- parameter helpers -------------------------------------------------------

void zero_grads(std::vector<Tensor>& params) {
    for (auto& p : params) p.zero_grad();
}

double global_grad_norm(const std::vector<Tensor>& params) {
    double acc = 0.0;
    for (const auto& p : params)
        for (double g : p.node->grad) acc += g * g;
    return std::sqrt(acc);
}

void clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (auto& p : params)
        for (double& g : p.node->grad) g *= scale;
}

std::uint64_t params_hash(const std::vector<Tensor>& params) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    auto mix_bytes = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : params)
        mix_bytes(p.values().data(), p.values().size() * sizeof(double));
    return h;
}

void init_uniform_fanin(Tensor& t, int fan_in, Rng& rng) {
    const float bound = std::sqrt(1.0f / static_cast<float>(fan_in));
    for (double& v : t.values()) v = static_cast<double>(rng.uniform_f(-bound, bound));
}

}  // namespace caan
