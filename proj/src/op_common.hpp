#pragma once

// Shared helpers for op implementations.

#include <vector>

#include "caan/tensor.hpp"

namespace caan {

Tensor make_op_output(Shape shape, std::vector<double> values, bool requires_grad);

namespace detail {

inline bool recording() { return Tape::active() != nullptr; }

inline void record_op(const Tensor& out, std::function<void()> fn) {
    if (out.requires_grad() && Tape::active())
        Tape::active()->record({out.node}, std::move(fn));
}

// += into a node's gradient buffer, allocating on first touch.
inline std::vector<double>& acc_grad(const NodePtr& n) { return n->grad_buffer(); }

inline bool wants_grad(const NodePtr& n) { return n->requires_grad; }

}  // namespace detail
}  // namespace caan
