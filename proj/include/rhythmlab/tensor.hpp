#pragma once

// Dense tensors (rank 1 or 2) with reverse-mode autodiff on a define-by-run
// tape. The primitive set is fixed: matmul, add, mul, scale, sum, mean,
// transpose, reshape, concat, slice, embedding lookup, tanh, sigmoid, gelu,
// softmax, layer_norm, squared_error. Everything else is composed from these.
//
// Tensors are immutable values; ops never mutate inputs. A tensor is either
// off-tape (constant) or recorded on exactly one tape. Gradients flow only
// from tape leaves, and backward() visits nodes once, in reverse creation
// order.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "rhythmlab/error.hpp"
#include "rhythmlab/kernels.hpp"

namespace rhythmlab {

/// Non-finite detection: on by default (tests), switchable for training hot
/// loops. Thread-local so worker tapes are independent.
bool numerics_check_enabled();
void set_numerics_check(bool on);

struct NumericsCheckScope {
    explicit NumericsCheckScope(bool on) : prev_(numerics_check_enabled()) {
        set_numerics_check(on);
    }
    ~NumericsCheckScope() { set_numerics_check(prev_); }

private:
    bool prev_;
};

namespace detail {
std::string shape_str(const std::vector<int>& s);

template <typename T>
void require_finite(const std::vector<T>& v, const char* op) {
    if (!numerics_check_enabled()) return;
    for (const T x : v) {
        if (!std::isfinite(static_cast<double>(x))) {
            throw NumericError(std::string(op) + ": non-finite value produced");
        }
    }
}

inline std::int64_t shape_size(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}
} // namespace detail

template <typename T>
class Tape;

template <typename T>
class Tensor {
public:
    Tensor() = default;

    /// Off-tape constant.
    Tensor(std::vector<int> shape, std::vector<T> values)
        : data_(std::make_shared<const std::vector<T>>(std::move(values))),
          shape_(std::move(shape)) {
        if (shape_.empty() || shape_.size() > 2) {
            throw DimensionError("tensor: rank must be 1 or 2, got shape " +
                                 detail::shape_str(shape_));
        }
        for (int d : shape_) {
            if (d <= 0) throw DimensionError("tensor: non-positive dim in " +
                                             detail::shape_str(shape_));
        }
        if (detail::shape_size(shape_) != static_cast<std::int64_t>(data_->size())) {
            throw DimensionError("tensor: shape " + detail::shape_str(shape_) +
                                 " does not match " + std::to_string(data_->size()) +
                                 " values");
        }
        detail::require_finite(*data_, "tensor");
    }

    static Tensor zeros(std::vector<int> shape) {
        const auto n = detail::shape_size(shape);
        return Tensor(std::move(shape), std::vector<T>(static_cast<std::size_t>(n), T(0)));
    }

    static Tensor full(std::vector<int> shape, T v) {
        const auto n = detail::shape_size(shape);
        return Tensor(std::move(shape), std::vector<T>(static_cast<std::size_t>(n), v));
    }

    static Tensor scalar(T v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    std::int64_t size() const { return detail::shape_size(shape_); }
    bool defined() const { return data_ != nullptr; }

    int rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
    int cols() const { return shape_.size() == 2 ? shape_[1] : shape_[0]; }

    const std::vector<T>& values() const { return *data_; }
    const T* data() const { return data_->data(); }

    T item() const {
        if (size() != 1) {
            throw ContractError("item: tensor is not scalar, shape " +
                                detail::shape_str(shape_));
        }
        return (*data_)[0];
    }

    bool on_tape() const { return tape_ != nullptr; }
    Tape<T>* tape() const { return tape_; }
    int node() const { return node_; }

private:
    std::shared_ptr<const std::vector<T>> data_;
    std::vector<int> shape_;
    Tape<T>* tape_ = nullptr;
    int node_ = -1;

    friend class Tape<T>;
};

template <typename T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable parameter. Gradients are available after backward().
    Tensor<T> leaf(std::vector<int> shape, std::vector<T> values) {
        Tensor<T> t(std::move(shape), std::move(values));
        t.tape_ = this;
        t.node_ = add_node(t.data_, t.shape_, {}, nullptr);
        leaf_flags_.resize(nodes_.size(), false);
        leaf_flags_[static_cast<std::size_t>(t.node_)] = true;
        return t;
    }

    void backward(const Tensor<T>& loss) {
        if (!loss.defined() || loss.tape_ != this || loss.node_ < 0) {
            throw ContractError("backward: loss is not on this tape");
        }
        if (loss.size() != 1) {
            throw ContractError("backward: loss must be scalar, shape " +
                                detail::shape_str(loss.shape()));
        }
        if (backward_done_) {
            throw ContractError("backward: already run on this tape");
        }
        backward_done_ = true;
        grads_.assign(nodes_.size(), {});
        grads_[static_cast<std::size_t>(loss.node_)] = {T(1)};
        for (int id = loss.node_; id >= 0; --id) {
            const auto uid = static_cast<std::size_t>(id);
            if (grads_[uid].empty()) continue;
            if (nodes_[uid].back) nodes_[uid].back(*this, id);
        }
    }

    /// Gradient of the scalar loss w.r.t. a tensor on this tape. Zero if the
    /// loss does not depend on it.
    const std::vector<T>& grad(const Tensor<T>& t) {
        if (!t.defined() || t.tape_ != this || t.node_ < 0) {
            throw ContractError("grad: tensor is not on this tape");
        }
        if (!backward_done_) throw ContractError("grad: backward has not run");
        auto& g = grads_[static_cast<std::size_t>(t.node_)];
        if (g.empty()) g.assign(static_cast<std::size_t>(t.size()), T(0));
        return g;
    }

    std::size_t node_count() const { return nodes_.size(); }
    bool backward_done() const { return backward_done_; }

    // ---- internals used by the primitive ops (not a user API) ----

    using BackFn = std::function<void(Tape&, int)>;

    int add_node(std::shared_ptr<const std::vector<T>> value, std::vector<int> shape,
                 std::vector<int> inputs, BackFn back) {
        nodes_.push_back(Node{std::move(value), std::move(shape), std::move(inputs),
                              std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    const std::vector<T>& upstream(int id) const {
        return grads_[static_cast<std::size_t>(id)];
    }

    /// Zero-initialized gradient accumulator for a node.
    std::vector<T>& grad_buffer(int id) {
        auto& g = grads_[static_cast<std::size_t>(id)];
        if (g.empty()) {
            g.assign(static_cast<std::size_t>(detail::shape_size(
                         nodes_[static_cast<std::size_t>(id)].shape)),
                     T(0));
        }
        return g;
    }

    Tensor<T> adopt(std::shared_ptr<const std::vector<T>> value, std::vector<int> shape,
                    std::vector<int> inputs, BackFn back) {
        Tensor<T> t;
        t.data_ = std::move(value);
        t.shape_ = std::move(shape);
        t.tape_ = this;
        t.node_ = add_node(t.data_, t.shape_, std::move(inputs), std::move(back));
        leaf_flags_.resize(nodes_.size(), false);
        return t;
    }

private:
    struct Node {
        std::shared_ptr<const std::vector<T>> value;
        std::vector<int> shape;
        std::vector<int> inputs;
        BackFn back;
    };

    std::vector<Node> nodes_;
    std::vector<std::vector<T>> grads_;
    std::vector<bool> leaf_flags_;
    bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// primitive ops
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
Tape<T>* merged_tape(const Tensor<T>& a, const Tensor<T>& b) {
    Tape<T>* ta = a.on_tape() ? a.tape() : nullptr;
    Tape<T>* tb = b.on_tape() ? b.tape() : nullptr;
    if (ta && tb && ta != tb) throw ContractError("ops: operands on different tapes");
    return ta ? ta : tb;
}

template <typename T>
Tensor<T> emit(Tape<T>* tape, std::vector<int> shape, std::vector<T> values,
               std::vector<int> inputs, typename Tape<T>::BackFn back, const char* op) {
    require_finite(values, op);
    if (!tape) return Tensor<T>(std::move(shape), std::move(values));
    return tape->adopt(std::make_shared<const std::vector<T>>(std::move(values)),
                       std::move(shape), std::move(inputs), std::move(back));
}

} // namespace detail

/// c[m,n] = a[m,k] * b[k,n]. Rank-2 operands only.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2) {
        throw DimensionError("matmul: operands must be rank 2, got " +
                             detail::shape_str(a.shape()) + " and " +
                             detail::shape_str(b.shape()));
    }
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) {
        throw DimensionError("matmul: inner dimensions disagree: " +
                             detail::shape_str(a.shape()) + " vs " +
                             detail::shape_str(b.shape()));
    }
    std::vector<T> out(static_cast<std::size_t>(m) * n);
    kernels::ops<T>().matmul_nn(a.data(), b.data(), out.data(), m, k, n);

    Tape<T>* tape = detail::merged_tape(a, b);
    auto a_hold = std::make_shared<std::vector<T>>(a.values());
    auto b_hold = std::make_shared<std::vector<T>>(b.values());
    const int an = a.node(), bn = b.node();
    auto back = [a_hold, b_hold, an, bn, m, k, n](Tape<T>& tp, int self) {
        const auto& up = tp.upstream(self);
        if (an >= 0) {
            std::vector<T> tmp(static_cast<std::size_t>(m) * k);
            kernels::ops<T>().matmul_nt(up.data(), b_hold->data(), tmp.data(), m, n, k);
            auto& g = tp.grad_buffer(an);
            kernels::ops<T>().axpy(T(1), tmp.data(), g.data(), tmp.size());
        }
        if (bn >= 0) {
            std::vector<T> tmp(static_cast<std::size_t>(k) * n);
            kernels::ops<T>().matmul_tn(a_hold->data(), up.data(), tmp.data(), k, m, n);
            auto& g = tp.grad_buffer(bn);
            kernels::ops<T>().axpy(T(1), tmp.data(), g.data(), tmp.size());
        }
    };
    return detail::emit<T>(tape, {m, n}, std::move(out), {an, bn}, std::move(back),
                           "matmul");
}

namespace detail {
// Row-broadcast check: returns true when b (1 x n or vector n) broadcasts
// over the rows of a (m x n).
template <typename T>
bool row_broadcast(const Tensor<T>& a, const Tensor<T>& b) {
    return a.rows() > 1 && b.rows() == 1 && a.cols() == b.cols();
}
} // namespace detail

/// Element-wise a + b; b may be a single row broadcast over a's rows.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    const bool bcast = detail::row_broadcast(a, b);
    if (!bcast && a.shape() != b.shape()) {
        throw DimensionError("add: shape mismatch: " + detail::shape_str(a.shape()) +
                             " vs " + detail::shape_str(b.shape()));
    }
    const int m = a.rows(), n = a.cols();
    std::vector<T> out(a.values());
    if (bcast) {
        for (int i = 0; i < m; ++i) {
            kernels::ops<T>().add(out.data() + static_cast<std::size_t>(i) * n, b.data(),
                                  out.data() + static_cast<std::size_t>(i) * n,
                                  static_cast<std::size_t>(n));
        }
    } else {
        kernels::ops<T>().add(a.data(), b.data(), out.data(), out.size());
    }
    Tape<T>* tape = detail::merged_tape(a, b);
    const int an = a.node(), bn = b.node();
    auto back = [an, bn, bcast, m, n](Tape<T>& tp, int self) {
        const auto& up = tp.upstream(self);
        if (an >= 0) {
            auto& g = tp.grad_buffer(an);
            kernels::ops<T>().axpy(T(1), up.data(), g.data(), up.size());
        }
        if (bn >= 0) {
            auto& g = tp.grad_buffer(bn);
            if (bcast) {
                for (int i = 0; i < m; ++i) {
                    kernels::ops<T>().axpy(T(1), up.data() + static_cast<std::size_t>(i) * n,
                                           g.data(), static_cast<std::size_t>(n));
                }
            } else {
                kernels::ops<T>().axpy(T(1), up.data(), g.data(), up.size());
            }
        }
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an, bn}, std::move(back),
                           "add");
}

/// Element-wise a * b; b may be a single row broadcast over a's rows.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    const bool bcast = detail::row_broadcast(a, b);
    if (!bcast && a.shape() != b.shape()) {
        throw DimensionError("mul: shape mismatch: " + detail::shape_str(a.shape()) +
                             " vs " + detail::shape_str(b.shape()));
    }
    const int m = a.rows(), n = a.cols();
    std::vector<T> out(static_cast<std::size_t>(a.size()));
    if (bcast) {
        for (int i = 0; i < m; ++i) {
            kernels::ops<T>().mul(a.data() + static_cast<std::size_t>(i) * n, b.data(),
                                  out.data() + static_cast<std::size_t>(i) * n,
                                  static_cast<std::size_t>(n));
        }
    } else {
        kernels::ops<T>().mul(a.data(), b.data(), out.data(), out.size());
    }
    Tape<T>* tape = detail::merged_tape(a, b);
    auto a_hold = std::make_shared<std::vector<T>>(a.values());
    auto b_hold = std::make_shared<std::vector<T>>(b.values());
    const int an = a.node(), bn = b.node();
    auto back = [a_hold, b_hold, an, bn, bcast, m, n](Tape<T>& tp, int self) {
        const auto& up = tp.upstream(self);
        if (an >= 0) {
            auto& g = tp.grad_buffer(an);
            if (bcast) {
                for (int i = 0; i < m; ++i) {
                    const std::size_t off = static_cast<std::size_t>(i) * n;
                    for (int j = 0; j < n; ++j) {
                        g[off + j] += up[off + j] * (*b_hold)[static_cast<std::size_t>(j)];
                    }
                }
            } else {
                for (std::size_t i = 0; i < up.size(); ++i) g[i] += up[i] * (*b_hold)[i];
            }
        }
        if (bn >= 0) {
            auto& g = tp.grad_buffer(bn);
            if (bcast) {
                for (int i = 0; i < m; ++i) {
                    const std::size_t off = static_cast<std::size_t>(i) * n;
                    for (int j = 0; j < n; ++j) {
                        g[static_cast<std::size_t>(j)] += up[off + j] * (*a_hold)[off + j];
                    }
                }
            } else {
                for (std::size_t i = 0; i < up.size(); ++i) g[i] += up[i] * (*a_hold)[i];
            }
        }
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an, bn}, std::move(back),
                           "mul");
}

/// alpha * a for a plain scalar alpha.
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T alpha) {
    std::vector<T> out(static_cast<std::size_t>(a.size()));
    kernels::ops<T>().scale(a.data(), alpha, out.data(), out.size());
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto back = [an, alpha](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        kernels::ops<T>().axpy(alpha, up.data(), g.data(), up.size());
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an}, std::move(back),
                           "scale");
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    const T s = kernels::ops<T>().sum(a.data(), static_cast<std::size_t>(a.size()));
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto back = [an](Tape<T>& tp, int self) {
        if (an < 0) return;
        const T u = tp.upstream(self)[0];
        auto& g = tp.grad_buffer(an);
        for (auto& x : g) x += u;
    };
    return detail::emit<T>(tape, {1}, {s}, {an}, std::move(back), "sum");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    const T inv = T(1) / static_cast<T>(a.size());
    const T s = kernels::ops<T>().sum(a.data(), static_cast<std::size_t>(a.size())) * inv;
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto back = [an, inv](Tape<T>& tp, int self) {
        if (an < 0) return;
        const T u = tp.upstream(self)[0] * inv;
        auto& g = tp.grad_buffer(an);
        for (auto& x : g) x += u;
    };
    return detail::emit<T>(tape, {1}, {s}, {an}, std::move(back), "mean");
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.shape().size() != 2) {
        throw DimensionError("transpose: operand must be rank 2, got " +
                             detail::shape_str(a.shape()));
    }
    const int m = a.shape()[0], n = a.shape()[1];
    std::vector<T> out(static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(j) * m + i] =
                a.data()[static_cast<std::size_t>(i) * n + j];
        }
    }
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto back = [an, m, n](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self); // n x m
        auto& g = tp.grad_buffer(an);       // m x n
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) {
                g[static_cast<std::size_t>(i) * n + j] +=
                    up[static_cast<std::size_t>(j) * m + i];
            }
        }
    };
    return detail::emit<T>(tape, {n, m}, std::move(out), {an}, std::move(back),
                           "transpose");
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, std::vector<int> shape) {
    if (detail::shape_size(shape) != a.size()) {
        throw DimensionError("reshape: cannot view " + detail::shape_str(a.shape()) +
                             " as " + detail::shape_str(shape));
    }
    std::vector<T> out(a.values());
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto back = [an](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        kernels::ops<T>().axpy(T(1), up.data(), g.data(), up.size());
    };
    return detail::emit<T>(tape, std::move(shape), std::move(out), {an}, std::move(back),
                           "reshape");
}

/// Concatenate rank-2 tensors along axis 0 (rows) or 1 (columns).
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat: no operands");
    if (axis != 0 && axis != 1) throw DimensionError("concat: axis must be 0 or 1");
    Tape<T>* tape = nullptr;
    for (const auto& p : parts) {
        if (p.shape().size() != 2) {
            throw DimensionError("concat: operands must be rank 2, got " +
                                 detail::shape_str(p.shape()));
        }
        if (p.on_tape()) {
            if (tape && tape != p.tape()) {
                throw ContractError("concat: operands on different tapes");
            }
            tape = p.tape();
        }
    }
    int m = parts[0].shape()[0], n = parts[0].shape()[1];
    std::vector<int> offsets{0};
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& s = parts[i].shape();
        if (axis == 0) {
            if (s[1] != n) {
                throw DimensionError("concat: column mismatch: " +
                                     detail::shape_str(parts[0].shape()) + " vs " +
                                     detail::shape_str(s));
            }
            m += s[0];
        } else {
            if (s[0] != m) {
                throw DimensionError("concat: row mismatch: " +
                                     detail::shape_str(parts[0].shape()) + " vs " +
                                     detail::shape_str(s));
            }
            n += s[1];
        }
    }
    std::vector<T> out(static_cast<std::size_t>(m) * n);
    std::vector<int> nodes;
    std::vector<std::vector<int>> pshapes;
    int cursor = 0;
    for (const auto& p : parts) {
        const int pm = p.shape()[0], pn = p.shape()[1];
        if (axis == 0) {
            std::copy(p.data(), p.data() + p.size(),
                      out.begin() + static_cast<std::size_t>(cursor) * n);
            cursor += pm;
        } else {
            for (int i = 0; i < pm; ++i) {
                std::copy(p.data() + static_cast<std::size_t>(i) * pn,
                          p.data() + static_cast<std::size_t>(i + 1) * pn,
                          out.begin() + static_cast<std::size_t>(i) * n + cursor);
            }
            cursor += pn;
        }
        nodes.push_back(p.node());
        pshapes.push_back(p.shape());
    }
    auto back = [nodes, pshapes, axis, n](Tape<T>& tp, int self) {
        const auto& up = tp.upstream(self);
        int cur = 0;
        for (std::size_t pi = 0; pi < nodes.size(); ++pi) {
            const int pm = pshapes[pi][0], pn = pshapes[pi][1];
            if (nodes[pi] >= 0) {
                auto& g = tp.grad_buffer(nodes[pi]);
                if (axis == 0) {
                    kernels::ops<T>().axpy(T(1), up.data() + static_cast<std::size_t>(cur) * n,
                                           g.data(), static_cast<std::size_t>(pm) * pn);
                } else {
                    for (int i = 0; i < pm; ++i) {
                        kernels::ops<T>().axpy(
                            T(1), up.data() + static_cast<std::size_t>(i) * n + cur,
                            g.data() + static_cast<std::size_t>(i) * pn,
                            static_cast<std::size_t>(pn));
                    }
                }
            }
            cur += (axis == 0) ? pm : pn;
        }
    };
    return detail::emit<T>(tape, {m, n}, std::move(out), std::move(nodes), std::move(back),
                           "concat");
}

/// Contiguous slice along an axis of a rank-2 tensor (rank-1 uses axis 0).
template <typename T>
Tensor<T> slice(const Tensor<T>& a, int axis, int start, int len) {
    const bool rank1 = a.shape().size() == 1;
    const int m = rank1 ? a.shape()[0] : a.shape()[0];
    const int n = rank1 ? 1 : a.shape()[1];
    if (axis != 0 && axis != 1) throw DimensionError("slice: axis must be 0 or 1");
    if (rank1 && axis == 1) throw DimensionError("slice: axis 1 on rank-1 tensor");
    const int limit = axis == 0 ? m : n;
    if (start < 0 || len <= 0 || start + len > limit) {
        throw DimensionError("slice: range [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") out of bounds for " +
                             detail::shape_str(a.shape()));
    }
    std::vector<int> oshape =
        rank1 ? std::vector<int>{len}
              : (axis == 0 ? std::vector<int>{len, n} : std::vector<int>{m, len});
    std::vector<T> out(static_cast<std::size_t>(detail::shape_size(oshape)));
    if (axis == 0) {
        std::copy(a.data() + static_cast<std::size_t>(start) * n,
                  a.data() + static_cast<std::size_t>(start + len) * n, out.begin());
    } else {
        for (int i = 0; i < m; ++i) {
            std::copy(a.data() + static_cast<std::size_t>(i) * n + start,
                      a.data() + static_cast<std::size_t>(i) * n + start + len,
                      out.begin() + static_cast<std::size_t>(i) * len);
        }
    }
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto back = [an, axis, start, len, m, n](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        if (axis == 0) {
            kernels::ops<T>().axpy(T(1), up.data(),
                                   g.data() + static_cast<std::size_t>(start) * n,
                                   static_cast<std::size_t>(len) * n);
        } else {
            for (int i = 0; i < m; ++i) {
                kernels::ops<T>().axpy(T(1), up.data() + static_cast<std::size_t>(i) * len,
                                       g.data() + static_cast<std::size_t>(i) * n + start,
                                       static_cast<std::size_t>(len));
            }
        }
    };
    return detail::emit<T>(tape, std::move(oshape), std::move(out), {an}, std::move(back),
                           "slice");
}

/// Row lookup: out[r, :] = table[ids[r], :]. Gradient scatter-adds rows.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& ids) {
    if (table.shape().size() != 2) {
        throw DimensionError("embedding: table must be rank 2, got " +
                             detail::shape_str(table.shape()));
    }
    const int v = table.shape()[0], e = table.shape()[1];
    std::vector<T> out(ids.size() * static_cast<std::size_t>(e));
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const int id = ids[r];
        if (id < 0 || id >= v) {
            throw ContractError("embedding: id " + std::to_string(id) +
                                " outside table of " + std::to_string(v) + " rows");
        }
        std::copy(table.data() + static_cast<std::size_t>(id) * e,
                  table.data() + static_cast<std::size_t>(id + 1) * e,
                  out.begin() + r * static_cast<std::size_t>(e));
    }
    Tape<T>* tape = table.on_tape() ? table.tape() : nullptr;
    const int tn = table.node();
    auto ids_hold = std::make_shared<std::vector<int>>(ids);
    auto back = [tn, ids_hold, e](Tape<T>& tp, int self) {
        if (tn < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(tn);
        for (std::size_t r = 0; r < ids_hold->size(); ++r) {
            kernels::ops<T>().axpy(T(1), up.data() + r * static_cast<std::size_t>(e),
                                   g.data() + static_cast<std::size_t>((*ids_hold)[r]) * e,
                                   static_cast<std::size_t>(e));
        }
    };
    return detail::emit<T>(tape, {static_cast<int>(ids.size()), e}, std::move(out), {tn},
                           std::move(back), "embedding");
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
    std::vector<T> out(static_cast<std::size_t>(a.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::tanh(a.data()[i]);
    }
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto y_hold = std::make_shared<std::vector<T>>(out);
    auto back = [an, y_hold](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        for (std::size_t i = 0; i < up.size(); ++i) {
            const T y = (*y_hold)[i];
            g[i] += up[i] * (T(1) - y * y);
        }
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an}, std::move(back), "tanh");
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> out(static_cast<std::size_t>(a.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const T x = a.data()[i];
        out[i] = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                           : std::exp(x) / (T(1) + std::exp(x));
    }
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto y_hold = std::make_shared<std::vector<T>>(out);
    auto back = [an, y_hold](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        for (std::size_t i = 0; i < up.size(); ++i) {
            const T y = (*y_hold)[i];
            g[i] += up[i] * y * (T(1) - y);
        }
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an}, std::move(back),
                           "sigmoid");
}

/// Exact GELU: x * Phi(x) with the Gaussian CDF.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    std::vector<T> out(static_cast<std::size_t>(a.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = static_cast<double>(a.data()[i]);
        out[i] = static_cast<T>(x * 0.5 * (1.0 + std::erf(x * inv_sqrt2)));
    }
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto x_hold = std::make_shared<std::vector<T>>(a.values());
    auto back = [an, x_hold](Tape<T>& tp, int self) {
        if (an < 0) return;
        constexpr double inv_sqrt_2pi = 0.39894228040143267794;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        for (std::size_t i = 0; i < up.size(); ++i) {
            const double x = static_cast<double>((*x_hold)[i]);
            const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
            g[i] += up[i] * static_cast<T>(cdf + x * pdf);
        }
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an}, std::move(back), "gelu");
}

/// Numerically stable softmax along an axis of a rank-2 tensor
/// (max-subtraction). Rank-1 tensors use axis 0.
template <typename T>
Tensor<T> softmax(const Tensor<T>& a, int axis) {
    const bool rank1 = a.shape().size() == 1;
    if (axis != 0 && axis != 1) throw DimensionError("softmax: axis must be 0 or 1");
    if (rank1 && axis == 1) throw DimensionError("softmax: axis 1 on rank-1 tensor");
    const int m = rank1 ? 1 : a.shape()[0];
    const int n = rank1 ? a.shape()[0] : a.shape()[1];
    std::vector<T> out(static_cast<std::size_t>(a.size()));
    // axis semantics: normalize along `axis`, i.e. axis=1 normalizes each row.
    const bool rows = rank1 || axis == 1;
    const int groups = rows ? m : n;
    const int glen = rows ? n : m;
    auto idx = [&](int gi, int j) {
        return rows ? static_cast<std::size_t>(gi) * n + j
                    : static_cast<std::size_t>(j) * n + gi;
    };
    for (int gi = 0; gi < groups; ++gi) {
        T mx = a.data()[idx(gi, 0)];
        for (int j = 1; j < glen; ++j) mx = std::max(mx, a.data()[idx(gi, j)]);
        T denom = T(0);
        for (int j = 0; j < glen; ++j) {
            const T e = std::exp(a.data()[idx(gi, j)] - mx);
            out[idx(gi, j)] = e;
            denom += e;
        }
        const T inv = T(1) / denom;
        for (int j = 0; j < glen; ++j) out[idx(gi, j)] *= inv;
    }
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto y_hold = std::make_shared<std::vector<T>>(out);
    auto back = [an, y_hold, groups, glen, rows, n](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        auto idx2 = [&](int gi, int j) {
            return rows ? static_cast<std::size_t>(gi) * n + j
                        : static_cast<std::size_t>(j) * n + gi;
        };
        for (int gi = 0; gi < groups; ++gi) {
            T dotv = T(0);
            for (int j = 0; j < glen; ++j) dotv += up[idx2(gi, j)] * (*y_hold)[idx2(gi, j)];
            for (int j = 0; j < glen; ++j) {
                const std::size_t p = idx2(gi, j);
                g[p] += (*y_hold)[p] * (up[p] - dotv);
            }
        }
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an}, std::move(back),
                           "softmax");
}

/// Per-row normalization of a rank-2 tensor: (x - mean) / sqrt(var + eps).
/// No affine transform; compose with mul/add for gain and bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, T eps = T(1e-5)) {
    if (a.shape().size() != 2) {
        throw DimensionError("layer_norm: operand must be rank 2, got " +
                             detail::shape_str(a.shape()));
    }
    const int m = a.shape()[0], n = a.shape()[1];
    std::vector<T> out(static_cast<std::size_t>(m) * n);
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const T* row = a.data() + static_cast<std::size_t>(i) * n;
        T mu = T(0);
        for (int j = 0; j < n; ++j) mu += row[j];
        mu /= static_cast<T>(n);
        T var = T(0);
        for (int j = 0; j < n; ++j) {
            const T d = row[j] - mu;
            var += d * d;
        }
        var /= static_cast<T>(n);
        const T is = T(1) / std::sqrt(var + eps);
        (*inv_std)[static_cast<std::size_t>(i)] = is;
        T* orow = out.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] = (row[j] - mu) * is;
    }
    Tape<T>* tape = a.on_tape() ? a.tape() : nullptr;
    const int an = a.node();
    auto xhat = std::make_shared<std::vector<T>>(out);
    auto back = [an, xhat, inv_std, m, n](Tape<T>& tp, int self) {
        if (an < 0) return;
        const auto& up = tp.upstream(self);
        auto& g = tp.grad_buffer(an);
        for (int i = 0; i < m; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * n;
            T mean_up = T(0), mean_up_xhat = T(0);
            for (int j = 0; j < n; ++j) {
                mean_up += up[off + j];
                mean_up_xhat += up[off + j] * (*xhat)[off + j];
            }
            mean_up /= static_cast<T>(n);
            mean_up_xhat /= static_cast<T>(n);
            const T is = (*inv_std)[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) {
                g[off + j] +=
                    is * (up[off + j] - mean_up - (*xhat)[off + j] * mean_up_xhat);
            }
        }
    };
    return detail::emit<T>(tape, a.shape(), std::move(out), {an}, std::move(back),
                           "layer_norm");
}

/// Mean squared error between two same-shape tensors; scalar output.
template <typename T>
Tensor<T> squared_error(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError("squared_error: shape mismatch: " +
                             detail::shape_str(a.shape()) + " vs " +
                             detail::shape_str(b.shape()));
    }
    const T inv = T(1) / static_cast<T>(a.size());
    const T s =
        kernels::ops<T>().sq_diff_sum(a.data(), b.data(), static_cast<std::size_t>(a.size())) * inv;
    Tape<T>* tape = detail::merged_tape(a, b);
    auto a_hold = std::make_shared<std::vector<T>>(a.values());
    auto b_hold = std::make_shared<std::vector<T>>(b.values());
    const int an = a.node(), bn = b.node();
    auto back = [a_hold, b_hold, an, bn, inv](Tape<T>& tp, int self) {
        const T u = tp.upstream(self)[0];
        const T c = T(2) * inv * u;
        if (an >= 0) {
            auto& g = tp.grad_buffer(an);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += c * ((*a_hold)[i] - (*b_hold)[i]);
            }
        }
        if (bn >= 0) {
            auto& g = tp.grad_buffer(bn);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] -= c * ((*a_hold)[i] - (*b_hold)[i]);
            }
        }
    };
    return detail::emit<T>(tape, {1}, {s}, {an, bn}, std::move(back), "squared_error");
}

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

struct GradCheckParam {
    std::vector<int> shape;
    std::vector<double> value;
};

using GradCheckFn =
    std::function<Tensor<double>(Tape<double>&, std::vector<Tensor<double>>&)>;

/// Compares caller-supplied analytic gradients against central finite
/// differences of f. Returns max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-8).
double grad_check_against(const GradCheckFn& f,
                          const std::vector<std::vector<double>>& analytic,
                          std::vector<GradCheckParam> params, double eps = 1e-5);

/// Autodiff route: gradients come from backward() on f's tape. Evaluates f
/// twice at the base point and rejects non-deterministic functions.
double grad_check(const GradCheckFn& f, std::vector<GradCheckParam> params,
                  double eps = 1e-5);

} // namespace rhythmlab
