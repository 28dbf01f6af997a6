#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace zss {

using Shape = std::vector<std::size_t>;

inline std::size_t numel_of(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ValueError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thread-local switch disabling graph construction (inference / pseudo-label
// generation). Scoped via NoGradGuard.
inline bool& grad_mode_enabled() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode_enabled()) { grad_mode_enabled() = false; }
    ~NoGradGuard() { grad_mode_enabled() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <class T>
struct TensorNode {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad; // empty until materialized; then same size as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    std::function<void(TensorNode<T>*)> backprop; // reads this->grad, accumulates into parents

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

template <class T>
class Tensor {
public:
    Tensor() = default;

    static Tensor leaf(Shape shape, std::vector<T> data, bool requires_grad = false) {
        if (numel_of(shape) != data.size())
            throw ShapeError("tensor data size " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        for (std::size_t e : shape)
            if (e < 1) throw ShapeError("tensor extents must be >= 1");
        auto n = std::make_shared<TensorNode<T>>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::vector<T> d(numel_of(shape), T(0));
        return leaf(std::move(shape), std::move(d), requires_grad);
    }

    static Tensor full(Shape shape, T v, bool requires_grad = false) {
        std::vector<T> d(numel_of(shape), v);
        return leaf(std::move(shape), std::move(d), requires_grad);
    }

    static Tensor scalar(T v) { return leaf({1}, {v}); }

    bool defined() const { return static_cast<bool>(n_); }
    const Shape& shape() const { return n_->shape; }
    std::size_t numel() const { return n_->value.size(); }
    std::size_t rank() const { return n_->shape.size(); }
    const std::vector<T>& data() const { return n_->value; }
    std::vector<T>& mutable_data() { return n_->value; }
    const std::vector<T>& grad() const { return n_->grad; }
    bool requires_grad() const { return n_->requires_grad; }

    T item() const {
        if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
        return n_->value[0];
    }

    Tensor detach() const {
        auto n = std::make_shared<TensorNode<T>>();
        n->shape = n_->shape;
        n->value = n_->value;
        n->requires_grad = false;
        return Tensor(std::move(n));
    }

    void zero_grad() { n_->grad.assign(n_->value.size(), T(0)); }

    // In-place parameter update; only valid on leaves.
    void update_data(const std::function<void(std::size_t, T&)>& f) {
        for (std::size_t i = 0; i < n_->value.size(); ++i) f(i, n_->value[i]);
    }

    TensorNode<T>* node() const { return n_.get(); }
    const std::shared_ptr<TensorNode<T>>& node_ptr() const { return n_; }

    explicit Tensor(std::shared_ptr<TensorNode<T>> n) : n_(std::move(n)) {}

private:
    std::shared_ptr<TensorNode<T>> n_;
};

// Factory for operation results. Graph edges are attached only when grad mode
// is on and some parent requires grad.
template <class T>
Tensor<T> make_op(Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> parents,
                  std::function<void(TensorNode<T>*)> backprop) {
    auto n = std::make_shared<TensorNode<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool needs = false;
    if (grad_mode_enabled())
        for (const auto& p : parents)
            if (p.node()->requires_grad) { needs = true; break; }
    if (needs) {
        n->requires_grad = true;
        for (auto& p : parents) n->parents.push_back(p.node_ptr());
        n->backprop = std::move(backprop);
    }
    return Tensor<T>(std::move(n));
}

// ---------------------------------------------------------------------------
// backward

template <class T>
void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1)
        throw ShapeError("backward() requires a scalar loss, got " + shape_str(loss.shape()));
    if (!loss.node()->requires_grad)
        throw ValueError("backward() on a tensor without a differentiation record");

    // iterative post-order DFS
    std::vector<TensorNode<T>*> order;
    std::unordered_set<TensorNode<T>*> seen;
    std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
    stack.push_back({loss.node(), 0});
    seen.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorNode<T>* p = node->parents[idx++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(*it);
}

// ---------------------------------------------------------------------------
// broadcasting helpers (numpy-style, aligned at trailing axes)

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t ea = i < r - a.size() ? 1 : a[i - (r - a.size())];
        std::size_t eb = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (ea != eb && ea != 1 && eb != 1)
            throw ShapeError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        out[i] = std::max(ea, eb);
    }
    return out;
}

// row-major strides with 0 on broadcast axes, aligned to an output rank
inline std::vector<std::size_t> broadcast_strides(const Shape& s, const Shape& out) {
    std::vector<std::size_t> st(out.size(), 0);
    std::size_t stride = 1;
    std::size_t off = out.size() - s.size();
    for (std::size_t i = s.size(); i-- > 0;) {
        st[off + i] = (s[i] == 1 && out[off + i] != 1) ? 0 : stride;
        stride *= s[i];
    }
    return st;
}

namespace detail {

// maps a linear output index to linear indices of two broadcast inputs
struct BcastIndexer {
    Shape out;
    std::vector<std::size_t> sa, sb;
    BcastIndexer(const Shape& a, const Shape& b) {
        out = broadcast_shape(a, b);
        sa = broadcast_strides(a, out);
        sb = broadcast_strides(b, out);
    }
    void map(std::size_t lin, std::size_t& ia, std::size_t& ib) const {
        ia = 0;
        ib = 0;
        for (std::size_t i = out.size(); i-- > 0;) {
            std::size_t c = lin % out[i];
            lin /= out[i];
            ia += c * sa[i];
            ib += c * sb[i];
        }
    }
};

} // namespace detail

// Elementwise binary op with broadcasting. dfda/dfdb: (a, b) -> local partials.
template <class T, class F, class DA, class DB>
Tensor<T> ewise_binary(const Tensor<T>& a, const Tensor<T>& b, F f, DA dfda, DB dfdb) {
    detail::BcastIndexer ix(a.shape(), b.shape());
    std::size_t n = numel_of(ix.out);
    std::vector<T> out(n);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ia, ib;
        ix.map(i, ia, ib);
        out[i] = f(av[ia], bv[ib]);
    }
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op<T>(
        ix.out, std::move(out), {a, b},
        [ix, an, bn, dfda, dfdb](TensorNode<T>* self) {
            bool na = an->requires_grad, nb = bn->requires_grad;
            if (na) an->ensure_grad();
            if (nb) bn->ensure_grad();
            std::size_t n = self->value.size();
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t ia, ib;
                ix.map(i, ia, ib);
                T g = self->grad[i];
                if (na) an->grad[ia] += g * dfda(an->value[ia], bn->value[ib]);
                if (nb) bn->grad[ib] += g * dfdb(an->value[ia], bn->value[ib]);
            }
        });
}

template <class T, class F, class DF>
Tensor<T> ewise_unary(const Tensor<T>& x, F f, DF df) {
    std::vector<T> out(x.numel());
    const auto& xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
    auto xn = x.node_ptr();
    return make_op<T>(x.shape(), std::move(out), {x}, [xn, df](TensorNode<T>* self) {
        xn->ensure_grad();
        for (std::size_t i = 0; i < self->value.size(); ++i)
            xn->grad[i] += self->grad[i] * df(xn->value[i], self->value[i]);
    });
}

// ---------------------------------------------------------------------------
// elementwise primitives

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return ewise_binary(
        a, b, [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
        [](T, T) { return T(1); });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return ewise_binary(
        a, b, [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
        [](T, T) { return T(-1); });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return ewise_binary(
        a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
        [](T x, T) { return x; });
}

template <class T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    return ewise_binary(
        a, b, [](T x, T y) { return x / y; }, [](T, T y) { return T(1) / y; },
        [](T x, T y) { return -x / (y * y); });
}

template <class T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <class T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <class T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <class T>
Tensor<T> operator/(const Tensor<T>& a, const Tensor<T>& b) { return div(a, b); }

template <class T>
Tensor<T> scale(const Tensor<T>& x, T c) {
    return ewise_unary(
        x, [c](T v) { return v * c; }, [c](T, T) { return c; });
}

template <class T>
Tensor<T> add_const(const Tensor<T>& x, T c) {
    return ewise_unary(
        x, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <class T>
Tensor<T> exp(const Tensor<T>& x) {
    return ewise_unary(
        x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <class T>
Tensor<T> log(const Tensor<T>& x) {
    return ewise_unary(
        x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
    return ewise_unary(
        x, [](T v) { return v > T(0) ? v : T(0); },
        [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return ewise_unary(
        x,
        [](T v) {
            // stable on both tails
            if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
            T e = std::exp(v);
            return e / (T(1) + e);
        },
        [](T, T y) { return y * (T(1) - y); });
}

// gradient is passed through only when the value is strictly inside [lo, hi]
template <class T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
    return ewise_unary(
        x, [lo, hi](T v) { return std::min(hi, std::max(lo, v)); },
        [lo, hi](T v, T) { return (v > lo && v < hi) ? T(1) : T(0); });
}

// ---------------------------------------------------------------------------
// matmul

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul expects rank-2 operands");
    std::size_t m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw ShapeError("matmul inner extent mismatch: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    std::vector<T> out(m * n, T(0));
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            T x = av[i * k + p];
            const T* brow = bv.data() + p * n;
            T* orow = out.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
        }
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op<T>(
        {m, n}, std::move(out), {a, b}, [an, bn, m, k, n](TensorNode<T>* self) {
            const auto& g = self->grad;
            if (an->requires_grad) {
                an->ensure_grad();
                // dA = G * B^T
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        T acc = T(0);
                        const T* grow = g.data() + i * n;
                        const T* brow = bn->value.data() + p * n;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        an->grad[i * k + p] += acc;
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                // dB = A^T * G
                for (std::size_t i = 0; i < m; ++i) {
                    const T* arow = an->value.data() + i * k;
                    const T* grow = g.data() + i * n;
                    for (std::size_t p = 0; p < k; ++p) {
                        T x = arow[p];
                        T* brow = bn->grad.data() + p * n;
                        for (std::size_t j = 0; j < n; ++j) brow[j] += x * grow[j];
                    }
                }
            }
        });
}

// ---------------------------------------------------------------------------
// reductions

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
    T acc = T(0);
    for (T v : x.data()) acc += v;
    auto xn = x.node_ptr();
    return make_op<T>({1}, {acc}, {x}, [xn](TensorNode<T>* self) {
        xn->ensure_grad();
        T g = self->grad[0];
        for (auto& gv : xn->grad) gv += g;
    });
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
    return scale(sum(x), T(1) / T(x.numel()));
}

namespace detail {
struct AxisSplit {
    std::size_t outer, extent, inner;
};
inline AxisSplit axis_split(const Shape& s, std::size_t axis) {
    if (axis >= s.size()) throw ShapeError("reduction axis out of range");
    AxisSplit a{1, s[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
    return a;
}
inline Shape drop_axis(const Shape& s, std::size_t axis) {
    Shape out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i != axis) out.push_back(s[i]);
    if (out.empty()) out.push_back(1);
    return out;
}
} // namespace detail

template <class T>
Tensor<T> sum_axis(const Tensor<T>& x, std::size_t axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    std::vector<T> out(sp.outer * sp.inner, T(0));
    const auto& xv = x.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t e = 0; e < sp.extent; ++e)
            for (std::size_t i = 0; i < sp.inner; ++i)
                out[o * sp.inner + i] += xv[(o * sp.extent + e) * sp.inner + i];
    auto xn = x.node_ptr();
    return make_op<T>(detail::drop_axis(x.shape(), axis), std::move(out), {x},
                      [xn, sp](TensorNode<T>* self) {
                          xn->ensure_grad();
                          for (std::size_t o = 0; o < sp.outer; ++o)
                              for (std::size_t e = 0; e < sp.extent; ++e)
                                  for (std::size_t i = 0; i < sp.inner; ++i)
                                      xn->grad[(o * sp.extent + e) * sp.inner + i] +=
                                          self->grad[o * sp.inner + i];
                      });
}

template <class T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    return scale(sum_axis(x, axis), T(1) / T(sp.extent));
}

// gradient routes to the first maximal element of each slice
template <class T>
Tensor<T> max_axis(const Tensor<T>& x, std::size_t axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    std::vector<T> out(sp.outer * sp.inner);
    std::vector<std::size_t> arg(sp.outer * sp.inner);
    const auto& xv = x.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
            T best = xv[(o * sp.extent) * sp.inner + i];
            std::size_t bi = 0;
            for (std::size_t e = 1; e < sp.extent; ++e) {
                T v = xv[(o * sp.extent + e) * sp.inner + i];
                if (v > best) {
                    best = v;
                    bi = e;
                }
            }
            out[o * sp.inner + i] = best;
            arg[o * sp.inner + i] = bi;
        }
    auto xn = x.node_ptr();
    return make_op<T>(detail::drop_axis(x.shape(), axis), std::move(out), {x},
                      [xn, sp, arg](TensorNode<T>* self) {
                          xn->ensure_grad();
                          for (std::size_t j = 0; j < self->value.size(); ++j) {
                              std::size_t o = j / sp.inner, i = j % sp.inner;
                              xn->grad[(o * sp.extent + arg[j]) * sp.inner + i] += self->grad[j];
                          }
                      });
}

// ---------------------------------------------------------------------------
// shape ops

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (numel_of(shape) != x.numel())
        throw ShapeError("reshape to " + shape_str(shape) + " changes element count");
    std::vector<T> out = x.data();
    auto xn = x.node_ptr();
    return make_op<T>(std::move(shape), std::move(out), {x}, [xn](TensorNode<T>* self) {
        xn->ensure_grad();
        for (std::size_t i = 0; i < self->value.size(); ++i) xn->grad[i] += self->grad[i];
    });
}

template <class T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
    if (perm.size() != x.rank()) throw ShapeError("permute rank mismatch");
    Shape out_shape(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out_shape[i] = x.shape()[perm[i]];
    std::vector<std::size_t> in_strides(x.rank(), 1);
    for (std::size_t i = x.rank() - 1; i-- > 0;)
        in_strides[i] = in_strides[i + 1] * x.shape()[i + 1];
    // mapping from output linear index to input linear index
    std::vector<std::size_t> src(x.numel());
    std::vector<std::size_t> idx(x.rank(), 0);
    for (std::size_t lin = 0; lin < x.numel(); ++lin) {
        std::size_t s = 0;
        for (std::size_t i = 0; i < perm.size(); ++i) s += idx[i] * in_strides[perm[i]];
        src[lin] = s;
        for (std::size_t i = perm.size(); i-- > 0;) {
            if (++idx[i] < out_shape[i]) break;
            idx[i] = 0;
        }
    }
    std::vector<T> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[src[i]];
    auto xn = x.node_ptr();
    return make_op<T>(std::move(out_shape), std::move(out), {x},
                      [xn, src](TensorNode<T>* self) {
                          xn->ensure_grad();
                          for (std::size_t i = 0; i < self->value.size(); ++i)
                              xn->grad[src[i]] += self->grad[i];
                      });
}

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat of zero tensors");
    Shape base = parts[0].shape();
    if (axis >= base.size()) throw ShapeError("concat axis out of range");
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != base.size()) throw ShapeError("concat rank mismatch");
        for (std::size_t i = 0; i < base.size(); ++i)
            if (i != axis && p.shape()[i] != base[i])
                throw ShapeError("concat extent mismatch off-axis");
        total += p.shape()[axis];
    }
    Shape out_shape = base;
    out_shape[axis] = total;
    auto sp_out = detail::axis_split(out_shape, axis);
    std::vector<T> out(numel_of(out_shape));
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::size_t ext = p.shape()[axis];
        const auto& pv = p.data();
        for (std::size_t o = 0; o < sp_out.outer; ++o)
            for (std::size_t e = 0; e < ext; ++e)
                std::copy_n(pv.data() + (o * ext + e) * sp_out.inner, sp_out.inner,
                            out.data() + (o * sp_out.extent + off + e) * sp_out.inner);
        off += ext;
    }
    std::vector<std::size_t> exts;
    std::vector<std::shared_ptr<TensorNode<T>>> nodes;
    for (const auto& p : parts) {
        exts.push_back(p.shape()[axis]);
        nodes.push_back(p.node_ptr());
    }
    return make_op<T>(std::move(out_shape), std::move(out), parts,
                      [nodes, exts, sp_out](TensorNode<T>* self) {
                          std::size_t off = 0;
                          for (std::size_t pi = 0; pi < nodes.size(); ++pi) {
                              auto& n = nodes[pi];
                              std::size_t ext = exts[pi];
                              if (n->requires_grad) {
                                  n->ensure_grad();
                                  for (std::size_t o = 0; o < sp_out.outer; ++o)
                                      for (std::size_t e = 0; e < ext; ++e)
                                          for (std::size_t i = 0; i < sp_out.inner; ++i)
                                              n->grad[(o * ext + e) * sp_out.inner + i] +=
                                                  self->grad[(o * sp_out.extent + off + e) *
                                                                 sp_out.inner +
                                                             i];
                              }
                              off += ext;
                          }
                      });
}

template <class T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t start, std::size_t len) {
    if (axis >= x.rank()) throw ShapeError("slice axis out of range");
    if (start + len > x.shape()[axis]) throw ShapeError("slice out of bounds");
    auto sp = detail::axis_split(x.shape(), axis);
    Shape out_shape = x.shape();
    out_shape[axis] = len;
    std::vector<T> out(numel_of(out_shape));
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t e = 0; e < len; ++e)
            std::copy_n(x.data().data() + (o * sp.extent + start + e) * sp.inner, sp.inner,
                        out.data() + (o * len + e) * sp.inner);
    auto xn = x.node_ptr();
    return make_op<T>(std::move(out_shape), std::move(out), {x},
                      [xn, sp, start, len](TensorNode<T>* self) {
                          xn->ensure_grad();
                          for (std::size_t o = 0; o < sp.outer; ++o)
                              for (std::size_t e = 0; e < len; ++e)
                                  for (std::size_t i = 0; i < sp.inner; ++i)
                                      xn->grad[(o * sp.extent + start + e) * sp.inner + i] +=
                                          self->grad[(o * len + e) * sp.inner + i];
                      });
}

// ---------------------------------------------------------------------------
// conv2d  (cross-correlation; input [Cin,H,W], kernel [Cout,Cin,kh,kw])

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t stride = 1,
                 std::size_t padding = 0) {
    if (input.rank() != 3 || kernel.rank() != 4)
        throw ShapeError("conv2d expects input [C,H,W] and kernel [Co,Ci,kh,kw]");
    std::size_t ci = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
    std::size_t co = kernel.shape()[0], ci2 = kernel.shape()[1];
    std::size_t kh = kernel.shape()[2], kw = kernel.shape()[3];
    if (ci != ci2)
        throw ShapeError("conv2d channel mismatch: input C=" + std::to_string(ci) +
                         " kernel Ci=" + std::to_string(ci2));
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d kernel extents must be odd");
    if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
    if (h + 2 * padding < kh || w + 2 * padding < kw)
        throw ShapeError("conv2d kernel larger than padded input");
    if ((h + 2 * padding - kh) % stride != 0 || (w + 2 * padding - kw) % stride != 0)
        throw ShapeError("conv2d non-integral output extent");
    std::size_t oh = (h + 2 * padding - kh) / stride + 1;
    std::size_t ow = (w + 2 * padding - kw) / stride + 1;

    std::vector<T> out(co * oh * ow, T(0));
    const T* in = input.data().data();
    const T* ker = kernel.data().data();
    long pad = static_cast<long>(padding);
    if (kh == 1 && kw == 1 && stride == 1 && padding == 0) {
        // pointwise convolution: [co,ci] x [ci,plane]
        std::size_t plane = h * w;
        for (std::size_t c = 0; c < co; ++c) {
            T* orow = out.data() + c * plane;
            for (std::size_t ic = 0; ic < ci; ++ic) {
                T kv = ker[c * ci + ic];
                const T* irow = in + ic * plane;
                for (std::size_t p = 0; p < plane; ++p) orow[p] += kv * irow[p];
            }
        }
    } else {
        for (std::size_t c = 0; c < co; ++c)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    T acc = T(0);
                    long iy0 = static_cast<long>(y * stride) - pad;
                    long ix0 = static_cast<long>(x * stride) - pad;
                    bool interior = iy0 >= 0 && ix0 >= 0 &&
                                    iy0 + static_cast<long>(kh) <= static_cast<long>(h) &&
                                    ix0 + static_cast<long>(kw) <= static_cast<long>(w);
                    for (std::size_t ic = 0; ic < ci; ++ic)
                        for (std::size_t ky = 0; ky < kh; ++ky) {
                            long iy = iy0 + static_cast<long>(ky);
                            if (iy < 0 || iy >= static_cast<long>(h)) continue;
                            const T* irow = in + (ic * h + iy) * w;
                            const T* krow = ker + ((c * ci + ic) * kh + ky) * kw;
                            if (interior) {
                                const T* ip = irow + ix0;
                                for (std::size_t kx = 0; kx < kw; ++kx)
                                    acc += ip[kx] * krow[kx];
                            } else {
                                for (std::size_t kx = 0; kx < kw; ++kx) {
                                    long ixp = ix0 + static_cast<long>(kx);
                                    if (ixp < 0 || ixp >= static_cast<long>(w)) continue;
                                    acc += irow[ixp] * krow[kx];
                                }
                            }
                        }
                    out[(c * oh + y) * ow + x] = acc;
                }
    }
    auto in_n = input.node_ptr();
    auto k_n = kernel.node_ptr();
    return make_op<T>(
        {co, oh, ow}, std::move(out), {input, kernel},
        [in_n, k_n, ci, h, w, co, kh, kw, oh, ow, stride, pad](TensorNode<T>* self) {
            bool ni = in_n->requires_grad, nk = k_n->requires_grad;
            if (ni) in_n->ensure_grad();
            if (nk) k_n->ensure_grad();
            const T* g = self->grad.data();
            if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
                std::size_t plane = h * w;
                for (std::size_t c = 0; c < co; ++c) {
                    const T* grow = g + c * plane;
                    for (std::size_t ic = 0; ic < ci; ++ic) {
                        std::size_t ki = c * ci + ic;
                        const T* irow = in_n->value.data() + ic * plane;
                        if (ni) {
                            T kv = k_n->value[ki];
                            T* id = in_n->grad.data() + ic * plane;
                            for (std::size_t p = 0; p < plane; ++p) id[p] += grow[p] * kv;
                        }
                        if (nk) {
                            T acc = T(0);
                            for (std::size_t p = 0; p < plane; ++p) acc += grow[p] * irow[p];
                            k_n->grad[ki] += acc;
                        }
                    }
                }
                return;
            }
            for (std::size_t c = 0; c < co; ++c)
                for (std::size_t y = 0; y < oh; ++y)
                    for (std::size_t x = 0; x < ow; ++x) {
                        T gv = g[(c * oh + y) * ow + x];
                        if (gv == T(0)) continue;
                        long iy0 = static_cast<long>(y * stride) - pad;
                        long ix0 = static_cast<long>(x * stride) - pad;
                        for (std::size_t ic = 0; ic < ci; ++ic)
                            for (std::size_t ky = 0; ky < kh; ++ky) {
                                long iy = iy0 + static_cast<long>(ky);
                                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                                const T* irow = in_n->value.data() + (ic * h + iy) * w;
                                T* igrow = ni ? in_n->grad.data() + (ic * h + iy) * w
                                              : nullptr;
                                const std::size_t kbase = ((c * ci + ic) * kh + ky) * kw;
                                for (std::size_t kx = 0; kx < kw; ++kx) {
                                    long ixp = ix0 + static_cast<long>(kx);
                                    if (ixp < 0 || ixp >= static_cast<long>(w)) continue;
                                    if (ni) igrow[ixp] += gv * k_n->value[kbase + kx];
                                    if (nk) k_n->grad[kbase + kx] += gv * irow[ixp];
                                }
                            }
                    }
        });
}

// ---------------------------------------------------------------------------
// bilinear 2-D resize (align-corners), input [C,H,W]

template <class T>
Tensor<T> bilinear_resize(const Tensor<T>& x, std::size_t oh, std::size_t ow) {
    if (x.rank() != 3) throw ShapeError("bilinear_resize expects [C,H,W]");
    std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (oh < 1 || ow < 1) throw ShapeError("bilinear_resize target extents must be >= 1");
    // per output pixel: 4 source indices + weights (shared across channels)
    struct Tap {
        std::size_t y0, y1, x0, x1;
        T wy, wx;
    };
    std::vector<Tap> taps(oh * ow);
    for (std::size_t y = 0; y < oh; ++y) {
        T sy = (oh == 1) ? T(0) : T(y) * T(h - 1) / T(oh - 1);
        std::size_t y0 = static_cast<std::size_t>(sy);
        if (y0 >= h - 1 && h > 1) y0 = h - 2;
        T wy = (h == 1) ? T(0) : sy - T(y0);
        for (std::size_t xq = 0; xq < ow; ++xq) {
            T sx = (ow == 1) ? T(0) : T(xq) * T(w - 1) / T(ow - 1);
            std::size_t x0 = static_cast<std::size_t>(sx);
            if (x0 >= w - 1 && w > 1) x0 = w - 2;
            T wx = (w == 1) ? T(0) : sx - T(x0);
            taps[y * ow + xq] = {y0, std::min(y0 + 1, h - 1), x0, std::min(x0 + 1, w - 1), wy, wx};
        }
    }
    std::vector<T> out(c * oh * ow);
    const T* xv = x.data().data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        const T* plane = xv + ch * h * w;
        T* oplane = out.data() + ch * oh * ow;
        for (std::size_t i = 0; i < oh * ow; ++i) {
            const Tap& t = taps[i];
            T v00 = plane[t.y0 * w + t.x0], v01 = plane[t.y0 * w + t.x1];
            T v10 = plane[t.y1 * w + t.x0], v11 = plane[t.y1 * w + t.x1];
            oplane[i] = (T(1) - t.wy) * ((T(1) - t.wx) * v00 + t.wx * v01) +
                        t.wy * ((T(1) - t.wx) * v10 + t.wx * v11);
        }
    }
    auto xn = x.node_ptr();
    return make_op<T>({c, oh, ow}, std::move(out), {x},
                      [xn, taps, c, h, w, oh, ow](TensorNode<T>* self) {
                          xn->ensure_grad();
                          for (std::size_t ch = 0; ch < c; ++ch) {
                              T* gplane = xn->grad.data() + ch * h * w;
                              const T* og = self->grad.data() + ch * oh * ow;
                              for (std::size_t i = 0; i < oh * ow; ++i) {
                                  const Tap& t = taps[i];
                                  T g = og[i];
                                  gplane[t.y0 * w + t.x0] += g * (T(1) - t.wy) * (T(1) - t.wx);
                                  gplane[t.y0 * w + t.x1] += g * (T(1) - t.wy) * t.wx;
                                  gplane[t.y1 * w + t.x0] += g * t.wy * (T(1) - t.wx);
                                  gplane[t.y1 * w + t.x1] += g * t.wy * t.wx;
                              }
                          }
                      });
}

// ---------------------------------------------------------------------------
// softmax along an axis, shift-stable

template <class T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
    auto sp = detail::axis_split(x.shape(), axis);
    std::vector<T> out(x.numel());
    const auto& xv = x.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
            T mx = xv[(o * sp.extent) * sp.inner + i];
            for (std::size_t e = 1; e < sp.extent; ++e)
                mx = std::max(mx, xv[(o * sp.extent + e) * sp.inner + i]);
            T denom = T(0);
            for (std::size_t e = 0; e < sp.extent; ++e) {
                T v = std::exp(xv[(o * sp.extent + e) * sp.inner + i] - mx);
                out[(o * sp.extent + e) * sp.inner + i] = v;
                denom += v;
            }
            for (std::size_t e = 0; e < sp.extent; ++e)
                out[(o * sp.extent + e) * sp.inner + i] /= denom;
        }
    auto xn = x.node_ptr();
    return make_op<T>(x.shape(), std::move(out), {x}, [xn, sp](TensorNode<T>* self) {
        xn->ensure_grad();
        const auto& s = self->value;
        const auto& g = self->grad;
        for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t i = 0; i < sp.inner; ++i) {
                T dot = T(0);
                for (std::size_t e = 0; e < sp.extent; ++e) {
                    std::size_t j = (o * sp.extent + e) * sp.inner + i;
                    dot += g[j] * s[j];
                }
                for (std::size_t e = 0; e < sp.extent; ++e) {
                    std::size_t j = (o * sp.extent + e) * sp.inner + i;
                    xn->grad[j] += s[j] * (g[j] - dot);
                }
            }
    });
}

} // namespace zss
