#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <cblas.h>

#include "reso/errors.hpp"
#include "reso/rng.hpp"

// Dense tensors with reverse-mode autodiff. Scalar type is a template
// parameter: float is the training precision, double is the shadow mode
// used by gradient checks. Matrix products go through CBLAS.

namespace reso {

using Shape = std::vector<int>;

inline long numel(const Shape& s) {
    long n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

// ---------------------------------------------------------------------------
// Grad recording switch (thread-local)
// ---------------------------------------------------------------------------

struct GradMode {
    static bool& enabled() {
        thread_local bool e = true;
        return e;
    }
};

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(GradMode::enabled()) { GradMode::enabled() = false; }
    ~NoGradGuard() { GradMode::enabled() = prev; }
};

// ---------------------------------------------------------------------------
// Node + handle
// ---------------------------------------------------------------------------

template <typename S>
struct TensorNode {
    Shape shape;
    std::vector<S> data;
    std::vector<S> grad; // allocated lazily, same length as data
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode<S>>> parents;
    std::function<void()> backward_fn; // reads this->grad, accumulates into parents

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), S(0));
    }
    void zero_grad() { grad.assign(data.size(), S(0)); }
};

template <typename S>
class TensorT {
public:
    TensorT() = default;

    static TensorT from_data(Shape shape, std::vector<S> data, bool requires_grad = false) {
        for (int d : shape)
            if (d < 1) throw DimensionError("tensor shape entries must be >= 1, got " + shape_str(shape));
        if (numel(shape) != static_cast<long>(data.size()))
            throw DimensionError("data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
        TensorT t;
        t.node_ = std::make_shared<TensorNode<S>>();
        t.node_->shape = std::move(shape);
        t.node_->data = std::move(data);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static TensorT zeros(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), S(0), requires_grad);
    }

    static TensorT full(Shape shape, S value, bool requires_grad = false) {
        std::vector<S> d(numel(shape), value);
        return from_data(std::move(shape), std::move(d), requires_grad);
    }

    static TensorT scalar(S value) { return from_data({1}, {value}); }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[i]; }
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    long size() const { return static_cast<long>(node_->data.size()); }
    std::vector<S>& data() { return node_->data; }
    const std::vector<S>& data() const { return node_->data; }
    std::vector<S>& grad() { return node_->grad; }
    const std::vector<S>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool r) { node_->requires_grad = r; }
    void zero_grad() { node_->zero_grad(); }

    S item() const {
        if (size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
        return node_->data[0];
    }

    std::shared_ptr<TensorNode<S>> node() const { return node_; }

private:
    std::shared_ptr<TensorNode<S>> node_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

namespace detail {

// Result node wired to its parents; backward_fn is attached by the op.
template <typename S>
TensorT<S> make_result(Shape shape, std::vector<TensorT<S>> parents) {
    bool req = false;
    if (GradMode::enabled())
        for (const auto& p : parents) req = req || p.requires_grad();
    TensorT<S> out = TensorT<S>::zeros(std::move(shape), req);
    if (req)
        for (const auto& p : parents) out.node()->parents.push_back(p.node());
    return out;
}

inline void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* A, int lda,
                 const float* B, int ldb, float beta, float* C, int ldc) {
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
                m, n, k, alpha, A, lda, B, ldb, beta, C, ldc);
}

inline void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* A, int lda,
                 const double* B, int ldb, double beta, double* C, int ldc) {
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
                m, n, k, alpha, A, lda, B, ldb, beta, C, ldc);
}

// Broadcast plan for elementwise ops: numpy semantics, axes aligned on the
// right, size-1 axes stretch. Strides are in elements; 0 marks a broadcast
// axis.
struct BroadcastPlan {
    Shape out;
    std::vector<long> sa, sb;
};

inline BroadcastPlan broadcast(const Shape& a, const Shape& b) {
    int rank = static_cast<int>(std::max(a.size(), b.size()));
    BroadcastPlan p;
    p.out.resize(rank);
    p.sa.assign(rank, 0);
    p.sb.assign(rank, 0);
    // physical strides
    std::vector<long> pa(a.size()), pb(b.size());
    long acc = 1;
    for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) { pa[i] = acc; acc *= a[i]; }
    acc = 1;
    for (int i = static_cast<int>(b.size()) - 1; i >= 0; --i) { pb[i] = acc; acc *= b[i]; }
    for (int i = 0; i < rank; ++i) {
        int ia = static_cast<int>(a.size()) - rank + i;
        int ib = static_cast<int>(b.size()) - rank + i;
        int da = ia >= 0 ? a[ia] : 1;
        int db = ib >= 0 ? b[ib] : 1;
        if (da != db && da != 1 && db != 1)
            throw DimensionError("shapes not broadcastable: " + shape_str(a) + " vs " + shape_str(b));
        p.out[i] = std::max(da, db);
        p.sa[i] = (ia >= 0 && da != 1) ? pa[ia] : 0;
        p.sb[i] = (ib >= 0 && db != 1) ? pb[ib] : 0;
    }
    return p;
}

// Odometer walk over an output shape, calling fn(out_index, off_a, off_b).
template <typename Fn>
void walk(const Shape& out, const std::vector<long>& sa, const std::vector<long>& sb, Fn&& fn) {
    long total = numel(out);
    int rank = static_cast<int>(out.size());
    std::vector<int> idx(rank, 0);
    long oa = 0, ob = 0;
    for (long i = 0; i < total; ++i) {
        fn(i, oa, ob);
        for (int ax = rank - 1; ax >= 0; --ax) {
            ++idx[ax];
            oa += sa[ax];
            ob += sb[ax];
            if (idx[ax] < out[ax]) break;
            idx[ax] = 0;
            oa -= sa[ax] * out[ax];
            ob -= sb[ax] * out[ax];
        }
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary ops
// ---------------------------------------------------------------------------

enum class BinaryKind { Add, Sub, Mul };

template <typename S>
TensorT<S> elementwise_binary(BinaryKind kind, const TensorT<S>& a, const TensorT<S>& b) {
    auto plan = detail::broadcast(a.shape(), b.shape());
    TensorT<S> out = detail::make_result<S>(plan.out, {a, b});
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    S* po = out.data().data();
    switch (kind) {
    case BinaryKind::Add:
        detail::walk(plan.out, plan.sa, plan.sb, [&](long i, long oa, long ob) { po[i] = pa[oa] + pb[ob]; });
        break;
    case BinaryKind::Sub:
        detail::walk(plan.out, plan.sa, plan.sb, [&](long i, long oa, long ob) { po[i] = pa[oa] - pb[ob]; });
        break;
    case BinaryKind::Mul:
        detail::walk(plan.out, plan.sa, plan.sb, [&](long i, long oa, long ob) { po[i] = pa[oa] * pb[ob]; });
        break;
    }
    if (out.requires_grad()) {
        auto an = a.node().get();
        auto bn = b.node().get();
        auto on = out.node().get();
        bool ra = a.requires_grad(), rb = b.requires_grad();
        out.node()->backward_fn = [kind, an, bn, on, plan, ra, rb]() {
            const S* g = on->grad.data();
            if (ra) an->ensure_grad();
            if (rb) bn->ensure_grad();
            S* ga = ra ? an->grad.data() : nullptr;
            S* gb = rb ? bn->grad.data() : nullptr;
            const S* da = an->data.data();
            const S* db = bn->data.data();
            detail::walk(plan.out, plan.sa, plan.sb, [&](long i, long oa, long ob) {
                switch (kind) {
                case BinaryKind::Add:
                    if (ga) ga[oa] += g[i];
                    if (gb) gb[ob] += g[i];
                    break;
                case BinaryKind::Sub:
                    if (ga) ga[oa] += g[i];
                    if (gb) gb[ob] -= g[i];
                    break;
                case BinaryKind::Mul:
                    if (ga) ga[oa] += g[i] * db[ob];
                    if (gb) gb[ob] += g[i] * da[oa];
                    break;
                }
            });
        };
    }
    return out;
}

template <typename S> TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) { return elementwise_binary(BinaryKind::Add, a, b); }
template <typename S> TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) { return elementwise_binary(BinaryKind::Sub, a, b); }
template <typename S> TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) { return elementwise_binary(BinaryKind::Mul, a, b); }

// Multiply by a compile-time constant.
template <typename S>
TensorT<S> scale(const TensorT<S>& x, double c) {
    TensorT<S> out = detail::make_result<S>(x.shape(), {x});
    const S* px = x.data().data();
    S* po = out.data().data();
    for (long i = 0; i < x.size(); ++i) po[i] = static_cast<S>(px[i] * c);
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [xn, on, c]() {
            xn->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i)
                xn->grad[i] += static_cast<S>(on->grad[i] * c);
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matmul (batched, leading dims broadcast from 1)
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.ndim() < 2 || b.ndim() < 2)
        throw DimensionError("matmul needs >=2-d operands: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    int m = a.dim(a.ndim() - 2), k = a.dim(a.ndim() - 1);
    int kb = b.dim(b.ndim() - 2), n = b.dim(b.ndim() - 1);
    if (k != kb)
        throw DimensionError("matmul inner dims disagree: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    Shape ba(a.shape().begin(), a.shape().end() - 2);
    Shape bb(b.shape().begin(), b.shape().end() - 2);
    auto plan = detail::broadcast(ba, bb); // strides in matrix-count units
    Shape out_shape = plan.out;
    out_shape.push_back(m);
    out_shape.push_back(n);
    TensorT<S> out = detail::make_result<S>(out_shape, {a, b});
    const long ea = static_cast<long>(m) * k, eb = static_cast<long>(k) * n, eo = static_cast<long>(m) * n;
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    S* po = out.data().data();
    detail::walk(plan.out, plan.sa, plan.sb, [&](long i, long oa, long ob) {
        detail::gemm(false, false, m, n, k, S(1), pa + oa * ea, k, pb + ob * eb, n, S(0), po + i * eo, n);
    });
    if (out.requires_grad()) {
        auto an = a.node().get();
        auto bn = b.node().get();
        auto on = out.node().get();
        bool ra = a.requires_grad(), rb = b.requires_grad();
        out.node()->backward_fn = [an, bn, on, plan, ra, rb, m, n, k, ea, eb, eo]() {
            if (ra) an->ensure_grad();
            if (rb) bn->ensure_grad();
            const S* g = on->grad.data();
            const S* da = an->data.data();
            const S* db = bn->data.data();
            detail::walk(plan.out, plan.sa, plan.sb, [&](long i, long oa, long ob) {
                if (ra) // dA += G * B^T
                    detail::gemm(false, true, m, k, n, S(1), g + i * eo, n, db + ob * eb, n, S(1),
                                 an->grad.data() + oa * ea, k);
                if (rb) // dB += A^T * G
                    detail::gemm(true, false, k, n, m, S(1), da + oa * ea, k, g + i * eo, n, S(1),
                                 bn->grad.data() + ob * eb, n);
            });
        };
    }
    return out;
}

// 2-d transpose.
template <typename S>
TensorT<S> transpose(const TensorT<S>& x) {
    if (x.ndim() != 2) throw DimensionError("transpose expects a 2-d tensor, got " + shape_str(x.shape()));
    int r = x.dim(0), c = x.dim(1);
    TensorT<S> out = detail::make_result<S>({c, r}, {x});
    const S* px = x.data().data();
    S* po = out.data().data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) po[static_cast<long>(j) * r + i] = px[static_cast<long>(i) * c + j];
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [xn, on, r, c]() {
            xn->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    xn->grad[static_cast<long>(i) * c + j] += on->grad[static_cast<long>(j) * r + i];
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class Act { Sigmoid, Tanh, Relu };

template <typename S>
TensorT<S> activation(Act kind, const TensorT<S>& x) {
    TensorT<S> out = detail::make_result<S>(x.shape(), {x});
    const S* px = x.data().data();
    S* po = out.data().data();
    for (long i = 0; i < x.size(); ++i) {
        switch (kind) {
        case Act::Sigmoid: po[i] = S(1) / (S(1) + std::exp(-px[i])); break;
        case Act::Tanh: po[i] = std::tanh(px[i]); break;
        case Act::Relu: po[i] = px[i] > S(0) ? px[i] : S(0); break;
        }
    }
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [kind, xn, on]() {
            xn->ensure_grad();
            const S* y = on->data.data();
            const S* g = on->grad.data();
            for (size_t i = 0; i < on->data.size(); ++i) {
                switch (kind) {
                case Act::Sigmoid: xn->grad[i] += g[i] * y[i] * (S(1) - y[i]); break;
                case Act::Tanh: xn->grad[i] += g[i] * (S(1) - y[i] * y[i]); break;
                case Act::Relu: xn->grad[i] += y[i] > S(0) ? g[i] : S(0); break;
                }
            }
        };
    }
    return out;
}

template <typename S> TensorT<S> sigmoid(const TensorT<S>& x) { return activation(Act::Sigmoid, x); }
template <typename S> TensorT<S> tanh_act(const TensorT<S>& x) { return activation(Act::Tanh, x); }
template <typename S> TensorT<S> relu(const TensorT<S>& x) { return activation(Act::Relu, x); }

template <typename S>
TensorT<S> abs_val(const TensorT<S>& x) {
    TensorT<S> out = detail::make_result<S>(x.shape(), {x});
    const S* px = x.data().data();
    S* po = out.data().data();
    for (long i = 0; i < x.size(); ++i) po[i] = std::abs(px[i]);
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [xn, on]() {
            xn->ensure_grad();
            const S* d = xn->data.data();
            for (size_t i = 0; i < on->grad.size(); ++i)
                xn->grad[i] += d[i] >= S(0) ? on->grad[i] : -on->grad[i];
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Softmax (max-stabilized) along one axis
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> softmax(const TensorT<S>& x, int axis) {
    if (axis < 0) axis += x.ndim();
    if (axis < 0 || axis >= x.ndim())
        throw DimensionError("softmax axis out of range for " + shape_str(x.shape()));
    long outer = 1, inner = 1;
    int n = x.dim(axis);
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    TensorT<S> out = detail::make_result<S>(x.shape(), {x});
    const S* px = x.data().data();
    S* po = out.data().data();
    for (long o = 0; o < outer; ++o)
        for (long in = 0; in < inner; ++in) {
            const long base = o * n * inner + in;
            S mx = px[base];
            for (int j = 1; j < n; ++j) mx = std::max(mx, px[base + j * inner]);
            S sum = S(0);
            for (int j = 0; j < n; ++j) {
                S e = std::exp(px[base + j * inner] - mx);
                po[base + j * inner] = e;
                sum += e;
            }
            for (int j = 0; j < n; ++j) po[base + j * inner] /= sum;
        }
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [xn, on, outer, inner, n]() {
            xn->ensure_grad();
            const S* y = on->data.data();
            const S* g = on->grad.data();
            for (long o = 0; o < outer; ++o)
                for (long in = 0; in < inner; ++in) {
                    const long base = o * n * inner + in;
                    S dot = S(0);
                    for (int j = 0; j < n; ++j) dot += g[base + j * inner] * y[base + j * inner];
                    for (int j = 0; j < n; ++j)
                        xn->grad[base + j * inner] += y[base + j * inner] * (g[base + j * inner] - dot);
                }
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layer normalization over the last axis
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> layer_norm(const TensorT<S>& x, const TensorT<S>& gain, const TensorT<S>& bias,
                      double eps = 1e-5) {
    int d = x.dim(x.ndim() - 1);
    if (gain.size() != d || bias.size() != d)
        throw DimensionError("layer_norm gain/bias length must match last axis " + std::to_string(d) +
                             ": gain " + shape_str(gain.shape()) + ", bias " + shape_str(bias.shape()));
    long rows = x.size() / d;
    TensorT<S> out = detail::make_result<S>(x.shape(), {x, gain, bias});
    const S* px = x.data().data();
    const S* pg = gain.data().data();
    const S* pb = bias.data().data();
    S* po = out.data().data();
    std::vector<S> inv_std(rows), mean(rows);
    for (long r = 0; r < rows; ++r) {
        const S* row = px + r * d;
        S mu = S(0);
        for (int j = 0; j < d; ++j) mu += row[j];
        mu /= d;
        S var = S(0);
        for (int j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= d;
        S is = S(1) / std::sqrt(var + static_cast<S>(eps));
        mean[r] = mu;
        inv_std[r] = is;
        for (int j = 0; j < d; ++j) po[r * d + j] = (row[j] - mu) * is * pg[j] + pb[j];
    }
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto gn = gain.node().get();
        auto bn = bias.node().get();
        auto on = out.node().get();
        bool rx = x.requires_grad(), rg = gain.requires_grad(), rb = bias.requires_grad();
        out.node()->backward_fn = [=]() {
            if (rx) xn->ensure_grad();
            if (rg) gn->ensure_grad();
            if (rb) bn->ensure_grad();
            const S* g = on->grad.data();
            const S* xd = xn->data.data();
            const S* gd = gn->data.data();
            for (long r = 0; r < rows; ++r) {
                const S* row = xd + r * d;
                const S* gr = g + r * d;
                S mu = mean[r], is = inv_std[r];
                // dxhat and its row statistics
                S sum_dxh = S(0), sum_dxh_xh = S(0);
                for (int j = 0; j < d; ++j) {
                    S xh = (row[j] - mu) * is;
                    S dxh = gr[j] * gd[j];
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh;
                    if (rg) gn->grad[j] += gr[j] * xh;
                    if (rb) bn->grad[j] += gr[j];
                }
                if (rx)
                    for (int j = 0; j < d; ++j) {
                        S xh = (row[j] - mu) * is;
                        S dxh = gr[j] * gd[j];
                        xn->grad[r * d + j] += is * (dxh - sum_dxh / d - xh * sum_dxh_xh / d);
                    }
            }
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Causal dilated 1-d convolution (left zero padding, same length out)
// ---------------------------------------------------------------------------

// x: [L, C_in], filters: [k, C_in, C_out] -> [L, C_out].
// Output at t sees x at t, t-l, ..., t-(k-1)l only.
template <typename S>
TensorT<S> causal_dilated_conv1d(const TensorT<S>& x, const TensorT<S>& filters, int dilation) {
    if (dilation < 1) throw ConfigError("conv dilation must be >= 1, got " + std::to_string(dilation));
    if (x.ndim() != 2 || filters.ndim() != 3)
        throw DimensionError("conv expects x [L,C_in], filters [k,C_in,C_out]: got " +
                             shape_str(x.shape()) + ", " + shape_str(filters.shape()));
    int L = x.dim(0), cin = x.dim(1);
    int k = filters.dim(0), cout = filters.dim(2);
    if (filters.dim(1) != cin)
        throw DimensionError("conv channel mismatch: x " + shape_str(x.shape()) + " vs filters " +
                             shape_str(filters.shape()));
    TensorT<S> out = detail::make_result<S>({L, cout}, {x, filters});
    const S* px = x.data().data();
    const S* pf = filters.data().data();
    S* po = out.data().data();
    for (int i = 0; i < k; ++i) {
        int shift = dilation * i;
        if (shift >= L) break;
        int rows = L - shift;
        // out[shift:, :] += x[:rows, :] * F[i]
        detail::gemm(false, false, rows, cout, cin, S(1), px, cin,
                     pf + static_cast<long>(i) * cin * cout, cout, S(1),
                     po + static_cast<long>(shift) * cout, cout);
    }
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto fn = filters.node().get();
        auto on = out.node().get();
        bool rx = x.requires_grad(), rf = filters.requires_grad();
        out.node()->backward_fn = [=]() {
            if (rx) xn->ensure_grad();
            if (rf) fn->ensure_grad();
            const S* g = on->grad.data();
            for (int i = 0; i < k; ++i) {
                int shift = dilation * i;
                if (shift >= L) break;
                int rows = L - shift;
                if (rf) // dF[i] += x[:rows]^T * g[shift:]
                    detail::gemm(true, false, cin, cout, rows, S(1), xn->data.data(), cin,
                                 g + static_cast<long>(shift) * cout, cout, S(1),
                                 fn->grad.data() + static_cast<long>(i) * cin * cout, cout);
                if (rx) // dx[:rows] += g[shift:] * F[i]^T
                    detail::gemm(false, true, rows, cin, cout, S(1),
                                 g + static_cast<long>(shift) * cout, cout,
                                 fn->data.data() + static_cast<long>(i) * cin * cout, cout, S(1),
                                 xn->grad.data(), cin);
            }
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

enum class ReduceKind { Mean, Sum };

template <typename S>
TensorT<S> reduce_all(ReduceKind kind, const TensorT<S>& x) {
    TensorT<S> out = detail::make_result<S>({1}, {x});
    S acc = S(0);
    for (S v : x.data()) acc += v;
    long n = x.size();
    out.data()[0] = kind == ReduceKind::Mean ? acc / n : acc;
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [kind, xn, on, n]() {
            xn->ensure_grad();
            S g = on->grad[0];
            if (kind == ReduceKind::Mean) g /= n;
            for (long i = 0; i < n; ++i) xn->grad[i] += g;
        };
    }
    return out;
}

template <typename S> TensorT<S> reduce_mean(const TensorT<S>& x) { return reduce_all(ReduceKind::Mean, x); }
template <typename S> TensorT<S> reduce_sum(const TensorT<S>& x) { return reduce_all(ReduceKind::Sum, x); }

// Reduce along one axis; the axis is dropped from the output shape.
template <typename S>
TensorT<S> reduce(ReduceKind kind, const TensorT<S>& x, int axis) {
    if (axis < 0) axis += x.ndim();
    if (axis < 0 || axis >= x.ndim())
        throw DimensionError("reduce axis out of range for " + shape_str(x.shape()));
    long outer = 1, inner = 1;
    int n = x.dim(axis);
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    Shape os;
    for (int i = 0; i < x.ndim(); ++i)
        if (i != axis) os.push_back(x.dim(i));
    if (os.empty()) os.push_back(1);
    TensorT<S> out = detail::make_result<S>(os, {x});
    const S* px = x.data().data();
    S* po = out.data().data();
    for (long o = 0; o < outer; ++o)
        for (long in = 0; in < inner; ++in) {
            S acc = S(0);
            for (int j = 0; j < n; ++j) acc += px[o * n * inner + j * inner + in];
            po[o * inner + in] = kind == ReduceKind::Mean ? acc / n : acc;
        }
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [kind, xn, on, outer, inner, n]() {
            xn->ensure_grad();
            for (long o = 0; o < outer; ++o)
                for (long in = 0; in < inner; ++in) {
                    S g = on->grad[o * inner + in];
                    if (kind == ReduceKind::Mean) g /= n;
                    for (int j = 0; j < n; ++j) xn->grad[o * n * inner + j * inner + in] += g;
                }
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dropout (inverted; identity when not training)
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> dropout(const TensorT<S>& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) {
        // identity pass-through, still recorded so gradients flow
        TensorT<S> out = detail::make_result<S>(x.shape(), {x});
        out.data() = x.data();
        if (out.requires_grad()) {
            auto xn = x.node().get();
            auto on = out.node().get();
            out.node()->backward_fn = [xn, on]() {
                xn->ensure_grad();
                for (size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i];
            };
        }
        return out;
    }
    TensorT<S> out = detail::make_result<S>(x.shape(), {x});
    const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
    auto mask = std::make_shared<std::vector<S>>(x.size());
    const S* px = x.data().data();
    S* po = out.data().data();
    for (long i = 0; i < x.size(); ++i) {
        S m = rng.uniform() < rate ? S(0) : keep_scale;
        (*mask)[i] = m;
        po[i] = px[i] * m;
    }
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [xn, on, mask]() {
            xn->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i] * (*mask)[i];
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> reshape(const TensorT<S>& x, Shape shape) {
    if (numel(shape) != x.size())
        throw DimensionError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                             " changes element count");
    TensorT<S> out = detail::make_result<S>(std::move(shape), {x});
    out.data() = x.data();
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [xn, on]() {
            xn->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i];
        };
    }
    return out;
}

// Contiguous slice of length `len` starting at `start` along `axis`.
template <typename S>
TensorT<S> narrow(const TensorT<S>& x, int axis, int start, int len) {
    if (axis < 0) axis += x.ndim();
    if (axis < 0 || axis >= x.ndim() || start < 0 || len < 1 || start + len > x.dim(axis))
        throw DimensionError("narrow(axis=" + std::to_string(axis) + ", start=" + std::to_string(start) +
                             ", len=" + std::to_string(len) + ") invalid for " + shape_str(x.shape()));
    long outer = 1, inner = 1;
    int n = x.dim(axis);
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    Shape os = x.shape();
    os[axis] = len;
    TensorT<S> out = detail::make_result<S>(os, {x});
    const S* px = x.data().data();
    S* po = out.data().data();
    for (long o = 0; o < outer; ++o)
        std::copy(px + (o * n + start) * inner, px + (o * n + start + len) * inner,
                  po + o * len * inner);
    if (out.requires_grad()) {
        auto xn = x.node().get();
        auto on = out.node().get();
        out.node()->backward_fn = [xn, on, outer, inner, n, start, len]() {
            xn->ensure_grad();
            for (long o = 0; o < outer; ++o)
                for (long j = 0; j < static_cast<long>(len) * inner; ++j)
                    xn->grad[(o * n + start) * inner + j] += on->grad[o * len * inner + j];
        };
    }
    return out;
}

template <typename S>
TensorT<S> concat(const std::vector<TensorT<S>>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat of zero tensors");
    int nd = parts[0].ndim();
    if (axis < 0) axis += nd;
    Shape os = parts[0].shape();
    long total_axis = 0;
    for (const auto& p : parts) {
        if (p.ndim() != nd) throw DimensionError("concat rank mismatch");
        for (int i = 0; i < nd; ++i)
            if (i != axis && p.dim(i) != os[i])
                throw DimensionError("concat shape mismatch: " + shape_str(os) + " vs " + shape_str(p.shape()));
        total_axis += p.dim(axis);
    }
    os[axis] = static_cast<int>(total_axis);
    long outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= os[i];
    for (int i = axis + 1; i < nd; ++i) inner *= os[i];
    TensorT<S> out = detail::make_result<S>(os, parts);
    S* po = out.data().data();
    long off = 0;
    std::vector<long> offsets;
    for (const auto& p : parts) {
        offsets.push_back(off);
        int n = p.dim(axis);
        const S* pp = p.data().data();
        for (long o = 0; o < outer; ++o)
            std::copy(pp + o * n * inner, pp + (o + 1) * n * inner,
                      po + (o * total_axis + off) * inner);
        off += n;
    }
    if (out.requires_grad()) {
        auto on = out.node().get();
        std::vector<TensorNode<S>*> pn;
        std::vector<int> lens;
        std::vector<bool> req;
        for (const auto& p : parts) {
            pn.push_back(p.node().get());
            lens.push_back(p.dim(axis));
            req.push_back(p.requires_grad());
        }
        out.node()->backward_fn = [on, pn, lens, req, offsets, outer, inner, total_axis]() {
            for (size_t pi = 0; pi < pn.size(); ++pi) {
                if (!req[pi]) continue;
                pn[pi]->ensure_grad();
                long n = lens[pi];
                for (long o = 0; o < outer; ++o)
                    for (long j = 0; j < n * inner; ++j)
                        pn[pi]->grad[o * n * inner + j] +=
                            on->grad[(o * total_axis + offsets[pi]) * inner + j];
            }
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tape + backward
// ---------------------------------------------------------------------------

// Topologically ordered record of the forward pass reachable from one root.
template <typename S>
class Tape {
public:
    explicit Tape(const TensorT<S>& root) : root_(root.node()) {
        // iterative post-order DFS
        std::unordered_set<TensorNode<S>*> seen;
        std::vector<std::pair<TensorNode<S>*, size_t>> stack;
        stack.emplace_back(root_.get(), 0);
        seen.insert(root_.get());
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < node->parents.size()) {
                TensorNode<S>* p = node->parents[next++].get();
                if (!seen.count(p)) {
                    seen.insert(p);
                    stack.emplace_back(p, 0);
                }
            } else {
                order_.push_back(node);
                stack.pop_back();
            }
        }
    }

    const std::vector<TensorNode<S>*>& nodes() const { return order_; }

    // Reverse-mode sweep; root must be scalar.
    void backward() {
        if (root_->data.size() != 1)
            throw ContractError("backward requires a scalar loss, got shape " + shape_str(root_->shape));
        root_->ensure_grad();
        root_->grad[0] = S(1);
        for (auto it = order_.rbegin(); it != order_.rend(); ++it)
            if ((*it)->backward_fn && !(*it)->grad.empty()) (*it)->backward_fn();
    }

private:
    std::shared_ptr<TensorNode<S>> root_;
    std::vector<TensorNode<S>*> order_; // leaves first, root last
};

template <typename S>
void backward(const TensorT<S>& loss) {
    Tape<S>(loss).backward();
}

// Lossless element-type conversion (no autograd linkage).
template <typename To, typename From>
TensorT<To> cast(const TensorT<From>& x, bool requires_grad = false) {
    std::vector<To> d(x.data().begin(), x.data().end());
    return TensorT<To>::from_data(x.shape(), std::move(d), requires_grad);
}

} // namespace reso
