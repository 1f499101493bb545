#include "topogen/tensor.hpp"

#include "topogen/error.hpp"
#include "topogen/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>

namespace topogen::ad {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

NodePtr leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return n;
}

/// Creates an op output; the backward closure is kept only when some parent
/// needs a gradient and recording is enabled.
NodePtr make_result(Shape shape, std::vector<double> data, std::initializer_list<const Tensor*> parents,
                    std::function<void(Node&)> backward) {
    auto n = leaf(std::move(shape), std::move(data), false);
    if (!g_grad_enabled) return n;
    bool any = false;
    for (const Tensor* p : parents)
        if (p->defined() && p->requires_grad()) any = true;
    if (!any) return n;
    n->requires_grad = true;
    for (const Tensor* p : parents)
        if (p->defined()) n->parents.push_back(p->node_ptr());
    n->backward = std::move(backward);
    return n;
}

bool needs(const Node* n) { return n && n->requires_grad; }

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

/// True when `suffix` equals the trailing dimensions of `full`.
bool is_suffix(const Shape& full, const Shape& suffix) {
    if (suffix.size() > full.size()) return false;
    return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

struct AxisSplit {
    std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit axis_split(const Shape& s, std::size_t axis) {
    AxisSplit a;
    for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
    a.len = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
    return a;
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
    require_defined(x, "unary");
    const auto in = x.data();
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
    auto px = x.node_ptr();
    return Tensor(make_result(x.shape(), std::move(out), {&x}, [px, deriv](Node& self) {
        px->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i] * deriv(px->data[i], self.data[i]);
    }));
}

enum class BinOp { Add, Sub, Mul };

Tensor binary(const Tensor& a_in, const Tensor& b_in, BinOp op, const char* name) {
    require_defined(a_in, name);
    require_defined(b_in, name);
    const Tensor* a = &a_in;
    const Tensor* b = &b_in;
    bool swapped = false;
    if (!is_suffix(a->shape(), b->shape())) {
        if (op != BinOp::Sub && is_suffix(b->shape(), a->shape())) {
            std::swap(a, b);
            swapped = true;
        } else {
            throw ShapeError(std::string(name) + ": cannot broadcast " + shape_str(a_in.shape()) + " with " +
                             shape_str(b_in.shape()));
        }
    }
    (void)swapped;
    const auto ad = a->data();
    const auto bd = b->data();
    const std::size_t nb = bd.size();
    std::vector<double> out(ad.size());
    for (std::size_t i = 0; i < ad.size(); ++i) {
        const double y = bd[i % nb];
        out[i] = op == BinOp::Add ? ad[i] + y : op == BinOp::Sub ? ad[i] - y : ad[i] * y;
    }
    auto pa = a->node_ptr(), pb = b->node_ptr();
    return Tensor(make_result(a->shape(), std::move(out), {a, b}, [pa, pb, op, nb](Node& self) {
        const auto& g = self.grad;
        if (needs(pa.get())) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                pa->grad[i] += op == BinOp::Mul ? g[i] * pb->data[i % nb] : g[i];
        }
        if (needs(pb.get())) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double d = op == BinOp::Add ? g[i] : op == BinOp::Sub ? -g[i] : g[i] * pa->data[i];
                pb->grad[i % nb] += d;
            }
        }
    }));
}

} // namespace

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

std::size_t numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const auto n = ad::numel(shape);
    return Tensor(leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (ad::numel(shape) != values.size())
        throw ShapeError("Tensor::from: shape " + shape_str(shape) + " needs " + std::to_string(ad::numel(shape)) +
                         " values, got " + std::to_string(values.size()));
    return Tensor(leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({}, {v}, requires_grad); }

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->data.size(); }
std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw InputError("tensor has no gradient");
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

void Tensor::backward() const {
    if (numel() != 1) throw ShapeError("backward: loss must be scalar, got shape " + shape_str(shape()));
    if (!node_->requires_grad) return;
    // Iterative post-order DFS; graphs can be deep.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    for (Node* n : order)
        if (n->backward) n->grad.assign(n->data.size(), 0.0);
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward) (*it)->backward(**it);
}

Tensor Tensor::detach() const { return Tensor(leaf(shape(), node_->data, false)); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Mul, "mul"); }

Tensor scale(const Tensor& a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(m * n, 0.0);
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* C = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            const double* Bp = B + p * n;
            for (std::size_t j = 0; j < n; ++j) C[j] += av * Bp[j];
        }
    }
    auto pa = a.node_ptr(), pb = b.node_ptr();
    return Tensor(make_result({m, n}, std::move(out), {&a, &b}, [pa, pb, m, k, n](Node& self) {
        const double* G = self.grad.data();
        if (needs(pa.get())) {
            // dA = G B^T
            pa->ensure_grad();
            const double* B = pb->data.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double* Bp = B + p * n;
                    const double* Gi = G + i * n;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += Gi[j] * Bp[j];
                    pa->grad[i * k + p] += acc;
                }
        }
        if (needs(pb.get())) {
            // dB = A^T G
            pb->ensure_grad();
            const double* A = pa->data.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = A[i * k + p];
                    if (av == 0.0) continue;
                    double* dB = pb->grad.data() + p * n;
                    const double* Gi = G + i * n;
                    for (std::size_t j = 0; j < n; ++j) dB[j] += av * Gi[j];
                }
        }
    }));
}

Tensor transpose(const Tensor& a) {
    require_defined(a, "transpose");
    if (a.rank() != 2) throw ShapeError("transpose: expected 2-D, got " + shape_str(a.shape()));
    const std::size_t r = a.dim(0), c = a.dim(1);
    std::vector<double> out(r * c);
    const auto d = a.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = d[i * c + j];
    auto pa = a.node_ptr();
    return Tensor(make_result({c, r}, std::move(out), {&a}, [pa, r, c](Node& self) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) pa->grad[i * c + j] += self.grad[j * r + i];
    }));
}

Tensor reshape(const Tensor& a, Shape shape) {
    require_defined(a, "reshape");
    if (ad::numel(shape) != a.numel())
        throw ShapeError("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape));
    auto pa = a.node_ptr();
    std::vector<double> out(a.data().begin(), a.data().end());
    return Tensor(make_result(std::move(shape), std::move(out), {&a}, [pa](Node& self) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }));
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_defined(w, "linear");
    if (w.rank() != 2 || x.rank() != 2 || x.dim(1) != w.dim(0))
        throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
    Tensor y = matmul(x, w);
    if (!b.defined()) return y;
    if (b.shape() != Shape{w.dim(1)})
        throw ShapeError("linear: bias " + shape_str(b.shape()) + " vs weight " + shape_str(w.shape()));
    return add(y, b);
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    require_defined(x, "softmax");
    if (axis >= x.rank()) throw ShapeError("softmax: axis out of range for " + shape_str(x.shape()));
    const auto sp = axis_split(x.shape(), axis);
    const auto in = x.data();
    std::vector<double> out(in.size());
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
            const std::size_t base = o * sp.len * sp.inner + i;
            double mx = -INFINITY;
            for (std::size_t l = 0; l < sp.len; ++l) mx = std::max(mx, in[base + l * sp.inner]);
            double z = 0.0;
            for (std::size_t l = 0; l < sp.len; ++l) z += out[base + l * sp.inner] = std::exp(in[base + l * sp.inner] - mx);
            for (std::size_t l = 0; l < sp.len; ++l) out[base + l * sp.inner] /= z;
        }
    auto px = x.node_ptr();
    return Tensor(make_result(x.shape(), std::move(out), {&x}, [px, sp](Node& self) {
        px->ensure_grad();
        const auto& y = self.data;
        const auto& g = self.grad;
        for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t i = 0; i < sp.inner; ++i) {
                const std::size_t base = o * sp.len * sp.inner + i;
                double dot = 0.0;
                for (std::size_t l = 0; l < sp.len; ++l) dot += g[base + l * sp.inner] * y[base + l * sp.inner];
                for (std::size_t l = 0; l < sp.len; ++l) {
                    const std::size_t k = base + l * sp.inner;
                    px->grad[k] += y[k] * (g[k] - dot);
                }
            }
    }));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_defined(x, "layer_norm");
    if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
    const std::size_t d = x.shape().back();
    const std::size_t rows = x.numel() / d;
    for (const Tensor* p : {&gain, &bias})
        if (p->defined() && p->shape() != Shape{d})
            throw ShapeError("layer_norm: parameter " + shape_str(p->shape()) + " vs input " + shape_str(x.shape()));
    const auto in = x.data();
    std::vector<double> xhat(in.size()), inv_std(rows), out(in.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = in.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += xr[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(d);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t k = r * d + j;
            xhat[k] = (xr[j] - mu) * inv_std[r];
            out[k] = xhat[k] * (gain.defined() ? gain.data()[j] : 1.0) + (bias.defined() ? bias.data()[j] : 0.0);
        }
    }
    auto px = x.node_ptr();
    auto pg = gain.defined() ? gain.node_ptr() : nullptr;
    auto pb = bias.defined() ? bias.node_ptr() : nullptr;
    return Tensor(make_result(x.shape(), std::move(out), {&x, &gain, &bias},
                              [px, pg, pb, xhat = std::move(xhat), inv_std = std::move(inv_std), d, rows](Node& self) {
        const auto& g = self.grad;
        if (needs(pg.get())) {
            pg->ensure_grad();
            for (std::size_t k = 0; k < g.size(); ++k) pg->grad[k % d] += g[k] * xhat[k];
        }
        if (needs(pb.get())) {
            pb->ensure_grad();
            for (std::size_t k = 0; k < g.size(); ++k) pb->grad[k % d] += g[k];
        }
        if (needs(px.get())) {
            px->ensure_grad();
            std::vector<double> dxhat(d);
            for (std::size_t r = 0; r < rows; ++r) {
                double m1 = 0.0, m2 = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const std::size_t k = r * d + j;
                    dxhat[j] = g[k] * (pg ? pg->data[j] : 1.0);
                    m1 += dxhat[j];
                    m2 += dxhat[j] * xhat[k];
                }
                m1 /= static_cast<double>(d);
                m2 /= static_cast<double>(d);
                for (std::size_t j = 0; j < d; ++j) {
                    const std::size_t k = r * d + j;
                    px->grad[k] += inv_std[r] * (dxhat[j] - m1 - xhat[k] * m2);
                }
            }
        }
    }));
}

Tensor gelu(const Tensor& x) {
    constexpr double c = 0.7978845608028654; // sqrt(2 / pi)
    constexpr double a = 0.044715;
    return unary(
        x, [](double v) { return 0.5 * v * (1.0 + std::tanh(c * (v + a * v * v * v))); },
        [](double v, double) {
            const double t = std::tanh(c * (v + a * v * v * v));
            return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * c * (1.0 + 3.0 * a * v * v);
        });
}

Tensor silu(const Tensor& x) {
    return unary(
        x, [](double v) { return v / (1.0 + std::exp(-v)); },
        [](double v, double) {
            const double s = 1.0 / (1.0 + std::exp(-v));
            return s * (1.0 + v * (1.0 - s));
        });
}

Tensor softplus(const Tensor& x) {
    return unary(
        x, [](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
        [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor exp(const Tensor& x) {
    return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    return unary(
        x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return v >= lo && v <= hi ? 1.0 : 0.0; });
}

Tensor square(const Tensor& x) {
    return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sum(const Tensor& x) {
    require_defined(x, "sum");
    const auto d = x.data();
    const double s = std::accumulate(d.begin(), d.end(), 0.0);
    auto px = x.node_ptr();
    return Tensor(make_result({}, {s}, {&x}, [px](Node& self) {
        px->ensure_grad();
        for (auto& g : px->grad) g += self.grad[0];
    }));
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor concat(std::span<const Tensor> ts, std::size_t axis) {
    if (ts.empty()) throw ShapeError("concat: no inputs");
    Shape out_shape = ts[0].shape();
    if (axis >= out_shape.size()) throw ShapeError("concat: axis out of range for " + shape_str(out_shape));
    out_shape[axis] = 0;
    for (const auto& t : ts) {
        require_defined(t, "concat");
        Shape a = t.shape(), b = ts[0].shape();
        if (a.size() != b.size()) throw ShapeError("concat: " + shape_str(a) + " vs " + shape_str(b));
        a[axis] = b[axis] = 0;
        if (a != b) throw ShapeError("concat: " + shape_str(t.shape()) + " vs " + shape_str(ts[0].shape()));
        out_shape[axis] += t.dim(axis);
    }
    const auto sp = axis_split(out_shape, axis);
    std::vector<double> out(ad::numel(out_shape));
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& t : ts) {
        offsets.push_back(off);
        const std::size_t chunk = t.dim(axis) * sp.inner;
        const auto d = t.data();
        for (std::size_t o = 0; o < sp.outer; ++o)
            std::copy_n(d.data() + o * chunk, chunk, out.data() + o * sp.len * sp.inner + off * sp.inner);
        off += t.dim(axis);
    }
    auto n = leaf(out_shape, std::move(out), false);
    if (g_grad_enabled && std::any_of(ts.begin(), ts.end(), [](const Tensor& t) { return t.requires_grad(); })) {
        n->requires_grad = true;
        std::vector<std::size_t> lens;
        for (const auto& t : ts) {
            n->parents.push_back(t.node_ptr());
            lens.push_back(t.dim(axis));
        }
        n->backward = [sp, offsets, lens](Node& self) {
            for (std::size_t t = 0; t < self.parents.size(); ++t) {
                Node* p = self.parents[t].get();
                if (!p->requires_grad) continue;
                p->ensure_grad();
                const std::size_t chunk = lens[t] * sp.inner;
                for (std::size_t o = 0; o < sp.outer; ++o) {
                    const double* src = self.grad.data() + o * sp.len * sp.inner + offsets[t] * sp.inner;
                    double* dst = p->grad.data() + o * chunk;
                    for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                }
            }
        };
    }
    return Tensor(n);
}

std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::span<const std::size_t> sizes) {
    require_defined(x, "split");
    if (axis >= x.rank()) throw ShapeError("split: axis out of range for " + shape_str(x.shape()));
    if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != x.dim(axis))
        throw ShapeError("split: sizes do not sum to axis length of " + shape_str(x.shape()));
    const auto sp = axis_split(x.shape(), axis);
    std::vector<Tensor> out;
    std::size_t off = 0;
    auto px = x.node_ptr();
    for (std::size_t len : sizes) {
        Shape s = x.shape();
        s[axis] = len;
        const std::size_t chunk = len * sp.inner;
        std::vector<double> d(sp.outer * chunk);
        for (std::size_t o = 0; o < sp.outer; ++o)
            std::copy_n(x.data().data() + o * sp.len * sp.inner + off * sp.inner, chunk, d.data() + o * chunk);
        out.emplace_back(make_result(std::move(s), std::move(d), {&x}, [px, sp, off, chunk](Node& self) {
            px->ensure_grad();
            for (std::size_t o = 0; o < sp.outer; ++o) {
                double* dst = px->grad.data() + o * sp.len * sp.inner + off * sp.inner;
                const double* src = self.grad.data() + o * chunk;
                for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
        }));
        off += len;
    }
    return out;
}

Tensor apply_sparse(const Tensor& x, std::shared_ptr<const SparseMap> map, Shape out_shape) {
    require_defined(x, "apply_sparse");
    if (x.numel() != map->in_size || ad::numel(out_shape) != map->out_size())
        throw ShapeError("apply_sparse: input " + shape_str(x.shape()) + " / output " + shape_str(out_shape) +
                         " do not match map " + std::to_string(map->in_size) + " -> " + std::to_string(map->out_size()));
    const auto in = x.data();
    std::vector<double> out(map->out_size(), 0.0);
    for (std::size_t r = 0; r < out.size(); ++r)
        for (std::size_t e = map->row_ptr[r]; e < map->row_ptr[r + 1]; ++e) out[r] += map->weight[e] * in[map->col[e]];
    auto px = x.node_ptr();
    return Tensor(make_result(std::move(out_shape), std::move(out), {&x}, [px, map](Node& self) {
        px->ensure_grad();
        for (std::size_t r = 0; r < self.grad.size(); ++r)
            for (std::size_t e = map->row_ptr[r]; e < map->row_ptr[r + 1]; ++e)
                px->grad[map->col[e]] += map->weight[e] * self.grad[r];
    }));
}

Tensor& ParamStore::add(const std::string& name, Tensor value) {
    if (entries_.count(name)) throw InvariantError("ParamStore: duplicate parameter '" + name + "'");
    value.node()->requires_grad = true;
    auto& e = entries_[name];
    e.m.assign(value.numel(), 0.0);
    e.v.assign(value.numel(), 0.0);
    e.value = std::move(value);
    return e.value;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InputError("ParamStore: no parameter '" + name + "'");
    return it->second.value;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [_, e] : entries_) e.value.zero_grad();
}

void adam_step(ParamStore& store, double lr, double beta1, double beta2, double eps) {
    for (const auto& [name, e] : store.entries_)
        if (!e.value.has_grad()) throw InputError("adam_step: parameter '" + name + "' has no gradient");
    ++store.step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(store.step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(store.step_));
    for (auto& [name, e] : store.entries_) {
        auto w = e.value.mutable_data();
        const auto g = e.value.grad();
        for (std::size_t i = 0; i < w.size(); ++i) {
            e.m[i] = beta1 * e.m[i] + (1.0 - beta1) * g[i];
            e.v[i] = beta2 * e.v[i] + (1.0 - beta2) * g[i] * g[i];
            const double mh = e.m[i] / bc1;
            const double vh = e.v[i] / bc2;
            w[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

void save_checkpoint(std::ostream& os, const ParamStore& store) {
    os.write("TCK1", 4);
    io::write_u32(os, kCheckpointVersion);
    io::write_u32(os, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, e] : store.entries()) {
        io::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        io::write_u32(os, static_cast<std::uint32_t>(e.value.rank()));
        for (auto d : e.value.shape()) io::write_u64(os, d);
    }
    for (const auto& [_, e] : store.entries())
        for (double v : e.value.data()) io::write_f64(os, v);
}

void load_checkpoint(std::istream& is, ParamStore& store) {
    io::expect_magic(is, "TCK1", "checkpoint");
    const auto version = io::read_u32(is);
    if (version != kCheckpointVersion) throw InputError("checkpoint: unsupported version " + std::to_string(version));
    const auto count = io::read_u32(is);
    if (count != store.size())
        throw InputError("checkpoint: holds " + std::to_string(count) + " tensors, model expects " +
                         std::to_string(store.size()));
    std::vector<std::string> names;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = io::read_u32(is);
        if (len > 4096) throw InputError("checkpoint: implausible name length");
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw InputError("checkpoint: truncated name table");
        Shape shape(io::read_u32(is));
        for (auto& d : shape) d = io::read_u64(is);
        if (!store.contains(name)) throw InputError("checkpoint: unexpected tensor '" + name + "'");
        if (store.get(name).shape() != shape)
            throw InputError("checkpoint: tensor '" + name + "' has shape " + shape_str(shape) + ", model expects " +
                             shape_str(store.get(name).shape()));
        names.push_back(std::move(name));
    }
    for (const auto& name : names) {
        Tensor t = store.get(name);
        for (auto& v : t.mutable_data()) v = io::read_f64(is);
    }
}

} // namespace topogen::ad
