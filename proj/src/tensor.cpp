#include "dsa/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace dsa {

namespace {

std::atomic<std::uint64_t> g_next_seq{1};

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

void require_finite(const std::vector<double>& v, const char* where) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string("non-finite value produced by ") +
                               where);
        }
    }
}

void require_rank2(const Tensor& t, const char* who) {
    if (t.shape().size() != 2) {
        throw ShapeError(std::string(who) + ": expected a rank-2 tensor, got " +
                         shape_str(t.shape()));
    }
}

// c += a·b, a: m×k, b: k×n
void mm(const double* a, const double* b, double* c, std::size_t m,
        std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// c += aᵀ·b, a: m×k, b: m×n, c: k×n
void mm_at_b(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
        }
    }
}

// c += a·bᵀ, a: m×n, b: k×n, c: m×k
void mm_a_bt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        double* ci = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += ai[j] * bp[j];
            ci[p] += dot;
        }
    }
}

// Permutation-invariant accumulation: equal multisets of addends produce
// bit-identical sums regardless of their original order.
double sorted_sum(std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    double s = 0.0;
    for (double v : buf) s += v;
    return s;
}

double gauss_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gauss_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ')';
    return os.str();
}

// --- Tensor handle ---

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
    if (shape.empty()) throw ShapeError("tensor shape must be non-empty");
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    }
    require_finite(values, "tensor construction");
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(values);
    t.node_->requires_grad = requires_grad;
    t.node_->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
    return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    std::vector<double> values(shape_numel(shape), v);
    return from(std::move(shape), std::move(values), requires_grad);
}

const Shape& Tensor::shape() const {
    if (!node_) throw ContractError("use of an undefined tensor");
    return node_->shape;
}

std::size_t Tensor::size() const { return shape().empty() ? 0 : node_->size(); }

std::size_t Tensor::rows() const {
    require_rank2(*this, "rows()");
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    require_rank2(*this, "cols()");
    return node_->shape[1];
}

bool Tensor::requires_grad() const {
    return node_ != nullptr && node_->requires_grad;
}

std::span<const double> Tensor::values() const {
    if (!node_) throw ContractError("use of an undefined tensor");
    return {node_->value.data(), node_->value.size()};
}

std::span<double> Tensor::values_mut() {
    if (!node_) throw ContractError("use of an undefined tensor");
    if (node_->backprop) {
        throw ContractError("values_mut() is only valid on leaf tensors");
    }
    return {node_->value.data(), node_->value.size()};
}

std::span<const double> Tensor::grad() const {
    if (!node_) throw ContractError("use of an undefined tensor");
    return {node_->grad.data(), node_->grad.size()};
}

std::span<double> Tensor::grad_mut() {
    if (!node_) throw ContractError("use of an undefined tensor");
    return {node_->grad.data(), node_->grad.size()};
}

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("item() requires a single-element tensor, got " +
                            shape_str(shape()));
    }
    return node_->value[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    require_rank2(*this, "at()");
    return node_->value[i * node_->shape[1] + j];
}

namespace detail {

Tensor make_op(Shape shape, std::vector<double> values,
               std::vector<Tensor> parents, std::function<void(Node&)> backprop,
               const char* op_name) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError(std::string(op_name) + ": produced " +
                         std::to_string(values.size()) +
                         " values for shape " + shape_str(shape));
    }
    require_finite(values, op_name);
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(values);
    for (const Tensor& p : parents) {
        if (!p.defined()) {
            throw ContractError(std::string(op_name) +
                                ": undefined input tensor");
        }
        t.node_->requires_grad =
            t.node_->requires_grad || p.requires_grad();
        t.node_->parents.push_back(p.node_);
    }
    if (t.node_->requires_grad) t.node_->backprop = std::move(backprop);
    t.node_->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
    return t;
}

} // namespace detail

using detail::Node;

// --- operations ---

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner dimensions disagree: " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    mm(a.values().data(), b.values().data(), out.data(), m, k, n);
    return detail::make_op(
        {m, n}, std::move(out), {a, b},
        [m, k, n](Node& self) {
            Node* pa = self.parents[0].get();
            Node* pb = self.parents[1].get();
            if (pa->requires_grad) {
                mm_a_bt(self.grad.data(), pb->value.data(), pa->grad.data(), m,
                        n, k);
            }
            if (pb->requires_grad) {
                mm_at_b(pa->value.data(), self.grad.data(), pb->grad.data(), m,
                        k, n);
            }
        },
        "matmul");
}

Tensor attend(const Tensor& weights, const Tensor& values) {
    require_rank2(weights, "attend");
    require_rank2(values, "attend");
    const std::size_t l = weights.rows(), m = weights.cols(),
                      d = values.cols();
    if (values.rows() != m) {
        throw ShapeError("attend: inner dimensions disagree: " +
                         shape_str(weights.shape()) + " vs " +
                         shape_str(values.shape()));
    }
    std::vector<double> out(l * d, 0.0);
    const double* w = weights.values().data();
    const double* v = values.values().data();
    std::vector<double> terms(m);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t p = 0; p < m; ++p) terms[p] = w[i * m + p] * v[p * d + j];
            out[i * d + j] = sorted_sum(terms);
        }
    }
    return detail::make_op(
        {l, d}, std::move(out), {weights, values},
        [l, m, d](Node& self) {
            Node* pw = self.parents[0].get();
            Node* pv = self.parents[1].get();
            if (pw->requires_grad) {
                mm_a_bt(self.grad.data(), pv->value.data(), pw->grad.data(), l,
                        d, m);
            }
            if (pv->requires_grad) {
                mm_at_b(pw->value.data(), self.grad.data(), pv->grad.data(), l,
                        m, d);
            }
        },
        "attend");
}

Tensor transpose(const Tensor& x) {
    require_rank2(x, "transpose");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    const double* v = x.values().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = v[i * n + j];
    return detail::make_op(
        {n, m}, std::move(out), {x},
        [m, n](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    p->grad[i * n + j] += self.grad[j * m + i];
        },
        "transpose");
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(who) + ": shapes disagree: " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return detail::make_op(
        a.shape(), std::move(out), {a, b},
        [](Node& self) {
            for (int s = 0; s < 2; ++s) {
                Node* p = self.parents[s].get();
                if (!p->requires_grad) continue;
                for (std::size_t i = 0; i < self.size(); ++i)
                    p->grad[i] += self.grad[i];
            }
        },
        "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return detail::make_op(
        a.shape(), std::move(out), {a, b},
        [](Node& self) {
            Node* pa = self.parents[0].get();
            Node* pb = self.parents[1].get();
            for (std::size_t i = 0; i < self.size(); ++i) {
                if (pa->requires_grad) pa->grad[i] += self.grad[i];
                if (pb->requires_grad) pb->grad[i] -= self.grad[i];
            }
        },
        "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return detail::make_op(
        a.shape(), std::move(out), {a, b},
        [](Node& self) {
            Node* pa = self.parents[0].get();
            Node* pb = self.parents[1].get();
            for (std::size_t i = 0; i < self.size(); ++i) {
                if (pa->requires_grad)
                    pa->grad[i] += pb->value[i] * self.grad[i];
                if (pb->requires_grad)
                    pb->grad[i] += pa->value[i] * self.grad[i];
            }
        },
        "mul");
}

Tensor scale(const Tensor& x, double c) {
    std::vector<double> out(x.size());
    const auto v = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] * c;
    return detail::make_op(
        x.shape(), std::move(out), {x},
        [c](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < self.size(); ++i)
                p->grad[i] += c * self.grad[i];
        },
        "scale");
}

Tensor add_const(const Tensor& x, double c) {
    std::vector<double> out(x.size());
    const auto v = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] + c;
    return detail::make_op(
        x.shape(), std::move(out), {x},
        [](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < self.size(); ++i)
                p->grad[i] += self.grad[i];
        },
        "add_const");
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
    require_rank2(x, "add_row_bias");
    const std::size_t m = x.rows(), n = x.cols();
    if (bias.size() != n) {
        throw ShapeError("add_row_bias: bias " + shape_str(bias.shape()) +
                         " does not match row width of " +
                         shape_str(x.shape()));
    }
    std::vector<double> out(m * n);
    const auto xv = x.values(), bv = bias.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[j];
    return detail::make_op(
        {m, n}, std::move(out), {x, bias},
        [m, n](Node& self) {
            Node* px = self.parents[0].get();
            Node* pb = self.parents[1].get();
            if (px->requires_grad) {
                for (std::size_t i = 0; i < m * n; ++i)
                    px->grad[i] += self.grad[i];
            }
            if (pb->requires_grad) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        pb->grad[j] += self.grad[i * n + j];
            }
        },
        "add_row_bias");
}

Tensor add_col_bias(const Tensor& x, const Tensor& bias) {
    require_rank2(x, "add_col_bias");
    const std::size_t m = x.rows(), n = x.cols();
    if (bias.size() != m) {
        throw ShapeError("add_col_bias: bias " + shape_str(bias.shape()) +
                         " does not match column height of " +
                         shape_str(x.shape()));
    }
    std::vector<double> out(m * n);
    const auto xv = x.values(), bv = bias.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[i];
    return detail::make_op(
        {m, n}, std::move(out), {x, bias},
        [m, n](Node& self) {
            Node* px = self.parents[0].get();
            Node* pb = self.parents[1].get();
            if (px->requires_grad) {
                for (std::size_t i = 0; i < m * n; ++i)
                    px->grad[i] += self.grad[i];
            }
            if (pb->requires_grad) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        pb->grad[i] += self.grad[i * n + j];
            }
        },
        "add_col_bias");
}

Tensor activation(const Tensor& x, Activation kind) {
    std::vector<double> out(x.size());
    const auto v = x.values();
    switch (kind) {
        case Activation::Tanh:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(v[i]);
            break;
        case Activation::Gelu:
            // exact Gaussian-CDF form: x·Φ(x)
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = v[i] * gauss_cdf(v[i]);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = stable_sigmoid(v[i]);
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = v[i] > 0.0 ? v[i] : 0.0;
            break;
    }
    return detail::make_op(
        x.shape(), std::move(out), {x},
        [kind](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < self.size(); ++i) {
                const double xi = p->value[i];
                double d = 0.0;
                switch (kind) {
                    case Activation::Tanh: {
                        const double y = self.value[i];
                        d = 1.0 - y * y;
                        break;
                    }
                    case Activation::Gelu:
                        d = gauss_cdf(xi) + xi * gauss_pdf(xi);
                        break;
                    case Activation::Sigmoid: {
                        const double y = self.value[i];
                        d = y * (1.0 - y);
                        break;
                    }
                    case Activation::Relu:
                        d = xi > 0.0 ? 1.0 : 0.0;
                        break;
                }
                p->grad[i] += d * self.grad[i];
            }
        },
        "activation");
}

namespace {

// Shared softmax kernel. The normalizer is accumulated in value-sorted order
// so the result is invariant to permutations of the row entries.
void softmax_row(const double* x, double* out, std::size_t n,
                 std::vector<double>& scratch, bool log_form) {
    double mx = x[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    scratch.resize(n);
    for (std::size_t j = 0; j < n; ++j) scratch[j] = std::exp(x[j] - mx);
    std::vector<double> terms(scratch);
    const double denom = sorted_sum(terms);
    if (log_form) {
        const double log_denom = std::log(denom);
        for (std::size_t j = 0; j < n; ++j) out[j] = x[j] - mx - log_denom;
    } else {
        for (std::size_t j = 0; j < n; ++j) out[j] = scratch[j] / denom;
    }
}

} // namespace

Tensor softmax_rows(const Tensor& x) {
    require_rank2(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    if (n < 1) throw ContractError("softmax_rows: empty rows");
    std::vector<double> out(m * n);
    const double* v = x.values().data();
    std::vector<double> scratch;
    for (std::size_t i = 0; i < m; ++i)
        softmax_row(v + i * n, out.data() + i * n, n, scratch, false);
    return detail::make_op(
        {m, n}, std::move(out), {x},
        [m, n](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < m; ++i) {
                const double* y = self.value.data() + i * n;
                const double* dy = self.grad.data() + i * n;
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
                double* dx = p->grad.data() + i * n;
                for (std::size_t j = 0; j < n; ++j)
                    dx[j] += y[j] * (dy[j] - dot);
            }
        },
        "softmax_rows");
}

Tensor log_softmax_rows(const Tensor& x) {
    require_rank2(x, "log_softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    if (n < 1) throw ContractError("log_softmax_rows: empty rows");
    std::vector<double> out(m * n);
    const double* v = x.values().data();
    std::vector<double> scratch;
    for (std::size_t i = 0; i < m; ++i)
        softmax_row(v + i * n, out.data() + i * n, n, scratch, true);
    return detail::make_op(
        {m, n}, std::move(out), {x},
        [m, n](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < m; ++i) {
                const double* y = self.value.data() + i * n;
                const double* dy = self.grad.data() + i * n;
                double total = 0.0;
                for (std::size_t j = 0; j < n; ++j) total += dy[j];
                double* dx = p->grad.data() + i * n;
                for (std::size_t j = 0; j < n; ++j)
                    dx[j] += dy[j] - std::exp(y[j]) * total;
            }
        },
        "log_softmax_rows");
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    return detail::make_op(
        {1}, {s}, {x},
        [](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            const double g = self.grad[0];
            for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += g;
        },
        "sum_all");
}

Tensor frobenius_norm(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    const double norm = std::sqrt(s);
    return detail::make_op(
        {1}, {norm}, {x},
        [](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            const double n = std::max(self.value[0], 1e-300);
            const double g = self.grad[0];
            for (std::size_t i = 0; i < p->grad.size(); ++i)
                p->grad[i] += g * p->value[i] / n;
        },
        "frobenius_norm");
}

Tensor row_norms(const Tensor& x) {
    require_rank2(x, "row_norms");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m);
    const double* v = x.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += v[i * n + j] * v[i * n + j];
        out[i] = std::sqrt(s);
    }
    return detail::make_op(
        {m, 1}, std::move(out), {x},
        [m, n](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < m; ++i) {
                const double norm = std::max(self.value[i], 1e-300);
                const double g = self.grad[i];
                for (std::size_t j = 0; j < n; ++j)
                    p->grad[i * n + j] += g * p->value[i * n + j] / norm;
            }
        },
        "row_norms");
}

Tensor reciprocal(const Tensor& x) {
    std::vector<double> out(x.size());
    const auto v = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / v[i];
    return detail::make_op(
        x.shape(), std::move(out), {x},
        [](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < self.size(); ++i) {
                const double y = self.value[i];
                p->grad[i] -= y * y * self.grad[i];
            }
        },
        "reciprocal");
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
    if (s.size() != 1) {
        throw ShapeError("mul_scalar: scalar operand has shape " +
                         shape_str(s.shape()));
    }
    const double sv = s.values()[0];
    std::vector<double> out(x.size());
    const auto v = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] * sv;
    return detail::make_op(
        x.shape(), std::move(out), {x, s},
        [](Node& self) {
            Node* px = self.parents[0].get();
            Node* ps = self.parents[1].get();
            const double sv = ps->value[0];
            if (px->requires_grad) {
                for (std::size_t i = 0; i < self.size(); ++i)
                    px->grad[i] += sv * self.grad[i];
            }
            if (ps->requires_grad) {
                double acc = 0.0;
                for (std::size_t i = 0; i < self.size(); ++i)
                    acc += px->value[i] * self.grad[i];
                ps->grad[0] += acc;
            }
        },
        "mul_scalar");
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
    require_rank2(x, "scale_rows");
    const std::size_t m = x.rows(), n = x.cols();
    if (s.size() != m) {
        throw ShapeError("scale_rows: scale " + shape_str(s.shape()) +
                         " does not match rows of " + shape_str(x.shape()));
    }
    std::vector<double> out(m * n);
    const auto xv = x.values(), sv = s.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] * sv[i];
    return detail::make_op(
        {m, n}, std::move(out), {x, s},
        [m, n](Node& self) {
            Node* px = self.parents[0].get();
            Node* ps = self.parents[1].get();
            for (std::size_t i = 0; i < m; ++i) {
                const double sv = ps->value[i];
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (px->requires_grad)
                        px->grad[i * n + j] += sv * self.grad[i * n + j];
                    acc += px->value[i * n + j] * self.grad[i * n + j];
                }
                if (ps->requires_grad) ps->grad[i] += acc;
            }
        },
        "scale_rows");
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    require_rank2(x, "slice_cols");
    const std::size_t m = x.rows(), n = x.cols();
    if (c0 >= c1 || c1 > n) {
        throw ContractError("slice_cols: invalid column range [" +
                            std::to_string(c0) + ", " + std::to_string(c1) +
                            ") for " + shape_str(x.shape()));
    }
    const std::size_t w = c1 - c0;
    std::vector<double> out(m * w);
    const double* v = x.values().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = v[i * n + c0 + j];
    return detail::make_op(
        {m, w}, std::move(out), {x},
        [m, n, c0, w](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < w; ++j)
                    p->grad[i * n + c0 + j] += self.grad[i * w + j];
        },
        "slice_cols");
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t dilation) {
    require_rank2(x, "conv1d");
    if (w.shape().size() != 3) {
        throw ShapeError("conv1d: kernel must be rank-3, got " +
                         shape_str(w.shape()));
    }
    const std::size_t t_len = x.rows(), c_in = x.cols();
    const std::size_t c_out = w.shape()[0], k = w.shape()[2];
    if (w.shape()[1] != c_in) {
        throw ShapeError("conv1d: kernel " + shape_str(w.shape()) +
                         " does not match input " + shape_str(x.shape()));
    }
    if (k % 2 == 0) throw ContractError("conv1d: kernel width must be odd");
    if (bias.size() != c_out) {
        throw ShapeError("conv1d: bias " + shape_str(bias.shape()) +
                         " does not match kernel " + shape_str(w.shape()));
    }
    if (dilation == 0) throw ContractError("conv1d: dilation must be >= 1");
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
    const std::ptrdiff_t dil = static_cast<std::ptrdiff_t>(dilation);
    const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(t_len);

    std::vector<double> out(t_len * c_out);
    const double* xv = x.values().data();
    const double* wv = w.values().data();
    const double* bv = bias.values().data();
    for (std::ptrdiff_t t = 0; t < len; ++t) {
        for (std::size_t o = 0; o < c_out; ++o) {
            double acc = bv[o];
            for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(k); ++kk) {
                const std::ptrdiff_t s = t + (kk - half) * dil;
                if (s < 0 || s >= len) continue;
                const double* xr = xv + s * c_in;
                const double* wr = wv + (o * c_in) * k + kk;
                for (std::size_t i = 0; i < c_in; ++i)
                    acc += wr[i * k] * xr[i];
            }
            out[t * c_out + o] = acc;
        }
    }
    return detail::make_op(
        {t_len, c_out}, std::move(out), {x, w, bias},
        [t_len, c_in, c_out, k, half, dil, len](Node& self) {
            Node* px = self.parents[0].get();
            Node* pw = self.parents[1].get();
            Node* pb = self.parents[2].get();
            for (std::ptrdiff_t t = 0; t < len; ++t) {
                for (std::size_t o = 0; o < c_out; ++o) {
                    const double g = self.grad[t * c_out + o];
                    if (g == 0.0) continue;
                    if (pb->requires_grad) pb->grad[o] += g;
                    for (std::ptrdiff_t kk = 0;
                         kk < static_cast<std::ptrdiff_t>(k); ++kk) {
                        const std::ptrdiff_t s = t + (kk - half) * dil;
                        if (s < 0 || s >= len) continue;
                        for (std::size_t i = 0; i < c_in; ++i) {
                            const std::size_t widx = (o * c_in + i) * k + kk;
                            if (px->requires_grad)
                                px->grad[s * c_in + i] += pw->value[widx] * g;
                            if (pw->requires_grad)
                                pw->grad[widx] += px->value[s * c_in + i] * g;
                        }
                    }
                }
            }
            (void)t_len;
        },
        "conv1d");
}

std::pair<std::size_t, std::size_t> block_bounds(std::size_t n, std::size_t m,
                                                 std::size_t b) {
    if (m == 0 || m > n) {
        throw ContractError("block_bounds: cannot split " + std::to_string(n) +
                            " items into " + std::to_string(m) + " blocks");
    }
    if (b >= m) throw ContractError("block_bounds: block index out of range");
    return {b * n / m, (b + 1) * n / m};
}

Tensor block_mean_pool(const Tensor& x, std::size_t m) {
    require_rank2(x, "block_mean_pool");
    const std::size_t n = x.rows();
    if (x.cols() != n) {
        throw ShapeError("block_mean_pool: expected a square matrix, got " +
                         shape_str(x.shape()));
    }
    if (m > n) {
        throw ContractError("block_mean_pool: " + std::to_string(m) +
                            " blocks exceed matrix side " + std::to_string(n));
    }
    std::vector<double> out(m * m);
    const double* v = x.values().data();
    for (std::size_t p = 0; p < m; ++p) {
        const auto [r0, r1] = block_bounds(n, m, p);
        for (std::size_t q = 0; q < m; ++q) {
            const auto [c0, c1] = block_bounds(n, m, q);
            double acc = 0.0;
            for (std::size_t i = r0; i < r1; ++i)
                for (std::size_t j = c0; j < c1; ++j) acc += v[i * n + j];
            out[p * m + q] = acc / static_cast<double>((r1 - r0) * (c1 - c0));
        }
    }
    return detail::make_op(
        {m, m}, std::move(out), {x},
        [n, m](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            for (std::size_t bp = 0; bp < m; ++bp) {
                const auto [r0, r1] = block_bounds(n, m, bp);
                for (std::size_t bq = 0; bq < m; ++bq) {
                    const auto [c0, c1] = block_bounds(n, m, bq);
                    const double g = self.grad[bp * m + bq] /
                                     static_cast<double>((r1 - r0) * (c1 - c0));
                    for (std::size_t i = r0; i < r1; ++i)
                        for (std::size_t j = c0; j < c1; ++j)
                            p->grad[i * n + j] += g;
                }
            }
        },
        "block_mean_pool");
}

Tensor nll_rows(const Tensor& log_probs, const std::vector<int>& labels) {
    require_rank2(log_probs, "nll_rows");
    const std::size_t m = log_probs.rows(), c = log_probs.cols();
    if (labels.size() != m) {
        throw ShapeError("nll_rows: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(m) + " rows");
    }
    const double* v = log_probs.values().data();
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw ContractError("nll_rows: label " + std::to_string(y) +
                                " out of range [0, " + std::to_string(c) +
                                ") at row " + std::to_string(i));
        }
        acc -= v[i * c + y];
    }
    acc /= static_cast<double>(m);
    return detail::make_op(
        {1}, {acc}, {log_probs},
        [m, c, labels](Node& self) {
            Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            const double g = self.grad[0] / static_cast<double>(m);
            for (std::size_t i = 0; i < m; ++i)
                p->grad[i * c + labels[i]] -= g;
        },
        "nll_rows");
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    Tensor y = matmul(x, transpose(w));
    if (bias.defined()) y = add_row_bias(y, bias);
    return y;
}

// --- backward pass ---

namespace {

// The recorded operation list reachable from a scalar output, held in
// topological (creation) order.
struct Tape {
    std::vector<Node*> ops;

    static Tape trace(Node* root) {
        Tape tape;
        std::unordered_set<Node*> seen;
        std::vector<Node*> stack{root};
        seen.insert(root);
        while (!stack.empty()) {
            Node* n = stack.back();
            stack.pop_back();
            tape.ops.push_back(n);
            for (const auto& p : n->parents) {
                if (seen.insert(p.get()).second) stack.push_back(p.get());
            }
        }
        std::sort(tape.ops.begin(), tape.ops.end(),
                  [](const Node* a, const Node* b) { return a->seq > b->seq; });
        return tape;
    }
};

} // namespace

void backward(const Tensor& loss) {
    if (!loss.defined()) throw ContractError("backward: undefined tensor");
    if (loss.size() != 1) {
        throw ContractError("backward: loss must be a scalar, got " +
                            shape_str(loss.shape()));
    }
    Node* root = loss.node_.get();
    Tape tape = Tape::trace(root);
    for (Node* n : tape.ops) {
        if (n->requires_grad) n->grad.assign(n->size(), 0.0);
    }
    if (!root->requires_grad) return; // nothing reachable needs gradients
    root->grad[0] = 1.0;
    for (Node* n : tape.ops) {
        if (n->backprop && n->requires_grad) n->backprop(*n);
    }
}

double grad_check(const std::function<Tensor()>& f,
                  const std::vector<Tensor>& params, double step) {
    if (step <= 0.0) throw ContractError("grad_check: step must be positive");
    Tensor loss = f();
    if (loss.size() != 1) {
        throw ContractError("grad_check: f must return a scalar");
    }
    backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const Tensor& p : params) {
        if (!p.requires_grad()) {
            throw ContractError("grad_check: parameter does not require grad");
        }
        analytic.emplace_back(p.grad().begin(), p.grad().end());
    }

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        auto vals = p.values_mut();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            double fp = 0.0, fm = 0.0;
            try {
                vals[i] = saved + step;
                fp = f().item();
                vals[i] = saved - step;
                fm = f().item();
            } catch (const NumericError& e) {
                vals[i] = saved;
                throw NumericError("grad_check: non-finite value while probing "
                                   "parameter #" +
                                   std::to_string(pi) + " entry " +
                                   std::to_string(i) + ": " + e.what());
            }
            vals[i] = saved;
            const double fd = (fp - fm) / (2.0 * step);
            const double a = analytic[pi][i];
            const double denom =
                std::max({1.0, std::fabs(a), std::fabs(fd)});
            worst = std::max(worst, std::fabs(a - fd) / denom);
        }
    }
    return worst;
}

} // namespace dsa
