#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dsa/error.hpp"

namespace dsa {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

enum class Activation { Tanh, Gelu, Sigmoid, Relu };

class Tensor;

namespace detail {

// One recorded value in the computation graph. Creation order (seq) is a
// topological order of the graph, so the backward pass replays nodes by
// descending seq. A node and everything hanging off it belong to a single
// thread of execution; independent graphs may live on different threads.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // sized lazily by backward()
    bool requires_grad = false;
    std::uint64_t seq = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop; // empty on leaves

    std::size_t size() const { return value.size(); }
};

// Factory shared by all differentiable operations (including module-local
// ones such as the quantum layer in fusion). Validates finiteness of the
// produced values and wires requires_grad from the parents.
Tensor make_op(Shape shape, std::vector<double> values,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backprop, const char* op_name);

} // namespace detail

// Handle to a graph node. Copies share the underlying buffer; values are
// immutable once created except through values_mut() on leaves (parameter
// updates between passes) and the grad buffer written by backward().
class Tensor {
  public:
    Tensor() = default;

    static Tensor from(Shape shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t size() const;
    std::size_t rows() const; // rank-2 tensors
    std::size_t cols() const;
    bool requires_grad() const;

    std::span<const double> values() const;
    /// Mutable access to a leaf's values. Throws on non-leaf nodes.
    std::span<double> values_mut();
    /// Gradient buffer populated by the latest backward(); empty otherwise.
    std::span<const double> grad() const;
    /// Mutable gradient access for optimizers (scaling, clipping).
    std::span<double> grad_mut();

    double item() const; // single-element tensors
    double at(std::size_t i, std::size_t j) const;

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

  private:
    std::shared_ptr<detail::Node> node_;

    friend Tensor detail::make_op(Shape, std::vector<double>,
                                  std::vector<Tensor>,
                                  std::function<void(detail::Node&)>,
                                  const char*);
    friend void backward(const Tensor&);
};

// --- elementwise and linear-algebra operations ---

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b); // elementwise
Tensor scale(const Tensor& x, double c);
Tensor add_const(const Tensor& x, double c);
Tensor add_row_bias(const Tensor& x, const Tensor& bias); // bias over rows
Tensor add_col_bias(const Tensor& x, const Tensor& bias); // bias over columns
Tensor activation(const Tensor& x, Activation kind);
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
Tensor sum_all(const Tensor& x);                     // -> {1}
Tensor frobenius_norm(const Tensor& x);              // -> {1}
Tensor row_norms(const Tensor& x);                   // m×n -> m×1
Tensor reciprocal(const Tensor& x);
Tensor mul_scalar(const Tensor& x, const Tensor& s); // s is {1}
Tensor scale_rows(const Tensor& x, const Tensor& s); // s is m×1
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);

// Token-axis contraction used by cross-attention: out = weights · values with
// the reduction accumulated in value-sorted order, so that a consistent
// permutation of the token rows reproduces bit-identical output.
Tensor attend(const Tensor& weights, const Tensor& values);

// 1-D convolution over the row (time) axis with symmetric zero padding.
// x: T×C_in, w: C_out×C_in×K (K odd), bias: C_out.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t dilation);

// Block boundaries of the b-th of m contiguous near-equal blocks over [0, n).
std::pair<std::size_t, std::size_t> block_bounds(std::size_t n, std::size_t m,
                                                 std::size_t b);

// 2-D block average pooling of an n×n matrix onto m×m using block_bounds.
Tensor block_mean_pool(const Tensor& x, std::size_t m);

// Mean negative log-likelihood of per-row log-probabilities at the labels.
Tensor nll_rows(const Tensor& log_probs, const std::vector<int>& labels);

// x·Wᵀ + bias with W stored out×in.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

// --- reverse-mode differentiation ---

// Populates grad for every requires_grad tensor reachable from loss.
// Grads are freshly written on each call; two calls on the same graph
// produce bit-identical results.
void backward(const Tensor& loss);

// Max over all parameter entries of the relative disagreement between the
// analytic gradient of f() and a central finite difference with the given
// step: |analytic − fd| / max(1, |analytic|, |fd|).
double grad_check(const std::function<Tensor()>& f,
                  const std::vector<Tensor>& params, double step);

} // namespace dsa
