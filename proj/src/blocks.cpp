#include "dsa/blocks.hpp"

#include <cmath>
#include <string>

namespace dsa {

Tensor te_forward(const Tensor& x, const TEParams& p) {
    if (x.cols() != p.in_dim()) {
        throw ShapeError("te_forward: input " + shape_str(x.shape()) +
                         " does not match projection " +
                         shape_str(p.proj_w.shape()));
    }
    // L×d_e expanded features, then the state path runs feature-major
    Tensor expanded = linear(x, p.proj_w, p.proj_b);
    Tensor state =
        activation(matmul(p.state_w, transpose(expanded)), Activation::Tanh);
    Tensor mixed = activation(
        add_col_bias(matmul(p.mix_w, state), p.mix_b), Activation::Gelu);
    Tensor gate =
        activation(linear(x, p.gate_w, p.gate_b), Activation::Sigmoid);
    Tensor gated = mul(transpose(mixed), gate);
    return linear(gated, p.out_w, p.out_b);
}

Tensor ge_forward(const Tensor& x, const GEParams& p) {
    Tensor h = linear(x, p.in_w, p.in_b);
    std::size_t dilation = 1;
    for (const GEParams::Layer& layer : p.layers) {
        Tensor branch = activation(
            conv1d(h, layer.conv_w, layer.conv_b, dilation), Activation::Relu);
        h = add(h, linear(branch, layer.pw_w, layer.pw_b));
        dilation *= 2;
    }
    return h;
}

Tensor positional_encoding(std::size_t len, std::size_t dim) {
    if (len < 1) throw ContractError("positional_encoding: length must be >= 1");
    if (dim < 2 || dim % 2 != 0) {
        throw ContractError("positional_encoding: dimension must be even and "
                            ">= 2, got " +
                            std::to_string(dim));
    }
    std::vector<double> table(len * dim);
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t k = 0; 2 * k < dim; ++k) {
            const double divisor =
                std::pow(10000.0, (2.0 * static_cast<double>(k)) /
                                      static_cast<double>(dim));
            const double arg = static_cast<double>(t) / divisor;
            table[t * dim + 2 * k] = std::sin(arg);
            table[t * dim + 2 * k + 1] = std::cos(arg);
        }
    }
    return Tensor::from({len, dim}, std::move(table));
}

} // namespace dsa
