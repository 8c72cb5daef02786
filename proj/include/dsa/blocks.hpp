#pragma once

#include <cstddef>
#include <vector>

#include "dsa/tensor.hpp"

namespace dsa {

// Gated state-space temporal encoder. One instance compresses the raw frame
// features at the input; the instances inside the TSA blocks keep the hidden
// width. Weights are stored out×in and applied per frame.
struct TEParams {
    Tensor proj_w, proj_b;   // expand to d_e
    Tensor state_w;          // d_s×d_e, acts on the feature axis
    Tensor mix_w;            // d_s×d_s
    Tensor mix_b;            // d_s, broadcast over frames
    Tensor gate_w, gate_b;   // d_s×d_in
    Tensor out_w, out_b;     // d_out×d_s

    std::size_t in_dim() const { return proj_w.cols(); }
    std::size_t out_dim() const { return out_w.rows(); }
};

// Single-stage dilated-residual temporal convolution stack for the action
// token stream. Dilation doubles per layer; lengths are preserved.
struct GEParams {
    struct Layer {
        Tensor conv_w, conv_b; // d×d×3 dilated convolution
        Tensor pw_w, pw_b;     // d×d pointwise
    };
    Tensor in_w, in_b; // input projection to the stream width
    std::vector<Layer> layers;

    std::size_t out_dim() const { return in_w.rows(); }
};

// X'_f = W_out · ((tanh/GELU state path)ᵀ ⊙ sigmoid gate) + b_out, per
// the gated state-space formulation. Length-preserving: L×d_in -> L×d_out.
Tensor te_forward(const Tensor& x, const TEParams& p);

// Dilated-residual stack: projection, then per layer
// h += pointwise(relu(dilated_conv(h))). Length-preserving: M -> M.
Tensor ge_forward(const Tensor& x, const GEParams& p);

// Sinusoidal table: PE(t, 2k) = sin(t/10000^{2k/dim}), PE(t, 2k+1) = cos(·).
// Constant (no gradient). dim must be even.
Tensor positional_encoding(std::size_t len, std::size_t dim);

} // namespace dsa
