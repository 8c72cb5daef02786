#pragma once

#include "dsa/qsim.hpp"
#include "dsa/tensor.hpp"

namespace dsa {

enum class ModulationVariant { Quantum, Classical };

// Temporal Context block parameters: cross-attention projections, the
// modulation head (quantum circuit or matched classical perceptron), and
// the affine map from circuit readouts back to (gamma, beta).
struct TCParams {
    Tensor query_w, query_b; // d_h×d_h
    Tensor key_w, key_b;     // d_h×d_at
    Tensor value_w, value_b; // d_h×d_at

    Tensor pre_w, pre_b;     // n_q×d_h, squeeze to the circuit width

    ModulationVariant variant = ModulationVariant::Quantum;
    qsim::QuantumConfig qcfg;
    Tensor theta;            // {n_ql, n_q, 3} rotation angles (quantum)

    Tensor mlp_hidden_w, mlp_hidden_b; // n_q×n_q  (classical)
    Tensor mlp_out_w, mlp_out_b;       // n_q×n_q

    Tensor post_w, post_b;   // 2d_h×n_q, expands readouts to [gamma | beta]

    std::size_t hidden_dim() const { return query_w.rows(); }
};

struct AttentionMaps {
    Tensor frame_to_token; // A: L×M, rows sum to 1
    Tensor token_to_frame; // rho: M×L, rows sum to 1
};

struct CrossAttentionOut {
    Tensor attended; // A' = A·V, L×d_h
    AttentionMaps maps;
};

struct Modulation {
    Tensor gamma; // L×d_h
    Tensor beta;  // L×d_h
};

struct TCOut {
    Tensor fused; // X*_f = gamma ⊙ X'_f + beta
    AttentionMaps maps;
};

// Queries from the frame stream, keys/values from the action stream;
// rho reuses the same projections with the roles swapped.
CrossAttentionOut cross_attention(const Tensor& frame_feats,
                                  const Tensor& action_feats,
                                  const TCParams& p);

// Per-timestep modulation head: squeeze the attended embedding to circuit
// width, read out expectations (or the classical perceptron), expand to
// (gamma, beta).
Modulation modulation_params(const Tensor& attended, const TCParams& p);

TCOut tc_forward(const Tensor& frame_feats, const Tensor& action_feats,
                 const TCParams& p);

// Differentiable row-wise circuit evaluation: each row of `angles` drives
// one circuit; backward runs adjoint statevector differentiation.
// angles: L×n_q, theta: {n_ql, n_q, 3} -> L×n_q expectation values.
Tensor quantum_map(const Tensor& angles, const Tensor& theta,
                   const qsim::QuantumConfig& cfg);

} // namespace dsa
