#include "dsa/fusion.hpp"

#include <cmath>
#include <string>

namespace dsa {

Tensor quantum_map(const Tensor& angles, const Tensor& theta,
                   const qsim::QuantumConfig& cfg) {
    cfg.validate();
    const std::size_t nq = cfg.num_qubits;
    const std::size_t rows = angles.rows();
    if (angles.cols() != nq) {
        throw ShapeError("quantum_map: angles " + shape_str(angles.shape()) +
                         " do not match " + std::to_string(nq) + " qubits");
    }
    if (theta.size() != cfg.weight_count()) {
        throw ShapeError("quantum_map: weights " + shape_str(theta.shape()) +
                         " do not match circuit with " +
                         std::to_string(cfg.weight_count()) + " parameters");
    }
    const qsim::QuantumWeights w =
        qsim::QuantumWeights::from_flat(cfg, theta.values());

    std::vector<double> out(rows * nq);
    const double* av = angles.values().data();
    for (std::size_t t = 0; t < rows; ++t) {
        const std::vector<double> z =
            qsim::qactgm_circuit({av + t * nq, nq}, w, cfg);
        std::copy(z.begin(), z.end(), out.begin() + t * nq);
    }

    return detail::make_op(
        {rows, nq}, std::move(out), {angles, theta},
        [rows, nq, cfg](detail::Node& self) {
            detail::Node* pa = self.parents[0].get();
            detail::Node* pt = self.parents[1].get();
            const qsim::QuantumWeights w = qsim::QuantumWeights::from_flat(
                cfg, {pt->value.data(), pt->value.size()});
            const std::size_t np = cfg.weight_count();
            for (std::size_t t = 0; t < rows; ++t) {
                const qsim::CircuitGradients g = qsim::circuit_gradients(
                    {pa->value.data() + t * nq, nq}, w, cfg);
                const double* gz = self.grad.data() + t * nq;
                if (pa->requires_grad) {
                    for (std::size_t j = 0; j < nq; ++j) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < nq; ++i)
                            acc += gz[i] * g.input(i, j);
                        pa->grad[t * nq + j] += acc;
                    }
                }
                if (pt->requires_grad) {
                    for (std::size_t p = 0; p < np; ++p) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < nq; ++i)
                            acc += gz[i] * g.weight(i, p);
                        pt->grad[p] += acc;
                    }
                }
            }
        },
        "quantum_map");
}

CrossAttentionOut cross_attention(const Tensor& frame_feats,
                                  const Tensor& action_feats,
                                  const TCParams& p) {
    if (action_feats.rows() == 0) {
        throw ContractError("cross_attention: no action tokens");
    }
    const std::size_t d_h = p.hidden_dim();
    Tensor q = linear(frame_feats, p.query_w, p.query_b); // L×d_h
    Tensor k = linear(action_feats, p.key_w, p.key_b);    // M×d_h
    Tensor v = linear(action_feats, p.value_w, p.value_b);// M×d_h
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d_h));

    CrossAttentionOut out;
    out.maps.frame_to_token =
        softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_d));
    out.attended = attend(out.maps.frame_to_token, v);
    out.maps.token_to_frame =
        softmax_rows(scale(matmul(k, transpose(q)), inv_sqrt_d));
    return out;
}

Modulation modulation_params(const Tensor& attended, const TCParams& p) {
    Tensor squeezed = linear(attended, p.pre_w, p.pre_b); // L×n_q
    Tensor readout;
    if (p.variant == ModulationVariant::Quantum) {
        readout = quantum_map(squeezed, p.theta, p.qcfg);
    } else {
        Tensor hidden = activation(
            linear(squeezed, p.mlp_hidden_w, p.mlp_hidden_b), Activation::Tanh);
        readout = linear(hidden, p.mlp_out_w, p.mlp_out_b);
    }
    Tensor both = linear(readout, p.post_w, p.post_b); // L×2d_h
    const std::size_t d_h = p.hidden_dim();
    Modulation m;
    m.gamma = slice_cols(both, 0, d_h);
    m.beta = slice_cols(both, d_h, 2 * d_h);
    return m;
}

TCOut tc_forward(const Tensor& frame_feats, const Tensor& action_feats,
                 const TCParams& p) {
    CrossAttentionOut attn = cross_attention(frame_feats, action_feats, p);
    Modulation m = modulation_params(attn.attended, p);
    TCOut out;
    out.fused = add(mul(m.gamma, frame_feats), m.beta);
    out.maps = attn.maps;
    return out;
}

} // namespace dsa
