#include "dsa/qsim.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dsa::qsim {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

enum class GateKind { Ry, Rz, Rx, Cnot };

struct Gate {
    GateKind kind;
    std::size_t q0;      // rotation target / cnot control
    std::size_t q1 = 0;  // cnot target
    int param = -1;      // index into [inputs | weights]; -1 for cnot
};

// Parameter layout: [x_0..x_{n_q-1}, theta(flat row-major)].
std::vector<Gate> build_gates(const QuantumConfig& cfg) {
    std::vector<Gate> gates;
    const std::size_t nq = cfg.num_qubits;
    for (std::size_t q = 0; q < nq; ++q) {
        gates.push_back({GateKind::Ry, q, 0, static_cast<int>(q)});
    }
    int p = static_cast<int>(nq);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        for (std::size_t q = 0; q < nq; ++q) {
            gates.push_back({GateKind::Ry, q, 0, p++});
            gates.push_back({GateKind::Rz, q, 0, p++});
            gates.push_back({GateKind::Rx, q, 0, p++});
        }
        for (std::size_t q = 0; q + 1 < nq; ++q) {
            gates.push_back({GateKind::Cnot, q, q + 1, -1});
        }
        if (cfg.ring_entanglement && nq > 1) {
            gates.push_back({GateKind::Cnot, nq - 1, 0, -1});
        }
    }
    return gates;
}

void apply_gate(StateVector& sv, const Gate& g, double angle) {
    switch (g.kind) {
        case GateKind::Ry: sv.apply_ry(g.q0, angle); break;
        case GateKind::Rz: sv.apply_rz(g.q0, angle); break;
        case GateKind::Rx: sv.apply_rx(g.q0, angle); break;
        case GateKind::Cnot: sv.apply_cnot(g.q0, g.q1); break;
    }
}

void apply_pauli_generator(StateVector& sv, const Gate& g) {
    switch (g.kind) {
        case GateKind::Ry: sv.apply_pauli_y(g.q0); break;
        case GateKind::Rz: sv.apply_pauli_z(g.q0); break;
        case GateKind::Rx: sv.apply_pauli_x(g.q0); break;
        case GateKind::Cnot: break;
    }
}

std::vector<double> gather_params(std::span<const double> angles,
                                  const QuantumWeights& w,
                                  const QuantumConfig& cfg) {
    if (angles.size() != cfg.num_qubits) {
        throw ContractError("circuit input has " +
                            std::to_string(angles.size()) + " angles for " +
                            std::to_string(cfg.num_qubits) + " qubits");
    }
    for (double a : angles) {
        if (!std::isfinite(a)) {
            throw NumericError("non-finite circuit input angle");
        }
    }
    w.validate_for(cfg);
    std::vector<double> params(angles.begin(), angles.end());
    params.insert(params.end(), w.theta.begin(), w.theta.end());
    return params;
}

StateVector run_circuit(const std::vector<Gate>& gates,
                        std::span<const double> params,
                        std::size_t num_qubits) {
    StateVector sv(num_qubits);
    for (const Gate& g : gates) {
        apply_gate(sv, g, g.param >= 0 ? params[g.param] : 0.0);
    }
    return sv;
}

std::complex<double> inner(const StateVector& a, const StateVector& b) {
    std::complex<double> acc{0.0, 0.0};
    const auto av = a.amplitudes();
    const auto bv = b.amplitudes();
    for (std::size_t i = 0; i < av.size(); ++i) {
        acc += std::conj(av[i]) * bv[i];
    }
    return acc;
}

} // namespace

void QuantumConfig::validate() const {
    if (num_qubits < 1 || num_qubits > 8) {
        throw ConfigError("qubit count must be in [1, 8], got " +
                          std::to_string(num_qubits));
    }
}

QuantumWeights QuantumWeights::zeros(const QuantumConfig& cfg) {
    cfg.validate();
    QuantumWeights w;
    w.num_layers = cfg.num_layers;
    w.num_qubits = cfg.num_qubits;
    w.theta.assign(cfg.weight_count(), 0.0);
    return w;
}

QuantumWeights QuantumWeights::from_flat(const QuantumConfig& cfg,
                                         std::span<const double> flat) {
    QuantumWeights w = zeros(cfg);
    if (flat.size() != w.theta.size()) {
        throw ContractError("quantum weights: expected " +
                            std::to_string(w.theta.size()) + " values, got " +
                            std::to_string(flat.size()));
    }
    w.theta.assign(flat.begin(), flat.end());
    return w;
}

double QuantumWeights::at(std::size_t layer, std::size_t qubit,
                          std::size_t axis) const {
    return theta[(layer * num_qubits + qubit) * 3 + axis];
}

double& QuantumWeights::at(std::size_t layer, std::size_t qubit,
                           std::size_t axis) {
    return theta[(layer * num_qubits + qubit) * 3 + axis];
}

void QuantumWeights::validate_for(const QuantumConfig& cfg) const {
    if (num_layers != cfg.num_layers || num_qubits != cfg.num_qubits ||
        theta.size() != cfg.weight_count()) {
        throw ContractError(
            "quantum weights shaped " + std::to_string(num_layers) + "x" +
            std::to_string(num_qubits) + "x3 do not match a " +
            std::to_string(cfg.num_layers) + "-layer, " +
            std::to_string(cfg.num_qubits) + "-qubit circuit");
    }
}

StateVector::StateVector(std::size_t num_qubits) : num_qubits_(num_qubits) {
    QuantumConfig probe;
    probe.num_qubits = num_qubits;
    probe.validate();
    amps_.assign(std::size_t(1) << num_qubits, {0.0, 0.0});
    amps_[0] = {1.0, 0.0};
}

std::size_t StateVector::check_qubit(std::size_t qubit) const {
    if (qubit >= num_qubits_) {
        throw ContractError("qubit index " + std::to_string(qubit) +
                            " out of range for " + std::to_string(num_qubits_) +
                            " qubits");
    }
    return std::size_t(1) << (num_qubits_ - 1 - qubit);
}

void StateVector::apply_single(std::size_t qubit, std::complex<double> m00,
                               std::complex<double> m01,
                               std::complex<double> m10,
                               std::complex<double> m11) {
    const std::size_t stride = check_qubit(qubit);
    const std::size_t n = amps_.size();
    for (std::size_t base = 0; base < n; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const std::complex<double> a0 = amps_[i];
            const std::complex<double> a1 = amps_[i + stride];
            amps_[i] = m00 * a0 + m01 * a1;
            amps_[i + stride] = m10 * a0 + m11 * a1;
        }
    }
}

void StateVector::apply_rx(std::size_t qubit, double angle) {
    const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
    apply_single(qubit, {c, 0.0}, {0.0, -s}, {0.0, -s}, {c, 0.0});
}

void StateVector::apply_ry(std::size_t qubit, double angle) {
    const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
    apply_single(qubit, {c, 0.0}, {-s, 0.0}, {s, 0.0}, {c, 0.0});
}

void StateVector::apply_rz(std::size_t qubit, double angle) {
    const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
    apply_single(qubit, {c, -s}, {0.0, 0.0}, {0.0, 0.0}, {c, s});
}

void StateVector::apply_cnot(std::size_t control, std::size_t target) {
    const std::size_t cmask = check_qubit(control);
    const std::size_t tmask = check_qubit(target);
    if (control == target) {
        throw ContractError("cnot: control equals target qubit " +
                            std::to_string(control));
    }
    const std::size_t n = amps_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if ((i & cmask) && !(i & tmask)) {
            std::swap(amps_[i], amps_[i | tmask]);
        }
    }
}

void StateVector::apply_pauli_x(std::size_t qubit) {
    apply_single(qubit, {0.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0});
}

void StateVector::apply_pauli_y(std::size_t qubit) {
    apply_single(qubit, {0.0, 0.0}, -kI, kI, {0.0, 0.0});
}

void StateVector::apply_pauli_z(std::size_t qubit) {
    apply_single(qubit, {1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {-1.0, 0.0});
}

double StateVector::norm_sq() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
}

StateVector embed_angles(std::span<const double> angles,
                         std::size_t num_qubits) {
    if (angles.size() != num_qubits) {
        throw ContractError("embedding expects " + std::to_string(num_qubits) +
                            " angles, got " + std::to_string(angles.size()));
    }
    StateVector sv(num_qubits);
    for (std::size_t q = 0; q < num_qubits; ++q) {
        if (!std::isfinite(angles[q])) {
            throw NumericError("non-finite embedding angle at qubit " +
                               std::to_string(q));
        }
        sv.apply_ry(q, angles[q]);
    }
    return sv;
}

void apply_entangling_layers(StateVector& state, const QuantumWeights& w,
                             const QuantumConfig& cfg) {
    w.validate_for(cfg);
    const std::size_t nq = cfg.num_qubits;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        for (std::size_t q = 0; q < nq; ++q) {
            state.apply_ry(q, w.at(l, q, 0));
            state.apply_rz(q, w.at(l, q, 1));
            state.apply_rx(q, w.at(l, q, 2));
        }
        for (std::size_t q = 0; q + 1 < nq; ++q) state.apply_cnot(q, q + 1);
        if (cfg.ring_entanglement && nq > 1) state.apply_cnot(nq - 1, 0);
    }
}

std::vector<double> measure_z(const StateVector& state) {
    const std::size_t nq = state.num_qubits();
    std::vector<double> z(nq, 0.0);
    const auto amps = state.amplitudes();
    for (std::size_t k = 0; k < amps.size(); ++k) {
        const double p = std::norm(amps[k]);
        if (p == 0.0) continue;
        for (std::size_t q = 0; q < nq; ++q) {
            const std::size_t mask = std::size_t(1) << (nq - 1 - q);
            z[q] += (k & mask) ? -p : p;
        }
    }
    return z;
}

std::vector<double> qactgm_circuit(std::span<const double> angles,
                                   const QuantumWeights& w,
                                   const QuantumConfig& cfg) {
    cfg.validate();
    StateVector sv = embed_angles(angles, cfg.num_qubits);
    apply_entangling_layers(sv, w, cfg);
    return measure_z(sv);
}

CircuitGradients circuit_gradients(std::span<const double> angles,
                                   const QuantumWeights& w,
                                   const QuantumConfig& cfg) {
    cfg.validate();
    const std::vector<double> params = gather_params(angles, w, cfg);
    const std::vector<Gate> gates = build_gates(cfg);
    const std::size_t nq = cfg.num_qubits;
    const std::size_t np = cfg.weight_count();

    CircuitGradients out;
    out.num_qubits = nq;
    out.num_params = np;
    out.wrt_inputs.assign(nq * nq, 0.0);
    out.wrt_weights.assign(nq * np, 0.0);

    StateVector ket = run_circuit(gates, params, nq);

    // One bra per observable: b_i = Z_i |psi>. Walking the gate list
    // backwards keeps ket = k_g and bras[i] = (U_{g+1..G})† Z_i |psi>,
    // so dZ_i/dθ_g = Im <b_i| P_g |k_g>.
    std::vector<StateVector> bras;
    bras.reserve(nq);
    for (std::size_t i = 0; i < nq; ++i) {
        bras.push_back(ket);
        bras.back().apply_pauli_z(i);
    }

    for (std::size_t gi = gates.size(); gi-- > 0;) {
        const Gate& g = gates[gi];
        if (g.param >= 0) {
            StateVector pk = ket;
            apply_pauli_generator(pk, g);
            for (std::size_t i = 0; i < nq; ++i) {
                const double grad = inner(bras[i], pk).imag();
                const std::size_t p = static_cast<std::size_t>(g.param);
                if (p < nq) {
                    out.wrt_inputs[i * nq + p] = grad;
                } else {
                    out.wrt_weights[i * np + (p - nq)] = grad;
                }
            }
        }
        // undo gate g (rotations invert by negating the angle; CNOT is
        // self-inverse) on the ket and every bra
        const double undo = g.param >= 0 ? -params[g.param] : 0.0;
        apply_gate(ket, g, undo);
        for (auto& b : bras) apply_gate(b, g, undo);
    }
    return out;
}

CircuitGradients
circuit_gradients_parameter_shift(std::span<const double> angles,
                                  const QuantumWeights& w,
                                  const QuantumConfig& cfg) {
    cfg.validate();
    std::vector<double> params = gather_params(angles, w, cfg);
    const std::vector<Gate> gates = build_gates(cfg);
    const std::size_t nq = cfg.num_qubits;
    const std::size_t np = cfg.weight_count();

    CircuitGradients out;
    out.num_qubits = nq;
    out.num_params = np;
    out.wrt_inputs.assign(nq * nq, 0.0);
    out.wrt_weights.assign(nq * np, 0.0);

    const double shift = std::numbers::pi / 2.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = params[p];
        params[p] = saved + shift;
        const std::vector<double> zp =
            measure_z(run_circuit(gates, params, nq));
        params[p] = saved - shift;
        const std::vector<double> zm =
            measure_z(run_circuit(gates, params, nq));
        params[p] = saved;
        for (std::size_t i = 0; i < nq; ++i) {
            const double g = 0.5 * (zp[i] - zm[i]);
            if (p < nq) {
                out.wrt_inputs[i * nq + p] = g;
            } else {
                out.wrt_weights[i * np + (p - nq)] = g;
            }
        }
    }
    return out;
}

} // namespace dsa::qsim
