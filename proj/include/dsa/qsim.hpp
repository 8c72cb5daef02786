#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dsa/error.hpp"

namespace dsa::qsim {

struct QuantumConfig {
    std::size_t num_qubits = 4; // 1..8
    std::size_t num_layers = 3; // 0 = embedding + measurement only
    bool ring_entanglement = false;

    void validate() const;
    std::size_t weight_count() const { return num_layers * num_qubits * 3; }
};

// Trainable rotation angles, one (RY, RZ, RX) triple per qubit per layer.
struct QuantumWeights {
    std::size_t num_layers = 0;
    std::size_t num_qubits = 0;
    std::vector<double> theta; // [layer][qubit][axis] row-major

    static QuantumWeights zeros(const QuantumConfig& cfg);
    static QuantumWeights from_flat(const QuantumConfig& cfg,
                                    std::span<const double> flat);

    double at(std::size_t layer, std::size_t qubit, std::size_t axis) const;
    double& at(std::size_t layer, std::size_t qubit, std::size_t axis);
    void validate_for(const QuantumConfig& cfg) const;
};

// Exact 2^n-amplitude register. Qubit 0 addresses the most-significant bit
// of the amplitude index (leftmost position in ket notation).
class StateVector {
  public:
    explicit StateVector(std::size_t num_qubits); // |0...0>

    std::size_t num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return amps_.size(); }
    std::span<const std::complex<double>> amplitudes() const {
        return {amps_.data(), amps_.size()};
    }
    std::complex<double>& amp(std::size_t index) { return amps_[index]; }

    // Half-angle convention: R_P(θ) = exp(−iθP/2).
    void apply_rx(std::size_t qubit, double angle);
    void apply_ry(std::size_t qubit, double angle);
    void apply_rz(std::size_t qubit, double angle);
    void apply_cnot(std::size_t control, std::size_t target);

    void apply_pauli_x(std::size_t qubit);
    void apply_pauli_y(std::size_t qubit);
    void apply_pauli_z(std::size_t qubit);

    double norm_sq() const;

  private:
    std::size_t num_qubits_;
    std::vector<std::complex<double>> amps_;

    std::size_t check_qubit(std::size_t qubit) const; // returns bit stride
    void apply_single(std::size_t qubit, std::complex<double> m00,
                      std::complex<double> m01, std::complex<double> m10,
                      std::complex<double> m11);
};

// Π_i RY(x_i) |0...0> — one embedding rotation per qubit.
StateVector embed_angles(std::span<const double> angles,
                         std::size_t num_qubits);

// Per layer: (RY, RZ, RX) on every qubit, then a CNOT chain i→i+1
// (plus the closing n−1→0 link when ring entanglement is enabled).
void apply_entangling_layers(StateVector& state, const QuantumWeights& w,
                             const QuantumConfig& cfg);

// Pauli-Z expectation of every qubit; each value lies in [−1, 1].
std::vector<double> measure_z(const StateVector& state);

// Full modulation circuit: embedding, entangling layers, Z readout.
std::vector<double> qactgm_circuit(std::span<const double> angles,
                                   const QuantumWeights& w,
                                   const QuantumConfig& cfg);

struct CircuitGradients {
    std::size_t num_qubits = 0;
    std::size_t num_params = 0;        // weight parameters only
    std::vector<double> wrt_inputs;    // [output][input], n_q × n_q
    std::vector<double> wrt_weights;   // [output][param], n_q × num_params

    double input(std::size_t out, std::size_t in) const {
        return wrt_inputs[out * num_qubits + in];
    }
    double weight(std::size_t out, std::size_t p) const {
        return wrt_weights[out * num_params + p];
    }
};

// Analytic statevector differentiation (adjoint method). Agrees with the
// parameter-shift reference to ~1e-10 and is the path used during training.
CircuitGradients circuit_gradients(std::span<const double> angles,
                                   const QuantumWeights& w,
                                   const QuantumConfig& cfg);

// Reference gradients via the parameter-shift rule:
// dZ/dθ = [Z(θ+π/2) − Z(θ−π/2)] / 2 for every rotation parameter.
CircuitGradients
circuit_gradients_parameter_shift(std::span<const double> angles,
                                  const QuantumWeights& w,
                                  const QuantumConfig& cfg);

} // namespace dsa::qsim
