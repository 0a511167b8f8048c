#pragma once

#include "qignn/spectral.hpp"
#include "qignn/tensor.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qignn {

using Complex = std::complex<double>;

enum class Axis { X, Y, Z };

/// Rotation-type gates exp(-i theta P / 2) with P a Pauli string on one or two qubits.
enum class GateKind { RX, RY, RZ, XX, YY, ZZ };

const char* gate_name(GateKind k);

/// Pure state of n qubits; qubit j is bit j of the basis index.
class StateVector {
public:
    explicit StateVector(int num_qubits);

    int num_qubits() const { return num_qubits_; }
    std::size_t dimension() const { return amps_.size(); }
    std::span<const Complex> amplitudes() const { return amps_; }
    std::span<Complex> amplitudes() { return amps_; }

    void apply(GateKind kind, int q0, int q1, double theta);
    /// Multiplies by the gate's Pauli generator P.
    void apply_generator(GateKind kind, int q0, int q1);

    double norm() const;
    /// <this|other>
    Complex inner(const StateVector& other) const;

private:
    int num_qubits_;
    std::vector<Complex> amps_;
};

/// <Z_j> for every qubit.
Vector pauli_z_expectations(const StateVector& state);

struct Gate {
    GateKind kind;
    int q0 = 0;
    int q1 = -1;
    int param = -1;  // index into trainable angles, or -1
    int input = -1;  // index into the encoded input, or -1
};

/// Deep XYZ data re-uploading circuit. Per repetition and for each of three
/// blocks: encode u on every qubit, then per-qubit rotations, then a chain of
/// Ising entanglers on pairs (j, j+1).
///   block 1: Rx Ry Rz, ZZ
///   block 2: Rx Ry,    XX
///   block 3: Ry Rz,    YY
class Circuit {
public:
    Circuit() = default;
    static Circuit deep_xyz(int num_qubits, int repetitions, Axis encoding_axis = Axis::Y);

    static std::size_t params_per_repetition(int num_qubits) {
        return static_cast<std::size_t>(7 * num_qubits + 3 * (num_qubits - 1));
    }

    int num_qubits() const { return num_qubits_; }
    int repetitions() const { return repetitions_; }
    std::size_t num_params() const { return num_params_; }
    Axis encoding_axis() const { return encoding_axis_; }
    const std::vector<Gate>& gates() const { return gates_; }

    /// Gate list with resolved angles, one gate per line.
    std::string describe(std::span<const double> params, std::span<const double> input) const;

private:
    int num_qubits_ = 0;
    int repetitions_ = 0;
    std::size_t num_params_ = 0;
    Axis encoding_axis_ = Axis::Y;
    std::vector<Gate> gates_;
};

/// Angle encoding of u (entries in (-1, 1)) on |0...0>.
StateVector angle_encode(std::span<const double> u, Axis axis = Axis::Y);

/// Runs every gate of `circuit` on `state`.
StateVector apply_deep_xyz(StateVector state, const Circuit& circuit, std::span<const double> params,
                           std::span<const double> u);

/// <Z_j> after running the circuit from |0...0>.
Vector circuit_expectations(const Circuit& circuit, std::span<const double> params, std::span<const double> u);

struct CircuitGradient {
    Vector d_params;
    Vector d_input;
};

/// Adjoint-mode VJP of circuit_expectations with cotangent `cot` (length n_q).
CircuitGradient circuit_vjp(const Circuit& circuit, std::span<const double> params, std::span<const double> u,
                            const Vector& cot);

/// Encode-unitary-measure map q(s) = W_out * <Z>(circuit(tanh(W_in s))).
struct QuantumModule {
    Matrix w_in;    // n_q x d_in
    Matrix w_out;   // d_out x n_q
    Matrix angles;  // 1 x num_params
    Circuit circuit;
    bool spectral_normalize = false;
    PowerIterationState in_norm;
    PowerIterationState out_norm;

    static QuantumModule create(std::size_t d_in, std::size_t d_out, int num_qubits, int repetitions,
                                bool spectral_normalize, std::uint64_t seed);

    int num_qubits() const { return circuit.num_qubits(); }
    std::size_t input_dim() const { return static_cast<std::size_t>(w_in.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(w_out.rows()); }

    /// Maps as used in the forward pass (divided by their sigma estimates when normalized).
    Matrix effective_w_in() const;
    Matrix effective_w_out() const;

    /// One power-iteration step on both maps (no-op unless normalized).
    void update_normalization();

    Vector forward(const Vector& s) const;
    /// Row-wise map Q(S).
    Matrix forward_rows(const Matrix& s) const;
};

/// Tape handles for a module's trainable tensors.
struct QuantumVars {
    ad::Var w_in;
    ad::Var w_out;
    ad::Var angles;
};

QuantumVars bind(ad::Tape& tape, const QuantumModule& m);

/// Circuit expectations for every row of `inputs` (N x n_q, already bounded).
ad::Var circuit_rows(const Circuit& circuit, ad::Var inputs, ad::Var angles);

/// Differentiable row-wise map Q(S) on the tape.
ad::Var quantum_rows(const QuantumModule& m, const QuantumVars& vars, ad::Var s);

/// Parameter-shift derivative of q(s) with respect to trainable angle `index`.
Vector parameter_shift_grad(const QuantumModule& m, const Vector& s, std::size_t index);

/// Normalizes a module's maps in place (spectral_normalize_maps): one power step
/// per call on persistent singular vectors.
void spectral_normalize_maps(QuantumModule& m);

}  // namespace qignn
