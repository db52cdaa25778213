#pragma once

#include <cstddef>
#include <string>

#include "qnlp/circuit.hpp"
#include "qnlp/rng.hpp"

namespace qnlp {

enum class Axis { X, Y, Z };

GateKind axis_rotation(Axis axis);

/// Shape of a variational circuit layer: one encoding rotation per qubit,
/// then per layer one trainable rotation per qubit followed by a CNOT ring
/// i -> (i+1) mod n (skipped for a single qubit).
struct VqcConfig {
    int n_qubits = 4;
    int n_layers = 1;
    Axis encoding_axis = Axis::Y;
    Axis variational_axis = Axis::X;

    void validate() const;
    int n_theta() const { return n_layers * n_qubits; }

    // Slot layout of the built circuit.
    int encoding_slot(int qubit) const { return qubit; }
    int theta_slot(int layer, int qubit) const {
        return n_qubits + layer * n_qubits + qubit;
    }
};

/// The circuit realizing the config, with the slot layout above.
Circuit build_vqc_circuit(const VqcConfig& config);

/// Trainable angles, uniform in [0, 2*pi), shaped [n_layers, n_qubits].
Tensor init_vqc_params(const VqcConfig& config, Rng& rng);

/// Encoding + variational block + all-qubit <Z> readout, differentiable in
/// both x (length n_qubits) and theta ([n_layers, n_qubits]).
Var vqc_forward(Tape& tape, const VqcConfig& config, Var theta, Var x);

/// A VQC sandwiched between two classical linear maps: squeeze
/// (in_dim -> n_qubits) before the encoding, bloat (n_qubits -> out_dim)
/// after the readout.
struct DressedVqc {
    VqcConfig config;
    Parameter squeeze_w;  // [n_qubits, in_dim]
    Parameter squeeze_b;  // [n_qubits]
    Parameter theta;      // [n_layers, n_qubits]
    Parameter bloat_w;    // [out_dim, n_qubits]
    Parameter bloat_b;    // [out_dim]

    DressedVqc() = default;
    DressedVqc(const std::string& name, std::size_t in_dim,
               const VqcConfig& config, std::size_t out_dim, Rng& rng);

    std::size_t in_dim() const { return squeeze_w.value.dim(1); }
    std::size_t out_dim() const { return bloat_w.value.dim(0); }

    ParamList params();
    Var forward(Tape& tape, Var x);
    /// Position-wise application to every row of [T, in_dim]; parameters are
    /// registered on the tape once and shared across rows.
    Var forward_rows(Tape& tape, Var x_rows);
};

/// Closed-form trainable-scalar count of a dressed VQC.
std::size_t dressed_param_count(std::size_t in_dim, const VqcConfig& config,
                                std::size_t out_dim);

}  // namespace qnlp
