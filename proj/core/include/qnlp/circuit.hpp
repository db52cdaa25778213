#pragma once

#include <map>
#include <vector>

#include "qnlp/statevector.hpp"
#include "qnlp/tape.hpp"

namespace qnlp {

using Circuit = std::vector<GateOp>;

/// slot id -> angle, for slot-carrying rotations.
using Bindings = std::map<int, double>;

/// Simulates the circuit on |0...0>; slot angles come from bindings.
/// Unbound slots are a contract error naming the slot.
StateVector simulate(const Circuit& circuit, const Bindings& bindings,
                     int n_qubits);

/// <Z_q> for every qubit after simulating the circuit.
std::vector<double> run_circuit(const Circuit& circuit,
                                const Bindings& bindings, int n_qubits);

/// Independent verification path: every gate expanded to its full 2^n x 2^n
/// unitary by identity tensoring, applied by dense matrix-vector products,
/// expectations via dense Z_q matrices. n_qubits <= 6.
std::vector<double> dense_matrix_oracle(const Circuit& circuit,
                                        const Bindings& bindings,
                                        int n_qubits);

/// Exact gradient d<Z_qubit>/d(slot angle) via the parameter-shift rule
/// [f(a + pi/2) - f(a - pi/2)] / 2, summed over every gate carrying the
/// slot. The slot must be bound and attached to rotation gates only.
double parameter_shift_grad(const Circuit& circuit, const Bindings& bindings,
                            int n_qubits, int slot, int qubit);

/// Angle source for a slot in a tape-recorded run: entry `index` of a
/// recorded tensor.
struct SlotRef {
    Var source;
    std::size_t index = 0;
};

using TapeBindings = std::map<int, SlotRef>;

/// Packed statevector as recorded on a tape: shape [2^n, 2], row k holding
/// (Re, Im) of amplitude k.
Var init_state_on_tape(Tape& tape, int n_qubits);

/// Records a gate application; rotation angles may come from tape variables
/// (differentiable) or from the gate's fixed angle.
Var apply_gate_on_tape(Var state, const GateOp& gate, const TapeBindings& bindings,
                       int n_qubits);

/// <Z_q> for all qubits as a length-n tape variable.
Var all_z_on_tape(Var state, int n_qubits);

/// Full differentiable run: forward values match run_circuit bit for bit
/// (same kernels), gradients flow to every bound angle source.
Var run_circuit_on_tape(Tape& tape, const Circuit& circuit,
                        const TapeBindings& bindings, int n_qubits);

}  // namespace qnlp
