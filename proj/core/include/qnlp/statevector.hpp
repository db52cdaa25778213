#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qnlp {

enum class GateKind { H, RX, RY, RZ, CNOT };

bool is_rotation(GateKind kind);
const char* gate_name(GateKind kind);

/// One circuit operation. Rotations carry either a fixed angle or a
/// parameter slot (slot >= 0) resolved at simulation time; H and CNOT carry
/// neither.
struct GateOp {
    GateKind kind;
    int target;
    int control = -1;   // CNOT only
    double angle = 0.0; // rotations with a fixed angle
    int slot = -1;      // rotations bound to a parameter slot

    static GateOp h(int target) { return {GateKind::H, target}; }
    static GateOp rx(int target, double angle) {
        return {GateKind::RX, target, -1, angle, -1};
    }
    static GateOp ry(int target, double angle) {
        return {GateKind::RY, target, -1, angle, -1};
    }
    static GateOp rz(int target, double angle) {
        return {GateKind::RZ, target, -1, angle, -1};
    }
    static GateOp rot(GateKind kind, int target, int slot);
    static GateOp cnot(int control, int target) {
        return {GateKind::CNOT, target, control};
    }
};

/// Structural validity: indices in range, control != target, angles/slots
/// only on rotations. Throws ContractError or IndexError.
void validate_gate(const GateOp& gate, int n_qubits);

/// 2x2 complex matrix split into real and imaginary parts.
struct Mat2 {
    double re[2][2];
    double im[2][2];
};

Mat2 gate_matrix(GateKind kind, double angle);
/// dU/d(angle) for rotation gates.
Mat2 gate_matrix_dangle(GateKind kind, double angle);
Mat2 adjoint(const Mat2& u);

// Kernels over interleaved (re, im) amplitude arrays of 2^n basis states.
// Shared by the StateVector below and the tape-recorded simulation so both
// paths produce bit-identical amplitudes.
void apply_1q(double* amps, int n_qubits, int target, const Mat2& u);
void apply_cnot_kernel(double* amps, int n_qubits, int control, int target);
double z_expectation_kernel(const double* amps, int n_qubits, int qubit);
void all_z_expectations_kernel(const double* amps, int n_qubits, double* out);
double norm_kernel(const double* amps, int n_qubits);

/// Exact n-qubit state, amplitudes stored as interleaved (re, im) doubles.
/// Qubit 0 is the least-significant bit of the basis-state index.
class StateVector {
  public:
    /// |0...0> on n_qubits in [1, 12].
    explicit StateVector(int n_qubits);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return std::size_t(1) << n_qubits_; }

    std::complex<double> amplitude(std::size_t index) const {
        return {amps_[2 * index], amps_[2 * index + 1]};
    }

    double* raw() { return amps_.data(); }
    const double* raw() const { return amps_.data(); }

    /// Applies a gate; rotation angles must be fixed (slot-free).
    void apply(const GateOp& gate);
    /// Applies a gate with an explicitly resolved rotation angle.
    void apply_resolved(const GateOp& gate, double angle);

    double expectation_z(int qubit) const;
    std::vector<double> all_z_expectations() const;
    double norm() const;

  private:
    int n_qubits_;
    std::vector<double> amps_;
};

}  // namespace qnlp
