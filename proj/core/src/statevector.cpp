#include "qnlp/statevector.hpp"

#include <cmath>
#include <string>

#include "qnlp/error.hpp"

namespace qnlp {

bool is_rotation(GateKind kind) {
    return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ;
}

const char* gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "H";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

GateOp GateOp::rot(GateKind kind, int target, int slot) {
    if (!is_rotation(kind)) {
        throw ContractError(std::string("parameter slot on non-rotation gate ") +
                            gate_name(kind));
    }
    if (slot < 0) {
        throw ContractError("parameter slot must be non-negative");
    }
    return {kind, target, -1, 0.0, slot};
}

void validate_gate(const GateOp& gate, int n_qubits) {
    if (gate.target < 0 || gate.target >= n_qubits) {
        throw IndexError("gate target " + std::to_string(gate.target) +
                         " out of range for " + std::to_string(n_qubits) +
                         " qubits");
    }
    if (gate.kind == GateKind::CNOT) {
        if (gate.control < 0 || gate.control >= n_qubits) {
            throw IndexError("CNOT control " + std::to_string(gate.control) +
                             " out of range for " + std::to_string(n_qubits) +
                             " qubits");
        }
        if (gate.control == gate.target) {
            throw ContractError("CNOT control equals target qubit " +
                                std::to_string(gate.target));
        }
    } else if (gate.control >= 0) {
        throw ContractError(std::string("control qubit on single-qubit gate ") +
                            gate_name(gate.kind));
    }
    if (!is_rotation(gate.kind) && gate.slot >= 0) {
        throw ContractError(std::string("parameter slot on non-rotation gate ") +
                            gate_name(gate.kind));
    }
}

Mat2 gate_matrix(GateKind kind, double angle) {
    Mat2 u{{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}};
    double c = std::cos(angle / 2.0);
    double s = std::sin(angle / 2.0);
    switch (kind) {
        case GateKind::H: {
            double r = 1.0 / std::sqrt(2.0);
            u.re[0][0] = r;
            u.re[0][1] = r;
            u.re[1][0] = r;
            u.re[1][1] = -r;
            break;
        }
        case GateKind::RX:
            u.re[0][0] = c;
            u.re[1][1] = c;
            u.im[0][1] = -s;
            u.im[1][0] = -s;
            break;
        case GateKind::RY:
            u.re[0][0] = c;
            u.re[0][1] = -s;
            u.re[1][0] = s;
            u.re[1][1] = c;
            break;
        case GateKind::RZ:
            u.re[0][0] = c;
            u.im[0][0] = -s;
            u.re[1][1] = c;
            u.im[1][1] = s;
            break;
        case GateKind::CNOT:
            throw ContractError("CNOT has no 2x2 matrix form here");
    }
    return u;
}

Mat2 gate_matrix_dangle(GateKind kind, double angle) {
    Mat2 u{{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}};
    double c = 0.5 * std::cos(angle / 2.0);
    double s = 0.5 * std::sin(angle / 2.0);
    switch (kind) {
        case GateKind::RX:
            u.re[0][0] = -s;
            u.re[1][1] = -s;
            u.im[0][1] = -c;
            u.im[1][0] = -c;
            break;
        case GateKind::RY:
            u.re[0][0] = -s;
            u.re[0][1] = -c;
            u.re[1][0] = c;
            u.re[1][1] = -s;
            break;
        case GateKind::RZ:
            u.re[0][0] = -s;
            u.im[0][0] = -c;
            u.re[1][1] = -s;
            u.im[1][1] = c;
            break;
        default:
            throw ContractError(std::string("angle derivative of gate ") +
                                gate_name(kind));
    }
    return u;
}

Mat2 adjoint(const Mat2& u) {
    Mat2 a;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            a.re[i][j] = u.re[j][i];
            a.im[i][j] = -u.im[j][i];
        }
    }
    return a;
}

void apply_1q(double* amps, int n_qubits, int target, const Mat2& u) {
    std::size_t dim = std::size_t(1) << n_qubits;
    std::size_t mask = std::size_t(1) << target;
    for (std::size_t i0 = 0; i0 < dim; ++i0) {
        if (i0 & mask) continue;
        std::size_t i1 = i0 | mask;
        double a_re = amps[2 * i0], a_im = amps[2 * i0 + 1];
        double b_re = amps[2 * i1], b_im = amps[2 * i1 + 1];
        amps[2 * i0] = u.re[0][0] * a_re - u.im[0][0] * a_im +
                       u.re[0][1] * b_re - u.im[0][1] * b_im;
        amps[2 * i0 + 1] = u.re[0][0] * a_im + u.im[0][0] * a_re +
                           u.re[0][1] * b_im + u.im[0][1] * b_re;
        amps[2 * i1] = u.re[1][0] * a_re - u.im[1][0] * a_im +
                       u.re[1][1] * b_re - u.im[1][1] * b_im;
        amps[2 * i1 + 1] = u.re[1][0] * a_im + u.im[1][0] * a_re +
                           u.re[1][1] * b_im + u.im[1][1] * b_re;
    }
}

void apply_cnot_kernel(double* amps, int n_qubits, int control, int target) {
    std::size_t dim = std::size_t(1) << n_qubits;
    std::size_t cmask = std::size_t(1) << control;
    std::size_t tmask = std::size_t(1) << target;
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cmask) && !(i & tmask)) {
            std::size_t j = i | tmask;
            std::swap(amps[2 * i], amps[2 * j]);
            std::swap(amps[2 * i + 1], amps[2 * j + 1]);
        }
    }
}

double z_expectation_kernel(const double* amps, int n_qubits, int qubit) {
    std::size_t dim = std::size_t(1) << n_qubits;
    std::size_t mask = std::size_t(1) << qubit;
    double e = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        double p = amps[2 * i] * amps[2 * i] + amps[2 * i + 1] * amps[2 * i + 1];
        e += (i & mask) ? -p : p;
    }
    return e;
}

void all_z_expectations_kernel(const double* amps, int n_qubits, double* out) {
    for (int q = 0; q < n_qubits; ++q) out[q] = 0.0;
    std::size_t dim = std::size_t(1) << n_qubits;
    for (std::size_t i = 0; i < dim; ++i) {
        double p = amps[2 * i] * amps[2 * i] + amps[2 * i + 1] * amps[2 * i + 1];
        for (int q = 0; q < n_qubits; ++q) {
            out[q] += (i >> q) & 1 ? -p : p;
        }
    }
}

double norm_kernel(const double* amps, int n_qubits) {
    std::size_t dim = std::size_t(1) << n_qubits;
    double s = 0.0;
    for (std::size_t i = 0; i < 2 * dim; ++i) s += amps[i] * amps[i];
    return std::sqrt(s);
}

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 12) {
        throw ContractError("n_qubits must be in [1, 12], got " +
                            std::to_string(n_qubits));
    }
    amps_.assign(2 * dim(), 0.0);
    amps_[0] = 1.0;
}

void StateVector::apply(const GateOp& gate) {
    if (gate.slot >= 0) {
        throw ContractError("gate slot " + std::to_string(gate.slot) +
                            " not resolved; bind it before applying");
    }
    apply_resolved(gate, gate.angle);
}

void StateVector::apply_resolved(const GateOp& gate, double angle) {
    validate_gate(gate, n_qubits_);
    if (gate.kind == GateKind::CNOT) {
        apply_cnot_kernel(amps_.data(), n_qubits_, gate.control, gate.target);
    } else {
        apply_1q(amps_.data(), n_qubits_, gate.target,
                 gate_matrix(gate.kind, angle));
    }
}

double StateVector::expectation_z(int qubit) const {
    if (qubit < 0 || qubit >= n_qubits_) {
        throw IndexError("qubit " + std::to_string(qubit) +
                         " out of range for " + std::to_string(n_qubits_) +
                         "-qubit state");
    }
    return z_expectation_kernel(amps_.data(), n_qubits_, qubit);
}

std::vector<double> StateVector::all_z_expectations() const {
    std::vector<double> out(n_qubits_);
    all_z_expectations_kernel(amps_.data(), n_qubits_, out.data());
    return out;
}

double StateVector::norm() const { return norm_kernel(amps_.data(), n_qubits_); }

}  // namespace qnlp
