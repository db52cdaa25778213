#include "qnlp/circuit.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "qnlp/error.hpp"

namespace qnlp {

namespace {

double resolve_angle(const GateOp& gate, const Bindings& bindings) {
    if (gate.slot < 0) return gate.angle;
    auto it = bindings.find(gate.slot);
    if (it == bindings.end()) {
        throw ContractError("unbound parameter slot " +
                            std::to_string(gate.slot));
    }
    return it->second;
}

// Simulation with per-gate angle overrides, used by the parameter-shift
// rule to shift one occurrence of a shared slot at a time.
std::vector<double> run_with_overrides(
    const Circuit& circuit, const Bindings& bindings, int n_qubits,
    const std::map<std::size_t, double>& overrides) {
    StateVector state(n_qubits);
    for (std::size_t i = 0; i < circuit.size(); ++i) {
        auto it = overrides.find(i);
        double angle = it != overrides.end()
                           ? it->second
                           : resolve_angle(circuit[i], bindings);
        state.apply_resolved(circuit[i], angle);
    }
    return state.all_z_expectations();
}

}  // namespace

StateVector simulate(const Circuit& circuit, const Bindings& bindings,
                     int n_qubits) {
    StateVector state(n_qubits);
    for (const GateOp& gate : circuit) {
        state.apply_resolved(gate, resolve_angle(gate, bindings));
    }
    return state;
}

std::vector<double> run_circuit(const Circuit& circuit,
                                const Bindings& bindings, int n_qubits) {
    return simulate(circuit, bindings, n_qubits).all_z_expectations();
}

// ---------------------------------------------------------------------------
// dense-matrix oracle
// ---------------------------------------------------------------------------

namespace {

using CVec = std::vector<std::complex<double>>;
using CMat = std::vector<CVec>;  // [row][col]

CMat gate_unitary_dense(const GateOp& gate, double angle, int n_qubits) {
    std::size_t dim = std::size_t(1) << n_qubits;
    CMat u(dim, CVec(dim, 0.0));
    if (gate.kind == GateKind::CNOT) {
        std::size_t cmask = std::size_t(1) << gate.control;
        std::size_t tmask = std::size_t(1) << gate.target;
        for (std::size_t c = 0; c < dim; ++c) {
            std::size_t r = (c & cmask) ? (c ^ tmask) : c;
            u[r][c] = 1.0;
        }
        return u;
    }
    Mat2 m = gate_matrix(gate.kind, angle);
    std::size_t tmask = std::size_t(1) << gate.target;
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            if ((r & ~tmask) != (c & ~tmask)) continue;
            int rb = (r & tmask) ? 1 : 0;
            int cb = (c & tmask) ? 1 : 0;
            u[r][c] = {m.re[rb][cb], m.im[rb][cb]};
        }
    }
    return u;
}

CVec dense_matvec(const CMat& m, const CVec& v) {
    CVec out(v.size(), 0.0);
    for (std::size_t r = 0; r < v.size(); ++r) {
        std::complex<double> s = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c) s += m[r][c] * v[c];
        out[r] = s;
    }
    return out;
}

}  // namespace

std::vector<double> dense_matrix_oracle(const Circuit& circuit,
                                        const Bindings& bindings,
                                        int n_qubits) {
    if (n_qubits < 1 || n_qubits > 6) {
        throw ContractError(
            "dense_matrix_oracle supports 1..6 qubits, got " +
            std::to_string(n_qubits));
    }
    std::size_t dim = std::size_t(1) << n_qubits;
    CVec state(dim, 0.0);
    state[0] = 1.0;
    for (const GateOp& gate : circuit) {
        validate_gate(gate, n_qubits);
        CMat u = gate_unitary_dense(gate, resolve_angle(gate, bindings),
                                    n_qubits);
        state = dense_matvec(u, state);
    }
    std::vector<double> out(n_qubits);
    for (int q = 0; q < n_qubits; ++q) {
        // <psi| Z_q |psi> with Z_q assembled as a full diagonal matrix.
        CMat z(dim, CVec(dim, 0.0));
        std::size_t mask = std::size_t(1) << q;
        for (std::size_t k = 0; k < dim; ++k) {
            z[k][k] = (k & mask) ? -1.0 : 1.0;
        }
        CVec zv = dense_matvec(z, state);
        std::complex<double> e = 0.0;
        for (std::size_t k = 0; k < dim; ++k) e += std::conj(state[k]) * zv[k];
        out[q] = e.real();
    }
    return out;
}

// ---------------------------------------------------------------------------
// parameter shift
// ---------------------------------------------------------------------------

double parameter_shift_grad(const Circuit& circuit, const Bindings& bindings,
                            int n_qubits, int slot, int qubit) {
    if (qubit < 0 || qubit >= n_qubits) {
        throw IndexError("qubit " + std::to_string(qubit) +
                         " out of range for " + std::to_string(n_qubits) +
                         "-qubit circuit");
    }
    std::vector<std::size_t> occurrences;
    for (std::size_t i = 0; i < circuit.size(); ++i) {
        if (circuit[i].slot == slot) {
            if (!is_rotation(circuit[i].kind)) {
                throw ContractError(
                    std::string("parameter-shift slot attached to ") +
                    gate_name(circuit[i].kind));
            }
            occurrences.push_back(i);
        }
    }
    if (occurrences.empty()) {
        throw ContractError("slot " + std::to_string(slot) +
                            " does not appear in the circuit");
    }
    auto bound = bindings.find(slot);
    if (bound == bindings.end()) {
        throw ContractError("unbound parameter slot " + std::to_string(slot));
    }
    double angle = bound->second;
    double grad = 0.0;
    for (std::size_t i : occurrences) {
        std::map<std::size_t, double> hi{{i, angle + M_PI / 2.0}};
        std::map<std::size_t, double> lo{{i, angle - M_PI / 2.0}};
        double f_hi =
            run_with_overrides(circuit, bindings, n_qubits, hi).at(qubit);
        double f_lo =
            run_with_overrides(circuit, bindings, n_qubits, lo).at(qubit);
        grad += 0.5 * (f_hi - f_lo);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// tape-recorded simulation
// ---------------------------------------------------------------------------

Var init_state_on_tape(Tape& tape, int n_qubits) {
    if (n_qubits < 1 || n_qubits > 12) {
        throw ContractError("n_qubits must be in [1, 12], got " +
                            std::to_string(n_qubits));
    }
    Tensor packed({std::size_t(1) << n_qubits, 2});
    packed[0] = 1.0;
    return tape.constant(std::move(packed));
}

Var apply_gate_on_tape(Var state, const GateOp& gate,
                       const TapeBindings& bindings, int n_qubits) {
    Tape& tape = *state.tape;
    validate_gate(gate, n_qubits);
    const Tensor& in = state.value();
    if (in.rank() != 2 || in.dim(0) != (std::size_t(1) << n_qubits) ||
        in.dim(1) != 2) {
        throw ShapeError("packed state shape " + in.shape_str() +
                         " does not match " + std::to_string(n_qubits) +
                         " qubits");
    }

    if (gate.kind == GateKind::CNOT) {
        Tensor out_t = in;
        apply_cnot_kernel(out_t.data(), n_qubits, gate.control, gate.target);
        int sid = state.id;
        int control = gate.control, target = gate.target;
        Var out = tape.custom({state}, std::move(out_t), {});
        int oid = out.id;
        // CNOT is a self-inverse real permutation; the adjoint map is itself.
        tape.set_custom_backward(oid, [oid, sid, n_qubits, control,
                                       target](Tape& t) {
            Tensor g = t.grad_of(oid);
            apply_cnot_kernel(g.data(), n_qubits, control, target);
            Tensor& gs = t.grad_of(sid);
            for (std::size_t i = 0; i < g.numel(); ++i) gs[i] += g[i];
        });
        return out;
    }

    // Single-qubit gate; the angle may be fixed or tape-bound.
    double angle = gate.angle;
    Var source{};
    std::size_t src_index = 0;
    bool bound = false;
    if (gate.slot >= 0) {
        auto it = bindings.find(gate.slot);
        if (it == bindings.end()) {
            throw ContractError("unbound parameter slot " +
                                std::to_string(gate.slot));
        }
        source = it->second.source;
        src_index = it->second.index;
        if (src_index >= source.value().numel()) {
            throw IndexError("slot " + std::to_string(gate.slot) +
                             " references index " + std::to_string(src_index) +
                             " of " + source.value().shape_str());
        }
        angle = source.value()[src_index];
        bound = true;
    }

    Mat2 u = gate_matrix(gate.kind, angle);
    Tensor out_t = in;
    apply_1q(out_t.data(), n_qubits, gate.target, u);

    std::vector<Var> inputs{state};
    if (bound) inputs.push_back(source);
    Var out = tape.custom(inputs, std::move(out_t), {});
    int oid = out.id;
    int sid = state.id;
    int aid = bound ? source.id : -1;
    GateKind kind = gate.kind;
    int target = gate.target;
    tape.set_custom_backward(oid, [oid, sid, aid, src_index, kind, target,
                                   angle, u, n_qubits](Tape& t) {
        const Tensor& g = t.grad_of(oid);
        // State gradient: the realified 2x2 map is orthogonal-transposed by
        // applying the adjoint gate to the packed gradient.
        Tensor gcopy = g;
        apply_1q(gcopy.data(), n_qubits, target, adjoint(u));
        Tensor& gs = t.grad_of(sid);
        for (std::size_t i = 0; i < gcopy.numel(); ++i) gs[i] += gcopy[i];
        if (aid >= 0) {
            // Angle gradient: Re<conj(g), (dU/da) psi_in> over amplitudes,
            // which is the plain dot product of the packed buffers.
            Tensor v = t.value(sid);
            apply_1q(v.data(), n_qubits, target,
                     gate_matrix_dangle(kind, angle));
            double da = 0.0;
            for (std::size_t i = 0; i < v.numel(); ++i) da += g[i] * v[i];
            t.grad_of(aid)[src_index] += da;
        }
    });
    return out;
}

Var all_z_on_tape(Var state, int n_qubits) {
    Tape& tape = *state.tape;
    const Tensor& in = state.value();
    if (in.rank() != 2 || in.dim(0) != (std::size_t(1) << n_qubits) ||
        in.dim(1) != 2) {
        throw ShapeError("packed state shape " + in.shape_str() +
                         " does not match " + std::to_string(n_qubits) +
                         " qubits");
    }
    Tensor z({static_cast<std::size_t>(n_qubits)});
    all_z_expectations_kernel(in.data(), n_qubits, z.data());
    int sid = state.id;
    Var out = tape.custom({state}, std::move(z), {});
    int oid = out.id;
    tape.set_custom_backward(oid, [oid, sid, n_qubits](Tape& t) {
        const Tensor& g = t.grad_of(oid);
        const Tensor& psi = t.value(sid);
        Tensor& gs = t.grad_of(sid);
        std::size_t dim = std::size_t(1) << n_qubits;
        for (std::size_t k = 0; k < dim; ++k) {
            double w = 0.0;
            for (int q = 0; q < n_qubits; ++q) {
                w += (k >> q) & 1 ? -g[q] : g[q];
            }
            gs[2 * k] += 2.0 * psi[2 * k] * w;
            gs[2 * k + 1] += 2.0 * psi[2 * k + 1] * w;
        }
    });
    return out;
}

Var run_circuit_on_tape(Tape& tape, const Circuit& circuit,
                        const TapeBindings& bindings, int n_qubits) {
    Var state = init_state_on_tape(tape, n_qubits);
    for (const GateOp& gate : circuit) {
        state = apply_gate_on_tape(state, gate, bindings, n_qubits);
    }
    return all_z_on_tape(state, n_qubits);
}

}  // namespace qnlp
