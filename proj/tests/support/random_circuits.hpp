#pragma once

#include <cmath>

#include "qnlp/circuit.hpp"
#include "qnlp/rng.hpp"

namespace qnlp::testing {

/// Random circuit of the given depth over {H, RX, RY, RZ, CNOT}. Every
/// rotation gets its own slot with a uniform angle in [0, 2*pi), collected
/// into `bindings`.
inline Circuit random_circuit(Rng& rng, int n_qubits, int depth,
                              Bindings& bindings) {
    Circuit circuit;
    int next_slot = 0;
    for (int d = 0; d < depth; ++d) {
        int pick = static_cast<int>(rng.uniform_int(n_qubits > 1 ? 5 : 4));
        int target = static_cast<int>(rng.uniform_int(n_qubits));
        switch (pick) {
            case 0:
                circuit.push_back(GateOp::h(target));
                break;
            case 1:
            case 2:
            case 3: {
                GateKind kind = pick == 1   ? GateKind::RX
                                : pick == 2 ? GateKind::RY
                                            : GateKind::RZ;
                int slot = next_slot++;
                circuit.push_back(GateOp::rot(kind, target, slot));
                bindings[slot] = rng.uniform(0.0, 2.0 * M_PI);
                break;
            }
            case 4: {
                int control = static_cast<int>(rng.uniform_int(n_qubits));
                while (control == target) {
                    control = static_cast<int>(rng.uniform_int(n_qubits));
                }
                circuit.push_back(GateOp::cnot(control, target));
                break;
            }
        }
    }
    return circuit;
}

}  // namespace qnlp::testing
