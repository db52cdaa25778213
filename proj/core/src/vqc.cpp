#include "qnlp/vqc.hpp"

#include <cmath>

#include "qnlp/error.hpp"
#include "qnlp/init.hpp"

namespace qnlp {

GateKind axis_rotation(Axis axis) {
    switch (axis) {
        case Axis::X: return GateKind::RX;
        case Axis::Y: return GateKind::RY;
        case Axis::Z: return GateKind::RZ;
    }
    return GateKind::RX;
}

void VqcConfig::validate() const {
    if (n_qubits < 1) {
        throw ContractError("VqcConfig.n_qubits must be >= 1, got " +
                            std::to_string(n_qubits));
    }
    if (n_layers < 1) {
        throw ContractError("VqcConfig.n_layers must be >= 1, got " +
                            std::to_string(n_layers));
    }
}

Circuit build_vqc_circuit(const VqcConfig& config) {
    config.validate();
    Circuit circuit;
    GateKind enc = axis_rotation(config.encoding_axis);
    GateKind var = axis_rotation(config.variational_axis);
    for (int q = 0; q < config.n_qubits; ++q) {
        circuit.push_back(GateOp::rot(enc, q, config.encoding_slot(q)));
    }
    for (int l = 0; l < config.n_layers; ++l) {
        for (int q = 0; q < config.n_qubits; ++q) {
            circuit.push_back(GateOp::rot(var, q, config.theta_slot(l, q)));
        }
        if (config.n_qubits > 1) {
            for (int q = 0; q < config.n_qubits; ++q) {
                circuit.push_back(
                    GateOp::cnot(q, (q + 1) % config.n_qubits));
            }
        }
    }
    return circuit;
}

Tensor init_vqc_params(const VqcConfig& config, Rng& rng) {
    config.validate();
    Tensor theta({static_cast<std::size_t>(config.n_layers),
                  static_cast<std::size_t>(config.n_qubits)});
    for (std::size_t i = 0; i < theta.numel(); ++i) {
        theta[i] = rng.uniform(0.0, 2.0 * M_PI);
    }
    return theta;
}

Var vqc_forward(Tape& tape, const VqcConfig& config, Var theta, Var x) {
    config.validate();
    const Tensor& xv = x.value();
    if (xv.rank() != 1 ||
        xv.dim(0) != static_cast<std::size_t>(config.n_qubits)) {
        throw ShapeError("vqc input shape " + xv.shape_str() +
                         " does not match " + std::to_string(config.n_qubits) +
                         " qubits");
    }
    if (theta.value().numel() != static_cast<std::size_t>(config.n_theta())) {
        throw ShapeError("vqc theta has " +
                         std::to_string(theta.value().numel()) +
                         " angles, expected " +
                         std::to_string(config.n_theta()));
    }
    TapeBindings bindings;
    for (int q = 0; q < config.n_qubits; ++q) {
        bindings[config.encoding_slot(q)] = {x, static_cast<std::size_t>(q)};
    }
    for (int l = 0; l < config.n_layers; ++l) {
        for (int q = 0; q < config.n_qubits; ++q) {
            bindings[config.theta_slot(l, q)] = {
                theta, static_cast<std::size_t>(l * config.n_qubits + q)};
        }
    }
    return run_circuit_on_tape(tape, build_vqc_circuit(config), bindings,
                               config.n_qubits);
}

DressedVqc::DressedVqc(const std::string& name, std::size_t in_dim,
                       const VqcConfig& cfg, std::size_t out_dim, Rng& rng)
    : config(cfg) {
    config.validate();
    std::size_t nq = static_cast<std::size_t>(config.n_qubits);
    squeeze_w = Parameter(name + ".squeeze.weight",
                          linear_weight_init(nq, in_dim, rng));
    squeeze_b =
        Parameter(name + ".squeeze.bias", linear_bias_init(nq, in_dim, rng));
    theta = Parameter(name + ".theta", init_vqc_params(config, rng));
    bloat_w = Parameter(name + ".bloat.weight",
                        linear_weight_init(out_dim, nq, rng));
    bloat_b =
        Parameter(name + ".bloat.bias", linear_bias_init(out_dim, nq, rng));
}

ParamList DressedVqc::params() {
    return {&squeeze_w, &squeeze_b, &theta, &bloat_w, &bloat_b};
}

Var DressedVqc::forward(Tape& tape, Var x) {
    Var squeezed = affine(tape.param(squeeze_w), x, tape.param(squeeze_b));
    Var expectations = vqc_forward(tape, config, tape.param(theta), squeezed);
    return affine(tape.param(bloat_w), expectations, tape.param(bloat_b));
}

Var DressedVqc::forward_rows(Tape& tape, Var x_rows) {
    const Tensor& X = x_rows.value();
    if (X.rank() != 2 || X.dim(1) != in_dim()) {
        throw ShapeError("dressed rows input " + X.shape_str() +
                         " does not match in_dim " + std::to_string(in_dim()));
    }
    std::size_t n_rows = X.dim(0);
    Var sw = tape.param(squeeze_w);
    Var sb = tape.param(squeeze_b);
    Var th = tape.param(theta);
    Var bw = tape.param(bloat_w);
    Var bb = tape.param(bloat_b);
    std::vector<Var> out_rows;
    out_rows.reserve(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        Var squeezed = affine(sw, tape.row(x_rows, r), sb);
        Var expectations = vqc_forward(tape, config, th, squeezed);
        out_rows.push_back(affine(bw, expectations, bb));
    }
    return tape.stack_rows(out_rows);
}

std::size_t dressed_param_count(std::size_t in_dim, const VqcConfig& config,
                                std::size_t out_dim) {
    std::size_t nq = static_cast<std::size_t>(config.n_qubits);
    return (in_dim * nq + nq) +
           static_cast<std::size_t>(config.n_theta()) +
           (nq * out_dim + out_dim);
}

}  // namespace qnlp
