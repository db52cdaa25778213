#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qnlp/tensor.hpp"

namespace qnlp {

/// A named trainable array. The gradient buffer is owned here and is
/// accumulated into by Tape::backward; callers zero it between steps.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string name_, Tensor value_)
        : name(std::move(name_)),
          value(std::move(value_)),
          grad(Tensor::zeros(value.shape())) {}

    std::size_t numel() const { return value.numel(); }
    void zero_grad() { grad.fill(0.0); }
};

using ParamList = std::vector<Parameter*>;

inline void zero_grads(const ParamList& params) {
    for (Parameter* p : params) p->zero_grad();
}

/// One line of a parameter-count breakdown.
struct ParamCountRow {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t count = 0;
};

struct ParamCountReport {
    std::vector<ParamCountRow> rows;
    std::size_t total = 0;
};

ParamCountReport count_parameters(const ParamList& params);

}  // namespace qnlp
