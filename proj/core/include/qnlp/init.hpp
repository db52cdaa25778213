#pragma once

#include "qnlp/rng.hpp"
#include "qnlp/tensor.hpp"

namespace qnlp {

/// Linear-layer weight [out_dim, in_dim], uniform in
/// (-1/sqrt(in_dim), +1/sqrt(in_dim)).
Tensor linear_weight_init(std::size_t out_dim, std::size_t in_dim, Rng& rng);

/// Linear-layer bias [out_dim], same distribution as the weights.
Tensor linear_bias_init(std::size_t out_dim, std::size_t in_dim, Rng& rng);

/// Standard-normal entries; used for embedding tables.
Tensor normal_init(std::vector<std::size_t> shape, Rng& rng);

}  // namespace qnlp
