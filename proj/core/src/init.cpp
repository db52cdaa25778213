#include "qnlp/init.hpp"

#include <cmath>

namespace qnlp {

Tensor linear_weight_init(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    Tensor w({out_dim, in_dim});
    for (std::size_t i = 0; i < w.numel(); ++i) {
        w[i] = rng.uniform(-bound, bound);
    }
    return w;
}

Tensor linear_bias_init(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    Tensor b({out_dim});
    for (std::size_t i = 0; i < b.numel(); ++i) {
        b[i] = rng.uniform(-bound, bound);
    }
    return b;
}

Tensor normal_init(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    return t;
}

}  // namespace qnlp
