#pragma once

#include <cstdint>
#include <unordered_map>

#include "qnlp/parameter.hpp"

namespace qnlp {

/// Plain gradient descent: p -= lr * g.
class Sgd {
  public:
    explicit Sgd(double lr) : lr_(lr) {}
    void step(const ParamList& params);
    double lr() const { return lr_; }

  private:
    double lr_;
};

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adaptive-moment gradient descent with bias correction. One state slot
/// (first and second moment) is created per parameter at construction;
/// stepping an unknown parameter is a contract error.
class Adam {
  public:
    Adam(const ParamList& params, AdamConfig cfg = {});
    void step(const ParamList& params);
    const AdamConfig& config() const { return cfg_; }

  private:
    struct Slot {
        Tensor m;
        Tensor v;
    };
    AdamConfig cfg_;
    std::unordered_map<Parameter*, Slot> slots_;
    std::int64_t t_ = 0;
};

}  // namespace qnlp
