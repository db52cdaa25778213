#include "qnlp/optim.hpp"

#include <cmath>

#include "qnlp/error.hpp"

namespace qnlp {

void Sgd::step(const ParamList& params) {
    for (Parameter* p : params) {
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            p->value[i] -= lr_ * p->grad[i];
        }
    }
}

Adam::Adam(const ParamList& params, AdamConfig cfg) : cfg_(cfg) {
    for (Parameter* p : params) {
        slots_.emplace(p, Slot{Tensor::zeros(p->value.shape()),
                               Tensor::zeros(p->value.shape())});
    }
}

void Adam::step(const ParamList& params) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Parameter* p : params) {
        auto it = slots_.find(p);
        if (it == slots_.end()) {
            throw ContractError("optimizer has no state slot for parameter '" +
                                p->name + "'");
        }
        Slot& s = it->second;
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            double g = p->grad[i];
            s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
            s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
            double m_hat = s.m[i] / bc1;
            double v_hat = s.v[i] / bc2;
            p->value[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

ParamCountReport count_parameters(const ParamList& params) {
    ParamCountReport report;
    for (const Parameter* p : params) {
        report.rows.push_back({p->name, p->value.shape(), p->numel()});
        report.total += p->numel();
    }
    return report;
}

}  // namespace qnlp
