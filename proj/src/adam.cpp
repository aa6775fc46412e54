#include "ffr/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ffr {

AdamState::AdamState(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(store.count());
    v_.reserve(store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
        m_.push_back(Tensor::zeros(store.value(i).shape()));
        v_.push_back(Tensor::zeros(store.value(i).shape()));
    }
}

void AdamState::step(ParamStore& store) {
    if (store.count() != m_.size()) {
        throw std::logic_error("adam: state holds " + std::to_string(m_.size()) + " moments for " +
                               std::to_string(store.count()) + " parameters");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < m_.size(); ++p) {
        Tensor& w = store.value(p);
        const Tensor& g = store.grad(p);
        Tensor& m = m_[p];
        Tensor& v = v_[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

} // namespace ffr
