#pragma once

#include <cstdint>
#include <vector>

#include "ffr/tape.hpp"
#include "ffr/tensor.hpp"

namespace ffr {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment accumulators are allocated per parameter
/// of the store the state was created for and must stay aligned with it.
class AdamState {
public:
    AdamState() = default;
    AdamState(const ParamStore& store, AdamConfig cfg = {});

    /// One update from the gradients currently held in the store.
    void step(ParamStore& store);

    std::int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // Serialization access.
    std::size_t param_count() const { return m_.size(); }
    const Tensor& first_moment(std::size_t i) const { return m_[i]; }
    const Tensor& second_moment(std::size_t i) const { return v_[i]; }
    Tensor& first_moment(std::size_t i) { return m_[i]; }
    Tensor& second_moment(std::size_t i) { return v_[i]; }
    void set_step_count(std::int64_t t) { t_ = t; }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

} // namespace ffr
