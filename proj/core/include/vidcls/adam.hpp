#pragma once

#include <cstdint>
#include <vector>

#include "vidcls/model.hpp"
#include "vidcls/tensor.hpp"

namespace vidcls {

struct AdamConfig {
    double learning_rate = 0.0006;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double decay_rate = 0.95;
    std::int64_t decay_steps = 2000;
};

/// Step-decayed learning rate: base · decay_rate^floor(step / decay_steps).
double lr_schedule(const AdamConfig& cfg, std::int64_t step);

/// First/second moment buffers for one parameter.
struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;
};

/// One update on a single parameter at (1-based) step t with the given rate.
void adam_update(TensorBuffer& param, const std::vector<double>& grad, AdamMoments& moments,
                 const AdamConfig& cfg, std::int64_t t, double rate);

/// Owns moments for a model's trainable parameters and applies updates from
/// their accumulated grads in registration order.
class AdamOptimizer {
public:
    AdamOptimizer(const std::vector<NamedTensor>& params, AdamConfig cfg);

    void zero_grad();
    /// Applies one update from the parameters' current grads; advances t.
    void step();

    std::int64_t step_count() const { return t_; }
    double current_lr() const { return lr_schedule(cfg_, t_); }
    const AdamConfig& config() const { return cfg_; }

    // Checkpoint access.
    const std::vector<AdamMoments>& moments() const { return moments_; }
    void restore(std::vector<AdamMoments> moments, std::int64_t t);
    const std::vector<NamedTensor>& params() const { return params_; }

private:
    std::vector<NamedTensor> params_;
    std::vector<AdamMoments> moments_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;  // completed steps
};

}  // namespace vidcls
