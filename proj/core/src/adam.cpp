#include "vidcls/adam.hpp"

#include <cmath>

namespace vidcls {

double lr_schedule(const AdamConfig& cfg, std::int64_t step) {
    const std::int64_t applications = step / cfg.decay_steps;
    return cfg.learning_rate * std::pow(cfg.decay_rate, static_cast<double>(applications));
}

void adam_update(TensorBuffer& param, const std::vector<double>& grad, AdamMoments& moments,
                 const AdamConfig& cfg, std::int64_t t, double rate) {
    if (grad.size() != param.size()) {
        throw ShapeError("adam gradient size " + std::to_string(grad.size()) +
                         " does not match parameter " + param.shape_str());
    }
    if (moments.m.size() != param.size()) {
        moments.m.assign(param.size(), 0.0);
        moments.v.assign(param.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        moments.m[i] = cfg.beta1 * moments.m[i] + (1.0 - cfg.beta1) * g;
        moments.v[i] = cfg.beta2 * moments.v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = moments.m[i] / bc1;
        const double v_hat = moments.v[i] / bc2;
        param.values[i] -= rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

AdamOptimizer::AdamOptimizer(const std::vector<NamedTensor>& params, AdamConfig cfg)
    : params_(params), moments_(params.size()), cfg_(cfg) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        moments_[i].m.assign(params_[i].t->size(), 0.0);
        moments_[i].v.assign(params_[i].t->size(), 0.0);
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& named : params_) {
        named.t->ensure_grad();
        named.t->zero_grad();
    }
}

void AdamOptimizer::step() {
    const double rate = lr_schedule(cfg_, t_);  // decay counts completed steps
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        params_[i].t->ensure_grad();
        adam_update(*params_[i].t, params_[i].t->grad, moments_[i], cfg_, t_, rate);
    }
}

void AdamOptimizer::restore(std::vector<AdamMoments> moments, std::int64_t t) {
    if (moments.size() != params_.size()) {
        throw FormatError("optimizer state count does not match parameter count");
    }
    for (std::size_t i = 0; i < moments.size(); ++i) {
        if (moments[i].m.size() != params_[i].t->size()) {
            throw FormatError("optimizer state size mismatch for " + params_[i].name);
        }
    }
    moments_ = std::move(moments);
    t_ = t;
}

}  // namespace vidcls
