#include "vidcls/loss.hpp"

#include <algorithm>
#include <cmath>

namespace vidcls {

TensorPtr make_center_table(int num_classes, int embed_dim, RngStream& rng) {
    std::vector<double> v(static_cast<std::size_t>(num_classes) * embed_dim);
    for (auto& x : v) x = 0.1 * rng.next_gaussian();  // N(0, 0.01)
    return parameter({num_classes, embed_dim}, std::move(v));
}

namespace {

std::vector<char> positive_mask(const TensorPtr& probs, const std::vector<int>& labels,
                                double clamp_eps) {
    if (probs->ndim() != 1) throw ShapeError("cross_entropy expects a 1-D score vector");
    if (clamp_eps <= 0.0 || clamp_eps >= 0.5) {
        throw ConfigError("clamp_eps must lie in (0, 0.5)");
    }
    const int c = probs->dim(0);
    std::vector<char> positive(static_cast<std::size_t>(c), 0);
    for (int label : labels) {
        if (label < 0 || label >= c) {
            throw DataError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(c) + " classes");
        }
        positive[static_cast<std::size_t>(label)] = 1;
    }
    return positive;
}

}  // namespace

TensorPtr cross_entropy(const TensorPtr& probs, const std::vector<int>& labels,
                        double clamp_eps) {
    auto positive = positive_mask(probs, labels, clamp_eps);
    const int c = probs->dim(0);
    const double lo = clamp_eps, hi = 1.0 - clamp_eps;
    double total = 0.0;
    for (int i = 0; i < c; ++i) {
        const double p = std::min(std::max(probs->values[static_cast<std::size_t>(i)], lo), hi);
        total -= positive[static_cast<std::size_t>(i)] ? std::log(p) : std::log(1.0 - p);
    }
    auto res = tensor({1}, {total});
    res->parents = {probs};
    res->requires_grad = probs->requires_grad;
    if (res->requires_grad) {
        TensorBuffer* pp = probs.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [pp, po, positive = std::move(positive), lo, hi, c]() {
            pp->ensure_grad();
            const double g = po->grad[0];
            for (int i = 0; i < c; ++i) {
                const double p = pp->values[static_cast<std::size_t>(i)];
                if (p < lo || p > hi) continue;  // clamped region, flat
                const double d = positive[static_cast<std::size_t>(i)] ? -1.0 / p : 1.0 / (1.0 - p);
                pp->grad[static_cast<std::size_t>(i)] += g * d;
            }
        };
    }
    return res;
}

TensorPtr cross_entropy_terms(const TensorPtr& probs, const std::vector<int>& labels,
                              double clamp_eps) {
    auto positive = positive_mask(probs, labels, clamp_eps);
    const int c = probs->dim(0);
    const double lo = clamp_eps, hi = 1.0 - clamp_eps;
    std::vector<double> terms(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i) {
        const double p = std::min(std::max(probs->values[static_cast<std::size_t>(i)], lo), hi);
        terms[static_cast<std::size_t>(i)] =
            positive[static_cast<std::size_t>(i)] ? -std::log(p) : -std::log(1.0 - p);
    }
    auto res = tensor({c}, std::move(terms));
    res->parents = {probs};
    res->requires_grad = probs->requires_grad;
    if (res->requires_grad) {
        TensorBuffer* pp = probs.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [pp, po, positive = std::move(positive), lo, hi, c]() {
            pp->ensure_grad();
            for (int i = 0; i < c; ++i) {
                const double p = pp->values[static_cast<std::size_t>(i)];
                if (p < lo || p > hi) continue;
                const double d = positive[static_cast<std::size_t>(i)] ? -1.0 / p : 1.0 / (1.0 - p);
                pp->grad[static_cast<std::size_t>(i)] += po->grad[static_cast<std::size_t>(i)] * d;
            }
        };
    }
    return res;
}

TensorPtr center_loss(const TensorPtr& embedding, const std::vector<int>& labels,
                      const TensorPtr& centers) {
    if (labels.empty()) throw DataError("center loss needs a non-empty label set");
    if (embedding->ndim() != 1 || centers->ndim() != 2 ||
        centers->dim(1) != embedding->dim(0)) {
        throw ShapeError("center table " + centers->shape_str() +
                         " incompatible with embedding " + embedding->shape_str());
    }
    const int d = embedding->dim(0);
    const int c = centers->dim(0);
    for (int label : labels) {
        if (label < 0 || label >= c) {
            throw DataError("label " + std::to_string(label) + " out of center-table range");
        }
    }
    const double inv_n = 1.0 / static_cast<double>(labels.size());
    double total = 0.0;
    for (int label : labels) {
        const double* center = &centers->values[static_cast<std::size_t>(label) * d];
        for (int j = 0; j < d; ++j) {
            const double diff = embedding->values[static_cast<std::size_t>(j)] - center[j];
            total += diff * diff;
        }
    }
    total *= inv_n;
    auto res = tensor({1}, {total});
    res->parents = {embedding, centers};
    res->requires_grad = embedding->requires_grad || centers->requires_grad;
    if (res->requires_grad) {
        TensorBuffer* pe = embedding.get();
        TensorBuffer* pc = centers.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [pe, pc, po, labels, inv_n, d]() {
            const double g = po->grad[0];
            for (int label : labels) {
                const double* center = &pc->values[static_cast<std::size_t>(label) * d];
                for (int j = 0; j < d; ++j) {
                    const double diff = pe->values[static_cast<std::size_t>(j)] - center[j];
                    const double contrib = g * 2.0 * inv_n * diff;
                    if (pe->requires_grad) {
                        pe->ensure_grad();
                        pe->grad[static_cast<std::size_t>(j)] += contrib;
                    }
                    if (pc->requires_grad) {
                        pc->ensure_grad();
                        pc->grad[static_cast<std::size_t>(label) * d + j] -= contrib;
                    }
                }
            }
        };
    }
    return res;
}

TensorPtr joint_loss(const TensorPtr& ce, const TensorPtr& lc, double lambda) {
    if (lambda < 0.0) throw ConfigError("loss balance lambda must be >= 0");
    return add(ce, scale(lc, lambda));
}

TensorPtr pseudo_huber(const TensorPtr& ce, double delta) {
    if (ce->size() != 1) throw ShapeError("pseudo_huber expects a scalar loss");
    return pseudo_huber_elementwise(ce, delta);
}

TensorPtr pseudo_huber_elementwise(const TensorPtr& x, double delta) {
    if (delta <= 0.0) throw ConfigError("pseudo_huber delta must be positive");
    const std::size_t n = x->size();
    std::vector<double> out(n), slope(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x->values[i];
        const double root = std::sqrt(1.0 + (v / delta) * (v / delta));
        out[i] = delta * delta * (root - 1.0);
        slope[i] = v / root;
    }
    auto res = tensor(x->shape, std::move(out));
    res->parents = {x};
    res->requires_grad = x->requires_grad;
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, slope = std::move(slope)]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < po->grad.size(); ++i)
                px->grad[i] += po->grad[i] * slope[i];
        };
    }
    return res;
}

}  // namespace vidcls
