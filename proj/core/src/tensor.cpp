#include "vidcls/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace vidcls {

namespace {

std::size_t numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) n *= static_cast<std::size_t>(e);
    return n;
}

void check_positive_extents(const std::vector<int>& shape) {
    for (int e : shape) {
        if (e <= 0) throw ShapeError("tensor extents must be positive");
    }
}

TensorPtr make_result(std::vector<int> shape, std::vector<double> values,
                      std::vector<TensorPtr> parents) {
    auto out = std::make_shared<TensorBuffer>(std::move(shape), std::move(values));
    for (const auto& p : parents) {
        if (p->requires_grad) {
            out->requires_grad = true;
            break;
        }
    }
    out->parents = std::move(parents);
    return out;
}

void require_1d(const TensorPtr& x, const char* what) {
    if (x->ndim() != 1) {
        throw ShapeError(std::string(what) + " expects a 1-D tensor, got " + x->shape_str());
    }
}

void require_2d(const TensorPtr& x, const char* what) {
    if (x->ndim() != 2) {
        throw ShapeError(std::string(what) + " expects a 2-D tensor, got " + x->shape_str());
    }
}

}  // namespace

TensorBuffer::TensorBuffer(std::vector<int> shape_, std::vector<double> values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
    check_positive_extents(shape);
    if (numel(shape) != values.size()) {
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str());
    }
}

void TensorBuffer::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void TensorBuffer::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

std::string TensorBuffer::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

// ---- construction ----------------------------------------------------------

TensorPtr tensor(std::vector<int> shape, std::vector<double> values) {
    return std::make_shared<TensorBuffer>(std::move(shape), std::move(values));
}

TensorPtr zeros(std::vector<int> shape) {
    std::size_t n = numel(shape);
    return std::make_shared<TensorBuffer>(std::move(shape), std::vector<double>(n, 0.0));
}

TensorPtr full(std::vector<int> shape, double value) {
    std::size_t n = numel(shape);
    return std::make_shared<TensorBuffer>(std::move(shape), std::vector<double>(n, value));
}

TensorPtr parameter(std::vector<int> shape, std::vector<double> values) {
    auto t = tensor(std::move(shape), std::move(values));
    t->requires_grad = true;
    t->ensure_grad();
    return t;
}

TensorPtr gaussian(const std::vector<int>& shape, RngStream& rng) {
    std::size_t n = numel(shape);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.next_gaussian();
    return tensor(shape, std::move(v));
}

TensorPtr xavier(int fan_in, int fan_out, std::vector<int> shape, RngStream& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::size_t n = numel(shape);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (2.0 * rng.next_uniform() - 1.0) * bound;
    return parameter(std::move(shape), std::move(v));
}

// ---- linear algebra ---------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_2d(a, "matmul lhs");
    require_2d(b, "matmul rhs");
    const int m = a->dim(0), k = a->dim(1), k2 = b->dim(0), n = b->dim(1);
    if (k != k2) {
        throw ShapeError("matmul inner dimensions disagree: " + a->shape_str() + " vs " +
                         b->shape_str());
    }
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int kk = 0; kk < k; ++kk) {
            const double av = a->values[static_cast<std::size_t>(i) * k + kk];
            if (av == 0.0) continue;
            const double* brow = &b->values[static_cast<std::size_t>(kk) * n];
            double* orow = &out[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    auto res = make_result({m, n}, std::move(out), {a, b});
    if (res->requires_grad) {
        TensorBuffer* pa = a.get();
        TensorBuffer* pb = b.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [pa, pb, po, m, k, n]() {
            const std::vector<double>& g = po->grad;
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int kk = 0; kk < k; ++kk) {
                        double acc = 0.0;
                        for (int j = 0; j < n; ++j)
                            acc += g[static_cast<std::size_t>(i) * n + j] *
                                   pb->values[static_cast<std::size_t>(kk) * n + j];
                        pa->grad[static_cast<std::size_t>(i) * k + kk] += acc;
                    }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (int kk = 0; kk < k; ++kk)
                    for (int j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i)
                            acc += pa->values[static_cast<std::size_t>(i) * k + kk] *
                                   g[static_cast<std::size_t>(i) * n + j];
                        pb->grad[static_cast<std::size_t>(kk) * n + j] += acc;
                    }
            }
        };
    }
    return res;
}

TensorPtr vecmat(const TensorPtr& x, const TensorPtr& a) {
    require_1d(x, "vecmat lhs");
    require_2d(a, "vecmat rhs");
    const int k = x->dim(0), k2 = a->dim(0), n = a->dim(1);
    if (k != k2) {
        throw ShapeError("vecmat dimensions disagree: " + x->shape_str() + " vs " +
                         a->shape_str());
    }
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int kk = 0; kk < k; ++kk) {
        const double xv = x->values[static_cast<std::size_t>(kk)];
        if (xv == 0.0) continue;
        const double* arow = &a->values[static_cast<std::size_t>(kk) * n];
        for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] += xv * arow[j];
    }
    auto res = make_result({n}, std::move(out), {x, a});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* pa = a.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, pa, po, k, n]() {
            const std::vector<double>& g = po->grad;
            if (px->requires_grad) {
                px->ensure_grad();
                for (int kk = 0; kk < k; ++kk) {
                    const double* arow = &pa->values[static_cast<std::size_t>(kk) * n];
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += arow[j] * g[static_cast<std::size_t>(j)];
                    px->grad[static_cast<std::size_t>(kk)] += acc;
                }
            }
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (int kk = 0; kk < k; ++kk) {
                    const double xv = px->values[static_cast<std::size_t>(kk)];
                    if (xv == 0.0) continue;
                    double* grow = &pa->grad[static_cast<std::size_t>(kk) * n];
                    for (int j = 0; j < n; ++j) grow[j] += xv * g[static_cast<std::size_t>(j)];
                }
            }
        };
    }
    return res;
}

TensorPtr matvec(const TensorPtr& a, const TensorPtr& x) {
    require_2d(a, "matvec lhs");
    require_1d(x, "matvec rhs");
    const int m = a->dim(0), n = a->dim(1), n2 = x->dim(0);
    if (n != n2) {
        throw ShapeError("matvec dimensions disagree: " + a->shape_str() + " vs " +
                         x->shape_str());
    }
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        const double* arow = &a->values[static_cast<std::size_t>(i) * n];
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += arow[j] * x->values[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    auto res = make_result({m}, std::move(out), {a, x});
    if (res->requires_grad) {
        TensorBuffer* pa = a.get();
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [pa, px, po, m, n]() {
            const std::vector<double>& g = po->grad;
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (int i = 0; i < m; ++i) {
                    const double gi = g[static_cast<std::size_t>(i)];
                    if (gi == 0.0) continue;
                    double* grow = &pa->grad[static_cast<std::size_t>(i) * n];
                    for (int j = 0; j < n; ++j) grow[j] += gi * px->values[static_cast<std::size_t>(j)];
                }
            }
            if (px->requires_grad) {
                px->ensure_grad();
                for (int i = 0; i < m; ++i) {
                    const double gi = g[static_cast<std::size_t>(i)];
                    if (gi == 0.0) continue;
                    const double* arow = &pa->values[static_cast<std::size_t>(i) * n];
                    for (int j = 0; j < n; ++j) px->grad[static_cast<std::size_t>(j)] += gi * arow[j];
                }
            }
        };
    }
    return res;
}

// ---- elementwise ------------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) {
        throw ShapeError("add shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
    }
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->values[i] + b->values[i];
    auto res = make_result(a->shape, std::move(out), {a, b});
    if (res->requires_grad) {
        TensorBuffer* pa = a.get();
        TensorBuffer* pb = b.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [pa, pb, po]() {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < po->grad.size(); ++i) pa->grad[i] += po->grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < po->grad.size(); ++i) pb->grad[i] += po->grad[i];
            }
        };
    }
    return res;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) {
        throw ShapeError("mul shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
    }
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->values[i] * b->values[i];
    auto res = make_result(a->shape, std::move(out), {a, b});
    if (res->requires_grad) {
        TensorBuffer* pa = a.get();
        TensorBuffer* pb = b.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [pa, pb, po]() {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < po->grad.size(); ++i)
                    pa->grad[i] += po->grad[i] * pb->values[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < po->grad.size(); ++i)
                    pb->grad[i] += po->grad[i] * pa->values[i];
            }
        };
    }
    return res;
}

TensorPtr scale(const TensorPtr& x, double c) {
    std::vector<double> out(x->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x->values[i];
    auto res = make_result(x->shape, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, c]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < po->grad.size(); ++i) px->grad[i] += c * po->grad[i];
        };
    }
    return res;
}

namespace {

double stable_sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace

TensorPtr activation(const TensorPtr& x, Activation kind) {
    std::vector<double> out(x->size());
    switch (kind) {
        case Activation::sigmoid:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x->values[i]);
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x->values[i]);
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->values[i] > 0.0 ? x->values[i] : 0.0;
            break;
    }
    auto res = make_result(x->shape, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, kind]() {
            px->ensure_grad();
            switch (kind) {
                case Activation::sigmoid:
                    for (std::size_t i = 0; i < po->grad.size(); ++i) {
                        double s = po->values[i];
                        px->grad[i] += po->grad[i] * s * (1.0 - s);
                    }
                    break;
                case Activation::tanh:
                    for (std::size_t i = 0; i < po->grad.size(); ++i) {
                        double t = po->values[i];
                        px->grad[i] += po->grad[i] * (1.0 - t * t);
                    }
                    break;
                case Activation::relu:
                    for (std::size_t i = 0; i < po->grad.size(); ++i)
                        if (px->values[i] > 0.0) px->grad[i] += po->grad[i];
                    break;
            }
        };
    }
    return res;
}

TensorPtr sigmoid(const TensorPtr& x) { return activation(x, Activation::sigmoid); }
TensorPtr tanh(const TensorPtr& x) { return activation(x, Activation::tanh); }
TensorPtr relu(const TensorPtr& x) { return activation(x, Activation::relu); }

namespace {

// Softmax over out[begin, begin+len) in place, max-subtracted.
void softmax_span(std::vector<double>& out, const std::vector<double>& in,
                  std::size_t begin, std::size_t len) {
    double mx = in[begin];
    for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, in[begin + i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        double e = std::exp(in[begin + i] - mx);
        out[begin + i] = e;
        sum += e;
    }
    for (std::size_t i = 0; i < len; ++i) out[begin + i] /= sum;
}

// dx_i += p_i (g_i − Σ_j g_j p_j) over one span.
void softmax_span_backward(std::vector<double>& dx, const std::vector<double>& p,
                           const std::vector<double>& g, std::size_t begin, std::size_t len) {
    double dot = 0.0;
    for (std::size_t i = 0; i < len; ++i) dot += g[begin + i] * p[begin + i];
    for (std::size_t i = 0; i < len; ++i)
        dx[begin + i] += p[begin + i] * (g[begin + i] - dot);
}

}  // namespace

TensorPtr softmax(const TensorPtr& x) {
    require_1d(x, "softmax");
    std::vector<double> out(x->size());
    softmax_span(out, x->values, 0, x->size());
    auto res = make_result(x->shape, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po]() {
            px->ensure_grad();
            softmax_span_backward(px->grad, po->values, po->grad, 0, po->values.size());
        };
    }
    return res;
}

TensorPtr grouped_softmax(const TensorPtr& x, int group) {
    require_1d(x, "grouped_softmax");
    if (group < 1 || x->size() % static_cast<std::size_t>(group) != 0) {
        throw ShapeError("grouped_softmax group " + std::to_string(group) +
                         " does not divide " + x->shape_str());
    }
    std::vector<double> out(x->size());
    for (std::size_t b = 0; b < x->size(); b += static_cast<std::size_t>(group))
        softmax_span(out, x->values, b, static_cast<std::size_t>(group));
    auto res = make_result(x->shape, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, group]() {
            px->ensure_grad();
            for (std::size_t b = 0; b < po->values.size(); b += static_cast<std::size_t>(group))
                softmax_span_backward(px->grad, po->values, po->grad, b,
                                      static_cast<std::size_t>(group));
        };
    }
    return res;
}

TensorPtr group_sum(const TensorPtr& x, int group) {
    require_1d(x, "group_sum");
    if (group < 1 || x->size() % static_cast<std::size_t>(group) != 0) {
        throw ShapeError("group_sum group " + std::to_string(group) + " does not divide " +
                         x->shape_str());
    }
    const int n = static_cast<int>(x->size()) / group;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < group; ++j)
            out[static_cast<std::size_t>(i)] +=
                x->values[static_cast<std::size_t>(i) * group + j];
    auto res = make_result({n}, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, group, n]() {
            px->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < group; ++j)
                    px->grad[static_cast<std::size_t>(i) * group + j] +=
                        po->grad[static_cast<std::size_t>(i)];
        };
    }
    return res;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                     double eps) {
    require_1d(x, "layer_norm");
    if (x->size() < 2) throw ShapeError("layer_norm needs at least 2 entries");
    if (gain->shape != x->shape || bias->shape != x->shape) {
        throw ShapeError("layer_norm gain/bias shape must match input " + x->shape_str());
    }
    if (eps <= 0.0) throw ConfigError("layer_norm eps must be positive");
    const std::size_t n = x->size();
    double mean = 0.0;
    for (double v : x->values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x->values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var + eps);
    std::vector<double> norm(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
        norm[i] = (x->values[i] - mean) / sd;
        out[i] = gain->values[i] * norm[i] + bias->values[i];
    }
    auto res = make_result(x->shape, std::move(out), {x, gain, bias});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* pg = gain.get();
        TensorBuffer* pb = bias.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, pg, pb, po, norm = std::move(norm), sd]() {
            const std::size_t n = po->grad.size();
            if (pg->requires_grad) {
                pg->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) pg->grad[i] += po->grad[i] * norm[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) pb->grad[i] += po->grad[i];
            }
            if (px->requires_grad) {
                px->ensure_grad();
                // h = gain ⊙ g; dx = (h − mean(h) − norm·mean(h⊙norm)) / sd
                double mean_h = 0.0, mean_hn = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double h = pg->values[i] * po->grad[i];
                    mean_h += h;
                    mean_hn += h * norm[i];
                }
                mean_h /= static_cast<double>(n);
                mean_hn /= static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i) {
                    double h = pg->values[i] * po->grad[i];
                    px->grad[i] += (h - mean_h - norm[i] * mean_hn) / sd;
                }
            }
        };
    }
    return res;
}

TensorPtr dropout(const TensorPtr& x, double drop_prob, Mode mode, RngStream& rng) {
    if (drop_prob < 0.0 || drop_prob >= 1.0) {
        throw ConfigError("dropout drop_prob must lie in [0, 1), got " +
                          std::to_string(drop_prob));
    }
    if (mode == Mode::eval || drop_prob == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - drop_prob);
    std::vector<double> mask(x->size());
    std::vector<double> out(x->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        mask[i] = rng.next_uniform() >= drop_prob ? keep_scale : 0.0;
        out[i] = x->values[i] * mask[i];
    }
    auto res = make_result(x->shape, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, mask = std::move(mask)]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < po->grad.size(); ++i)
                px->grad[i] += po->grad[i] * mask[i];
        };
    }
    return res;
}

TensorPtr concat(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ShapeError("concat needs at least one part");
    std::size_t total = 0;
    for (const auto& p : parts) {
        require_1d(p, "concat");
        total += p->size();
    }
    std::vector<double> out;
    out.reserve(total);
    for (const auto& p : parts) out.insert(out.end(), p->values.begin(), p->values.end());
    auto res = make_result({static_cast<int>(total)}, std::move(out), parts);
    if (res->requires_grad) {
        TensorBuffer* po = res.get();
        std::vector<TensorBuffer*> raw;
        raw.reserve(parts.size());
        for (const auto& p : parts) raw.push_back(p.get());
        res->backward_fn = [po, raw = std::move(raw)]() {
            std::size_t off = 0;
            for (TensorBuffer* p : raw) {
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += po->grad[off + i];
                }
                off += p->size();
            }
        };
    }
    return res;
}

TensorPtr row(const TensorPtr& x, int i) {
    require_2d(x, "row");
    const int t = x->dim(0), d = x->dim(1);
    if (i < 0 || i >= t) {
        throw ShapeError("row index " + std::to_string(i) + " out of range for " + x->shape_str());
    }
    std::vector<double> out(x->values.begin() + static_cast<std::ptrdiff_t>(i) * d,
                            x->values.begin() + static_cast<std::ptrdiff_t>(i + 1) * d);
    auto res = make_result({d}, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, i, d]() {
            px->ensure_grad();
            for (int j = 0; j < d; ++j)
                px->grad[static_cast<std::size_t>(i) * d + j] += po->grad[static_cast<std::size_t>(j)];
        };
    }
    return res;
}

TensorPtr sum_rows(const TensorPtr& x) {
    require_2d(x, "sum_rows");
    const int t = x->dim(0), d = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < d; ++j)
            out[static_cast<std::size_t>(j)] += x->values[static_cast<std::size_t>(i) * d + j];
    auto res = make_result({d}, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, t, d]() {
            px->ensure_grad();
            for (int i = 0; i < t; ++i)
                for (int j = 0; j < d; ++j)
                    px->grad[static_cast<std::size_t>(i) * d + j] += po->grad[static_cast<std::size_t>(j)];
        };
    }
    return res;
}

TensorPtr weighted_rowsum(const TensorPtr& x, const TensorPtr& w) {
    require_2d(x, "weighted_rowsum");
    require_1d(w, "weighted_rowsum weights");
    const int t = x->dim(0), d = x->dim(1);
    if (w->dim(0) != t) {
        throw ShapeError("weighted_rowsum weight length " + w->shape_str() +
                         " does not match rows of " + x->shape_str());
    }
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < t; ++i) {
        const double wi = w->values[static_cast<std::size_t>(i)];
        const double* row = &x->values[static_cast<std::size_t>(i) * d];
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] += wi * row[j];
    }
    auto res = make_result({d}, std::move(out), {x, w});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* pw = w.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, pw, po, t, d]() {
            if (px->requires_grad) {
                px->ensure_grad();
                for (int i = 0; i < t; ++i) {
                    const double wi = pw->values[static_cast<std::size_t>(i)];
                    if (wi == 0.0) continue;
                    for (int j = 0; j < d; ++j)
                        px->grad[static_cast<std::size_t>(i) * d + j] +=
                            wi * po->grad[static_cast<std::size_t>(j)];
                }
            }
            if (pw->requires_grad) {
                pw->ensure_grad();
                for (int i = 0; i < t; ++i) {
                    const double* row = &px->values[static_cast<std::size_t>(i) * d];
                    double acc = 0.0;
                    for (int j = 0; j < d; ++j) acc += row[j] * po->grad[static_cast<std::size_t>(j)];
                    pw->grad[static_cast<std::size_t>(i)] += acc;
                }
            }
        };
    }
    return res;
}

TensorPtr sum_all(const TensorPtr& x) {
    double total = 0.0;
    for (double v : x->values) total += v;
    auto res = make_result({1}, {total}, {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += po->grad[0];
        };
    }
    return res;
}

TensorPtr clamp(const TensorPtr& x, double lo, double hi) {
    std::vector<double> out(x->size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::min(std::max(x->values[i], lo), hi);
    auto res = make_result(x->shape, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, lo, hi]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < po->grad.size(); ++i) {
                double v = px->values[i];
                if (v >= lo && v <= hi) px->grad[i] += po->grad[i];
            }
        };
    }
    return res;
}

TensorPtr conv_time(const TensorPtr& x, const TensorPtr& filter, const TensorPtr& bias) {
    require_2d(x, "conv_time input");
    if (filter->ndim() != 3) {
        throw ShapeError("conv_time filter expects [window, d_in, d_out], got " +
                         filter->shape_str());
    }
    require_1d(bias, "conv_time bias");
    const int t = x->dim(0), d_in = x->dim(1);
    const int window = filter->dim(0), f_in = filter->dim(1), d_out = filter->dim(2);
    if (f_in != d_in || bias->dim(0) != d_out) {
        throw ShapeError("conv_time shapes disagree: input " + x->shape_str() + ", filter " +
                         filter->shape_str() + ", bias " + bias->shape_str());
    }
    if (t < window) {
        throw ShapeError("conv_time input too short: " + std::to_string(t) + " frames < window " +
                         std::to_string(window));
    }
    const int t_out = t - window + 1;
    std::vector<double> out(static_cast<std::size_t>(t_out) * d_out);
    for (int p = 0; p < t_out; ++p) {
        for (int j = 0; j < d_out; ++j) out[static_cast<std::size_t>(p) * d_out + j] = bias->values[static_cast<std::size_t>(j)];
        for (int u = 0; u < window; ++u) {
            const double* row = &x->values[static_cast<std::size_t>(p + u) * d_in];
            const double* frow = &filter->values[static_cast<std::size_t>(u) * d_in * d_out];
            for (int k = 0; k < d_in; ++k) {
                const double xv = row[k];
                if (xv == 0.0) continue;
                const double* fcol = &frow[static_cast<std::size_t>(k) * d_out];
                double* orow = &out[static_cast<std::size_t>(p) * d_out];
                for (int j = 0; j < d_out; ++j) orow[j] += xv * fcol[j];
            }
        }
    }
    auto res = make_result({t_out, d_out}, std::move(out), {x, filter, bias});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* pf = filter.get();
        TensorBuffer* pb = bias.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, pf, pb, po, t_out, window, d_in, d_out]() {
            const std::vector<double>& g = po->grad;
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (int p = 0; p < t_out; ++p)
                    for (int j = 0; j < d_out; ++j)
                        pb->grad[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(p) * d_out + j];
            }
            if (pf->requires_grad) {
                pf->ensure_grad();
                for (int p = 0; p < t_out; ++p)
                    for (int u = 0; u < window; ++u) {
                        const double* row = &px->values[static_cast<std::size_t>(p + u) * d_in];
                        double* frow = &pf->grad[static_cast<std::size_t>(u) * d_in * d_out];
                        const double* grow = &g[static_cast<std::size_t>(p) * d_out];
                        for (int k = 0; k < d_in; ++k) {
                            const double xv = row[k];
                            if (xv == 0.0) continue;
                            double* fcol = &frow[static_cast<std::size_t>(k) * d_out];
                            for (int j = 0; j < d_out; ++j) fcol[j] += xv * grow[j];
                        }
                    }
            }
            if (px->requires_grad) {
                px->ensure_grad();
                for (int p = 0; p < t_out; ++p)
                    for (int u = 0; u < window; ++u) {
                        double* xrow = &px->grad[static_cast<std::size_t>(p + u) * d_in];
                        const double* frow = &pf->values[static_cast<std::size_t>(u) * d_in * d_out];
                        const double* grow = &g[static_cast<std::size_t>(p) * d_out];
                        for (int k = 0; k < d_in; ++k) {
                            const double* fcol = &frow[static_cast<std::size_t>(k) * d_out];
                            double acc = 0.0;
                            for (int j = 0; j < d_out; ++j) acc += fcol[j] * grow[j];
                            xrow[k] += acc;
                        }
                    }
            }
        };
    }
    return res;
}

TensorPtr max_over_time(const TensorPtr& x) {
    require_2d(x, "max_over_time");
    const int t = x->dim(0), d = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(d));
    std::vector<int> argmax(static_cast<std::size_t>(d), 0);
    for (int j = 0; j < d; ++j) {
        double best = x->values[static_cast<std::size_t>(j)];
        int best_i = 0;
        for (int i = 1; i < t; ++i) {
            double v = x->values[static_cast<std::size_t>(i) * d + j];
            if (v > best) {
                best = v;
                best_i = i;
            }
        }
        out[static_cast<std::size_t>(j)] = best;
        argmax[static_cast<std::size_t>(j)] = best_i;
    }
    auto res = make_result({d}, std::move(out), {x});
    if (res->requires_grad) {
        TensorBuffer* px = x.get();
        TensorBuffer* po = res.get();
        res->backward_fn = [px, po, argmax = std::move(argmax), d]() {
            px->ensure_grad();
            for (int j = 0; j < d; ++j)
                px->grad[static_cast<std::size_t>(argmax[static_cast<std::size_t>(j)]) * d + j] +=
                    po->grad[static_cast<std::size_t>(j)];
        };
    }
    return res;
}

// ---- autodiff driver --------------------------------------------------------

void backward(const TensorPtr& root, double seed) {
    if (!root->requires_grad) return;
    // Iterative post-order DFS over grad-requiring ancestors.
    std::vector<TensorBuffer*> topo;
    std::unordered_set<TensorBuffer*> visited;
    struct Frame {
        TensorBuffer* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            TensorBuffer* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            topo.push_back(f.node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    root->grad[0] += seed;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorBuffer* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn();
        }
    }
}

TensorPtr finite_diff_grad(const std::function<double(const TensorBuffer&)>& f,
                           const TensorPtr& x, double h) {
    if (h <= 0.0) throw ConfigError("finite_diff_grad step must be positive");
    auto out = zeros(x->shape);
    for (std::size_t i = 0; i < x->size(); ++i) {
        const double saved = x->values[i];
        x->values[i] = saved + h;
        const double up = f(*x);
        x->values[i] = saved - h;
        const double down = f(*x);
        x->values[i] = saved;
        out->values[i] = (up - down) / (2.0 * h);
    }
    return out;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                      double floor) {
    if (a.size() != b.size()) throw ShapeError("relative_error length mismatch");
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb), floor);
}

}  // namespace vidcls
