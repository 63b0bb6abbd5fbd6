#include <doctest.h>

#include <cmath>

#include "vidcls/tensor.hpp"

using namespace vidcls;

namespace {

// Scalar probe for gradient checks: sum of fixed-weight elementwise products,
// so every output coordinate contributes.
TensorPtr weighted_probe(const TensorPtr& out, RngStream& rng) {
    auto w = gaussian(out->shape, rng);
    return sum_all(mul(out, w));
}

// Analytic-vs-numeric relative error of d(probe ∘ op)/d(leaf).
double op_grad_error(const std::function<TensorPtr()>& forward, const TensorPtr& leaf,
                     double h = 1e-5) {
    leaf->requires_grad = true;
    leaf->ensure_grad();
    leaf->zero_grad();
    auto loss = forward();
    backward(loss);
    auto numeric = finite_diff_grad(
        [&](const TensorBuffer&) { return forward()->values[0]; }, leaf, h);
    return relative_error(leaf->grad, numeric->values);
}

}  // namespace

TEST_CASE("matmul identity") {
    auto eye = tensor({2, 2}, {1, 0, 0, 1});
    auto x = tensor({2, 3}, {1, 2, 3, 4, 5, 6});
    auto y = matmul(eye, x);
    CHECK(y->values == x->values);
}

TEST_CASE("matmul hand example") {
    auto a = tensor({2, 2}, {1, 2, 3, 4});
    auto b = tensor({2, 1}, {1, 1});
    auto y = matmul(a, b);
    CHECK(y->values[0] == doctest::Approx(3.0));
    CHECK(y->values[1] == doctest::Approx(7.0));
}

TEST_CASE("matmul rejects mismatched shapes naming both") {
    auto a = tensor({2, 3}, std::vector<double>(6, 1.0));
    auto b = tensor({2, 2}, std::vector<double>(4, 1.0));
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), ShapeError);
    try {
        matmul(a, b);
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("[2x2]") != std::string::npos);
    }
}

TEST_CASE("matmul backward matches finite differences") {
    RngStream rng(11);
    auto a = gaussian({3, 4}, rng);
    auto b = gaussian({4, 2}, rng);
    RngStream probe_rng = rng.derive("probe");
    auto forward = [&]() {
        RngStream r = probe_rng;
        return weighted_probe(matmul(a, b), r);
    };
    CHECK(op_grad_error(forward, a) < 1e-6);
    CHECK(op_grad_error(forward, b) < 1e-6);
}

TEST_CASE("activation spot values") {
    auto x = tensor({3}, {0.0, -3.0, 3.0});
    auto s = sigmoid(x);
    CHECK(s->values[0] == doctest::Approx(0.5));
    auto r = relu(x);
    CHECK(r->values[1] == 0.0);
    CHECK(r->values[2] == 3.0);
}

TEST_CASE("tanh backward at 0.7 matches central difference tightly") {
    auto x = tensor({1}, {0.7});
    x->requires_grad = true;
    x->ensure_grad();
    auto y = tanh(x);
    backward(y);
    auto numeric = finite_diff_grad(
        [](const TensorBuffer& t) { return std::tanh(t.values[0]); }, x, 1e-5);
    const double analytic = x->grad[0];
    CHECK(std::abs(analytic - numeric->values[0]) / std::abs(analytic) < 1e-8);
}

TEST_CASE("softmax equal logits and shift invariance") {
    auto even = softmax(tensor({2}, {0.0, 0.0}));
    CHECK(even->values[0] == doctest::Approx(0.5));
    CHECK(even->values[1] == doctest::Approx(0.5));

    auto c = softmax(tensor({3}, {42.5, 42.5, 42.5}));
    for (double v : c->values) CHECK(v == doctest::Approx(1.0 / 3.0));

    RngStream rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> logits(5);
        for (auto& v : logits) v = 4.0 * rng.next_gaussian();
        auto p = softmax(tensor({5}, logits));
        for (auto& v : logits) v += 123.456;
        auto q = softmax(tensor({5}, logits));
        for (int i = 0; i < 5; ++i)
            CHECK(std::abs(p->values[static_cast<std::size_t>(i)] -
                           q->values[static_cast<std::size_t>(i)]) < 1e-12);
    }
}

TEST_CASE("softmax survives huge logits and normalizes tightly") {
    auto p = softmax(tensor({2}, {1000.0, 0.0}));
    CHECK(p->values[0] == doctest::Approx(1.0));
    CHECK(p->values[1] == doctest::Approx(0.0));
    CHECK(std::isfinite(p->values[0]));

    RngStream rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> logits(7);
        for (auto& v : logits) v = 100.0 * rng.next_gaussian();
        auto q = softmax(tensor({7}, logits));
        double sum = 0.0;
        double mn = 1.0;
        for (double v : q->values) {
            sum += v;
            mn = std::min(mn, v);
        }
        CHECK(mn > 0.0);
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax backward matches finite differences") {
    RngStream rng(21);
    auto x = gaussian({6}, rng);
    RngStream probe_rng = rng.derive("probe");
    auto forward = [&]() {
        RngStream r = probe_rng;
        return weighted_probe(softmax(x), r);
    };
    CHECK(op_grad_error(forward, x) < 1e-6);
}

TEST_CASE("layer_norm spot values") {
    auto gain = full({2}, 1.0);
    auto bias = full({2}, 0.0);
    auto y = layer_norm(tensor({2}, {1.0, 3.0}), gain, bias, 1e-12);
    CHECK(y->values[0] == doctest::Approx(-1.0));
    CHECK(y->values[1] == doctest::Approx(1.0));

    // Constant input collapses to the bias regardless of the constant.
    auto b2 = tensor({3}, {0.5, -0.25, 2.0});
    auto y2 = layer_norm(full({3}, 7.0), full({3}, 1.0), b2);
    auto y3 = layer_norm(full({3}, -456.0), full({3}, 1.0), b2);
    for (int i = 0; i < 3; ++i) {
        CHECK(y2->values[static_cast<std::size_t>(i)] ==
              doctest::Approx(b2->values[static_cast<std::size_t>(i)]).epsilon(1e-9));
        CHECK(y2->values[static_cast<std::size_t>(i)] ==
              doctest::Approx(y3->values[static_cast<std::size_t>(i)]).epsilon(1e-9));
    }
}

TEST_CASE("layer_norm output is standardized") {
    RngStream rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        // Spread well above eps so the regularizer cannot bias the variance.
        auto x = scale(gaussian({8}, rng), 50.0);
        auto y = layer_norm(x, full({8}, 1.0), full({8}, 0.0));
        double mean = 0.0;
        for (double v : y->values) mean += v;
        mean /= 8.0;
        double var = 0.0;
        for (double v : y->values) var += (v - mean) * (v - mean);
        var /= 8.0;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("layer_norm backward matches finite differences") {
    RngStream rng(41);
    auto x = gaussian({8}, rng);
    auto gain = gaussian({8}, rng);
    auto bias = gaussian({8}, rng);
    RngStream probe_rng = rng.derive("probe");
    auto forward = [&]() {
        RngStream r = probe_rng;
        return weighted_probe(layer_norm(x, gain, bias), r);
    };
    CHECK(op_grad_error(forward, x) < 1e-5);
    CHECK(op_grad_error(forward, gain) < 1e-5);
    CHECK(op_grad_error(forward, bias) < 1e-5);
}

TEST_CASE("dropout eval and zero-prob are identities") {
    RngStream rng(51);
    auto x = gaussian({10}, rng);
    CHECK(dropout(x, 0.4, Mode::eval, rng).get() == x.get());
    CHECK(dropout(x, 0.0, Mode::train, rng).get() == x.get());
}

TEST_CASE("dropout rejects bad probabilities") {
    RngStream rng(1);
    auto x = full({2}, 1.0);
    CHECK_THROWS_AS(dropout(x, 1.0, Mode::train, rng), ConfigError);
    CHECK_THROWS_AS(dropout(x, -0.1, Mode::train, rng), ConfigError);
}

TEST_CASE("dropout is unbiased over many draws") {
    auto x = tensor({4}, {1.0, -2.0, 0.5, 3.0});
    const double drop = 0.2;
    const int trials = 100000;
    std::vector<double> acc(4, 0.0);
    RngStream rng(61);
    for (int i = 0; i < trials; ++i) {
        auto y = dropout(x, drop, Mode::train, rng);
        for (int j = 0; j < 4; ++j) acc[static_cast<std::size_t>(j)] += y->values[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < 4; ++j) {
        const double mean = acc[static_cast<std::size_t>(j)] / trials;
        CHECK(std::abs(mean - x->values[static_cast<std::size_t>(j)]) <
              0.01 * std::abs(x->values[static_cast<std::size_t>(j)]));
    }
}

TEST_CASE("dropout mask replays from the stream position") {
    auto x = full({32}, 1.0);
    RngStream rng(71);
    rng.seek(1000);
    auto a = dropout(x, 0.5, Mode::train, rng);
    rng.seek(1000);
    auto b = dropout(x, 0.5, Mode::train, rng);
    CHECK(a->values == b->values);
}

TEST_CASE("gaussian tensor is reproducible") {
    RngStream a(81), b(81);
    auto x = gaussian({3, 4}, a);
    auto y = gaussian({3, 4}, b);
    CHECK(x->values == y->values);
}

TEST_CASE("gaussian tensor moments over a million draws") {
    RngStream rng(82);
    auto x = gaussian({1000, 1000}, rng);
    double sum = 0.0, sumsq = 0.0;
    for (double v : x->values) {
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(x->size());
    const double var = sumsq / static_cast<double>(x->size()) - mean * mean;
    CHECK(mean >= -0.01);
    CHECK(mean <= 0.01);
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);
}

TEST_CASE("finite difference oracle on closed forms") {
    auto x = tensor({1}, {3.0});
    auto g = finite_diff_grad(
        [](const TensorBuffer& t) { return t.values[0] * t.values[0]; }, x);
    CHECK(std::abs(g->values[0] - 6.0) < 1e-6);

    auto c = finite_diff_grad([](const TensorBuffer&) { return 42.0; }, x);
    CHECK(c->values[0] == 0.0);

    auto v = tensor({4}, {1.0, 2.0, -1.0, 0.5});
    auto s = finite_diff_grad(
        [](const TensorBuffer& t) {
            double sum = 0.0;
            for (double u : t.values) sum += u;
            return sum;
        },
        v);
    for (double u : s->values) CHECK(u == doctest::Approx(1.0));
}

TEST_CASE("every differentiable op matches finite differences on random inputs") {
    RngStream rng(91);
    for (int trial = 0; trial < 10; ++trial) {
        RngStream probe_rng = rng.derive("probe", static_cast<std::uint64_t>(trial));

        auto x1 = gaussian({5}, rng);
        auto x2 = gaussian({5}, rng);
        auto m1 = gaussian({4, 5}, rng);
        auto m2 = gaussian({3, 4}, rng);
        auto m3 = gaussian({5, 3}, rng);

        auto check = [&](const char* what, const std::function<TensorPtr()>& fwd,
                         const TensorPtr& leaf) {
            INFO(what << " trial " << trial);
            CHECK(op_grad_error(fwd, leaf) < 1e-4);
        };

        check("add", [&]() { RngStream r = probe_rng; return weighted_probe(add(x1, x2), r); }, x1);
        check("mul", [&]() { RngStream r = probe_rng; return weighted_probe(mul(x1, x2), r); }, x2);
        check("scale", [&]() { RngStream r = probe_rng; return weighted_probe(scale(x1, -1.7), r); }, x1);
        check("sigmoid", [&]() { RngStream r = probe_rng; return weighted_probe(sigmoid(x1), r); }, x1);
        check("tanh", [&]() { RngStream r = probe_rng; return weighted_probe(tanh(x1), r); }, x1);
        check("relu", [&]() { RngStream r = probe_rng; return weighted_probe(relu(x1), r); }, x1);
        check("vecmat", [&]() { RngStream r = probe_rng; return weighted_probe(vecmat(x1, m3), r); }, x1);
        check("matvec", [&]() { RngStream r = probe_rng; return weighted_probe(matvec(m1, x1), r); }, m1);
        check("grouped_softmax",
              [&]() { RngStream r = probe_rng; return weighted_probe(grouped_softmax(concat({x1, x2}), 5), r); }, x1);
        check("group_sum",
              [&]() { RngStream r = probe_rng; return weighted_probe(group_sum(concat({x1, x2}), 2), r); }, x2);
        check("sum_rows", [&]() { RngStream r = probe_rng; return weighted_probe(sum_rows(m2), r); }, m2);
        check("row", [&]() { RngStream r = probe_rng; return weighted_probe(row(m2, 1), r); }, m2);
        check("weighted_rowsum",
              [&]() { RngStream r = probe_rng; return weighted_probe(weighted_rowsum(m1, tensor({4}, {0.3, -1.0, 0.7, 2.0})), r); }, m1);
        check("max_over_time", [&]() { RngStream r = probe_rng; return weighted_probe(max_over_time(m2), r); }, m2);
        check("clamp", [&]() { RngStream r = probe_rng; return weighted_probe(clamp(x1, -0.5, 0.5), r); }, x1);
        check("sum_all", [&]() { RngStream r = probe_rng; return weighted_probe(sum_all(m2), r); }, m2);
        check("concat", [&]() { RngStream r = probe_rng; return weighted_probe(concat({x1, x2, x1}), r); }, x1);

        auto frames = gaussian({6, 3}, rng);
        auto filters = gaussian({2, 3, 4}, rng);
        auto bias = gaussian({4}, rng);
        auto conv_fwd = [&]() {
            RngStream r = probe_rng;
            return weighted_probe(conv_time(frames, filters, bias), r);
        };
        check("conv_time/frames", conv_fwd, frames);
        check("conv_time/filters", conv_fwd, filters);
        check("conv_time/bias", conv_fwd, bias);

        auto drop_fwd = [&]() {
            RngStream mask_rng(4242);  // frozen mask per evaluation
            RngStream r = probe_rng;
            return weighted_probe(dropout(x2, 0.3, Mode::train, mask_rng), r);
        };
        check("dropout", drop_fwd, x2);
    }
}

TEST_CASE("grad accumulates across repeated uses of one parameter") {
    auto x = tensor({2}, {1.0, 2.0});
    x->requires_grad = true;
    x->ensure_grad();
    auto y = sum_all(add(x, x));
    backward(y);
    CHECK(x->grad[0] == doctest::Approx(2.0));
    CHECK(x->grad[1] == doctest::Approx(2.0));

    // A second backward accumulates on top instead of overwriting.
    auto y2 = sum_all(x);
    backward(y2);
    CHECK(x->grad[0] == doctest::Approx(3.0));
}

TEST_CASE("ops stay finite on large-magnitude inputs") {
    auto x = tensor({4}, {1e6, -1e6, 123456.0, -0.5});
    for (const auto& out : {sigmoid(x), tanh(x), relu(x), softmax(x), clamp(x, -2.0, 2.0)}) {
        for (double v : out->values) CHECK(std::isfinite(v));
    }
    auto ln = layer_norm(x, full({4}, 1.0), full({4}, 0.0));
    for (double v : ln->values) CHECK(std::isfinite(v));
}
