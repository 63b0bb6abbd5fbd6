#include <doctest.h>

#include <cmath>

#include "vidcls/classifier.hpp"

using namespace vidcls;

namespace {

void zero_all(MoeParams& p) {
    for (const auto& t : {p.expert_w, p.expert_b, p.gate_w, p.gate_b, p.hidden_expert_w,
                          p.hidden_expert_b, p.hidden_gate_w, p.hidden_gate_b}) {
        if (t) std::fill(t->values.begin(), t->values.end(), 0.0);
    }
}

FeatureSequence make_seq(int t, int d, std::vector<double> values) {
    FeatureSequence seq;
    seq.id = "clf";
    seq.labels = {0};
    seq.frames = tensor({t, d}, std::move(values));
    return seq;
}

}  // namespace

TEST_CASE("mixture with zero parameters scores one half everywhere") {
    RngStream rng(1);
    auto p = make_moe_params(4, 3, 6, rng);
    zero_all(p);
    auto x = gaussian({6}, rng);
    auto s = moe_score(x, p);
    REQUIRE(s->dim(0) == 4);
    for (double v : s->values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("single-expert mixture reduces to a sigmoid head") {
    RngStream rng(2);
    auto p = make_moe_params(3, 1, 5, rng);
    auto x = gaussian({5}, rng);
    auto s = moe_score(x, p);
    for (int c = 0; c < 3; ++c) {
        double logit = p.expert_b->values[static_cast<std::size_t>(c)];
        for (int j = 0; j < 5; ++j)
            logit += p.expert_w->values[static_cast<std::size_t>(c) * 5 + j] *
                     x->values[static_cast<std::size_t>(j)];
        CHECK(s->values[static_cast<std::size_t>(c)] ==
              doctest::Approx(1.0 / (1.0 + std::exp(-logit))));
    }
}

TEST_CASE("mixture scores stay strictly inside the unit interval") {
    RngStream rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = make_moe_params(5, 2, 4, rng);
        auto x = scale(gaussian({4}, rng), 3.0);
        auto s = moe_score(x, p);
        for (double v : s->values) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("mixture gates are a distribution per class") {
    RngStream rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = make_moe_params(3, 4, 5, rng);
        auto x = gaussian({5}, rng);
        auto g = moe_gates(x, p);
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (int e = 0; e < 4; ++e) {
                double v = g->values[static_cast<std::size_t>(c) * 4 + e];
                CHECK(v > 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("raising one expert raises only that class score") {
    RngStream rng(5);
    auto p = make_moe_params(4, 3, 5, rng);
    auto x = gaussian({5}, rng);
    auto before = moe_score(x, p);
    p.expert_b->values[1 * 3 + 2] += 0.5;  // class 1, expert 2
    auto after = moe_score(x, p);
    CHECK(after->values[1] > before->values[1]);
    CHECK(after->values[0] == doctest::Approx(before->values[0]));
    CHECK(after->values[2] == doctest::Approx(before->values[2]));
    CHECK(after->values[3] == doctest::Approx(before->values[3]));
}

TEST_CASE("two-layer mixture with zero output weights is flat") {
    RngStream rng(6);
    auto p = make_moe2_params(3, 2, 4, 5, rng);
    std::fill(p.expert_w->values.begin(), p.expert_w->values.end(), 0.0);
    std::fill(p.expert_b->values.begin(), p.expert_b->values.end(), 0.0);
    auto x = gaussian({4}, rng);
    auto s = moe2_score(x, p);
    for (double v : s->values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("two-layer mixture with identity projection matches the flat mixture") {
    RngStream rng(7);
    const int c = 3, e = 2, d = 4;
    auto flat = make_moe_params(c, e, d, rng);
    auto deep = make_moe2_params(c, e, d, d, rng);
    // Identity hidden projection, zero hidden bias, reuse the flat weights.
    for (const auto& w : {deep.hidden_expert_w, deep.hidden_gate_w}) {
        std::fill(w->values.begin(), w->values.end(), 0.0);
        for (int i = 0; i < d; ++i) w->values[static_cast<std::size_t>(i) * d + i] = 1.0;
    }
    std::fill(deep.hidden_expert_b->values.begin(), deep.hidden_expert_b->values.end(), 0.0);
    std::fill(deep.hidden_gate_b->values.begin(), deep.hidden_gate_b->values.end(), 0.0);
    deep.expert_w->values = flat.expert_w->values;
    deep.expert_b->values = flat.expert_b->values;
    deep.gate_w->values = flat.gate_w->values;
    deep.gate_b->values = flat.gate_b->values;

    auto x = gaussian({d}, rng);
    auto a = moe_score(x, flat);
    auto b = moe2_score(x, deep);
    for (std::size_t i = 0; i < a->size(); ++i)
        CHECK(a->values[i] == doctest::Approx(b->values[i]));
}

TEST_CASE("two-layer mixture gradient matches finite differences") {
    RngStream rng(8);
    auto p = make_moe2_params(3, 2, 4, 5, rng);
    auto x = gaussian({4}, rng);
    auto probe = gaussian({3}, rng);
    auto loss_of = [&]() { return sum_all(mul(moe2_score(x, p), probe)); };
    for (const auto& param : {p.hidden_expert_w, p.expert_w, p.gate_w, p.hidden_gate_b}) {
        param->zero_grad();
    }
    backward(loss_of());
    for (const auto& param : {p.hidden_expert_w, p.expert_w, p.gate_w, p.hidden_gate_b}) {
        auto numeric = finite_diff_grad(
            [&](const TensorBuffer&) { return loss_of()->values[0]; }, param, 1e-5);
        CHECK(relative_error(param->grad, numeric->values) < 1e-4);
    }
}

TEST_CASE("perceptron head with a zero output layer is flat") {
    RngStream rng(9);
    auto p = make_mlp_params(6, 8, 4, true, rng);
    std::fill(p.w_out->values.begin(), p.w_out->values.end(), 0.0);
    std::fill(p.b_out->values.begin(), p.b_out->values.end(), 0.0);
    auto out = mlp_score(gaussian({6}, rng), p);
    for (double v : out.scores->values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("perceptron scores stay inside the unit interval") {
    RngStream rng(10);
    for (bool ln : {false, true}) {
        auto p = make_mlp_params(5, 8, 4, ln, rng);
        for (int trial = 0; trial < 100; ++trial) {
            auto out = mlp_score(scale(gaussian({5}, rng), 4.0), p);
            for (double v : out.scores->values) {
                CHECK(v > 0.0);
                CHECK(v < 1.0);
            }
        }
    }
}

TEST_CASE("perceptron gradient matches finite differences") {
    RngStream rng(11);
    for (bool ln : {false, true}) {
        CAPTURE(ln);
        auto p = make_mlp_params(6, 8, 4, ln, rng);
        auto x = gaussian({6}, rng);
        auto probe = gaussian({4}, rng);
        auto loss_of = [&]() { return sum_all(mul(mlp_score(x, p).scores, probe)); };
        std::vector<TensorPtr> params = {p.w1, p.w3, p.b2, p.w_out};
        if (ln) params.push_back(p.ln_gain[1]);
        for (const auto& param : params) param->zero_grad();
        backward(loss_of());
        for (const auto& param : params) {
            auto numeric = finite_diff_grad(
                [&](const TensorBuffer&) { return loss_of()->values[0]; }, param, 1e-5);
            CHECK(relative_error(param->grad, numeric->values) < 1e-4);
        }
    }
}

TEST_CASE("per-step head on one frame is a single recurrent step plus sigmoid") {
    RngStream rng(12);
    auto p = make_many_to_many_params(3, 4, 2, rng);
    auto seq = make_seq(1, 3, {0.5, -1.0, 2.0});
    auto out = many_to_many_score(seq, p);

    auto step = lstm_step(row(seq.frames, 0), zeros({4}), zeros({4}), p.lstm, false);
    auto expected = sigmoid(add(vecmat(step.hidden, p.head_w), p.head_b));
    for (std::size_t i = 0; i < expected->size(); ++i)
        CHECK(out.scores->values[i] == doctest::Approx(expected->values[i]));
}

TEST_CASE("per-step head with zero output weights is flat for any sequence") {
    RngStream rng(13);
    auto p = make_many_to_many_params(3, 4, 5, rng);
    std::fill(p.head_w->values.begin(), p.head_w->values.end(), 0.0);
    std::fill(p.head_b->values.begin(), p.head_b->values.end(), 0.0);
    auto seq = make_seq(4, 3, std::vector<double>(12, 0.7));
    auto out = many_to_many_score(seq, p);
    for (double v : out.scores->values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("per-step averaging ignores frame duplication and order once steps decouple") {
    // Zero recurrent weights alone leave the cell accumulator coupled across
    // steps; driving the forget gate hard shut (bias -40) makes each step a
    // function of its own frame, which is the regime the averaging-symmetry
    // argument needs.
    RngStream rng(14);
    auto p = make_many_to_many_params(2, 3, 4, rng);
    for (const auto& w : {p.lstm.w_input, p.lstm.w_forget, p.lstm.w_output, p.lstm.w_cand}) {
        std::fill(w->values.begin(), w->values.end(), 0.0);
    }
    std::fill(p.lstm.b_forget->values.begin(), p.lstm.b_forget->values.end(), -40.0);

    auto base = make_seq(2, 2, {1.0, -0.5, 0.25, 2.0});
    auto doubled = make_seq(4, 2, {1.0, -0.5, 1.0, -0.5, 0.25, 2.0, 0.25, 2.0});
    auto reversed = make_seq(2, 2, {0.25, 2.0, 1.0, -0.5});

    auto a = many_to_many_score(base, p);
    auto b = many_to_many_score(doubled, p);
    auto c = many_to_many_score(reversed, p);
    for (std::size_t i = 0; i < a.scores->size(); ++i) {
        CHECK(std::abs(a.scores->values[i] - b.scores->values[i]) < 1e-12);
        CHECK(std::abs(a.scores->values[i] - c.scores->values[i]) < 1e-12);
    }
}

TEST_CASE("per-step head gradient matches finite differences") {
    RngStream rng(15);
    auto p = make_many_to_many_params(4, 5, 3, rng);
    FeatureSequence seq;
    seq.id = "g";
    seq.labels = {0};
    seq.frames = gaussian({3, 4}, rng);
    auto probe = gaussian({3}, rng);
    auto loss_of = [&]() { return sum_all(mul(many_to_many_score(seq, p).scores, probe)); };
    std::vector<TensorPtr> params = {p.lstm.u_input, p.lstm.w_cand, p.head_w, p.head_b};
    for (const auto& param : params) param->zero_grad();
    backward(loss_of());
    for (const auto& param : params) {
        auto numeric = finite_diff_grad(
            [&](const TensorBuffer&) { return loss_of()->values[0]; }, param, 1e-5);
        CHECK(relative_error(param->grad, numeric->values) < 1e-4);
    }
}
