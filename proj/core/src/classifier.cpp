#include "vidcls/classifier.hpp"

namespace vidcls {

namespace {

TensorPtr zero_bias(int n) {
    return parameter({n}, std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

}  // namespace

MoeParams make_moe_params(int num_classes, int num_experts, int input_dim, RngStream& rng) {
    if (num_experts < 1) throw ConfigError("mixture needs at least one expert");
    MoeParams p;
    p.num_classes = num_classes;
    p.num_experts = num_experts;
    const int rows = num_classes * num_experts;
    p.expert_w = xavier(input_dim, 1, {rows, input_dim}, rng);
    p.expert_b = zero_bias(rows);
    p.gate_w = xavier(input_dim, 1, {rows, input_dim}, rng);
    p.gate_b = zero_bias(rows);
    return p;
}

MoeParams make_moe2_params(int num_classes, int num_experts, int input_dim, int hidden_dim,
                           RngStream& rng) {
    if (num_experts < 1) throw ConfigError("mixture needs at least one expert");
    MoeParams p;
    p.num_classes = num_classes;
    p.num_experts = num_experts;
    const int rows = num_classes * num_experts;
    p.hidden_expert_w = xavier(input_dim, hidden_dim, {hidden_dim, input_dim}, rng);
    p.hidden_expert_b = zero_bias(hidden_dim);
    p.hidden_gate_w = xavier(input_dim, hidden_dim, {hidden_dim, input_dim}, rng);
    p.hidden_gate_b = zero_bias(hidden_dim);
    p.expert_w = xavier(hidden_dim, 1, {rows, hidden_dim}, rng);
    p.expert_b = zero_bias(rows);
    p.gate_w = xavier(hidden_dim, 1, {rows, hidden_dim}, rng);
    p.gate_b = zero_bias(rows);
    return p;
}

MlpParams make_mlp_params(int input_dim, int hidden_dim, int num_classes, bool layer_norm,
                          RngStream& rng) {
    MlpParams p;
    p.w1 = xavier(input_dim, hidden_dim, {hidden_dim, input_dim}, rng);
    p.b1 = zero_bias(hidden_dim);
    p.w2 = xavier(hidden_dim, hidden_dim, {hidden_dim, hidden_dim}, rng);
    p.b2 = zero_bias(hidden_dim);
    p.w3 = xavier(hidden_dim, hidden_dim, {hidden_dim, hidden_dim}, rng);
    p.b3 = zero_bias(hidden_dim);
    p.w_out = xavier(hidden_dim, num_classes, {num_classes, hidden_dim}, rng);
    p.b_out = zero_bias(num_classes);
    if (layer_norm) {
        for (int i = 0; i < 3; ++i) {
            p.ln_gain[static_cast<std::size_t>(i)] =
                parameter({hidden_dim}, std::vector<double>(static_cast<std::size_t>(hidden_dim), 1.0));
            p.ln_bias[static_cast<std::size_t>(i)] = zero_bias(hidden_dim);
        }
    }
    return p;
}

ManyToManyParams make_many_to_many_params(int input_dim, int cell_dim, int num_classes,
                                          RngStream& rng) {
    ManyToManyParams p;
    p.lstm = make_lstm_params(input_dim, cell_dim, /*layer_norm=*/false, rng);
    p.head_w = xavier(cell_dim, num_classes, {cell_dim, num_classes}, rng);
    p.head_b = zero_bias(num_classes);
    return p;
}

TensorPtr moe_gates(const TensorPtr& pooled, const MoeParams& p) {
    TensorPtr input = pooled;
    if (p.two_layer()) {
        input = add(matvec(p.hidden_gate_w, pooled), p.hidden_gate_b);
    }
    return grouped_softmax(add(matvec(p.gate_w, input), p.gate_b), p.num_experts);
}

namespace {

TensorPtr moe_combine(const TensorPtr& expert_in, const TensorPtr& gate_in, const MoeParams& p) {
    auto experts = sigmoid(add(matvec(p.expert_w, expert_in), p.expert_b));
    auto gates = grouped_softmax(add(matvec(p.gate_w, gate_in), p.gate_b), p.num_experts);
    return group_sum(mul(gates, experts), p.num_experts);
}

}  // namespace

TensorPtr moe_score(const TensorPtr& pooled, const MoeParams& p) {
    if (p.two_layer()) throw ConfigError("moe_score called with 2-layer parameters");
    return moe_combine(pooled, pooled, p);
}

TensorPtr moe2_score(const TensorPtr& pooled, const MoeParams& p) {
    if (!p.two_layer()) throw ConfigError("moe2_score needs hidden projections");
    auto expert_hidden = add(matvec(p.hidden_expert_w, pooled), p.hidden_expert_b);
    auto gate_hidden = add(matvec(p.hidden_gate_w, pooled), p.hidden_gate_b);
    return moe_combine(expert_hidden, gate_hidden, p);
}

MlpOutput mlp_score(const TensorPtr& pooled, const MlpParams& p) {
    auto layer = [&](const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int i) {
        auto pre = add(matvec(w, x), b);
        if (p.has_layer_norm()) {
            pre = layer_norm(pre, p.ln_gain[static_cast<std::size_t>(i)],
                             p.ln_bias[static_cast<std::size_t>(i)]);
        }
        return relu(pre);
    };
    auto h1 = layer(pooled, p.w1, p.b1, 0);
    auto h2 = layer(h1, p.w2, p.b2, 1);
    auto h3 = layer(h2, p.w3, p.b3, 2);
    MlpOutput out;
    out.last_hidden = h3;
    out.scores = sigmoid(add(matvec(p.w_out, h3), p.b_out));
    return out;
}

ManyToManyOutput many_to_many_score(const FeatureSequence& seq, const ManyToManyParams& p) {
    if (seq.feature_dim() != p.lstm.input_dim()) {
        throw ShapeError("head input dim " + std::to_string(p.lstm.input_dim()) +
                         " does not match frames " + seq.frames->shape_str());
    }
    const int t = seq.num_frames();
    const int d = p.lstm.cell_dim();
    TensorPtr cell = zeros({d});
    TensorPtr hidden = zeros({d});
    TensorPtr prob_sum;
    TensorPtr hidden_sum;
    for (int i = 0; i < t; ++i) {
        auto step = lstm_step(row(seq.frames, i), cell, hidden, p.lstm, /*layer_norm=*/false);
        cell = step.cell;
        hidden = step.hidden;
        auto prob = sigmoid(add(vecmat(hidden, p.head_w), p.head_b));
        prob_sum = prob_sum ? add(prob_sum, prob) : prob;
        hidden_sum = hidden_sum ? add(hidden_sum, hidden) : hidden;
    }
    ManyToManyOutput out;
    out.scores = scale(prob_sum, 1.0 / t);
    out.mean_hidden = scale(hidden_sum, 1.0 / t);
    return out;
}

}  // namespace vidcls
