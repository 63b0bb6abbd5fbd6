#include "vidcls/pooling.hpp"


namespace vidcls {

LstmParams make_lstm_params(int input_dim, int cell_dim, bool layer_norm, RngStream& rng) {
    LstmParams p;
    auto in_proj = [&]() { return xavier(input_dim, cell_dim, {input_dim, cell_dim}, rng); };
    auto rec_proj = [&]() { return xavier(cell_dim, cell_dim, {cell_dim, cell_dim}, rng); };
    p.u_input = in_proj();
    p.u_forget = in_proj();
    p.u_output = in_proj();
    p.u_cand = in_proj();
    p.w_input = rec_proj();
    p.w_forget = rec_proj();
    p.w_output = rec_proj();
    p.w_cand = rec_proj();
    p.b_input = parameter({cell_dim}, std::vector<double>(static_cast<std::size_t>(cell_dim), 0.0));
    p.b_forget = parameter({cell_dim}, std::vector<double>(static_cast<std::size_t>(cell_dim), 1.0));
    p.b_output = parameter({cell_dim}, std::vector<double>(static_cast<std::size_t>(cell_dim), 0.0));
    p.b_cand = parameter({cell_dim}, std::vector<double>(static_cast<std::size_t>(cell_dim), 0.0));
    if (layer_norm) {
        for (int g = 0; g < 4; ++g) {
            p.ln_gain[static_cast<std::size_t>(g)] =
                parameter({cell_dim}, std::vector<double>(static_cast<std::size_t>(cell_dim), 1.0));
            p.ln_bias[static_cast<std::size_t>(g)] =
                parameter({cell_dim}, std::vector<double>(static_cast<std::size_t>(cell_dim), 0.0));
        }
    }
    return p;
}

CnnParams make_cnn_params(int input_dim, int channels, int window, RngStream& rng) {
    CnnParams p;
    p.filters = xavier(window * input_dim, channels, {window, input_dim, channels}, rng);
    p.bias = parameter({channels}, std::vector<double>(static_cast<std::size_t>(channels), 0.0));
    return p;
}

LstmStep lstm_step(const TensorPtr& input, const TensorPtr& prev_cell,
                   const TensorPtr& prev_hidden, const LstmParams& p, bool layer_norm) {
    auto pre_of = [&](const TensorPtr& u, const TensorPtr& w, const TensorPtr& b, int idx) {
        auto pre = add(add(vecmat(input, u), vecmat(prev_hidden, w)), b);
        if (layer_norm) {
            pre = vidcls::layer_norm(pre, p.ln_gain[static_cast<std::size_t>(idx)],
                                     p.ln_bias[static_cast<std::size_t>(idx)]);
        }
        return pre;
    };
    auto in_gate = sigmoid(pre_of(p.u_input, p.w_input, p.b_input, 0));
    auto forget_gate = sigmoid(pre_of(p.u_forget, p.w_forget, p.b_forget, 1));
    auto out_gate = sigmoid(pre_of(p.u_output, p.w_output, p.b_output, 2));
    auto candidate = tanh(pre_of(p.u_cand, p.w_cand, p.b_cand, 3));
    LstmStep step;
    step.cell = add(mul(prev_cell, forget_gate), mul(candidate, in_gate));
    step.hidden = mul(tanh(step.cell), out_gate);
    step.candidate = candidate;
    return step;
}

TensorPtr encode_lstm(const FeatureSequence& seq, const LstmParams& p, const LstmOptions& opts,
                      RngStream& rng, Mode mode) {
    if (seq.feature_dim() != p.input_dim()) {
        throw ShapeError("encoder input dim " + std::to_string(p.input_dim()) +
                         " does not match frames " + seq.frames->shape_str());
    }
    if (opts.layer_norm && !p.has_layer_norm()) {
        throw ConfigError("layer_norm requested but parameters were built without gains");
    }
    const int t = seq.num_frames();
    const int d = p.cell_dim();
    TensorPtr cell = zeros({d});
    TensorPtr hidden = zeros({d});
    TensorPtr cand_sum;
    for (int i = 0; i < t; ++i) {
        auto input = row(seq.frames, i);
        auto step = lstm_step(input, cell, hidden, p, opts.layer_norm);
        cell = step.cell;
        hidden = step.hidden;
        if (opts.concat_candidate_sum) {
            cand_sum = cand_sum ? add(cand_sum, step.candidate) : step.candidate;
        }
        if (i + 1 < t) {
            hidden = dropout(hidden, opts.drop_prob, mode, rng);
        }
    }
    std::vector<TensorPtr> parts = {cell, hidden};
    if (opts.concat_input_sum) parts.push_back(sum_rows(seq.frames));
    if (opts.concat_candidate_sum) parts.push_back(cand_sum);
    return concat(parts);
}

TensorPtr encode_cnn(const FeatureSequence& seq, const CnnParams& p) {
    return max_over_time(relu(conv_time(seq.frames, p.filters, p.bias)));
}

TensorPtr pe_matrix(int t, int d) {
    if (t < 1 || d < 1) throw ShapeError("pe_matrix needs positive dims");
    std::vector<double> m(static_cast<std::size_t>(t) * d);
    for (int i = 1; i <= t; ++i) {
        const double a = 1.0 - static_cast<double>(i) / t;
        const double b = 1.0 - 2.0 * static_cast<double>(i) / t;
        for (int j = 1; j <= d; ++j) {
            m[static_cast<std::size_t>(i - 1) * d + (j - 1)] =
                a - (static_cast<double>(j) / d) * b;
        }
    }
    return tensor({t, d}, std::move(m));
}

TensorPtr encode_position(const FeatureSequence& seq) {
    auto weights = pe_matrix(seq.num_frames(), seq.feature_dim());
    return sum_rows(mul(seq.frames, weights));
}

namespace {

TensorPtr attention_logits(const FeatureSequence& seq, double temperature) {
    if (temperature <= 0.0) throw ConfigError("attention temperature must be positive");
    auto total = sum_rows(seq.frames);              // Σ_i frame_i
    auto logits = matvec(seq.frames, total);        // ⟨frame_t, Σ_i frame_i⟩
    if (temperature != 1.0) logits = scale(logits, 1.0 / temperature);
    return logits;
}

}  // namespace

TensorPtr self_attention_weights(const FeatureSequence& seq, double temperature) {
    return softmax(attention_logits(seq, temperature));
}

TensorPtr encode_self_attention(const FeatureSequence& seq, double temperature) {
    auto weights = softmax(attention_logits(seq, temperature));
    return weighted_rowsum(seq.frames, weights);
}

double adaptive_noise_scale(const std::vector<int>& labels, const LabelStats& stats) {
    if (labels.empty()) throw DataError("adaptive noise needs a non-empty label set");
    double acc = 0.0;
    for (int label : labels) {
        if (label < 0 || label >= static_cast<int>(stats.counts.size())) {
            throw DataError("label " + std::to_string(label) + " out of stats range");
        }
        const std::int64_t count = stats.count(label);
        if (count < 1) {
            throw DataError("label " + std::to_string(label) + " has zero training examples");
        }
        acc += 1.0 / static_cast<double>(count);
    }
    return acc / static_cast<double>(labels.size());
}

TensorPtr encode_adaptive_noise(const FeatureSequence& seq, const LabelStats& stats,
                                RngStream& rng, Mode mode) {
    if (mode == Mode::eval) return sum_rows(seq.frames);
    const double noise_scale = adaptive_noise_scale(seq.labels, stats);
    auto noise = gaussian(seq.frames->shape, rng);
    return sum_rows(add(seq.frames, scale(noise, noise_scale)));
}

}  // namespace vidcls
