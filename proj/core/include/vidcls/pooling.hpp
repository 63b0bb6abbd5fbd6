#pragma once

#include <array>

#include "vidcls/dataset.hpp"
#include "vidcls/tensor.hpp"

namespace vidcls {

/// Recurrent encoder parameters. Input projections are [D×d], recurrent
/// projections [d×d], biases [d]. Layer-norm gains/biases exist only when the
/// encoder is built with that option.
struct LstmParams {
    TensorPtr u_input, u_forget, u_output, u_cand;
    TensorPtr w_input, w_forget, w_output, w_cand;
    TensorPtr b_input, b_forget, b_output, b_cand;
    std::array<TensorPtr, 4> ln_gain{};  // input, forget, output, candidate
    std::array<TensorPtr, 4> ln_bias{};

    bool has_layer_norm() const { return static_cast<bool>(ln_gain[0]); }
    int input_dim() const { return u_input->dim(0); }
    int cell_dim() const { return u_input->dim(1); }
};

struct LstmOptions {
    bool concat_input_sum = true;      // append Σ_t input_t to the output
    bool concat_candidate_sum = true;  // append Σ_t candidate_t to the output
    bool layer_norm = false;
    double drop_prob = 0.2;            // hidden-state dropout between steps
};

/// Forget-gate bias starts at +1 so early gradients can flow through time.
LstmParams make_lstm_params(int input_dim, int cell_dim, bool layer_norm, RngStream& rng);

struct CnnParams {
    TensorPtr filters;  // [window, D, channels]
    TensorPtr bias;     // [channels]
};

CnnParams make_cnn_params(int input_dim, int channels, int window, RngStream& rng);

/// One step of the gated recurrence; shared by the sequence encoder and the
/// per-step classification head. Returns the new (cell, hidden, candidate).
struct LstmStep {
    TensorPtr cell;
    TensorPtr hidden;
    TensorPtr candidate;
};
LstmStep lstm_step(const TensorPtr& input, const TensorPtr& prev_cell,
                   const TensorPtr& prev_hidden, const LstmParams& p, bool layer_norm);

/// Gated-recurrence encoder: output is [c_T, s_T] (length 2d), extended by
/// the input sum and candidate sum per the options (up to 4d).
TensorPtr encode_lstm(const FeatureSequence& seq, const LstmParams& p, const LstmOptions& opts,
                      RngStream& rng, Mode mode);

/// Temporal convolution + ReLU + max-over-time. Requires T >= window.
TensorPtr encode_cnn(const FeatureSequence& seq, const CnnParams& p);

/// Fixed positional weight matrix, 1-indexed:
/// L[i,j] = (1 − i/T) − (j/D)(1 − 2i/T).
TensorPtr pe_matrix(int t, int d);

/// Parameter-free: position-weighted frames summed over time.
TensorPtr encode_position(const FeatureSequence& seq);

/// Parameter-free soft selection of the dominant scene: each frame is
/// weighted by the softmax of its total inner product against all frames.
TensorPtr encode_self_attention(const FeatureSequence& seq, double temperature = 1.0);

/// Attention weights alone (softmax over frames); exposed for inspection.
TensorPtr self_attention_weights(const FeatureSequence& seq, double temperature = 1.0);

/// Mean inverse class frequency of the example's labels; the scale applied
/// to the per-frame noise.
double adaptive_noise_scale(const std::vector<int>& labels, const LabelStats& stats);

/// Sum pooling with per-frame Gaussian noise scaled by the label-frequency
/// term in train mode; plain frame sum in eval mode.
TensorPtr encode_adaptive_noise(const FeatureSequence& seq, const LabelStats& stats,
                                RngStream& rng, Mode mode);

}  // namespace vidcls
