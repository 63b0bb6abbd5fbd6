#pragma once

#include "vidcls/pooling.hpp"
#include "vidcls/tensor.hpp"

namespace vidcls {

/// Mixture-of-experts head. Expert and gate weights are stored class-major as
/// [(C·E) × input] so scoring is a single matrix-vector product; row c·E+e is
/// the weight vector of expert e for class c. The hidden projection members
/// exist only for the 2-layer form.
struct MoeParams {
    int num_classes = 0;
    int num_experts = 0;

    TensorPtr expert_w;  // [(C·E) × d'] (1-layer) or [(C·E) × h] (2-layer)
    TensorPtr expert_b;  // [C·E]
    TensorPtr gate_w;
    TensorPtr gate_b;

    TensorPtr hidden_expert_w;  // [h × d']
    TensorPtr hidden_expert_b;  // [h]
    TensorPtr hidden_gate_w;
    TensorPtr hidden_gate_b;

    bool two_layer() const { return static_cast<bool>(hidden_expert_w); }
};

MoeParams make_moe_params(int num_classes, int num_experts, int input_dim, RngStream& rng);
MoeParams make_moe2_params(int num_classes, int num_experts, int input_dim, int hidden_dim,
                           RngStream& rng);

/// Three hidden layers with ReLU (layer norm before the activation when
/// enabled) and a final linear projection to per-class logits.
struct MlpParams {
    TensorPtr w1, b1, w2, b2, w3, b3;  // hidden stack
    TensorPtr w_out, b_out;            // [C × h], [C]
    std::array<TensorPtr, 3> ln_gain{};
    std::array<TensorPtr, 3> ln_bias{};

    bool has_layer_norm() const { return static_cast<bool>(ln_gain[0]); }
};

MlpParams make_mlp_params(int input_dim, int hidden_dim, int num_classes, bool layer_norm,
                          RngStream& rng);

struct ManyToManyParams {
    LstmParams lstm;
    TensorPtr head_w;  // [d × C]
    TensorPtr head_b;  // [C]
};

ManyToManyParams make_many_to_many_params(int input_dim, int cell_dim, int num_classes,
                                          RngStream& rng);

/// Per-class gate-weighted mixture of per-expert sigmoid probabilities.
TensorPtr moe_score(const TensorPtr& pooled, const MoeParams& p);

/// Gate distribution alone, [(C·E)], softmax within each class's experts.
TensorPtr moe_gates(const TensorPtr& pooled, const MoeParams& p);

/// 2-layer form: a shared linear projection feeds per-class expert and gate
/// logit vectors.
TensorPtr moe2_score(const TensorPtr& pooled, const MoeParams& p);

struct MlpOutput {
    TensorPtr scores;
    TensorPtr last_hidden;  // penultimate activation, the center-loss embedding
};
MlpOutput mlp_score(const TensorPtr& pooled, const MlpParams& p);

/// Runs the recurrence over raw frames, scores every step with a shared
/// sigmoid head, and averages the per-step probabilities.
struct ManyToManyOutput {
    TensorPtr scores;
    TensorPtr mean_hidden;  // time-averaged hidden state, the center-loss embedding
};
ManyToManyOutput many_to_many_score(const FeatureSequence& seq, const ManyToManyParams& p);

}  // namespace vidcls
