#pragma once

#include <cstdint>
#include <string>

namespace vidcls {

enum class PoolingKind { lstm, cnn, position, attention, noise };
enum class ClassifierKind { moe, moe2, mlp, many_to_many };
enum class LossKind { ce, ce_center, huber_ce };

/// Declarative selection of one choice per pipeline component plus
/// hyperparameters. Parsed from a flat JSON object with dotted keys; every
/// key has a default, unknown keys are rejected.
struct ModelConfig {
    // dims
    int feature_dim = 64;  // per-frame feature width
    int cell_dim = 64;     // recurrent cell width
    int num_classes = 50;

    // pooling component
    PoolingKind pooling = PoolingKind::lstm;
    bool lstm_input_sum = true;
    bool lstm_candidate_sum = true;
    bool lstm_layer_norm = false;
    double lstm_drop_prob = 0.2;
    int cnn_window = 5;
    int cnn_channels = 64;
    double attention_temperature = 1.0;

    // classification component
    ClassifierKind classifier = ClassifierKind::moe;
    int moe_experts = 2;
    int moe2_hidden = 64;
    int mlp_hidden = 256;
    bool mlp_layer_norm = true;

    // label-correlation component
    bool label_layer = false;
    double label_alpha = 1.0;
    double label_beta = 0.0;
    double label_gamma = 0.0;
    bool label_conditional = false;  // conditional instead of cosine normalization
    double label_tau = 0.0;          // sparsity threshold on the frozen matrix

    // loss component
    LossKind loss = LossKind::ce;
    double loss_lambda = 0.001;
    double loss_delta = 0.5;
    double clamp_eps = 1e-6;
    bool huber_per_class = false;  // wrap per-class terms instead of the example scalar

    // training
    int batch = 128;
    int epochs = 5;
    int max_steps = 0;  // 0 = bound by epochs only
    double learning_rate = 0.0006;
    double decay_rate = 0.95;
    std::int64_t decay_steps = 2000;
    int eval_interval = 200;
    std::uint64_t seed = 1;
    bool merge_validation = false;
    int top_k = 20;

    /// Width of the pooled vector the classifier consumes.
    int pooled_dim() const;
    /// Width of the center-loss embedding for the configured classifier.
    int embed_dim() const;

    void validate() const;

    /// Canonical flat JSON with every key present, keys sorted.
    std::string to_json() const;
    std::uint64_t hash() const;
};

ModelConfig config_from_json(const std::string& json_text);
ModelConfig config_from_json_file(const std::string& path);

/// Applies a flat JSON object of overriding keys on top of a base config.
ModelConfig apply_overrides(const ModelConfig& base, const std::string& json_text);

std::string to_string(PoolingKind kind);
std::string to_string(ClassifierKind kind);
std::string to_string(LossKind kind);

}  // namespace vidcls
