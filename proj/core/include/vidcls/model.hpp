#pragma once

#include <string>
#include <vector>

#include "vidcls/classifier.hpp"
#include "vidcls/config.hpp"
#include "vidcls/dataset.hpp"
#include "vidcls/labelgraph.hpp"
#include "vidcls/loss.hpp"
#include "vidcls/pooling.hpp"

namespace vidcls {

struct NamedTensor {
    std::string name;
    TensorPtr t;
};

/// The assembled four-component pipeline: pooling encoder → classification
/// head → optional label-correlation mix → loss. Owns every parameter; each
/// call to score()/example_loss() records a fresh tape over them.
class Model {
public:
    /// Builds parameters for the configured components. Deterministic under
    /// (cfg, rng state).
    static Model build(const ModelConfig& cfg, RngStream& rng);

    /// Computes label statistics and, when the label layer or adaptive noise
    /// is active, the structures derived from training data.
    void attach_train_data(const Dataset& train);

    /// Restores derived data from checkpoint contents instead.
    void attach_label_stats(LabelStats stats);

    struct Output {
        TensorPtr scores;     // [C], each in (0, 1) before any label mixing
        TensorPtr mixed;      // scores after label layer + clamp (== input of loss)
        TensorPtr embedding;  // penultimate activation for the center term
    };

    Output score_video(const FeatureSequence& video, Mode mode, RngStream& rng) const;

    /// Per-example loss per the configured kind.
    TensorPtr example_loss(const FeatureSequence& video, Mode mode, RngStream& rng) const;

    /// Trainable parameters in a fixed, documented order.
    const std::vector<NamedTensor>& parameters() const { return params_; }

    /// Everything a checkpoint stores: trainable parameters plus frozen
    /// derived tensors (label correlation matrix).
    std::vector<NamedTensor> state_tensors() const;

    const ModelConfig& config() const { return cfg_; }
    const LabelStats& stats() const { return stats_; }
    bool has_stats() const { return !stats_.counts.empty(); }
    const CorrelationMatrix& correlation() const { return corr_; }

    /// Overwrites a state tensor by name (checkpoint load).
    void load_tensor(const std::string& name, const std::vector<int>& shape,
                     std::vector<double> values);

private:
    ModelConfig cfg_;
    LstmParams lstm_;
    CnnParams cnn_;
    MoeParams moe_;
    MlpParams mlp_;
    ManyToManyParams m2m_;
    CorrelationMatrix corr_;
    TensorPtr centers_;
    LabelStats stats_;
    std::vector<NamedTensor> params_;

    void register_parameters();
};

}  // namespace vidcls
