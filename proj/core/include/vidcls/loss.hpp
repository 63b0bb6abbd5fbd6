#pragma once

#include <vector>

#include "vidcls/rng.hpp"
#include "vidcls/tensor.hpp"

namespace vidcls {

/// Trainable per-class centers [C × d_e] for the discriminative-embedding
/// term; initialized i.i.d. N(0, 0.01).
TensorPtr make_center_table(int num_classes, int embed_dim, RngStream& rng);

/// Multi-label binary cross-entropy over all classes for one example.
/// Probabilities are clamped to [clamp_eps, 1−clamp_eps] internally; the
/// gradient is zero where clamping was active.
TensorPtr cross_entropy(const TensorPtr& probs, const std::vector<int>& labels,
                        double clamp_eps = 1e-6);

/// The per-class terms of the same loss, unsummed: [C]. cross_entropy equals
/// sum_all of this vector.
TensorPtr cross_entropy_terms(const TensorPtr& probs, const std::vector<int>& labels,
                              double clamp_eps = 1e-6);

/// Mean squared distance between one embedding and the centers of each of the
/// example's labels. Gradients flow to the embedding and the selected rows.
TensorPtr center_loss(const TensorPtr& embedding, const std::vector<int>& labels,
                      const TensorPtr& centers);

/// ce + lambda · lc.
TensorPtr joint_loss(const TensorPtr& ce, const TensorPtr& lc, double lambda);

/// delta² (sqrt(1 + (x/delta)²) − 1), applied to a scalar loss term.
TensorPtr pseudo_huber(const TensorPtr& ce, double delta);

/// Elementwise form, for wrapping per-class loss terms instead of the
/// per-example scalar.
TensorPtr pseudo_huber_elementwise(const TensorPtr& x, double delta);

}  // namespace vidcls
