#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidcls/dataset.hpp"
#include "vidcls/tensor.hpp"

namespace vidcls {

/// Symmetric C×C co-occurrence table. The diagonal holds per-class video
/// counts; off-diagonal entries count videos carrying both labels.
struct CooccurrenceCounts {
    int num_classes = 0;
    std::vector<std::int64_t> counts;  // row-major C×C

    std::int64_t at(int i, int j) const {
        return counts[static_cast<std::size_t>(i) * num_classes + j];
    }
};

enum class CorrelationKind {
    cosine,       // counts[i][j] / sqrt(counts[i][i] * counts[j][j])
    conditional,  // counts[i][j] / counts[i][i]
};

/// Label correlation prior: a frozen matrix built from counts and a trainable
/// copy initialized equal to it. Only the copy ever receives gradients.
struct CorrelationMatrix {
    TensorPtr frozen;     // [C×C], requires_grad = false
    TensorPtr trainable;  // [C×C], requires_grad = true
};

CooccurrenceCounts build_cooccurrence(const Dataset& data);

/// Entries below sparsity_tau are zeroed (default keeps everything).
CorrelationMatrix build_correlation(const CooccurrenceCounts& counts,
                                    CorrelationKind kind = CorrelationKind::cosine,
                                    double sparsity_tau = 0.0);

/// Mixed score alpha·s + beta·(M s) + gamma·(M' s), clamped to
/// [1e-6, 1−1e-6] so the result can feed a cross-entropy term directly.
TensorPtr apply_label_layer(const TensorPtr& scores, const CorrelationMatrix& cm,
                            double alpha, double beta, double gamma);

// Binary persistence of the frozen matrix (magic "LGC1"); round-trips exactly.
void write_correlation(const TensorBuffer& frozen, const std::string& path);
TensorPtr read_correlation(const std::string& path);

}  // namespace vidcls
