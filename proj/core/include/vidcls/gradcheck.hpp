#pragma once

#include <string>
#include <vector>

#include "vidcls/config.hpp"
#include "vidcls/dataset.hpp"

namespace vidcls {

struct GradCheckDims {
    int feature_dim = 6;
    int cell_dim = 5;
    int num_classes = 4;
    int num_experts = 2;
    int num_frames = 6;
    int mlp_hidden = 8;
    int moe2_hidden = 7;
    double fd_step = 1e-5;
};

struct GradCheckGroup {
    std::string name;
    double rel_err = 0.0;
    std::size_t coords = 0;
};

struct GradCheckReport {
    std::vector<GradCheckGroup> groups;
    double max_rel_err = 0.0;

    bool passed(double tol = 1e-4) const { return max_rel_err < tol; }
};

/// Compares the full-pipeline analytic gradient of every parameter group
/// against central finite differences at small dims. Parameter-free encoders
/// additionally check the gradient w.r.t. the input frames. The stochastic
/// parts (dropout masks, noise draws) are replayed from a fixed stream for
/// every evaluation, so the compared function is deterministic.
GradCheckReport run_gradcheck(const ModelConfig& base, const GradCheckDims& dims = {},
                              std::uint64_t seed = 7);

}  // namespace vidcls
