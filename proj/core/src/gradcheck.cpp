#include "vidcls/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vidcls/model.hpp"

namespace vidcls {

namespace {

// A tiny deterministic dataset: enough videos for a non-trivial co-occurrence
// table and at least two labels per video for the center term.
Dataset make_probe_dataset(const GradCheckDims& dims, std::uint64_t seed) {
    Dataset data;
    data.num_classes = dims.num_classes;
    data.feature_dim = dims.feature_dim;
    RngStream rng(seed);
    RngStream frames_rng = rng.derive("frames");
    for (int i = 0; i < 4; ++i) {
        FeatureSequence v;
        v.id = "probe" + std::to_string(i);
        const int a = i % dims.num_classes;
        const int b = (i + 1) % dims.num_classes;
        v.labels = a < b ? std::vector<int>{a, b} : std::vector<int>{b, a};
        v.frames = gaussian({dims.num_frames, dims.feature_dim}, frames_rng);
        data.videos.push_back(std::move(v));
    }
    return data;
}

}  // namespace

GradCheckReport run_gradcheck(const ModelConfig& base, const GradCheckDims& dims,
                              std::uint64_t seed) {
    ModelConfig cfg = base;
    cfg.feature_dim = dims.feature_dim;
    cfg.cell_dim = dims.cell_dim;
    cfg.num_classes = dims.num_classes;
    cfg.moe_experts = dims.num_experts;
    cfg.mlp_hidden = dims.mlp_hidden;
    cfg.moe2_hidden = dims.moe2_hidden;
    cfg.cnn_channels = dims.cell_dim;
    cfg.validate();

    Dataset probe = make_probe_dataset(dims, seed);
    RngStream build_rng(seed);
    Model model = Model::build(cfg, build_rng);
    model.attach_train_data(probe);

    const FeatureSequence& video = probe.videos.front();

    // Frozen stochastic draws: every loss evaluation replays the same stream.
    auto loss_value = [&]() {
        RngStream forward(seed ^ 0x5eedULL);
        auto loss = model.example_loss(video, Mode::train, forward);
        return loss->values[0];
    };

    GradCheckReport report;

    // Analytic gradients from one recorded tape.
    for (const auto& named : model.parameters()) named.t->zero_grad();
    const bool parameter_free_encoder =
        cfg.classifier != ClassifierKind::many_to_many &&
        (cfg.pooling == PoolingKind::position || cfg.pooling == PoolingKind::attention ||
         cfg.pooling == PoolingKind::noise);
    if (parameter_free_encoder) video.frames->requires_grad = true;
    video.frames->zero_grad();
    {
        RngStream forward(seed ^ 0x5eedULL);
        auto loss = model.example_loss(video, Mode::train, forward);
        backward(loss);
    }

    auto check_group = [&](const std::string& name, const TensorPtr& t) {
        GradCheckGroup group;
        group.name = name;
        group.coords = t->size();
        t->ensure_grad();
        auto numeric = finite_diff_grad([&](const TensorBuffer&) { return loss_value(); }, t,
                                        dims.fd_step);
        group.rel_err = relative_error(t->grad, numeric->values);
        report.max_rel_err = std::max(report.max_rel_err, group.rel_err);
        report.groups.push_back(std::move(group));
    };

    for (const auto& named : model.parameters()) check_group(named.name, named.t);
    if (parameter_free_encoder) {
        check_group("input.frames", video.frames);
        video.frames->requires_grad = false;
        video.frames->grad.clear();
    }
    return report;
}

}  // namespace vidcls
