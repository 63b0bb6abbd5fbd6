#include "vidcls/model.hpp"

#include <algorithm>

namespace vidcls {

Model Model::build(const ModelConfig& cfg, RngStream& rng) {
    cfg.validate();
    Model m;
    m.cfg_ = cfg;
    RngStream init = rng.derive("init");

    const int pooled = cfg.pooled_dim();
    switch (cfg.pooling) {
        case PoolingKind::lstm:
            m.lstm_ = make_lstm_params(cfg.feature_dim, cfg.cell_dim, cfg.lstm_layer_norm, init);
            break;
        case PoolingKind::cnn:
            m.cnn_ = make_cnn_params(cfg.feature_dim, cfg.cnn_channels, cfg.cnn_window, init);
            break;
        case PoolingKind::position:
        case PoolingKind::attention:
        case PoolingKind::noise:
            break;  // parameter-free
    }

    switch (cfg.classifier) {
        case ClassifierKind::moe:
            m.moe_ = make_moe_params(cfg.num_classes, cfg.moe_experts, pooled, init);
            break;
        case ClassifierKind::moe2:
            m.moe_ = make_moe2_params(cfg.num_classes, cfg.moe_experts, pooled, cfg.moe2_hidden, init);
            break;
        case ClassifierKind::mlp:
            m.mlp_ = make_mlp_params(pooled, cfg.mlp_hidden, cfg.num_classes, cfg.mlp_layer_norm, init);
            break;
        case ClassifierKind::many_to_many:
            m.m2m_ = make_many_to_many_params(cfg.feature_dim, cfg.cell_dim, cfg.num_classes, init);
            break;
    }

    if (cfg.loss == LossKind::ce_center) {
        m.centers_ = make_center_table(cfg.num_classes, cfg.embed_dim(), init);
    }
    m.register_parameters();
    return m;
}

void Model::attach_train_data(const Dataset& train) {
    if (train.num_classes != cfg_.num_classes || train.feature_dim != cfg_.feature_dim) {
        throw ConfigError("dataset dims (C=" + std::to_string(train.num_classes) + ", D=" +
                          std::to_string(train.feature_dim) + ") do not match config (C=" +
                          std::to_string(cfg_.num_classes) + ", D=" +
                          std::to_string(cfg_.feature_dim) + ")");
    }
    stats_ = label_stats(train);
    if (cfg_.label_layer) {
        auto counts = build_cooccurrence(train);
        corr_ = build_correlation(counts,
                                  cfg_.label_conditional ? CorrelationKind::conditional
                                                         : CorrelationKind::cosine,
                                  cfg_.label_tau);
        register_parameters();
    }
}

void Model::attach_label_stats(LabelStats stats) { stats_ = std::move(stats); }

void Model::register_parameters() {
    params_.clear();
    auto put = [&](const std::string& name, const TensorPtr& t) {
        if (t) params_.push_back({name, t});
    };
    put("lstm.u_input", lstm_.u_input);
    put("lstm.u_forget", lstm_.u_forget);
    put("lstm.u_output", lstm_.u_output);
    put("lstm.u_cand", lstm_.u_cand);
    put("lstm.w_input", lstm_.w_input);
    put("lstm.w_forget", lstm_.w_forget);
    put("lstm.w_output", lstm_.w_output);
    put("lstm.w_cand", lstm_.w_cand);
    put("lstm.b_input", lstm_.b_input);
    put("lstm.b_forget", lstm_.b_forget);
    put("lstm.b_output", lstm_.b_output);
    put("lstm.b_cand", lstm_.b_cand);
    for (int g = 0; g < 4; ++g) {
        put("lstm.ln_gain" + std::to_string(g), lstm_.ln_gain[static_cast<std::size_t>(g)]);
        put("lstm.ln_bias" + std::to_string(g), lstm_.ln_bias[static_cast<std::size_t>(g)]);
    }
    put("cnn.filters", cnn_.filters);
    put("cnn.bias", cnn_.bias);
    put("moe.hidden_expert_w", moe_.hidden_expert_w);
    put("moe.hidden_expert_b", moe_.hidden_expert_b);
    put("moe.hidden_gate_w", moe_.hidden_gate_w);
    put("moe.hidden_gate_b", moe_.hidden_gate_b);
    put("moe.expert_w", moe_.expert_w);
    put("moe.expert_b", moe_.expert_b);
    put("moe.gate_w", moe_.gate_w);
    put("moe.gate_b", moe_.gate_b);
    put("mlp.w1", mlp_.w1);
    put("mlp.b1", mlp_.b1);
    put("mlp.w2", mlp_.w2);
    put("mlp.b2", mlp_.b2);
    put("mlp.w3", mlp_.w3);
    put("mlp.b3", mlp_.b3);
    for (int i = 0; i < 3; ++i) {
        put("mlp.ln_gain" + std::to_string(i), mlp_.ln_gain[static_cast<std::size_t>(i)]);
        put("mlp.ln_bias" + std::to_string(i), mlp_.ln_bias[static_cast<std::size_t>(i)]);
    }
    put("m2m.u_input", m2m_.lstm.u_input);
    put("m2m.u_forget", m2m_.lstm.u_forget);
    put("m2m.u_output", m2m_.lstm.u_output);
    put("m2m.u_cand", m2m_.lstm.u_cand);
    put("m2m.w_input", m2m_.lstm.w_input);
    put("m2m.w_forget", m2m_.lstm.w_forget);
    put("m2m.w_output", m2m_.lstm.w_output);
    put("m2m.w_cand", m2m_.lstm.w_cand);
    put("m2m.b_input", m2m_.lstm.b_input);
    put("m2m.b_forget", m2m_.lstm.b_forget);
    put("m2m.b_output", m2m_.lstm.b_output);
    put("m2m.b_cand", m2m_.lstm.b_cand);
    put("m2m.head_w", m2m_.head_w);
    put("m2m.head_b", m2m_.head_b);
    put("labelgraph.trainable", corr_.trainable);
    put("loss.centers", centers_);
}

std::vector<NamedTensor> Model::state_tensors() const {
    std::vector<NamedTensor> all = params_;
    if (corr_.frozen) all.push_back({"labelgraph.frozen", corr_.frozen});
    return all;
}

void Model::load_tensor(const std::string& name, const std::vector<int>& shape,
                        std::vector<double> values) {
    TensorPtr target;
    for (const auto& named : state_tensors()) {
        if (named.name == name) {
            target = named.t;
            break;
        }
    }
    // Correlation tensors may arrive before the layer exists (checkpoint load
    // without training data); materialize them as they come.
    if (name == "labelgraph.trainable" && !corr_.trainable) {
        corr_.trainable = parameter(shape, std::move(values));
        register_parameters();
        return;
    }
    if (name == "labelgraph.frozen" && !corr_.frozen) {
        corr_.frozen = tensor(shape, std::move(values));
        return;
    }
    if (!target) throw FormatError("checkpoint carries unknown tensor '" + name + "'");
    if (target->shape != shape) {
        throw FormatError("checkpoint tensor '" + name + "' has shape mismatch");
    }
    target->values = std::move(values);
}

Model::Output Model::score_video(const FeatureSequence& video, Mode mode, RngStream& rng) const {
    if (video.feature_dim() != cfg_.feature_dim) {
        throw ConfigError("video " + video.id + " feature dim " +
                          std::to_string(video.feature_dim()) + " does not match config " +
                          std::to_string(cfg_.feature_dim));
    }
    Output out;
    if (cfg_.classifier == ClassifierKind::many_to_many) {
        // This head consumes raw frames; the pooling choice is bypassed.
        auto scored = many_to_many_score(video, m2m_);
        out.scores = scored.scores;
        out.embedding = scored.mean_hidden;
    } else {
        TensorPtr pooled;
        switch (cfg_.pooling) {
            case PoolingKind::lstm: {
                LstmOptions opts;
                opts.concat_input_sum = cfg_.lstm_input_sum;
                opts.concat_candidate_sum = cfg_.lstm_candidate_sum;
                opts.layer_norm = cfg_.lstm_layer_norm;
                opts.drop_prob = cfg_.lstm_drop_prob;
                pooled = encode_lstm(video, lstm_, opts, rng, mode);
                break;
            }
            case PoolingKind::cnn:
                pooled = encode_cnn(video, cnn_);
                break;
            case PoolingKind::position:
                pooled = encode_position(video);
                break;
            case PoolingKind::attention:
                pooled = encode_self_attention(video, cfg_.attention_temperature);
                break;
            case PoolingKind::noise:
                if (mode == Mode::train && !has_stats()) {
                    throw ConfigError("adaptive noise needs label statistics; attach training data");
                }
                pooled = encode_adaptive_noise(video, stats_, rng, mode);
                break;
        }
        switch (cfg_.classifier) {
            case ClassifierKind::moe:
                out.scores = moe_score(pooled, moe_);
                out.embedding = pooled;
                break;
            case ClassifierKind::moe2:
                out.scores = moe2_score(pooled, moe_);
                out.embedding = pooled;
                break;
            case ClassifierKind::mlp: {
                auto scored = mlp_score(pooled, mlp_);
                out.scores = scored.scores;
                out.embedding = scored.last_hidden;
                break;
            }
            case ClassifierKind::many_to_many:
                break;  // handled above
        }
    }
    if (cfg_.label_layer) {
        if (!corr_.frozen) {
            throw ConfigError("label layer enabled but no correlation matrix; attach training data");
        }
        out.mixed = apply_label_layer(out.scores, corr_, cfg_.label_alpha, cfg_.label_beta,
                                      cfg_.label_gamma);
    } else {
        out.mixed = out.scores;
    }
    return out;
}

TensorPtr Model::example_loss(const FeatureSequence& video, Mode mode, RngStream& rng) const {
    if (video.labels.empty()) throw DataError("training example " + video.id + " has no labels");
    auto out = score_video(video, mode, rng);
    switch (cfg_.loss) {
        case LossKind::ce:
            return cross_entropy(out.mixed, video.labels, cfg_.clamp_eps);
        case LossKind::ce_center:
            return joint_loss(cross_entropy(out.mixed, video.labels, cfg_.clamp_eps),
                              center_loss(out.embedding, video.labels, centers_),
                              cfg_.loss_lambda);
        case LossKind::huber_ce:
            if (cfg_.huber_per_class) {
                auto terms = cross_entropy_terms(out.mixed, video.labels, cfg_.clamp_eps);
                return sum_all(pseudo_huber_elementwise(terms, cfg_.loss_delta));
            }
            return pseudo_huber(cross_entropy(out.mixed, video.labels, cfg_.clamp_eps),
                                cfg_.loss_delta);
    }
    throw ConfigError("unreachable loss kind");
}

}  // namespace vidcls
