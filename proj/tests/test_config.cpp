#include <doctest.h>

#include "vidcls/config.hpp"
#include "vidcls/errors.hpp"
#include "vidcls/sweep.hpp"

using namespace vidcls;

TEST_CASE("empty object yields the documented defaults") {
    auto cfg = config_from_json("{}");
    CHECK(cfg.pooling == PoolingKind::lstm);
    CHECK(cfg.classifier == ClassifierKind::moe);
    CHECK(cfg.loss == LossKind::ce);
    CHECK(cfg.learning_rate == doctest::Approx(0.0006));
    CHECK(cfg.lstm_drop_prob == doctest::Approx(0.2));
    CHECK(cfg.batch == 128);
    CHECK(cfg.moe_experts == 2);
    CHECK(cfg.num_classes == 50);
    CHECK(cfg.top_k == 20);
}

TEST_CASE("dotted keys select components and options") {
    auto cfg = config_from_json(R"({
        "pooling": "attention",
        "classifier": "mlp",
        "mlp.hidden": 32,
        "loss": "huber_ce",
        "loss.delta": 2.0,
        "train.batch": 16,
        "train.seed": 99
    })");
    CHECK(cfg.pooling == PoolingKind::attention);
    CHECK(cfg.classifier == ClassifierKind::mlp);
    CHECK(cfg.mlp_hidden == 32);
    CHECK(cfg.loss == LossKind::huber_ce);
    CHECK(cfg.loss_delta == doctest::Approx(2.0));
    CHECK(cfg.batch == 16);
    CHECK(cfg.seed == 99);
}

TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(config_from_json(R"({"poling": "lstm"})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"pooling": "gru"})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"lstm.drop_prob": 1.0})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"loss.delta": 0.0})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"train.batch": 0})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"train.decay_rate": 1.5})"), ConfigError);
    CHECK_THROWS_AS(config_from_json("[1,2]"), ConfigError);
    CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
}

TEST_CASE("canonical json round trips and hashes change with content") {
    auto cfg = config_from_json(R"({"pooling": "cnn", "cnn.channels": 48})");
    auto text = cfg.to_json();
    auto back = config_from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.hash() == cfg.hash());

    auto other = config_from_json(R"({"pooling": "cnn", "cnn.channels": 49})");
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("pooled width follows the component choice") {
    ModelConfig cfg;
    cfg.feature_dim = 10;
    cfg.cell_dim = 7;
    cfg.pooling = PoolingKind::lstm;
    CHECK(cfg.pooled_dim() == 2 * 7 + 10 + 7);
    cfg.lstm_input_sum = false;
    cfg.lstm_candidate_sum = false;
    CHECK(cfg.pooled_dim() == 14);
    cfg.pooling = PoolingKind::cnn;
    cfg.cnn_channels = 12;
    CHECK(cfg.pooled_dim() == 12);
    cfg.pooling = PoolingKind::attention;
    CHECK(cfg.pooled_dim() == 10);
}

TEST_CASE("embedding width follows the classifier choice") {
    ModelConfig cfg;
    cfg.pooling = PoolingKind::position;
    cfg.feature_dim = 9;
    cfg.classifier = ClassifierKind::moe;
    CHECK(cfg.embed_dim() == 9);
    cfg.classifier = ClassifierKind::mlp;
    cfg.mlp_hidden = 33;
    CHECK(cfg.embed_dim() == 33);
    cfg.classifier = ClassifierKind::many_to_many;
    cfg.cell_dim = 5;
    CHECK(cfg.embed_dim() == 5);
}

TEST_CASE("the published mixing grid parses as sweep overrides") {
    const char* grid[] = {
        R"({"label_layer.enabled": true, "label_layer.alpha": 1.0, "label_layer.beta": 0.3,  "label_layer.gamma": 0.0})",
        R"({"label_layer.enabled": true, "label_layer.alpha": 1.0, "label_layer.beta": 0.1,  "label_layer.gamma": 0.0})",
        R"({"label_layer.enabled": true, "label_layer.alpha": 1.0, "label_layer.beta": 0.0,  "label_layer.gamma": 0.1})",
        R"({"label_layer.enabled": true, "label_layer.alpha": 1.0, "label_layer.beta": 0.01, "label_layer.gamma": 0.0})",
        R"({"label_layer.enabled": true, "label_layer.alpha": 1.0, "label_layer.beta": 0.0,  "label_layer.gamma": 0.01})",
        R"({"label_layer.enabled": true, "label_layer.alpha": 1.0, "label_layer.beta": 0.01, "label_layer.gamma": 0.01})",
    };
    ModelConfig base;
    for (const char* overrides : grid) {
        auto cfg = apply_overrides(base, overrides);
        CHECK(cfg.label_layer);
        CHECK(cfg.label_alpha == 1.0);
    }
    // A different component's key must not masquerade as labelgraph.
    CHECK(component_of_key("label_layer.beta") == "labelgraph");
    CHECK(component_of_key("pooling") == "pooling");
    CHECK(component_of_key("lstm.drop_prob") == "pooling");
    CHECK(component_of_key("classifier") == "classifier");
    CHECK(component_of_key("moe.experts") == "classifier");
    CHECK(component_of_key("loss.delta") == "loss");
    CHECK(component_of_key("train.batch") == "training");
    CHECK(component_of_key("feature_dim") == "dims");
}

TEST_CASE("overrides keep unrelated base settings") {
    ModelConfig base;
    base.num_classes = 13;
    base.batch = 4;
    auto cfg = apply_overrides(base, R"({"pooling": "noise"})");
    CHECK(cfg.pooling == PoolingKind::noise);
    CHECK(cfg.num_classes == 13);
    CHECK(cfg.batch == 4);
}
