#include "vidcls/config.hpp"

#include <fstream>

#include <json.hpp>

#include "vidcls/errors.hpp"

namespace vidcls {

namespace {

using nlohmann::json;

PoolingKind pooling_from_string(const std::string& s) {
    if (s == "lstm") return PoolingKind::lstm;
    if (s == "cnn") return PoolingKind::cnn;
    if (s == "position") return PoolingKind::position;
    if (s == "attention") return PoolingKind::attention;
    if (s == "noise") return PoolingKind::noise;
    throw ConfigError("unknown pooling '" + s + "'");
}

ClassifierKind classifier_from_string(const std::string& s) {
    if (s == "moe") return ClassifierKind::moe;
    if (s == "moe2") return ClassifierKind::moe2;
    if (s == "mlp") return ClassifierKind::mlp;
    if (s == "many_to_many") return ClassifierKind::many_to_many;
    throw ConfigError("unknown classifier '" + s + "'");
}

LossKind loss_from_string(const std::string& s) {
    if (s == "ce") return LossKind::ce;
    if (s == "ce_center") return LossKind::ce_center;
    if (s == "huber_ce") return LossKind::huber_ce;
    throw ConfigError("unknown loss '" + s + "'");
}

void apply_key(ModelConfig& cfg, const std::string& key, const json& value) {
    try {
        if (key == "feature_dim") cfg.feature_dim = value.get<int>();
        else if (key == "cell_dim") cfg.cell_dim = value.get<int>();
        else if (key == "num_classes") cfg.num_classes = value.get<int>();
        else if (key == "pooling") cfg.pooling = pooling_from_string(value.get<std::string>());
        else if (key == "lstm.input_sum") cfg.lstm_input_sum = value.get<bool>();
        else if (key == "lstm.candidate_sum") cfg.lstm_candidate_sum = value.get<bool>();
        else if (key == "lstm.layer_norm") cfg.lstm_layer_norm = value.get<bool>();
        else if (key == "lstm.drop_prob") cfg.lstm_drop_prob = value.get<double>();
        else if (key == "cnn.window") cfg.cnn_window = value.get<int>();
        else if (key == "cnn.channels") cfg.cnn_channels = value.get<int>();
        else if (key == "attention.temperature") cfg.attention_temperature = value.get<double>();
        else if (key == "classifier") cfg.classifier = classifier_from_string(value.get<std::string>());
        else if (key == "moe.experts") cfg.moe_experts = value.get<int>();
        else if (key == "moe2.hidden") cfg.moe2_hidden = value.get<int>();
        else if (key == "mlp.hidden") cfg.mlp_hidden = value.get<int>();
        else if (key == "mlp.layer_norm") cfg.mlp_layer_norm = value.get<bool>();
        else if (key == "label_layer.enabled") cfg.label_layer = value.get<bool>();
        else if (key == "label_layer.alpha") cfg.label_alpha = value.get<double>();
        else if (key == "label_layer.beta") cfg.label_beta = value.get<double>();
        else if (key == "label_layer.gamma") cfg.label_gamma = value.get<double>();
        else if (key == "label_layer.conditional") cfg.label_conditional = value.get<bool>();
        else if (key == "label_layer.tau") cfg.label_tau = value.get<double>();
        else if (key == "loss") cfg.loss = loss_from_string(value.get<std::string>());
        else if (key == "loss.lambda") cfg.loss_lambda = value.get<double>();
        else if (key == "loss.delta") cfg.loss_delta = value.get<double>();
        else if (key == "loss.clamp_eps") cfg.clamp_eps = value.get<double>();
        else if (key == "loss.huber_per_class") cfg.huber_per_class = value.get<bool>();
        else if (key == "train.batch") cfg.batch = value.get<int>();
        else if (key == "train.epochs") cfg.epochs = value.get<int>();
        else if (key == "train.max_steps") cfg.max_steps = value.get<int>();
        else if (key == "train.learning_rate") cfg.learning_rate = value.get<double>();
        else if (key == "train.decay_rate") cfg.decay_rate = value.get<double>();
        else if (key == "train.decay_steps") cfg.decay_steps = value.get<std::int64_t>();
        else if (key == "train.eval_interval") cfg.eval_interval = value.get<int>();
        else if (key == "train.seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "train.merge_validation") cfg.merge_validation = value.get<bool>();
        else if (key == "train.top_k") cfg.top_k = value.get<int>();
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

ModelConfig parse_object(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ModelConfig cfg;
    for (const auto& [key, value] : j.items()) apply_key(cfg, key, value);
    cfg.validate();
    return cfg;
}

}  // namespace

int ModelConfig::pooled_dim() const {
    switch (pooling) {
        case PoolingKind::lstm: {
            int width = 2 * cell_dim;
            if (lstm_input_sum) width += feature_dim;
            if (lstm_candidate_sum) width += cell_dim;
            return width;
        }
        case PoolingKind::cnn:
            return cnn_channels;
        case PoolingKind::position:
        case PoolingKind::attention:
        case PoolingKind::noise:
            return feature_dim;
    }
    throw ConfigError("unreachable pooling kind");
}

int ModelConfig::embed_dim() const {
    switch (classifier) {
        case ClassifierKind::moe:
        case ClassifierKind::moe2:
            return pooled_dim();
        case ClassifierKind::mlp:
            return mlp_hidden;
        case ClassifierKind::many_to_many:
            return cell_dim;
    }
    throw ConfigError("unreachable classifier kind");
}

void ModelConfig::validate() const {
    if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
    if (cell_dim < 1) throw ConfigError("cell_dim must be >= 1");
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    if (lstm_drop_prob < 0.0 || lstm_drop_prob >= 1.0) {
        throw ConfigError("lstm.drop_prob must lie in [0, 1)");
    }
    if (cnn_window < 1) throw ConfigError("cnn.window must be >= 1");
    if (cnn_channels < 1) throw ConfigError("cnn.channels must be >= 1");
    if (attention_temperature <= 0.0) throw ConfigError("attention.temperature must be positive");
    if (moe_experts < 1) throw ConfigError("moe.experts must be >= 1");
    if (moe2_hidden < 1) throw ConfigError("moe2.hidden must be >= 1");
    if (mlp_hidden < 2) throw ConfigError("mlp.hidden must be >= 2");
    if (label_tau < 0.0) throw ConfigError("label_layer.tau must be >= 0");
    if (loss_lambda < 0.0) throw ConfigError("loss.lambda must be >= 0");
    if (loss_delta <= 0.0) throw ConfigError("loss.delta must be positive");
    if (clamp_eps <= 0.0 || clamp_eps >= 0.5) throw ConfigError("loss.clamp_eps must lie in (0, 0.5)");
    if (batch < 1) throw ConfigError("train.batch must be >= 1");
    if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
    if (learning_rate <= 0.0) throw ConfigError("train.learning_rate must be positive");
    if (decay_rate <= 0.0 || decay_rate > 1.0) throw ConfigError("train.decay_rate must lie in (0, 1]");
    if (decay_steps < 1) throw ConfigError("train.decay_steps must be >= 1");
    if (eval_interval < 1) throw ConfigError("train.eval_interval must be >= 1");
    if (top_k < 1) throw ConfigError("train.top_k must be >= 1");
}

std::string ModelConfig::to_json() const {
    json j;
    j["feature_dim"] = feature_dim;
    j["cell_dim"] = cell_dim;
    j["num_classes"] = num_classes;
    j["pooling"] = to_string(pooling);
    j["lstm.input_sum"] = lstm_input_sum;
    j["lstm.candidate_sum"] = lstm_candidate_sum;
    j["lstm.layer_norm"] = lstm_layer_norm;
    j["lstm.drop_prob"] = lstm_drop_prob;
    j["cnn.window"] = cnn_window;
    j["cnn.channels"] = cnn_channels;
    j["attention.temperature"] = attention_temperature;
    j["classifier"] = to_string(classifier);
    j["moe.experts"] = moe_experts;
    j["moe2.hidden"] = moe2_hidden;
    j["mlp.hidden"] = mlp_hidden;
    j["mlp.layer_norm"] = mlp_layer_norm;
    j["label_layer.enabled"] = label_layer;
    j["label_layer.alpha"] = label_alpha;
    j["label_layer.beta"] = label_beta;
    j["label_layer.gamma"] = label_gamma;
    j["label_layer.conditional"] = label_conditional;
    j["label_layer.tau"] = label_tau;
    j["loss"] = to_string(loss);
    j["loss.lambda"] = loss_lambda;
    j["loss.delta"] = loss_delta;
    j["loss.clamp_eps"] = clamp_eps;
    j["loss.huber_per_class"] = huber_per_class;
    j["train.batch"] = batch;
    j["train.epochs"] = epochs;
    j["train.max_steps"] = max_steps;
    j["train.learning_rate"] = learning_rate;
    j["train.decay_rate"] = decay_rate;
    j["train.decay_steps"] = decay_steps;
    j["train.eval_interval"] = eval_interval;
    j["train.seed"] = seed;
    j["train.merge_validation"] = merge_validation;
    j["train.top_k"] = top_k;
    return j.dump(2);
}

std::uint64_t ModelConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_json()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ModelConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return parse_object(j);
}

ModelConfig config_from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return parse_object(j);
}

ModelConfig apply_overrides(const ModelConfig& base, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("override parse: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("overrides must be a JSON object");
    ModelConfig cfg = base;
    for (const auto& [key, value] : j.items()) apply_key(cfg, key, value);
    cfg.validate();
    return cfg;
}

std::string to_string(PoolingKind kind) {
    switch (kind) {
        case PoolingKind::lstm: return "lstm";
        case PoolingKind::cnn: return "cnn";
        case PoolingKind::position: return "position";
        case PoolingKind::attention: return "attention";
        case PoolingKind::noise: return "noise";
    }
    return "?";
}

std::string to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::moe: return "moe";
        case ClassifierKind::moe2: return "moe2";
        case ClassifierKind::mlp: return "mlp";
        case ClassifierKind::many_to_many: return "many_to_many";
    }
    return "?";
}

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::ce: return "ce";
        case LossKind::ce_center: return "ce_center";
        case LossKind::huber_ce: return "huber_ce";
    }
    return "?";
}

}  // namespace vidcls
