#include "vidcls/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vidcls/trainer.hpp"

namespace vidcls {

namespace {

using nlohmann::json;

bool key_allowed(const std::string& component, const std::string& key) {
    return component_of_key(key) == component;
}

}  // namespace

std::vector<SweepCandidate> read_candidates_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open candidates file " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("candidates file " + path + ": " + e.what());
    }
    if (!j.is_array()) throw ConfigError("candidates file must be a JSON array");
    std::vector<SweepCandidate> out;
    for (const auto& entry : j) {
        if (!entry.is_object() || !entry.contains("name") || !entry.contains("overrides")) {
            throw ConfigError("each candidate needs {\"name\", \"overrides\"}");
        }
        SweepCandidate c;
        c.name = entry["name"].get<std::string>();
        c.overrides_json = entry["overrides"].dump();
        out.push_back(std::move(c));
    }
    if (out.empty()) throw ConfigError("candidates file is empty");
    return out;
}

std::string component_of_key(const std::string& key) {
    if (key == "pooling" || key.starts_with("lstm.") || key.starts_with("cnn.") ||
        key.starts_with("attention.")) {
        return "pooling";
    }
    if (key == "classifier" || key.starts_with("moe.") || key.starts_with("moe2.") ||
        key.starts_with("mlp.")) {
        return "classifier";
    }
    if (key.starts_with("label_layer.")) return "labelgraph";
    if (key == "loss" || key.starts_with("loss.")) return "loss";
    if (key.starts_with("train.")) return "training";
    return "dims";
}

SweepReport greedy_sweep(const ModelConfig& base, const std::string& component,
                         const std::vector<SweepCandidate>& candidates, const Dataset& train,
                         const Dataset& validation) {
    if (component != "pooling" && component != "classifier" && component != "labelgraph" &&
        component != "loss") {
        throw ConfigError("unknown sweep component '" + component + "'");
    }
    if (candidates.empty()) throw ConfigError("sweep needs at least one candidate");

    SweepReport report;
    report.component = component;
    for (const auto& candidate : candidates) {
        SweepRow row;
        row.name = candidate.name;
        row.seed = base.seed;
        const auto start = std::chrono::steady_clock::now();
        try {
            const json overrides = json::parse(candidate.overrides_json);
            for (const auto& [key, value] : overrides.items()) {
                (void)value;
                if (!key_allowed(component, key)) {
                    throw ConfigError("candidate '" + candidate.name + "' overrides key '" + key +
                                      "' outside component '" + component + "'");
                }
            }
            ModelConfig cfg = apply_overrides(base, candidate.overrides_json);
            RngStream rng(cfg.seed);
            Model model = Model::build(cfg, rng);
            model.attach_train_data(train);
            AdamConfig adam_cfg;
            adam_cfg.learning_rate = cfg.learning_rate;
            adam_cfg.decay_rate = cfg.decay_rate;
            adam_cfg.decay_steps = cfg.decay_steps;
            AdamOptimizer opt(model.parameters(), adam_cfg);
            auto trained = train_model(model, opt, train, validation);
            row.gap = trained.final_gap;
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        row.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.rows.push_back(std::move(row));
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.failed != b.failed) return !a.failed;
        return a.gap > b.gap;
    });
    return report;
}

std::string format_report_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "Rank,Method,GAP,Seed,RuntimeSeconds,Status\n";
    int rank = 1;
    for (const auto& row : report.rows) {
        char runtime[32];
        std::snprintf(runtime, sizeof(runtime), "%.3f", row.runtime_seconds);
        os << rank++ << "," << row.name << ",";
        if (row.failed) {
            os << ",," << runtime << ",failed: " << row.error;
        } else {
            char gap[32];
            std::snprintf(gap, sizeof(gap), "%.6f", row.gap);
            os << gap << "," << row.seed << "," << runtime << ",ok";
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace vidcls
