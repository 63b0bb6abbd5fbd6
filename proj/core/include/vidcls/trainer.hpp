#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vidcls/adam.hpp"
#include "vidcls/metrics.hpp"
#include "vidcls/model.hpp"

namespace vidcls {

struct MetricsRecord {
    std::int64_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_gap = 0.0;
};

struct TrainResult {
    std::vector<MetricsRecord> log;
    std::int64_t steps = 0;
    double final_gap = 0.0;
};

/// Callback per metrics record (CLI printing); may be empty.
using MetricsSink = std::function<void(const MetricsRecord&)>;

/// Mini-batch training with the configured optimizer schedule. Shuffling,
/// dropout and noise all derive from cfg.seed, so a (config, dataset) pair
/// fully determines every logged number. Evaluates validation GAP every
/// cfg.eval_interval steps and once at the end.
TrainResult train_model(Model& model, AdamOptimizer& opt, const Dataset& train,
                        const Dataset& validation, const MetricsSink& sink = {});

struct EvaluationResult {
    double gap = 0.0;
    PredictionBatch predictions;
};

/// Eval-mode scoring of every video, top-k extraction, GAP. Deterministic.
EvaluationResult evaluate_model(const Model& model, const Dataset& data, int k = 20);

// Checkpoints (magic "VCP1"): config JSON, all state tensors, optimizer
// moments and step counter. Byte-exact round trip.
void save_checkpoint(const std::string& path, const Model& model, const AdamOptimizer& opt);

struct LoadedCheckpoint {
    Model model;
    AdamConfig adam_cfg;
    std::vector<AdamMoments> moments;
    std::int64_t step = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace vidcls
