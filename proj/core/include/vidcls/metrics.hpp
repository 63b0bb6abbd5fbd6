#pragma once

#include <string>
#include <vector>

#include "vidcls/tensor.hpp"

namespace vidcls {

struct ScoredClass {
    int class_id = 0;
    double confidence = 0.0;
};

/// One video's capped prediction list (confidence descending) and its
/// ground-truth label set. Labels may be empty for CSV-loaded predictions.
struct VideoPrediction {
    std::string video_id;
    std::vector<ScoredClass> pairs;
    std::vector<int> labels;
};

using PredictionBatch = std::vector<VideoPrediction>;

/// Highest-k entries of a score vector, confidence descending, ties broken by
/// ascending class id.
std::vector<ScoredClass> top_k(const TensorBuffer& scores, int k);

/// Average precision over the pooled, confidence-sorted predictions of all
/// videos, normalized by the total number of ground-truth labels (uncapped).
/// Ties keep pooling order: video insertion order, then class id.
double gap_at_k(const PredictionBatch& batch, int k = 20);

// Prediction CSV: header "VideoId,LabelConfidencePairs", one row per video,
// pairs space-separated, confidences printed with 6 significant digits.
void write_predictions_csv(const PredictionBatch& batch, const std::string& path);
PredictionBatch read_predictions_csv(const std::string& path);

std::string format_confidence(double value);

}  // namespace vidcls
