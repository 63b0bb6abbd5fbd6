#pragma once

#include <string>
#include <vector>

#include "vidcls/metrics.hpp"

namespace vidcls {

/// Uniform score averaging across member prediction batches: per video and
/// class, the mean of member confidences, classes absent from a member's list
/// contributing 0; re-ranked and truncated to k. Video order follows the
/// first member. All members must cover the same video ids.
PredictionBatch ensemble_average(const std::vector<PredictionBatch>& members, int k = 20);

/// CSV-level convenience used by the CLI.
void ensemble_csv_files(const std::vector<std::string>& inputs, const std::string& output,
                        int k = 20);

}  // namespace vidcls
