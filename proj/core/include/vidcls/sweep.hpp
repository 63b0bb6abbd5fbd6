#pragma once

#include <string>
#include <vector>

#include "vidcls/config.hpp"
#include "vidcls/dataset.hpp"

namespace vidcls {

struct SweepCandidate {
    std::string name;
    std::string overrides_json;  // flat JSON object applied over the base config
};

struct SweepRow {
    std::string name;
    bool failed = false;
    std::string error;
    double gap = 0.0;
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;
};

struct SweepReport {
    std::string component;
    std::vector<SweepRow> rows;  // sorted by GAP descending, failures last
};

/// Candidate file: JSON array of {"name": ..., "overrides": {...}}.
std::vector<SweepCandidate> read_candidates_file(const std::string& path);

/// Names the component a config key belongs to ("pooling", "classifier",
/// "labelgraph", "loss", "dims", "training").
std::string component_of_key(const std::string& key);

/// Greedy per-component comparison: trains one model per candidate with every
/// other component fixed at the base config and ranks candidates by
/// validation GAP. A failing candidate is reported and does not stop the
/// sweep. Candidates may only override keys of the swept component.
SweepReport greedy_sweep(const ModelConfig& base, const std::string& component,
                         const std::vector<SweepCandidate>& candidates, const Dataset& train,
                         const Dataset& validation);

std::string format_report_csv(const SweepReport& report);

}  // namespace vidcls
