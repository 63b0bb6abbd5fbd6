#include "vidcls/ensemble.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace vidcls {

namespace {

std::string describe_difference(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::ostringstream os;
    int shown = 0;
    for (const auto& id : a) {
        if (!b.count(id)) {
            os << (shown ? ", " : "") << id;
            if (++shown == 5) break;
        }
    }
    return os.str();
}

}  // namespace

PredictionBatch ensemble_average(const std::vector<PredictionBatch>& members, int k) {
    if (members.empty()) throw DataError("ensemble needs at least one member");
    if (k < 1) throw ConfigError("ensemble needs k >= 1");

    std::set<std::string> base_ids;
    for (const auto& video : members[0]) base_ids.insert(video.video_id);
    for (std::size_t m = 1; m < members.size(); ++m) {
        std::set<std::string> ids;
        for (const auto& video : members[m]) ids.insert(video.video_id);
        if (ids != base_ids) {
            std::string missing = describe_difference(base_ids, ids);
            std::string extra = describe_difference(ids, base_ids);
            throw DataError("ensemble member " + std::to_string(m) +
                            " video ids differ from member 0" +
                            (missing.empty() ? "" : "; missing: " + missing) +
                            (extra.empty() ? "" : "; extra: " + extra));
        }
    }

    // per video id: class -> confidence sum
    std::map<std::string, std::map<int, double>> sums;
    for (const auto& member : members) {
        for (const auto& video : member) {
            auto& acc = sums[video.video_id];
            for (const auto& pair : video.pairs) acc[pair.class_id] += pair.confidence;
        }
    }

    const double inv = 1.0 / static_cast<double>(members.size());
    PredictionBatch merged;
    merged.reserve(members[0].size());
    for (const auto& video : members[0]) {
        VideoPrediction out;
        out.video_id = video.video_id;
        const auto& acc = sums[video.video_id];
        out.pairs.reserve(acc.size());
        for (const auto& [class_id, sum] : acc) out.pairs.push_back({class_id, sum * inv});
        std::sort(out.pairs.begin(), out.pairs.end(), [](const ScoredClass& a, const ScoredClass& b) {
            if (a.confidence != b.confidence) return a.confidence > b.confidence;
            return a.class_id < b.class_id;
        });
        if (static_cast<int>(out.pairs.size()) > k) out.pairs.resize(static_cast<std::size_t>(k));
        merged.push_back(std::move(out));
    }
    return merged;
}

void ensemble_csv_files(const std::vector<std::string>& inputs, const std::string& output, int k) {
    std::vector<PredictionBatch> members;
    members.reserve(inputs.size());
    for (const auto& path : inputs) members.push_back(read_predictions_csv(path));
    write_predictions_csv(ensemble_average(members, k), output);
}

}  // namespace vidcls
