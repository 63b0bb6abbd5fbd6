#include "vidcls/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace vidcls {

std::vector<ScoredClass> top_k(const TensorBuffer& scores, int k) {
    if (k < 1) throw ConfigError("top_k needs k >= 1");
    if (scores.ndim() != 1) throw ShapeError("top_k expects a 1-D score vector");
    const int c = scores.dim(0);
    std::vector<ScoredClass> all(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i) {
        all[static_cast<std::size_t>(i)] = {i, scores.values[static_cast<std::size_t>(i)]};
    }
    std::sort(all.begin(), all.end(), [](const ScoredClass& a, const ScoredClass& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.class_id < b.class_id;
    });
    all.resize(static_cast<std::size_t>(std::min(k, c)));
    return all;
}

double gap_at_k(const PredictionBatch& batch, int k) {
    if (k < 1) throw ConfigError("gap_at_k needs k >= 1");
    struct Pooled {
        double confidence;
        bool relevant;
    };
    std::vector<Pooled> pooled;
    std::int64_t total_positives = 0;
    for (const auto& video : batch) {
        if (static_cast<int>(video.pairs.size()) > k) {
            throw DataError("video " + video.video_id + " carries more than k=" +
                            std::to_string(k) + " predictions");
        }
        total_positives += static_cast<std::int64_t>(video.labels.size());
        std::unordered_set<int> truth(video.labels.begin(), video.labels.end());
        if (truth.size() != video.labels.size()) {
            throw DataError("video " + video.video_id + " has duplicate labels");
        }
        std::unordered_set<int> seen;
        for (const auto& pair : video.pairs) {
            if (!seen.insert(pair.class_id).second) {
                throw DataError("video " + video.video_id + " has duplicate prediction for class " +
                                std::to_string(pair.class_id));
            }
            pooled.push_back({pair.confidence, truth.count(pair.class_id) > 0});
        }
    }
    if (total_positives == 0) {
        throw DataError("ground truth is empty; the metric is undefined");
    }
    // Stable sort keeps ties in pooling order (video order, then class id).
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const Pooled& a, const Pooled& b) { return a.confidence > b.confidence; });
    double ap = 0.0;
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        if (pooled[i].relevant) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return ap / static_cast<double>(total_positives);
}

std::string format_confidence(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

void write_predictions_csv(const PredictionBatch& batch, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os << "VideoId,LabelConfidencePairs\n";
    for (const auto& video : batch) {
        os << video.video_id << ",";
        for (std::size_t i = 0; i < video.pairs.size(); ++i) {
            if (i) os << " ";
            os << video.pairs[i].class_id << " " << format_confidence(video.pairs[i].confidence);
        }
        os << "\n";
    }
    if (!os) throw FormatError("write failed for " + path);
}

PredictionBatch read_predictions_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != "VideoId,LabelConfidencePairs") {
        throw FormatError(path + ": missing or malformed header");
    }
    PredictionBatch batch;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos || comma == 0) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected 'id,pairs'");
        }
        VideoPrediction video;
        video.video_id = line.substr(0, comma);
        std::istringstream fields(line.substr(comma + 1));
        int class_id;
        std::string conf_text;
        while (fields >> class_id) {
            if (!(fields >> conf_text)) {
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": class id without confidence");
            }
            double confidence = 0.0;
            try {
                std::size_t used = 0;
                confidence = std::stod(conf_text, &used);
                if (used != conf_text.size()) throw std::invalid_argument(conf_text);
            } catch (const std::exception&) {
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": malformed confidence '" + conf_text + "'");
            }
            video.pairs.push_back({class_id, confidence});
        }
        if (!fields.eof()) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": malformed pair list");
        }
        batch.push_back(std::move(video));
    }
    return batch;
}

}  // namespace vidcls
