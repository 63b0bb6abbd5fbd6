#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidcls/tensor.hpp"

namespace vidcls {

/// One video example: a T×D matrix of per-frame feature vectors plus its
/// ground-truth label set (sorted, may be empty outside training data).
struct FeatureSequence {
    std::string id;
    std::vector<int> labels;
    TensorPtr frames;  // [T × D]

    int num_frames() const { return frames->dim(0); }
    int feature_dim() const { return frames->dim(1); }
};

struct Dataset {
    int num_classes = 0;
    int feature_dim = 0;
    std::vector<FeatureSequence> videos;
};

/// Per-class example counts over a dataset.
struct LabelStats {
    std::vector<std::int64_t> counts;  // indexed by class id
    std::int64_t total_videos = 0;

    std::int64_t count(int label) const { return counts[static_cast<std::size_t>(label)]; }
};

/// Parameters of the synthetic generator. Classes are partitioned into
/// correlated groups; group popularity follows rank^(-imbalance_exponent);
/// each video draws 1–4 labels from a single group and renders frames from
/// the labels' prototype vectors with Gaussian noise, a contiguous main-scene
/// segment (at least half the frames) coming from the primary label.
struct DatasetSpec {
    int num_videos = 5000;
    int num_classes = 50;
    int feature_dim = 64;
    int t_min = 5;
    int t_max = 30;
    int num_label_groups = 10;
    double imbalance_exponent = 1.0;
    double noise_sigma = 0.1;
    std::uint64_t seed = 42;
    bool l2_normalize = true;
    double train_fraction = 0.8;
    double validate_fraction = 0.1;
};

struct GeneratedSplits {
    Dataset train;
    Dataset validate;
    Dataset test;
};

/// Deterministic under spec.seed: identical spec yields identical splits.
GeneratedSplits generate_dataset(const DatasetSpec& spec);

void validate_spec(const DatasetSpec& spec);

/// Flat JSON object with the DatasetSpec keys; missing keys take defaults,
/// unknown keys are rejected.
DatasetSpec dataset_spec_from_json_file(const std::string& path);

// Binary dataset container (magic "Y8MS"); round-trips exactly.
void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

LabelStats label_stats(const Dataset& data);

/// CSV dumps: per-class counts and the pairwise co-occurrence table.
void write_label_stats_csv(const LabelStats& stats, const std::string& path);
void write_cooccurrence_csv(const Dataset& data, const std::string& path);

}  // namespace vidcls
