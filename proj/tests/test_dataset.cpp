#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vidcls/dataset.hpp"
#include "vidcls/labelgraph.hpp"

using namespace vidcls;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

DatasetSpec small_spec() {
    DatasetSpec spec;
    spec.num_videos = 400;
    spec.num_classes = 20;
    spec.feature_dim = 16;
    spec.t_min = 5;
    spec.t_max = 9;
    spec.num_label_groups = 5;
    spec.seed = 11;
    return spec;
}

Dataset merge_splits(const GeneratedSplits& splits) {
    Dataset all;
    all.num_classes = splits.train.num_classes;
    all.feature_dim = splits.train.feature_dim;
    for (const Dataset* d : {&splits.train, &splits.validate, &splits.test})
        for (const auto& v : d->videos) all.videos.push_back(v);
    return all;
}

}  // namespace

TEST_CASE("generation is deterministic down to the file bytes") {
    auto spec = small_spec();
    auto a = generate_dataset(spec);
    auto b = generate_dataset(spec);
    write_dataset(a.train, "gen_a.y8ms");
    write_dataset(b.train, "gen_b.y8ms");
    CHECK(slurp("gen_a.y8ms") == slurp("gen_b.y8ms"));
    std::remove("gen_a.y8ms");
    std::remove("gen_b.y8ms");

    auto spec2 = spec;
    spec2.seed = 12;
    auto c = generate_dataset(spec2);
    CHECK(c.train.videos[0].frames->values != a.train.videos[0].frames->values);
}

TEST_CASE("flat imbalance exponent gives uniform class counts") {
    auto spec = small_spec();
    spec.num_videos = 4000;
    spec.imbalance_exponent = 0.0;
    auto all = merge_splits(generate_dataset(spec));
    auto stats = label_stats(all);
    std::int64_t total = 0;
    for (auto c : stats.counts) total += c;
    const double p = 1.0 / spec.num_classes;
    const double mean = static_cast<double>(total) * p;
    const double sigma = std::sqrt(static_cast<double>(total) * p * (1.0 - p));
    for (auto c : stats.counts) {
        CHECK(std::abs(static_cast<double>(c) - mean) <= 3.0 * sigma);
    }
}

TEST_CASE("positive imbalance exponent skews class frequencies") {
    auto spec = small_spec();
    spec.num_videos = 2000;
    spec.imbalance_exponent = 1.2;
    auto all = merge_splits(generate_dataset(spec));
    auto stats = label_stats(all);
    // First group's classes should be far more common than the last group's.
    CHECK(stats.counts.front() > 3 * stats.counts.back());
}

TEST_CASE("singleton groups produce no co-occurrence") {
    auto spec = small_spec();
    spec.num_label_groups = spec.num_classes;
    auto all = merge_splits(generate_dataset(spec));
    auto counts = build_cooccurrence(all);
    for (int i = 0; i < counts.num_classes; ++i)
        for (int j = 0; j < counts.num_classes; ++j)
            if (i != j) CHECK(counts.at(i, j) == 0);
}

TEST_CASE("co-occurrence is block diagonal by group") {
    auto spec = small_spec();
    auto all = merge_splits(generate_dataset(spec));
    auto counts = build_cooccurrence(all);
    const int group_size = spec.num_classes / spec.num_label_groups;
    for (int i = 0; i < spec.num_classes; ++i)
        for (int j = 0; j < spec.num_classes; ++j)
            if (i / group_size != j / group_size) CHECK(counts.at(i, j) == 0);
}

TEST_CASE("every class is represented in the train split") {
    auto spec = small_spec();
    spec.imbalance_exponent = 2.5;  // heavily skewed
    auto splits = generate_dataset(spec);
    auto stats = label_stats(splits.train);
    for (auto c : stats.counts) CHECK(c >= 1);
}

TEST_CASE("video lengths respect the configured range and window floor") {
    auto spec = small_spec();
    auto splits = generate_dataset(spec);
    for (const auto& v : splits.train.videos) {
        CHECK(v.num_frames() >= spec.t_min);
        CHECK(v.num_frames() <= spec.t_max);
        CHECK(!v.labels.empty());
        CHECK(static_cast<int>(v.labels.size()) <= 4);
    }
}

TEST_CASE("normalized frames sit on the unit sphere, raw frames stay bounded") {
    auto spec = small_spec();
    spec.num_videos = 200;
    auto splits = generate_dataset(spec);
    for (const auto& v : splits.train.videos) {
        for (int t = 0; t < v.num_frames(); ++t) {
            double norm = 0.0;
            for (int j = 0; j < v.feature_dim(); ++j) {
                double x = v.frames->values[static_cast<std::size_t>(t) * v.feature_dim() + j];
                norm += x * x;
            }
            CHECK(norm == doctest::Approx(1.0));
        }
    }

    spec.l2_normalize = false;
    auto raw = generate_dataset(spec);
    const double bound = 1.0 + 6.0 * spec.noise_sigma;  // unit prototypes + noise tail
    for (const auto& v : raw.train.videos)
        for (double x : v.frames->values) CHECK(std::abs(x) <= bound);
}

TEST_CASE("dataset file round trips exactly including empty datasets") {
    auto spec = small_spec();
    spec.num_videos = 30;
    auto splits = generate_dataset(spec);
    write_dataset(splits.train, "roundtrip.y8ms");
    auto loaded = read_dataset("roundtrip.y8ms");
    REQUIRE(loaded.videos.size() == splits.train.videos.size());
    CHECK(loaded.num_classes == splits.train.num_classes);
    for (std::size_t i = 0; i < loaded.videos.size(); ++i) {
        CHECK(loaded.videos[i].id == splits.train.videos[i].id);
        CHECK(loaded.videos[i].labels == splits.train.videos[i].labels);
        CHECK(loaded.videos[i].frames->shape == splits.train.videos[i].frames->shape);
        // Storage is 32-bit; the round trip must be exact at that precision.
        for (std::size_t k = 0; k < loaded.videos[i].frames->size(); ++k) {
            CHECK(static_cast<float>(loaded.videos[i].frames->values[k]) ==
                  static_cast<float>(splits.train.videos[i].frames->values[k]));
        }
    }
    write_dataset(loaded, "roundtrip2.y8ms");
    CHECK(slurp("roundtrip.y8ms") == slurp("roundtrip2.y8ms"));

    Dataset empty;
    empty.num_classes = 3;
    empty.feature_dim = 4;
    write_dataset(empty, "empty.y8ms");
    auto loaded_empty = read_dataset("empty.y8ms");
    CHECK(loaded_empty.videos.empty());
    CHECK(loaded_empty.num_classes == 3);

    std::remove("roundtrip.y8ms");
    std::remove("roundtrip2.y8ms");
    std::remove("empty.y8ms");
}

TEST_CASE("corrupted dataset files fail loudly with an offset") {
    auto spec = small_spec();
    spec.num_videos = 25;
    write_dataset(generate_dataset(spec).train, "corrupt.y8ms");

    {
        std::fstream f("corrupt.y8ms", std::ios::binary | std::ios::in | std::ios::out);
        f.put('Z');
    }
    CHECK_THROWS_WITH_AS(read_dataset("corrupt.y8ms"), doctest::Contains("bad magic"), FormatError);

    write_dataset(generate_dataset(spec).train, "corrupt.y8ms");
    auto all = slurp("corrupt.y8ms");
    {
        std::ofstream out("corrupt.y8ms", std::ios::binary | std::ios::trunc);
        out.write(all.data(), static_cast<std::streamsize>(all.size() - 7));
    }
    try {
        read_dataset("corrupt.y8ms");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
    std::remove("corrupt.y8ms");
}

TEST_CASE("label statistics by enumeration and against the co-occurrence diagonal") {
    Dataset data;
    data.num_classes = 2;
    data.feature_dim = 1;
    auto add_video = [&](std::vector<int> labels) {
        FeatureSequence v;
        v.id = "v" + std::to_string(data.videos.size());
        v.labels = std::move(labels);
        v.frames = tensor({5, 1}, std::vector<double>(5, 0.0));
        data.videos.push_back(std::move(v));
    };
    add_video({0, 1});
    add_video({0});
    auto stats = label_stats(data);
    CHECK(stats.counts[0] == 2);
    CHECK(stats.counts[1] == 1);
    CHECK(stats.total_videos == 2);

    auto counts = build_cooccurrence(data);
    for (int c = 0; c < 2; ++c)
        CHECK(counts.at(c, c) == stats.counts[static_cast<std::size_t>(c)]);

    Dataset empty;
    empty.num_classes = 4;
    empty.feature_dim = 1;
    auto empty_stats = label_stats(empty);
    for (auto c : empty_stats.counts) CHECK(c == 0);
}

TEST_CASE("dataset spec validation rejects nonsense") {
    DatasetSpec spec;
    spec.t_min = 3;
    CHECK_THROWS_AS(validate_spec(spec), ConfigError);
    spec = {};
    spec.num_label_groups = 99;
    spec.num_classes = 10;
    CHECK_THROWS_AS(validate_spec(spec), ConfigError);
    spec = {};
    spec.num_videos = 10;
    spec.num_classes = 50;
    CHECK_THROWS_AS(validate_spec(spec), ConfigError);
    spec = {};
    spec.train_fraction = 0.95;
    spec.validate_fraction = 0.1;
    CHECK_THROWS_AS(validate_spec(spec), ConfigError);
    spec = {};
    spec.num_videos = 100;
    spec.num_classes = 50;
    spec.train_fraction = 0.4;  // 40 train videos cannot cover 50 classes
    CHECK_THROWS_AS(validate_spec(spec), ConfigError);
}

TEST_CASE("dataset spec json parsing") {
    {
        std::ofstream os("spec_ok.json");
        os << R"({"num_videos": 120, "num_classes": 12, "num_label_groups": 4, "seed": 5})";
    }
    auto spec = dataset_spec_from_json_file("spec_ok.json");
    CHECK(spec.num_videos == 120);
    CHECK(spec.num_classes == 12);
    CHECK(spec.feature_dim == 64);  // untouched default
    std::remove("spec_ok.json");

    {
        std::ofstream os("spec_bad.json");
        os << R"({"num_videos": 120, "frobnicate": 3})";
    }
    CHECK_THROWS_AS(dataset_spec_from_json_file("spec_bad.json"), ConfigError);
    std::remove("spec_bad.json");
}

TEST_CASE("stats csv dumps") {
    auto spec = small_spec();
    spec.num_videos = 40;
    auto splits = generate_dataset(spec);
    write_label_stats_csv(label_stats(splits.train), "stats.csv");
    write_cooccurrence_csv(splits.train, "cooc.csv");
    auto stats_text = slurp("stats.csv");
    CHECK(stats_text.rfind("ClassId,Count\n", 0) == 0);
    CHECK(slurp("cooc.csv").rfind("ClassA,ClassB,Count\n", 0) == 0);
    std::remove("stats.csv");
    std::remove("cooc.csv");
}
