#include "vidcls/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vidcls/labelgraph.hpp"

namespace vidcls {

namespace {

constexpr char kMagic[4] = {'Y', '8', 'M', 'S'};
constexpr std::uint8_t kVersion = 1;

// ---- little-endian primitives ----------------------------------------------

void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ofstream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

struct Reader {
    std::ifstream is;
    std::uint64_t offset = 0;
    std::string path;

    explicit Reader(const std::string& p) : is(p, std::ios::binary), path(p) {
        if (!is) throw FormatError("cannot open " + p);
    }

    void read_bytes(void* dst, std::size_t n, const char* what) {
        is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is.gcount()) != n) {
            throw FormatError(path + ": truncated while reading " + std::string(what) +
                              " at byte offset " + std::to_string(offset));
        }
        offset += n;
    }

    std::uint8_t read_u8(const char* what) {
        std::uint8_t v;
        read_bytes(&v, 1, what);
        return v;
    }

    std::uint32_t read_u32(const char* what) {
        unsigned char b[4];
        read_bytes(b, 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    float read_f32(const char* what) {
        std::uint32_t bits = read_u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    bool at_eof() {
        return is.peek() == std::ifstream::traits_type::eof();
    }
};

// ---- generator internals ----------------------------------------------------

std::vector<double> unit_vector(int dim, RngStream& rng) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (auto& x : v) {
        x = rng.next_gaussian();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

int sample_index(const std::vector<double>& cumulative, double u) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    int idx = static_cast<int>(it - cumulative.begin());
    return std::min(idx, static_cast<int>(cumulative.size()) - 1);
}

struct GroupLayout {
    std::vector<int> group_of_class;
    std::vector<std::vector<int>> classes_of_group;
};

GroupLayout partition_groups(int num_classes, int num_groups) {
    GroupLayout layout;
    layout.group_of_class.resize(static_cast<std::size_t>(num_classes));
    layout.classes_of_group.resize(static_cast<std::size_t>(num_groups));
    // Near-equal contiguous blocks.
    int base = num_classes / num_groups;
    int extra = num_classes % num_groups;
    int next = 0;
    for (int g = 0; g < num_groups; ++g) {
        int size = base + (g < extra ? 1 : 0);
        for (int i = 0; i < size; ++i) {
            layout.group_of_class[static_cast<std::size_t>(next)] = g;
            layout.classes_of_group[static_cast<std::size_t>(g)].push_back(next);
            ++next;
        }
    }
    return layout;
}

FeatureSequence render_video(const DatasetSpec& spec, int index, int primary,
                             const std::vector<int>& group_classes,
                             const std::vector<std::vector<double>>& prototypes,
                             RngStream rng) {
    const int d = spec.feature_dim;
    const int t = spec.t_min +
                  static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(spec.t_max - spec.t_min + 1));

    int want = 1 + static_cast<int>(rng.next_u64() % 4);
    int n_labels = std::min<int>(want, static_cast<int>(group_classes.size()));
    std::vector<int> labels = {primary};
    {
        std::vector<int> others;
        for (int c : group_classes)
            if (c != primary) others.push_back(c);
        for (int i = 1; i < n_labels && !others.empty(); ++i) {
            std::size_t pick = static_cast<std::size_t>(rng.next_u64() % others.size());
            labels.push_back(others[pick]);
            others.erase(others.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    }

    // Main scene: a contiguous block of at least half the frames rendered from
    // the primary prototype; the rest cycle through the secondary labels.
    const int main_len = (t + 1) / 2;
    const int main_start =
        t == main_len ? 0
                      : static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(t - main_len + 1));
    std::vector<int> frame_source(static_cast<std::size_t>(t), primary);
    if (labels.size() > 1) {
        int turn = 0;
        for (int i = 0; i < t; ++i) {
            if (i >= main_start && i < main_start + main_len) continue;
            frame_source[static_cast<std::size_t>(i)] =
                labels[static_cast<std::size_t>(1 + turn % (static_cast<int>(labels.size()) - 1))];
            ++turn;
        }
    }

    std::vector<double> frames(static_cast<std::size_t>(t) * d);
    for (int i = 0; i < t; ++i) {
        const auto& proto = prototypes[static_cast<std::size_t>(frame_source[static_cast<std::size_t>(i)])];
        double* row = &frames[static_cast<std::size_t>(i) * d];
        double norm = 0.0;
        for (int j = 0; j < d; ++j) {
            row[j] = proto[static_cast<std::size_t>(j)] + spec.noise_sigma * rng.next_gaussian();
            norm += row[j] * row[j];
        }
        if (spec.l2_normalize && norm > 0.0) {
            norm = std::sqrt(norm);
            for (int j = 0; j < d; ++j) row[j] /= norm;
        }
    }

    std::sort(labels.begin(), labels.end());
    FeatureSequence seq;
    seq.id = "v" + std::to_string(index);
    seq.labels = std::move(labels);
    seq.frames = tensor({t, d}, std::move(frames));
    return seq;
}

}  // namespace

void validate_spec(const DatasetSpec& spec) {
    if (spec.num_videos < 1) throw ConfigError("num_videos must be >= 1");
    if (spec.num_classes < 1) throw ConfigError("num_classes must be >= 1");
    if (spec.feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
    if (spec.t_min < 5) throw ConfigError("t_min must be >= 5 (convolution window)");
    if (spec.t_max < spec.t_min) throw ConfigError("t_max must be >= t_min");
    if (spec.num_label_groups < 1 || spec.num_label_groups > spec.num_classes) {
        throw ConfigError("num_label_groups must lie in [1, num_classes]");
    }
    if (spec.imbalance_exponent < 0.0) throw ConfigError("imbalance_exponent must be >= 0");
    if (spec.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (spec.num_videos < spec.num_classes) {
        throw ConfigError("num_videos must be >= num_classes so every class can be covered");
    }
    double tf = spec.train_fraction, vf = spec.validate_fraction;
    if (tf <= 0.0 || vf < 0.0 || tf + vf >= 1.0) {
        throw ConfigError("split fractions must satisfy 0 < train, 0 <= validate, train+validate < 1");
    }
    // The coverage pass puts one video per class at the front; the train
    // split must be large enough to hold all of them.
    if (static_cast<int>(tf * spec.num_videos) < spec.num_classes) {
        throw ConfigError("train split would hold fewer videos than classes; raise num_videos or "
                          "train_fraction");
    }
}

GeneratedSplits generate_dataset(const DatasetSpec& spec) {
    validate_spec(spec);
    RngStream master(spec.seed);

    const GroupLayout layout = partition_groups(spec.num_classes, spec.num_label_groups);

    RngStream proto_rng = master.derive("prototypes");
    std::vector<std::vector<double>> group_base(static_cast<std::size_t>(spec.num_label_groups));
    for (auto& b : group_base) b = unit_vector(spec.feature_dim, proto_rng);
    std::vector<std::vector<double>> prototypes(static_cast<std::size_t>(spec.num_classes));
    for (int c = 0; c < spec.num_classes; ++c) {
        auto offset = unit_vector(spec.feature_dim, proto_rng);
        const auto& base = group_base[static_cast<std::size_t>(layout.group_of_class[static_cast<std::size_t>(c)])];
        std::vector<double> p(static_cast<std::size_t>(spec.feature_dim));
        double norm = 0.0;
        for (int j = 0; j < spec.feature_dim; ++j) {
            p[static_cast<std::size_t>(j)] =
                base[static_cast<std::size_t>(j)] + 0.6 * offset[static_cast<std::size_t>(j)];
            norm += p[static_cast<std::size_t>(j)] * p[static_cast<std::size_t>(j)];
        }
        norm = std::sqrt(norm);
        for (auto& x : p) x /= norm;
        prototypes[static_cast<std::size_t>(c)] = std::move(p);
    }

    // Group popularity: rank^(-imbalance_exponent), cumulative for sampling.
    std::vector<double> cumulative(static_cast<std::size_t>(spec.num_label_groups));
    {
        double total = 0.0;
        for (int g = 0; g < spec.num_label_groups; ++g)
            total += std::pow(static_cast<double>(g + 1), -spec.imbalance_exponent);
        double acc = 0.0;
        for (int g = 0; g < spec.num_label_groups; ++g) {
            acc += std::pow(static_cast<double>(g + 1), -spec.imbalance_exponent) / total;
            cumulative[static_cast<std::size_t>(g)] = acc;
        }
    }

    RngStream pick_rng = master.derive("labels");
    std::vector<FeatureSequence> videos;
    videos.reserve(static_cast<std::size_t>(spec.num_videos));
    for (int i = 0; i < spec.num_videos; ++i) {
        int primary;
        if (i < spec.num_classes) {
            // Coverage pass: one video per class so S(y) >= 1 holds everywhere.
            primary = i;
        } else {
            int g = sample_index(cumulative, pick_rng.next_uniform());
            const auto& members = layout.classes_of_group[static_cast<std::size_t>(g)];
            primary = members[static_cast<std::size_t>(pick_rng.next_u64() % members.size())];
        }
        const auto& group_classes =
            layout.classes_of_group[static_cast<std::size_t>(layout.group_of_class[static_cast<std::size_t>(primary)])];
        videos.push_back(render_video(spec, i, primary, group_classes, prototypes,
                                      master.derive("video", static_cast<std::uint64_t>(i))));
    }

    const int n_train = std::max(1, static_cast<int>(spec.train_fraction * spec.num_videos));
    const int n_val = static_cast<int>(spec.validate_fraction * spec.num_videos);
    GeneratedSplits splits;
    for (Dataset* d : {&splits.train, &splits.validate, &splits.test}) {
        d->num_classes = spec.num_classes;
        d->feature_dim = spec.feature_dim;
    }
    for (int i = 0; i < spec.num_videos; ++i) {
        if (i < n_train)
            splits.train.videos.push_back(std::move(videos[static_cast<std::size_t>(i)]));
        else if (i < n_train + n_val)
            splits.validate.videos.push_back(std::move(videos[static_cast<std::size_t>(i)]));
        else
            splits.test.videos.push_back(std::move(videos[static_cast<std::size_t>(i)]));
    }
    return splits;
}

DatasetSpec dataset_spec_from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open dataset spec " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("dataset spec " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("dataset spec must be a JSON object");
    DatasetSpec spec;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "num_videos") spec.num_videos = value.get<int>();
            else if (key == "num_classes") spec.num_classes = value.get<int>();
            else if (key == "feature_dim") spec.feature_dim = value.get<int>();
            else if (key == "t_min") spec.t_min = value.get<int>();
            else if (key == "t_max") spec.t_max = value.get<int>();
            else if (key == "num_label_groups") spec.num_label_groups = value.get<int>();
            else if (key == "imbalance_exponent") spec.imbalance_exponent = value.get<double>();
            else if (key == "noise_sigma") spec.noise_sigma = value.get<double>();
            else if (key == "seed") spec.seed = value.get<std::uint64_t>();
            else if (key == "l2_normalize") spec.l2_normalize = value.get<bool>();
            else if (key == "train_fraction") spec.train_fraction = value.get<double>();
            else if (key == "validate_fraction") spec.validate_fraction = value.get<double>();
            else throw ConfigError("unknown dataset spec key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("dataset spec key '" + key + "': " + e.what());
        }
    }
    validate_spec(spec);
    return spec;
}

void write_dataset(const Dataset& data, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    put_u32(os, static_cast<std::uint32_t>(data.num_classes));
    put_u32(os, static_cast<std::uint32_t>(data.feature_dim));
    for (const auto& v : data.videos) {
        put_u32(os, static_cast<std::uint32_t>(v.id.size()));
        os.write(v.id.data(), static_cast<std::streamsize>(v.id.size()));
        put_u32(os, static_cast<std::uint32_t>(v.labels.size()));
        for (int label : v.labels) put_u32(os, static_cast<std::uint32_t>(label));
        put_u32(os, static_cast<std::uint32_t>(v.num_frames()));
        for (double x : v.frames->values) put_f32(os, static_cast<float>(x));
    }
    if (!os) throw FormatError("write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.read_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError(path + ": bad magic at byte offset 0");
    }
    std::uint8_t version = r.read_u8("version");
    if (version != kVersion) {
        throw FormatError(path + ": unsupported version " + std::to_string(version) +
                          " at byte offset 4");
    }
    Dataset data;
    data.num_classes = static_cast<int>(r.read_u32("class count"));
    data.feature_dim = static_cast<int>(r.read_u32("feature dim"));
    if (data.num_classes < 1 || data.feature_dim < 1) {
        throw FormatError(path + ": invalid header dims");
    }
    while (!r.at_eof()) {
        FeatureSequence v;
        std::uint32_t id_len = r.read_u32("id length");
        if (id_len > (1u << 20)) throw FormatError(path + ": implausible id length");
        v.id.resize(id_len);
        if (id_len) r.read_bytes(v.id.data(), id_len, "id");
        std::uint32_t n_labels = r.read_u32("label count");
        if (n_labels > static_cast<std::uint32_t>(data.num_classes)) {
            throw FormatError(path + ": label count exceeds class count at byte offset " +
                              std::to_string(r.offset));
        }
        v.labels.resize(n_labels);
        for (auto& label : v.labels) {
            label = static_cast<int>(r.read_u32("label id"));
            if (label < 0 || label >= data.num_classes) {
                throw FormatError(path + ": label id out of range at byte offset " +
                                  std::to_string(r.offset));
            }
        }
        std::uint32_t t = r.read_u32("frame count");
        if (t == 0 || t > (1u << 24)) throw FormatError(path + ": implausible frame count");
        std::vector<double> frames(static_cast<std::size_t>(t) * data.feature_dim);
        for (auto& x : frames) x = static_cast<double>(r.read_f32("frame value"));
        v.frames = tensor({static_cast<int>(t), data.feature_dim}, std::move(frames));
        data.videos.push_back(std::move(v));
    }
    return data;
}

LabelStats label_stats(const Dataset& data) {
    LabelStats stats;
    stats.counts.assign(static_cast<std::size_t>(data.num_classes), 0);
    stats.total_videos = static_cast<std::int64_t>(data.videos.size());
    for (const auto& v : data.videos) {
        for (int label : v.labels) {
            if (label < 0 || label >= data.num_classes) {
                throw DataError("label " + std::to_string(label) + " out of range in video " + v.id);
            }
            ++stats.counts[static_cast<std::size_t>(label)];
        }
    }
    return stats;
}

void write_label_stats_csv(const LabelStats& stats, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os << "ClassId,Count\n";
    for (std::size_t c = 0; c < stats.counts.size(); ++c)
        os << c << "," << stats.counts[c] << "\n";
}

void write_cooccurrence_csv(const Dataset& data, const std::string& path) {
    auto counts = build_cooccurrence(data);
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os << "ClassA,ClassB,Count\n";
    for (int i = 0; i < counts.num_classes; ++i)
        for (int j = i; j < counts.num_classes; ++j) {
            std::int64_t n = counts.at(i, j);
            if (n > 0) os << i << "," << j << "," << n << "\n";
        }
}

}  // namespace vidcls
