#include "vidcls/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace vidcls {

namespace {

constexpr char kMagic[4] = {'V', 'C', 'P', '1'};
constexpr std::uint8_t kVersion = 1;

std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

std::string first_nonfinite_group(const std::vector<NamedTensor>& params) {
    for (const auto& named : params) {
        for (double g : named.t->grad) {
            if (!std::isfinite(g)) return named.name;
        }
    }
    return "<loss>";
}

// ---- binary helpers (little-endian) -----------------------------------------

void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ofstream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

struct CkptReader {
    std::ifstream is;
    std::uint64_t offset = 0;
    std::string path;

    explicit CkptReader(const std::string& p) : is(p, std::ios::binary), path(p) {
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

    std::uint32_t read_u32(const char* what) {
        unsigned char b[4];
        read_bytes(b, 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    std::uint64_t read_u64(const char* what) {
        std::uint64_t lo = read_u32(what);
        std::uint64_t hi = read_u32(what);
        return lo | (hi << 32);
    }

    double read_f64(const char* what) {
        std::uint64_t bits = read_u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string read_string(const char* what) {
        std::uint32_t len = read_u32(what);
        if (len > (1u << 26)) throw FormatError(path + ": implausible string length");
        std::string s(len, '\0');
        if (len) read_bytes(s.data(), len, what);
        return s;
    }
};

void write_tensor(std::ofstream& os, const NamedTensor& named) {
    put_u32(os, static_cast<std::uint32_t>(named.name.size()));
    os.write(named.name.data(), static_cast<std::streamsize>(named.name.size()));
    put_u32(os, static_cast<std::uint32_t>(named.t->shape.size()));
    for (int e : named.t->shape) put_u32(os, static_cast<std::uint32_t>(e));
    for (double v : named.t->values) put_f64(os, v);
}

}  // namespace

TrainResult train_model(Model& model, AdamOptimizer& opt, const Dataset& train,
                        const Dataset& validation, const MetricsSink& sink) {
    const ModelConfig& cfg = model.config();
    if (train.videos.empty()) throw DataError("training split is empty");

    RngStream master(cfg.seed);
    RngStream shuffle_rng = master.derive("shuffle");
    RngStream forward_rng = master.derive("forward");

    const std::int64_t steps_per_epoch =
        (static_cast<std::int64_t>(train.videos.size()) + cfg.batch - 1) / cfg.batch;
    std::int64_t planned = steps_per_epoch * cfg.epochs;
    if (cfg.max_steps > 0) planned = std::min<std::int64_t>(planned, cfg.max_steps);

    TrainResult result;
    double loss_accum = 0.0;
    std::int64_t loss_count = 0;

    auto emit = [&](std::int64_t step, double lr) {
        MetricsRecord rec;
        rec.step = step;
        rec.lr = lr;
        rec.train_loss = loss_count ? loss_accum / static_cast<double>(loss_count) : 0.0;
        rec.val_gap = validation.videos.empty()
                          ? 0.0
                          : evaluate_model(model, validation, cfg.top_k).gap;
        result.log.push_back(rec);
        result.final_gap = rec.val_gap;
        if (sink) sink(rec);
        loss_accum = 0.0;
        loss_count = 0;
    };

    std::int64_t step = 0;
    bool done = planned == 0;
    while (!done) {
        auto order = shuffled_indices(train.videos.size(), shuffle_rng);
        for (std::size_t start = 0; start < order.size() && !done; start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            opt.zero_grad();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto& video = train.videos[order[i]];
                auto loss = model.example_loss(video, Mode::train, forward_rng);
                batch_loss += loss->values[0];
                backward(loss, inv_batch);
            }
            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss)) {
                throw DataError("non-finite loss " + std::to_string(batch_loss) + " at step " +
                                std::to_string(step + 1) + " (first non-finite gradient group: " +
                                first_nonfinite_group(model.parameters()) + ")");
            }
            opt.step();
            ++step;
            loss_accum += batch_loss;
            ++loss_count;
            if (step % cfg.eval_interval == 0) emit(step, opt.current_lr());
            if (step >= planned) done = true;
        }
    }
    if (result.log.empty() || result.log.back().step != step) emit(step, opt.current_lr());
    result.steps = step;
    return result;
}

EvaluationResult evaluate_model(const Model& model, const Dataset& data, int k) {
    if (data.num_classes != model.config().num_classes) {
        throw ConfigError("dataset has " + std::to_string(data.num_classes) +
                          " classes but the model scores " +
                          std::to_string(model.config().num_classes));
    }
    EvaluationResult result;
    result.predictions.reserve(data.videos.size());
    RngStream unused(0);  // eval mode draws nothing
    for (const auto& video : data.videos) {
        auto out = model.score_video(video, Mode::eval, unused);
        VideoPrediction pred;
        pred.video_id = video.id;
        pred.labels = video.labels;
        pred.pairs = top_k(*out.mixed, k);
        result.predictions.push_back(std::move(pred));
    }
    result.gap = gap_at_k(result.predictions, k);
    return result;
}

void save_checkpoint(const std::string& path, const Model& model, const AdamOptimizer& opt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    const std::string cfg_json = model.config().to_json();
    put_u32(os, static_cast<std::uint32_t>(cfg_json.size()));
    os.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));
    put_u64(os, model.config().hash());

    const auto tensors = model.state_tensors();
    put_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& named : tensors) write_tensor(os, named);

    // Label statistics (needed to resume training of the noise encoder).
    const auto& stats = model.stats();
    put_u32(os, static_cast<std::uint32_t>(stats.counts.size()));
    for (std::int64_t c : stats.counts) put_u64(os, static_cast<std::uint64_t>(c));
    put_u64(os, static_cast<std::uint64_t>(stats.total_videos));

    // Optimizer state, aligned with parameter registration order.
    put_u64(os, static_cast<std::uint64_t>(opt.step_count()));
    put_u32(os, static_cast<std::uint32_t>(opt.moments().size()));
    for (std::size_t i = 0; i < opt.moments().size(); ++i) {
        const auto& name = opt.params()[i].name;
        put_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<std::uint32_t>(opt.moments()[i].m.size()));
        for (double v : opt.moments()[i].m) put_f64(os, v);
        for (double v : opt.moments()[i].v) put_f64(os, v);
    }
    if (!os) throw FormatError("write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    CkptReader r(path);
    char magic[4];
    r.read_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path + ": bad magic at byte offset 0");
    unsigned char version;
    r.read_bytes(&version, 1, "version");
    if (version != kVersion) {
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    }
    const std::string cfg_json = r.read_string("config");
    const std::uint64_t stored_hash = r.read_u64("config hash");
    ModelConfig cfg = config_from_json(cfg_json);
    if (cfg.hash() != stored_hash) {
        throw FormatError(path + ": config hash mismatch (corrupted checkpoint)");
    }

    LoadedCheckpoint loaded;
    RngStream build_rng(cfg.seed);
    loaded.model = Model::build(cfg, build_rng);

    const std::uint32_t n_tensors = r.read_u32("tensor count");
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = r.read_string("tensor name");
        const std::uint32_t ndim = r.read_u32("tensor rank");
        if (ndim > 8) throw FormatError(path + ": implausible tensor rank");
        std::vector<int> shape(ndim);
        std::size_t count = 1;
        for (auto& e : shape) {
            e = static_cast<int>(r.read_u32("tensor extent"));
            if (e < 1) throw FormatError(path + ": non-positive tensor extent");
            count *= static_cast<std::size_t>(e);
        }
        std::vector<double> values(count);
        for (auto& v : values) v = r.read_f64("tensor value");
        loaded.model.load_tensor(name, shape, std::move(values));
    }

    LabelStats stats;
    const std::uint32_t n_counts = r.read_u32("stats size");
    stats.counts.resize(n_counts);
    for (auto& c : stats.counts) c = static_cast<std::int64_t>(r.read_u64("stats count"));
    stats.total_videos = static_cast<std::int64_t>(r.read_u64("stats total"));
    loaded.model.attach_label_stats(std::move(stats));

    loaded.step = static_cast<std::int64_t>(r.read_u64("optimizer step"));
    const std::uint32_t n_moments = r.read_u32("moment count");
    const auto& params = loaded.model.parameters();
    if (n_moments != params.size()) {
        throw FormatError(path + ": optimizer state count does not match model parameters");
    }
    loaded.moments.resize(n_moments);
    for (std::uint32_t i = 0; i < n_moments; ++i) {
        const std::string name = r.read_string("moment name");
        if (name != params[i].name) {
            throw FormatError(path + ": optimizer state order mismatch at '" + name + "'");
        }
        const std::uint32_t n = r.read_u32("moment size");
        if (n != params[i].t->size()) {
            throw FormatError(path + ": optimizer state size mismatch for '" + name + "'");
        }
        loaded.moments[i].m.resize(n);
        for (auto& v : loaded.moments[i].m) v = r.read_f64("moment m");
        loaded.moments[i].v.resize(n);
        for (auto& v : loaded.moments[i].v) v = r.read_f64("moment v");
    }
    if (r.is.peek() != std::ifstream::traits_type::eof()) {
        throw FormatError(path + ": trailing bytes after optimizer state");
    }
    loaded.adam_cfg.learning_rate = cfg.learning_rate;
    loaded.adam_cfg.decay_rate = cfg.decay_rate;
    loaded.adam_cfg.decay_steps = cfg.decay_steps;
    return loaded;
}

}  // namespace vidcls
