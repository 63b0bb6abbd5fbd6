#include "vidcls/labelgraph.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace vidcls {

namespace {

constexpr char kMagic[4] = {'L', 'G', 'C', '1'};
constexpr double kClampEps = 1e-6;

}  // namespace

CooccurrenceCounts build_cooccurrence(const Dataset& data) {
    CooccurrenceCounts result;
    result.num_classes = data.num_classes;
    result.counts.assign(static_cast<std::size_t>(data.num_classes) * data.num_classes, 0);
    const int c = data.num_classes;
    for (const auto& v : data.videos) {
        for (int a : v.labels) {
            if (a < 0 || a >= c) {
                throw DataError("label " + std::to_string(a) + " out of range in video " + v.id);
            }
        }
        for (std::size_t i = 0; i < v.labels.size(); ++i) {
            const int a = v.labels[i];
            ++result.counts[static_cast<std::size_t>(a) * c + a];
            for (std::size_t j = i + 1; j < v.labels.size(); ++j) {
                const int b = v.labels[j];
                ++result.counts[static_cast<std::size_t>(a) * c + b];
                ++result.counts[static_cast<std::size_t>(b) * c + a];
            }
        }
    }
    return result;
}

CorrelationMatrix build_correlation(const CooccurrenceCounts& counts, CorrelationKind kind,
                                    double sparsity_tau) {
    const int c = counts.num_classes;
    std::vector<double> m(static_cast<std::size_t>(c) * c, 0.0);
    for (int i = 0; i < c; ++i) {
        const std::int64_t si = counts.at(i, i);
        for (int j = 0; j < c; ++j) {
            const std::int64_t sj = counts.at(j, j);
            double value = 0.0;
            if (si > 0 && sj > 0) {
                switch (kind) {
                    case CorrelationKind::cosine:
                        value = static_cast<double>(counts.at(i, j)) /
                                std::sqrt(static_cast<double>(si) * static_cast<double>(sj));
                        break;
                    case CorrelationKind::conditional:
                        value = static_cast<double>(counts.at(i, j)) / static_cast<double>(si);
                        break;
                }
            }
            if (value < sparsity_tau) value = 0.0;
            m[static_cast<std::size_t>(i) * c + j] = value;
        }
    }
    CorrelationMatrix cm;
    cm.frozen = tensor({c, c}, m);
    cm.trainable = parameter({c, c}, std::move(m));
    return cm;
}

TensorPtr apply_label_layer(const TensorPtr& scores, const CorrelationMatrix& cm,
                            double alpha, double beta, double gamma) {
    if (scores->ndim() != 1 || scores->dim(0) != cm.frozen->dim(0)) {
        throw ShapeError("label layer expects scores of length " +
                         std::to_string(cm.frozen->dim(0)) + ", got " + scores->shape_str());
    }
    auto mixed = add(add(scale(scores, alpha), scale(matvec(cm.frozen, scores), beta)),
                     scale(matvec(cm.trainable, scores), gamma));
    return clamp(mixed, kClampEps, 1.0 - kClampEps);
}

void write_correlation(const TensorBuffer& frozen, const std::string& path) {
    if (frozen.ndim() != 2 || frozen.dim(0) != frozen.dim(1)) {
        throw ShapeError("correlation matrix must be square, got " + frozen.shape_str());
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    const std::uint32_t c = static_cast<std::uint32_t>(frozen.dim(0));
    unsigned char b[4] = {static_cast<unsigned char>(c), static_cast<unsigned char>(c >> 8),
                          static_cast<unsigned char>(c >> 16), static_cast<unsigned char>(c >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
    for (double v : frozen.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        unsigned char raw[8];
        for (int i = 0; i < 8; ++i) raw[i] = static_cast<unsigned char>(bits >> (8 * i));
        os.write(reinterpret_cast<const char*>(raw), 8);
    }
    if (!os) throw FormatError("write failed for " + path);
}

TensorPtr read_correlation(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError(path + ": bad magic at byte offset 0");
    }
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) throw FormatError(path + ": truncated header at byte offset 4");
    const std::uint32_t c = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                            (static_cast<std::uint32_t>(b[2]) << 16) |
                            (static_cast<std::uint32_t>(b[3]) << 24);
    if (c == 0 || c > (1u << 16)) throw FormatError(path + ": implausible class count");
    std::vector<double> m(static_cast<std::size_t>(c) * c);
    for (std::size_t i = 0; i < m.size(); ++i) {
        unsigned char raw[8];
        is.read(reinterpret_cast<char*>(raw), 8);
        if (is.gcount() != 8) {
            throw FormatError(path + ": truncated at byte offset " + std::to_string(8 + 8 * i));
        }
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(raw[k]) << (8 * k);
        std::memcpy(&m[i], &bits, 8);
    }
    if (is.peek() != std::ifstream::traits_type::eof()) {
        throw FormatError(path + ": trailing bytes after matrix");
    }
    return tensor({static_cast<int>(c), static_cast<int>(c)}, std::move(m));
}

}  // namespace vidcls
