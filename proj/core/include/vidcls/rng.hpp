#pragma once

#include <cstdint>
#include <string_view>

namespace vidcls {

/// Deterministic counter-based random stream.
///
/// Every draw is a pure function of (seed, position), so any value can be
/// reproduced by seeking back to its position. Sub-streams derived with
/// distinct labels are statistically independent and themselves reproducible,
/// which is what lets dataset generation, parameter init, dropout masks and
/// noise draws all share one master seed without interfering.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64();

    /// Uniform draw in [0, 1), 53-bit resolution.
    double next_uniform();

    /// Standard normal draw (Box-Muller); consumes two positions.
    double next_gaussian();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return pos_; }
    void seek(std::uint64_t pos) { pos_ = pos; }

    /// Independent labelled sub-stream starting at position 0.
    RngStream derive(std::string_view label, std::uint64_t index = 0) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t pos_ = 0;
};

}  // namespace vidcls
