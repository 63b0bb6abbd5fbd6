#include "vidcls/rng.hpp"

#include <cmath>
#include <numbers>

namespace vidcls {

namespace {

// splitmix64 finalizer; a good bit mixer for counter-based generation.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t RngStream::next_u64() {
    // Two mixing rounds over (seed, position) so nearby counters decorrelate.
    std::uint64_t z = mix64(seed_ ^ mix64(pos_));
    ++pos_;
    return z;
}

double RngStream::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
    // 1 - u keeps the log argument in (0, 1].
    double u1 = 1.0 - next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::derive(std::string_view label, std::uint64_t index) const {
    std::uint64_t child = mix64(seed_ ^ fnv1a(label)) + index;
    return RngStream(mix64(child));
}

}  // namespace vidcls
