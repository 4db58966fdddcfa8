#include "astralora/numlin/rng.hpp"

#include <cmath>

#include "astralora/errors.hpp"

namespace astralora::numlin {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

double to_unit(std::uint64_t x) {
    // 53 mantissa bits, result in [0, 1)
    return static_cast<double>(x >> 11) * 0x1p-53;
}

} // namespace

RngStream::RngStream(std::uint64_t master_seed, std::string_view label)
    : master_seed_(master_seed), label_(label) {
    key_ = mix64(master_seed ^ (fnv1a(label) * kGamma));
}

std::uint64_t RngStream::next_u64() {
    counter_ += 1;
    return mix64(key_ + counter_ * kGamma);
}

double RngStream::uniform01() { return to_unit(next_u64()); }

double RngStream::uniform(double lo, double hi) {
    require(lo < hi, "uniform: empty interval");
    return lo + (hi - lo) * uniform01();
}

std::uint64_t RngStream::index(std::uint64_t n) {
    require(n > 0, "index: n must be positive");
    // Rejection-free multiply-shift; bias is negligible for n << 2^64.
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
}

double RngStream::normal() {
    // (0, 1] for the log argument
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    const double u2 = to_unit(next_u64());
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * M_PI * u2);
}

void RngStream::fill_normal(std::span<double> out) {
    std::size_t i = 0;
    for (; i + 1 < out.size(); i += 2) {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
        const double u2 = to_unit(next_u64());
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        out[i] = r * std::cos(t);
        out[i + 1] = r * std::sin(t);
    }
    if (i < out.size()) out[i] = normal();
}

} // namespace astralora::numlin
