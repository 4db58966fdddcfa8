#ifndef ASTRALORA_NUMLIN_RNG_HPP
#define ASTRALORA_NUMLIN_RNG_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace astralora::numlin {

/// Counter-based random stream. A stream is identified by a master seed and a
/// label ("data", "zo", "psi", ...); distinct labels under the same master
/// seed give statistically independent substreams. The i-th raw draw is a
/// pure function of (seed, label, i), so a stream can be reproduced from its
/// identity alone and streams never share state.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string_view label);

    std::uint64_t next_u64();

    /// Uniform on [0, 1).
    double uniform01();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer on [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n);

    /// One standard normal draw (Box-Muller; consumes two uniforms).
    double normal();

    /// Fills out with standard normals, two per Box-Muller pair, so this is
    /// cheaper than calling normal() in a loop but yields a different
    /// sequence for odd offsets.
    void fill_normal(std::span<double> out);

    std::uint64_t master_seed() const { return master_seed_; }
    const std::string& label() const { return label_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t master_seed_;
    std::string label_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace astralora::numlin

#endif
