#ifndef ASTRALORA_CLI_DATASET_HPP
#define ASTRALORA_CLI_DATASET_HPP

#include <string>
#include <vector>

#include "astralora/numlin/matrix.hpp"
#include "astralora/numlin/rng.hpp"

namespace astralora::cli {

using numlin::Matrix;
using numlin::RngStream;

struct Dataset {
    Matrix features; // n x d
    std::vector<int> labels;
    std::size_t n_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }
};

/// Two interleaved planar spirals, one per class, n/2 points each (n even),
/// with isotropic Gaussian jitter of the given noise level.
Dataset gen_spirals(std::size_t n, double noise, RngStream& stream);

/// Two Gaussian blobs centred at -(1,1) and +(1,1) with std = noise.
Dataset gen_blobs(std::size_t n, double noise, RngStream& stream);

/// Uniform points on [-1,1]^2 jittered by noise, labelled by the XOR of the
/// coordinate signs; class counts balanced exactly.
Dataset gen_xor_grid(std::size_t n, double noise, RngStream& stream);

Dataset gen_dataset(const std::string& kind, std::size_t n, double noise,
                    RngStream& stream);

/// CSV with header "label,f1,...,fd"; features printed with %.17g so a
/// save/load round trip is bit-exact.
void save_dataset_csv(const std::string& path, const Dataset& ds);

/// Parses the same format; errors carry the 1-based line number.
Dataset load_dataset_csv(const std::string& path);

struct Split {
    Dataset train;
    Dataset test;
};

/// Random split without replacement; test gets round(n * test_fraction).
Split split_dataset(const Dataset& ds, double test_fraction, RngStream& stream);

} // namespace astralora::cli

#endif
