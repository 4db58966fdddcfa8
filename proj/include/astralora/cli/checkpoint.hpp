#ifndef ASTRALORA_CLI_CHECKPOINT_HPP
#define ASTRALORA_CLI_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "astralora/hybridnet/network.hpp"

namespace astralora::cli {

using hybridnet::NamedTensor;

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary tensor container. Layout, all integers little-endian:
///   "ASTR" | u32 version | u32 tensor count
///   per tensor: u16 name length, UTF-8 name bytes,
///               u8 rank, rank x u64 dims, prod(dims) x f64 payload
void checkpoint_write(const std::string& path, const std::vector<NamedTensor>& tensors);

/// Strict reader: bad magic, unknown version, truncation, or trailing bytes
/// raise IoError naming the problem.
std::vector<NamedTensor> checkpoint_read(const std::string& path);

} // namespace astralora::cli

#endif
