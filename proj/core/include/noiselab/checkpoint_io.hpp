#pragma once

#include <cstdint>
#include <string>

#include "noiselab/model.hpp"

namespace noiselab {

// Checkpoint container: magic "NSMC", u32 version (1), u64 JSON block
// length, JSON block (config, stage, provenance, parameter digests), then
// two length-prefixed little-endian f64 parameter blocks (encoder, head).
// Round trips are bit-exact; digests are verified on load.

void save_checkpoint(const std::string& path, const EncoderCheckpoint& ckpt);

/// Throws FormatError on bad magic/version/truncation or digest mismatch.
EncoderCheckpoint load_checkpoint(const std::string& path);

/// Content digest over config and both parameter blocks, as carried in
/// report provenance columns.
std::uint64_t checkpoint_digest(const EncoderCheckpoint& ckpt);

} // namespace noiselab
