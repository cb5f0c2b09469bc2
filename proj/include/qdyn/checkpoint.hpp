#pragma once

#include <filesystem>

#include "qdyn/trainer.hpp"

namespace qdyn {

// Binary checkpoint: magic "QTF1", version u32, length-prefixed key=value
// config text, array count u32, then per array a u16-length name, rank u8,
// u64 dims and a little-endian float64 payload. Arrays sorted by name;
// Adam moments ride along as "adam.m:<param>" / "adam.v:<param>".
// Round trips are bitwise.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qdyn
