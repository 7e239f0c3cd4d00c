#pragma once

#include <cstdint>
#include <filesystem>

#include "genreforge/spectrogram.hpp"

namespace genreforge {

inline constexpr std::uint16_t kCacheVersion = 1;

// "SPEC" magic, u16 version, u32 bins, u32 frames, f32 frames_per_second,
// then bins x frames little-endian f32 row-major. Written atomically.
// source_id is not stored; callers reattach it from their index.
void write_spectrogram_cache(const std::filesystem::path& path, const Spectrogram& spec);

Spectrogram read_spectrogram_cache(const std::filesystem::path& path);

}  // namespace genreforge
