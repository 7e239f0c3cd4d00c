#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace testsupport {

// RIFF/WAVE PCM16 encoder; channels are interleaved in order.
std::vector<std::uint8_t> encode_wav_pcm16(
    const std::vector<std::vector<std::int16_t>>& channels, int sample_rate);

void write_wav(const std::filesystem::path& path,
               const std::vector<std::vector<std::int16_t>>& channels, int sample_rate);

// Scale [-1, 1] doubles to int16 with rounding and clamping.
std::vector<std::int16_t> to_pcm16(const std::vector<double>& samples);

std::vector<double> sine_wave(double freq_hz, double seconds, int sample_rate,
                              double amplitude, double phase = 0.0);

}  // namespace testsupport
