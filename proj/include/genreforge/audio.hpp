#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace genreforge {

// All downstream processing runs at the GTZAN native rate.
inline constexpr int kCanonicalRate = 22050;

struct AudioClip {
    std::vector<double> samples;  // amplitudes in [-1, 1]
    int sample_rate = kCanonicalRate;
};

// Decode a RIFF/WAVE container holding 16-bit PCM, 1 or 2 channels.
// Returns one clip per channel; stereo is left for downmix_mono().
// Samples map as s = int16 / 32768.
std::vector<AudioClip> decode_wav(std::span<const std::uint8_t> bytes);

// Samplewise mean of two equal-length, equal-rate channels.
AudioClip downmix_mono(const AudioClip& left, const AudioClip& right);

// Linear-interpolation resampler. Output length = floor(n * target / source).
AudioClip resample(const AudioClip& clip, int target_rate);

// Convenience: read file, decode, downmix if stereo, resample to 22050 Hz.
AudioClip load_wav_mono(const std::string& path);

}  // namespace genreforge
