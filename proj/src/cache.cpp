#include "genreforge/cache.hpp"

#include "binio.hpp"
#include "genreforge/errors.hpp"

namespace genreforge {

void write_spectrogram_cache(const std::filesystem::path& path, const Spectrogram& spec) {
    if (spec.frames <= 0 ||
        spec.values.size() != std::size_t(kSpectrogramBins) * spec.frames) {
        throw ShapeError("cache write: spectrogram shape does not match its frame count");
    }
    binio::Writer w;
    w.tag("SPEC");
    w.u16(kCacheVersion);
    w.u32(kSpectrogramBins);
    w.u32(static_cast<std::uint32_t>(spec.frames));
    w.f32(static_cast<float>(spec.frames_per_second));
    for (float v : spec.values) w.f32(v);
    binio::write_file_atomic(path, w.buf);
}

Spectrogram read_spectrogram_cache(const std::filesystem::path& path) {
    const std::string data = binio::read_file(path);
    binio::Reader r(data, "cache " + path.string());
    if (r.tag() != "SPEC") r.fail("bad magic, expected SPEC");
    const std::uint16_t version = r.u16();
    if (version != kCacheVersion) {
        r.fail("unsupported version " + std::to_string(version));
    }
    const std::uint32_t bins = r.u32();
    if (bins != kSpectrogramBins) {
        r.fail("expected " + std::to_string(kSpectrogramBins) + " bins, found " +
               std::to_string(bins));
    }
    const std::uint32_t frames = r.u32();
    Spectrogram spec;
    spec.frames = static_cast<int>(frames);
    spec.frames_per_second = r.f32();
    const std::size_t count = std::size_t(bins) * frames;
    if (r.remaining() != count * 4) r.fail("payload length does not match header");
    spec.values.resize(count);
    for (float& v : spec.values) v = r.f32();
    return spec;
}

}  // namespace genreforge
