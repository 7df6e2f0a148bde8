#include "fairsvt/wav.hpp"

#include "fairsvt/binio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace fairsvt::wav {

namespace {

std::int16_t to_pcm(double x) {
    const long k = std::lround(x * 32768.0);
    return static_cast<std::int16_t>(std::clamp(k, -32768L, 32767L));
}

void expect_tag(std::istream& in, const char* tag) {
    char buf[4];
    if (!in.read(buf, 4) || std::memcmp(buf, tag, 4) != 0)
        throw binio::FormatError(std::string("wav: expected '") + tag + "' chunk");
}

}  // namespace

double quantize_pcm16(double x) { return to_pcm(x) / 32768.0; }

void write_pcm16(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate_hz) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    binio::put_le<std::uint32_t>(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    binio::put_le<std::uint32_t>(out, 16);
    binio::put_le<std::uint16_t>(out, 1);  // PCM
    binio::put_le<std::uint16_t>(out, 1);  // mono
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate_hz));
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
    binio::put_le<std::uint16_t>(out, 2);
    binio::put_le<std::uint16_t>(out, 16);
    out.write("data", 4);
    binio::put_le<std::uint32_t>(out, data_bytes);
    for (Eigen::Index i = 0; i < samples.size(); ++i)
        binio::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(to_pcm(samples[i])));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

Audio read_pcm16(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open audio file: " + path.string());
    expect_tag(in, "RIFF");
    binio::get_le<std::uint32_t>(in);
    expect_tag(in, "WAVE");

    Audio audio;
    bool have_fmt = false;
    for (;;) {
        char tag[4];
        if (!in.read(tag, 4)) throw binio::FormatError("wav: missing data chunk in " + path.string());
        const auto size = binio::get_le<std::uint32_t>(in);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            const auto format = binio::get_le<std::uint16_t>(in);
            const auto channels = binio::get_le<std::uint16_t>(in);
            audio.sample_rate_hz = static_cast<int>(binio::get_le<std::uint32_t>(in));
            binio::get_le<std::uint32_t>(in);
            binio::get_le<std::uint16_t>(in);
            const auto bits = binio::get_le<std::uint16_t>(in);
            if (format != 1 || channels != 1 || bits != 16)
                throw binio::FormatError("wav: only PCM16 mono is supported: " + path.string());
            in.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw binio::FormatError("wav: data before fmt chunk");
            audio.samples.resize(size / 2);
            for (Eigen::Index i = 0; i < audio.samples.size(); ++i)
                audio.samples[i] = static_cast<std::int16_t>(binio::get_le<std::uint16_t>(in)) / 32768.0;
            return audio;
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
}

}  // namespace fairsvt::wav
