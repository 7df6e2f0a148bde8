#pragma once

#include <Eigen/Dense>

#include <filesystem>

namespace fairsvt::wav {

struct Audio {
    int sample_rate_hz = 0;
    Eigen::VectorXd samples;  // in [-1, 1)
};

/// Nearest representable PCM16 value (k / 32768), clamped.
double quantize_pcm16(double x);

/// RIFF WAVE, PCM signed 16-bit little-endian, mono. Samples are quantized on write;
/// values already on the PCM16 grid round-trip exactly.
void write_pcm16(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate_hz);
Audio read_pcm16(const std::filesystem::path& path);

}  // namespace fairsvt::wav
