#pragma once

#include "fairsvt/tensor.hpp"

#include <filesystem>

namespace fairsvt {

/// Frame-rate feature matrix (T x D). Used both for the log-mel encoder input
/// and for the latent sequence the encoder produces.
struct FeatureSequence {
    nn::Matrix frames;
    double hop_s = 0.02;
    double t0_s = 0.0;  // center of frame 0

    Eigen::Index num_frames() const { return frames.rows(); }
    Eigen::Index dim() const { return frames.cols(); }
};

struct FrontendConfig {
    double win_s = 0.04;
    double hop_s = 0.02;
    int n_mels = 40;
};

inline constexpr double kLogMelEpsilon = 1e-6;

inline double frame_time(Eigen::Index index, double hop_s, double t0_s) {
    return t0_s + static_cast<double>(index) * hop_s;
}

/// T = floor((N - win) / hop) + 1 for a signal of N samples.
Eigen::Index frame_count(Eigen::Index num_samples, int sample_rate_hz, double win_s, double hop_s);

/// HTK-style triangular mel filterbank, n_mels x (n_fft/2 + 1).
nn::Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz);

/// log(mel energies + 1e-6) of Hann-windowed power spectra. Frame i spans
/// samples [i*hop, i*hop + win); its center is at t0 = win/2 + i*hop.
FeatureSequence logmel(const Eigen::VectorXd& samples, int sample_rate_hz, double win_s, double hop_s, int n_mels);

inline FeatureSequence logmel(const Eigen::VectorXd& samples, int sample_rate_hz, const FrontendConfig& cfg) {
    return logmel(samples, sample_rate_hz, cfg.win_s, cfg.hop_s, cfg.n_mels);
}

/// Feature cache: "FSVTFEAT" | u32 T | u32 D | f64 hop_s | T*D f32, row-major, little-endian.
/// The file does not carry t0; the reader takes it from the caller.
void write_feature_cache(const std::filesystem::path& path, const FeatureSequence& features);
FeatureSequence read_feature_cache(const std::filesystem::path& path, double t0_s = 0.0);

}  // namespace fairsvt
