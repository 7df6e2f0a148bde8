#include "fairsvt/frontend.hpp"

#include "fairsvt/binio.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fairsvt {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

constexpr char kFeatMagic[8] = {'F', 'S', 'V', 'T', 'F', 'E', 'A', 'T'};

}  // namespace

Eigen::Index frame_count(Eigen::Index num_samples, int sample_rate_hz, double win_s, double hop_s) {
    const auto win = static_cast<Eigen::Index>(std::lround(win_s * sample_rate_hz));
    const auto hop = static_cast<Eigen::Index>(std::lround(hop_s * sample_rate_hz));
    if (num_samples < win) return 0;
    return (num_samples - win) / hop + 1;
}

nn::Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz) {
    const int bins = n_fft / 2 + 1;
    const double mel_max = hz_to_mel(sample_rate_hz / 2.0);
    std::vector<double> edges(n_mels + 2);
    for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mel_max * i / (n_mels + 1));

    nn::Matrix fb = nn::Matrix::Zero(n_mels, bins);
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate_hz / n_fft;
            if (f > lo && f < mid) fb(m, k) = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi) fb(m, k) = (hi - f) / (hi - mid);
        }
    }
    return fb;
}

FeatureSequence logmel(const Eigen::VectorXd& samples, int sample_rate_hz, double win_s, double hop_s, int n_mels) {
    if (samples.size() == 0) throw std::invalid_argument("logmel: empty signal");
    if (sample_rate_hz <= 0 || !(win_s > 0) || !(hop_s > 0) || n_mels < 1)
        throw std::invalid_argument("logmel: bad analysis parameters");
    const auto win = static_cast<int>(std::lround(win_s * sample_rate_hz));
    const auto hop = static_cast<int>(std::lround(hop_s * sample_rate_hz));
    const Eigen::Index frames = frame_count(samples.size(), sample_rate_hz, win_s, hop_s);
    if (frames < 1) throw std::invalid_argument("logmel: signal shorter than one window");

    const int n_fft = next_pow2(win);
    const int bins = n_fft / 2 + 1;
    const nn::Matrix fb = mel_filterbank(n_mels, n_fft, sample_rate_hz);

    std::vector<double> window(win);
    for (int i = 0; i < win; ++i) window[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / win);

    Eigen::FFT<double> fft;
    std::vector<double> buf(n_fft, 0.0);
    std::vector<std::complex<double>> spec;
    nn::Matrix power(frames, bins);
    for (Eigen::Index t = 0; t < frames; ++t) {
        const Eigen::Index start = t * hop;
        for (int i = 0; i < win; ++i) buf[i] = samples[start + i] * window[i];
        fft.fwd(spec, buf);
        for (int k = 0; k < bins; ++k) power(t, k) = std::norm(spec[k]);
    }

    FeatureSequence out;
    out.hop_s = static_cast<double>(hop) / sample_rate_hz;
    out.t0_s = 0.5 * win / sample_rate_hz;
    out.frames = ((power * fb.transpose()).array() + kLogMelEpsilon).log().matrix();
    return out;
}

void write_feature_cache(const std::filesystem::path& path, const FeatureSequence& features) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open feature cache for writing: " + path.string());
    out.write(kFeatMagic, sizeof(kFeatMagic));
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.frames.rows()));
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.frames.cols()));
    binio::put_f64(out, features.hop_s);
    for (Eigen::Index i = 0; i < features.frames.size(); ++i)
        binio::put_f32(out, static_cast<float>(features.frames.data()[i]));
}

FeatureSequence read_feature_cache(const std::filesystem::path& path, double t0_s) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open feature cache: " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kFeatMagic))
        throw binio::FormatError("not a feature cache: " + path.string());
    FeatureSequence f;
    const auto rows = binio::get_le<std::uint32_t>(in);
    const auto cols = binio::get_le<std::uint32_t>(in);
    f.hop_s = binio::get_f64(in);
    f.t0_s = t0_s;
    f.frames.resize(rows, cols);
    for (Eigen::Index i = 0; i < f.frames.size(); ++i) f.frames.data()[i] = binio::get_f32(in);
    return f;
}

}  // namespace fairsvt
