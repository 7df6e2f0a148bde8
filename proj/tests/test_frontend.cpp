#include "fairsvt/frontend.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

using namespace fairsvt;

namespace {

constexpr int kSr = 16000;

Eigen::VectorXd tone(double hz, double seconds, double amp = 0.5) {
    const auto n = static_cast<Eigen::Index>(seconds * kSr);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * i / kSr);
    return x;
}

// O(N^2) DFT power of one Hann-windowed frame, zero-padded to n_fft.
Eigen::VectorXd direct_power(const Eigen::VectorXd& x, Eigen::Index start, int win, int n_fft) {
    Eigen::VectorXd p(n_fft / 2 + 1);
    for (int k = 0; k <= n_fft / 2; ++k) {
        double re = 0, im = 0;
        for (int i = 0; i < win; ++i) {
            const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / win);
            const double a = -2 * std::numbers::pi * k * i / n_fft;
            re += w * x[start + i] * std::cos(a);
            im += w * x[start + i] * std::sin(a);
        }
        p[k] = re * re + im * im;
    }
    return p;
}

}  // namespace

TEST_CASE("frame_time examples") {
    CHECK(frame_time(0, 0.02, 0.0) == 0.0);
    CHECK(frame_time(5, 0.02, 0.0) == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(frame_time(3, 0.025, 0.0125) == doctest::Approx(0.0875).epsilon(1e-12));
    for (Eigen::Index i = 0; i < 100; ++i) CHECK(frame_time(i + 1, 0.02, 0.01) > frame_time(i, 0.02, 0.01));
}

TEST_CASE("silence maps to log epsilon") {
    const auto f = logmel(Eigen::VectorXd::Zero(kSr), kSr, 0.04, 0.02, 40);
    CHECK(f.dim() == 40);
    CHECK((f.frames.array() == std::log(kLogMelEpsilon)).all());
}

TEST_CASE("frame count follows floor((N - win)/hop) + 1") {
    for (Eigen::Index n : {640, 641, 959, 960, 16000, 16001}) {
        const auto f = logmel(Eigen::VectorXd::Ones(n), kSr, 0.04, 0.02, 40);
        CHECK(f.num_frames() == (n - 640) / 320 + 1);
        CHECK(f.num_frames() == frame_count(n, kSr, 0.04, 0.02));
    }
    const auto f = logmel(Eigen::VectorXd::Ones(1000), kSr, 0.04, 0.02, 40);
    CHECK(f.hop_s == doctest::Approx(0.02));
    CHECK(f.t0_s == doctest::Approx(0.02));
}

TEST_CASE("logmel rejects empty or too short input") {
    CHECK_THROWS_AS(logmel(Eigen::VectorXd(), kSr, 0.04, 0.02, 40), std::invalid_argument);
    CHECK_THROWS_AS(logmel(Eigen::VectorXd::Zero(100), kSr, 0.04, 0.02, 40), std::invalid_argument);
    CHECK_THROWS_AS(logmel(Eigen::VectorXd::Zero(1000), kSr, 0.04, 0.0, 40), std::invalid_argument);
}

TEST_CASE("440 Hz tone: argmax mel bin is constant and agrees with a direct DFT") {
    const auto x = tone(440.0, 0.5);
    const auto f = logmel(x, kSr, 0.04, 0.02, 40);
    const int win = 640, hop = 320, n_fft = 1024;
    const nn::Matrix fb = mel_filterbank(40, n_fft, kSr);

    Eigen::Index first = -1;
    for (Eigen::Index t = 0; t < f.num_frames(); ++t) {
        Eigen::Index arg;
        f.frames.row(t).maxCoeff(&arg);
        if (first < 0) first = arg;
        CHECK(arg == first);
    }
    for (Eigen::Index t : {0, 7, 20}) {
        const Eigen::VectorXd mel = fb * direct_power(x, t * hop, win, n_fft);
        Eigen::Index arg;
        mel.maxCoeff(&arg);
        CHECK(arg == first);
        for (int m = 0; m < 40; ++m) CHECK(f.frames(t, m) == doctest::Approx(std::log(mel[m] + kLogMelEpsilon)).epsilon(1e-9));
    }
}

TEST_CASE("doubling amplitude adds log 4 where energy dominates") {
    const Eigen::VectorXd x = tone(330.0, 0.3, 0.2) + tone(1250.0, 0.3, 0.1);
    const auto a = logmel(x, kSr, 0.04, 0.02, 40);
    const auto b = logmel(Eigen::VectorXd(2.0 * x), kSr, 0.04, 0.02, 40);
    int checked = 0;
    for (Eigen::Index i = 0; i < a.frames.size(); ++i) {
        if (std::exp(a.frames.data()[i]) < 10.0) continue;
        CHECK(std::abs(b.frames.data()[i] - a.frames.data()[i] - std::log(4.0)) <= 1e-6);
        ++checked;
    }
    CHECK(checked > 20);
}

TEST_CASE("features are finite for arbitrary finite input") {
    Rng rng(4);
    const Eigen::VectorXd x = testutil::randn(4000, 1, rng, 3.0);
    const auto f = logmel(x, kSr, 0.04, 0.02, 40);
    CHECK(f.frames.allFinite());
}

TEST_CASE("mel filterbank rows are non-negative triangles") {
    const nn::Matrix fb = mel_filterbank(40, 1024, kSr);
    CHECK(fb.rows() == 40);
    CHECK(fb.cols() == 513);
    CHECK((fb.array() >= 0).all());
    CHECK((fb.array() <= 1).all());
    for (int m = 0; m < 40; ++m) CHECK(fb.row(m).sum() > 0);
}

TEST_CASE("feature cache round trip at float precision") {
    testutil::TempDir dir;
    const auto f = logmel(tone(220.0, 0.4), kSr, 0.04, 0.02, 40);
    write_feature_cache(dir.path() / "f.bin", f);
    const auto back = read_feature_cache(dir.path() / "f.bin", f.t0_s);
    CHECK(back.hop_s == f.hop_s);
    CHECK(back.t0_s == f.t0_s);
    REQUIRE(back.frames.rows() == f.frames.rows());
    REQUIRE(back.frames.cols() == f.frames.cols());
    CHECK(back.frames == f.frames.cast<float>().cast<double>());
    std::ofstream(dir.path() / "bad.bin") << "nope";
    CHECK_THROWS(read_feature_cache(dir.path() / "bad.bin"));
}
