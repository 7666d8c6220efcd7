#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include <cmath>
#include <complex>
#include <numbers>

#include "minvae/dsp.hpp"
#include "minvae/wav.hpp"

using namespace minvae;
using dsp::ComplexSpectrogram;
using dsp::Waveform;

namespace {

// Brute-force DFT of one windowed frame, straight from the definition.
Eigen::VectorXcd dft_oracle(const std::vector<double>& samples, std::ptrdiff_t offset,
                            int window_len) {
    const int bins = window_len / 2 + 1;
    Eigen::VectorXcd out(bins);
    for (int f = 0; f < bins; ++f) {
        std::complex<double> acc(0.0, 0.0);
        for (int i = 0; i < window_len; ++i) {
            std::ptrdiff_t idx = offset + i;
            double x = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(samples.size()))
                           ? samples[static_cast<std::size_t>(idx)]
                           : 0.0;
            double w = std::sin(std::numbers::pi * (i + 0.5) / window_len);
            double ang = -2.0 * std::numbers::pi * f * i / window_len;
            acc += w * x * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out(f) = acc;
    }
    return out;
}

Waveform random_waveform(std::size_t len, std::uint64_t seed) {
    Rng rng(seed);
    Waveform w;
    w.samples.resize(len);
    for (auto& x : w.samples) x = rng.normal();
    return w;
}

double interior_roundtrip_error(const Waveform& w, int window_len, int hop) {
    ComplexSpectrogram spec = dsp::stft(w, window_len, hop);
    Waveform back = dsp::istft(spec);
    REQUIRE(back.samples.size() == w.samples.size());
    double peak = 0.0;
    for (double x : w.samples) peak = std::max(peak, std::abs(x));
    double worst = 0.0;
    for (std::size_t i = static_cast<std::size_t>(window_len);
         i + static_cast<std::size_t>(window_len) < w.samples.size(); ++i)
        worst = std::max(worst, std::abs(back.samples[i] - w.samples[i]));
    return worst / peak;
}

}  // namespace

TEST_CASE("stft of silence is zero") {
    Waveform w;
    w.samples.assign(16000, 0.0);
    ComplexSpectrogram spec = dsp::stft(w, 1024, 533);
    CHECK(spec.frames.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frame count formula at the 16 kHz geometry") {
    Waveform w = random_waveform(16000, 1);
    ComplexSpectrogram spec = dsp::stft(w, 1024, 533);
    // ceil((16000 - 1024)/533) + 1 = 30: one frame per 30 fps video frame
    CHECK(spec.num_frames() == 30);
    CHECK(spec.bins() == 513);
    for (std::size_t len : {1024, 1025, 1557, 9999}) {
        ComplexSpectrogram s2 = dsp::stft(random_waveform(len, len), 1024, 533);
        std::ptrdiff_t expect =
            len <= 1024 ? 1 : (static_cast<std::ptrdiff_t>(len) - 1024 + 533 - 1) / 533 + 1;
        CHECK(s2.num_frames() == expect);
    }
}

TEST_CASE("stft matches the brute-force windowed DFT") {
    Waveform w = random_waveform(4000, 7);
    ComplexSpectrogram spec = dsp::stft(w, 256, 128);
    for (Eigen::Index t : {Eigen::Index{0}, Eigen::Index{3}, spec.num_frames() - 1}) {
        Eigen::VectorXcd oracle = dft_oracle(w.samples, t * 128, 256);
        CHECK((spec.frames.col(t) - oracle).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("bin-centred sine concentrates its energy around bin k") {
    const int W = 1024, hop = 533, k = 50;
    Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(16000);
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = std::sin(2.0 * std::numbers::pi * k * static_cast<double>(i) / W);
    ComplexSpectrogram spec = dsp::stft(w, W, hop);

    // steady-state frame, checked against the oracle first
    const std::ptrdiff_t t = 5;
    Eigen::VectorXcd oracle = dft_oracle(w.samples, t * hop, W);
    CHECK((spec.frames.col(t) - oracle).cwiseAbs().maxCoeff() < 1e-9);

    Eigen::VectorXd energy = spec.frames.col(t).cwiseAbs2();
    Eigen::Index argmax = 0;
    energy.maxCoeff(&argmax);
    CHECK(argmax == k);
    double total = energy.sum();
    // the sine window spreads a bin-centred tone over k-1..k+1 (the centre
    // bin alone holds ~81%); >= 95% of the frame energy sits in that band
    double band = energy(k - 1) + energy(k) + energy(k + 1);
    CHECK(band / total >= 0.95);
    CHECK(energy(k) / total >= 0.75);
}

TEST_CASE("stft is linear") {
    Waveform a = random_waveform(3000, 11), b = random_waveform(3000, 12);
    Waveform mix = a;
    for (std::size_t i = 0; i < mix.samples.size(); ++i)
        mix.samples[i] = 0.7 * a.samples[i] - 1.3 * b.samples[i];
    ComplexSpectrogram sa = dsp::stft(a, 256, 120), sb = dsp::stft(b, 256, 120),
                       sm = dsp::stft(mix, 256, 120);
    CHECK((sm.frames - 0.7 * sa.frames + 1.3 * sb.frames).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stft input validation") {
    Waveform empty;
    CHECK_THROWS_AS(dsp::stft(empty, 1024, 533), InvalidInput);
    Waveform w = random_waveform(100, 3);
    CHECK_THROWS_AS(dsp::stft(w, 1024, 2000), InvalidInput);
    CHECK_THROWS_AS(dsp::stft(w, 1023, 512), InvalidInput);
    CHECK_THROWS_AS(dsp::stft(w, 64, 0), InvalidInput);
}

TEST_CASE("istft of silence is silence") {
    ComplexSpectrogram spec;
    spec.frames = Eigen::MatrixXcd::Zero(65, 10);
    spec.window_len = 128;
    spec.hop = 64;
    Waveform w = dsp::istft(spec);
    for (double x : w.samples) CHECK(x == 0.0);
}

TEST_CASE("istft round-trip hits 1e-10 on interior samples") {
    CHECK(interior_roundtrip_error(random_waveform(16000, 21), 1024, 533) < 1e-10);
    CHECK(interior_roundtrip_error(random_waveform(4000, 22), 126, 63) < 1e-10);
    CHECK(interior_roundtrip_error(random_waveform(500, 23), 16, 8) < 1e-10);
    CHECK(interior_roundtrip_error(random_waveform(4001, 24), 126, 63) < 1e-10);  // tail pad
}

TEST_CASE("single-frame spectrogram reproduces the frame") {
    // one frame: least-squares OLA divides the windowed frame by w^2,
    // recovering the samples exactly
    Waveform w = random_waveform(256, 31);
    ComplexSpectrogram spec = dsp::stft(w, 256, 256);
    REQUIRE(spec.num_frames() == 1);
    Waveform back = dsp::istft(spec);
    REQUIRE(back.samples.size() == w.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        worst = std::max(worst, std::abs(back.samples[i] - w.samples[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("istft validates geometry") {
    ComplexSpectrogram spec;
    spec.frames = Eigen::MatrixXcd::Zero(65, 4);
    spec.window_len = 100;  // implies 51 bins, not 65
    spec.hop = 50;
    CHECK_THROWS_AS(dsp::istft(spec), InvalidInput);
}

TEST_CASE("power spectrogram") {
    ComplexSpectrogram spec;
    spec.frames = Eigen::MatrixXcd::Zero(3, 2);
    spec.frames(1, 0) = std::complex<double>(3.0, 4.0);
    Eigen::MatrixXd p = dsp::power(spec);
    CHECK(p(1, 0) == doctest::Approx(25.0).epsilon(1e-15));
    CHECK(p(0, 0) == 0.0);
    CHECK(p.minCoeff() >= 0.0);

    // Parseval-style identity: sum of per-bin powers equals the squared
    // 2-norm of the complex frame
    Waveform w = random_waveform(1000, 5);
    ComplexSpectrogram s = dsp::stft(w, 128, 64);
    Eigen::MatrixXd pw = dsp::power(s);
    for (Eigen::Index t = 0; t < s.num_frames(); ++t)
        CHECK(pw.col(t).sum() == doctest::Approx(s.frames.col(t).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("wav round-trip at 16-bit resolution") {
    Waveform w = random_waveform(2048, 41);
    for (auto& x : w.samples) x *= 0.2;
    w.samples[7] = 2.0;  // must clip
    const std::string path = "/tmp/minvae_test_wav.wav";
    wav::write(path, w);
    Waveform back = wav::read(path);
    REQUIRE(back.samples.size() == w.samples.size());
    CHECK(back.sample_rate == 16000);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        double expect = std::clamp(w.samples[i], -1.0, 1.0);
        CHECK(std::abs(back.samples[i] - expect) <= 1.0 / 32768.0 + 1e-12);
    }
}

TEST_CASE("wav reader rejects unsupported formats") {
    // hand-built 8 kHz header (still 16-bit mono PCM)
    auto make_wav = [](std::uint32_t rate, std::uint16_t channels, std::uint16_t bits) {
        std::string d = "RIFF";
        auto u32 = [&](std::uint32_t x) {
            for (int i = 0; i < 4; ++i) d.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
        };
        auto u16 = [&](std::uint16_t x) {
            for (int i = 0; i < 2; ++i) d.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
        };
        u32(36 + 4);
        d += "WAVEfmt ";
        u32(16);
        u16(1);
        u16(channels);
        u32(rate);
        u32(rate * channels * bits / 8);
        u16(static_cast<std::uint16_t>(channels * bits / 8));
        u16(bits);
        d += "data";
        u32(4);
        d += std::string(4, '\0');
        return d;
    };
    auto write_raw = [](const std::string& path, const std::string& data) {
        std::ofstream f(path, std::ios::binary);
        f.write(data.data(), static_cast<std::streamsize>(data.size()));
    };
    write_raw("/tmp/minvae_8k.wav", make_wav(8000, 1, 16));
    CHECK_THROWS_AS(wav::read("/tmp/minvae_8k.wav"), InvalidInput);
    write_raw("/tmp/minvae_stereo.wav", make_wav(16000, 2, 16));
    CHECK_THROWS_AS(wav::read("/tmp/minvae_stereo.wav"), InvalidInput);
    write_raw("/tmp/minvae_8bit.wav", make_wav(16000, 1, 8));
    CHECK_THROWS_AS(wav::read("/tmp/minvae_8bit.wav"), InvalidInput);
    CHECK_THROWS_AS(wav::read("/tmp/minvae_missing_file.wav"), IoError);
}
