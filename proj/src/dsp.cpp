#include "minvae/dsp.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace minvae::dsp {

namespace {

using cplx = std::complex<double>;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. sign = -1 forward, +1 inverse
// (inverse leaves the 1/n scaling to the caller).
void fft_pow2(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// O(n^2) fallback for non power-of-two window lengths (toy geometries).
void dft_naive(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    std::vector<cplx> out(n);
    for (std::size_t f = 0; f < n; ++f) {
        cplx acc(0.0);
        for (std::size_t t = 0; t < n; ++t) {
            double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(f) *
                         static_cast<double>(t) / static_cast<double>(n);
            acc += a[t] * cplx(std::cos(ang), std::sin(ang));
        }
        out[f] = acc;
    }
    a = std::move(out);
}

void transform(std::vector<cplx>& a, int sign) {
    if (is_pow2(static_cast<int>(a.size())))
        fft_pow2(a, sign);
    else
        dft_naive(a, sign);
}

}  // namespace

std::vector<double> sine_window(int len) {
    std::vector<double> w(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i)
        w[static_cast<std::size_t>(i)] =
            std::sin(std::numbers::pi * (i + 0.5) / static_cast<double>(len));
    return w;
}

std::ptrdiff_t stft_num_frames(std::ptrdiff_t len, int window_len, int hop) {
    if (len <= window_len) return 1;
    return (len - window_len + hop - 1) / hop + 1;
}

ComplexSpectrogram stft(const Waveform& w, int window_len, int hop) {
    if (w.samples.empty()) throw InvalidInput("stft: empty waveform");
    if (window_len < 2 || window_len % 2 != 0)
        throw InvalidInput("stft: window_len must be even and >= 2");
    if (hop <= 0 || hop > window_len) throw InvalidInput("stft: need 0 < hop <= window_len");

    const auto len = static_cast<std::ptrdiff_t>(w.samples.size());
    const std::ptrdiff_t n_frames = stft_num_frames(len, window_len, hop);
    const int bins = window_len / 2 + 1;
    const std::vector<double> win = sine_window(window_len);

    ComplexSpectrogram spec;
    spec.frames.resize(bins, n_frames);
    spec.window_len = window_len;
    spec.hop = hop;
    spec.original_len = len;
    spec.sample_rate = w.sample_rate;

    std::vector<cplx> buf(static_cast<std::size_t>(window_len));
    for (std::ptrdiff_t t = 0; t < n_frames; ++t) {
        const std::ptrdiff_t off = t * hop;
        for (int i = 0; i < window_len; ++i) {
            std::ptrdiff_t idx = off + i;
            double x = idx < len ? w.samples[static_cast<std::size_t>(idx)] : 0.0;  // tail pad
            buf[static_cast<std::size_t>(i)] = win[static_cast<std::size_t>(i)] * x;
        }
        transform(buf, -1);
        for (int f = 0; f < bins; ++f) spec.frames(f, t) = buf[static_cast<std::size_t>(f)];
    }
    return spec;
}

Waveform istft(const ComplexSpectrogram& spec) {
    const int window_len = spec.window_len;
    const int hop = spec.hop;
    if (window_len < 2 || hop <= 0 || hop > window_len)
        throw InvalidInput("istft: invalid spectrogram geometry");
    if (spec.frames.rows() != window_len / 2 + 1)
        throw InvalidInput("istft: bin count inconsistent with window_len");
    if (spec.frames.cols() < 1) throw InvalidInput("istft: no frames");
    if (!spec.frames.allFinite()) throw InvalidInput("istft: non-finite coefficients");

    const std::ptrdiff_t n_frames = spec.frames.cols();
    const std::ptrdiff_t padded = (n_frames - 1) * static_cast<std::ptrdiff_t>(hop) + window_len;
    const std::vector<double> win = sine_window(window_len);

    std::vector<double> acc(static_cast<std::size_t>(padded), 0.0);
    std::vector<double> den(static_cast<std::size_t>(padded), 0.0);
    std::vector<cplx> buf(static_cast<std::size_t>(window_len));
    for (std::ptrdiff_t t = 0; t < n_frames; ++t) {
        for (int f = 0; f <= window_len / 2; ++f) buf[static_cast<std::size_t>(f)] = spec.frames(f, t);
        for (int f = window_len / 2 + 1; f < window_len; ++f)
            buf[static_cast<std::size_t>(f)] = std::conj(spec.frames(window_len - f, t));
        transform(buf, +1);
        const std::ptrdiff_t off = t * hop;
        for (int i = 0; i < window_len; ++i) {
            double x = buf[static_cast<std::size_t>(i)].real() / window_len;
            acc[static_cast<std::size_t>(off + i)] += win[static_cast<std::size_t>(i)] * x;
            den[static_cast<std::size_t>(off + i)] +=
                win[static_cast<std::size_t>(i)] * win[static_cast<std::size_t>(i)];
        }
    }

    std::ptrdiff_t out_len = spec.original_len > 0 ? spec.original_len : padded;
    out_len = std::min(out_len, padded);
    Waveform w;
    w.sample_rate = spec.sample_rate;
    w.samples.resize(static_cast<std::size_t>(out_len));
    for (std::ptrdiff_t i = 0; i < out_len; ++i) {
        double d = den[static_cast<std::size_t>(i)];
        w.samples[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)] / (d > 1e-12 ? d : 1e-12);
    }
    return w;
}

PowerSpectrogram power(const ComplexSpectrogram& spec) {
    return spec.frames.array().abs2().matrix();
}

}  // namespace minvae::dsp
