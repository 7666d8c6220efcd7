#ifndef MINVAE_DSP_HPP_
#define MINVAE_DSP_HPP_

#include <Eigen/Dense>
#include <vector>

#include "minvae/common.hpp"

namespace minvae::dsp {

struct Waveform {
    std::vector<double> samples;
    int sample_rate = 16000;
};

/// STFT coefficients, one column per frame (F = window_len/2 + 1 bins).
/// original_len is kept so the inverse can undo the tail padding.
struct ComplexSpectrogram {
    Eigen::MatrixXcd frames;  // F x N
    int window_len = 0;
    int hop = 0;
    std::ptrdiff_t original_len = 0;
    int sample_rate = 16000;

    Eigen::Index bins() const { return frames.rows(); }
    Eigen::Index num_frames() const { return frames.cols(); }
};

using PowerSpectrogram = Eigen::MatrixXd;  // F x N, entries >= 0

/// Analysis/synthesis window: sin(pi*(i+1/2)/len). Strictly positive, so the
/// least-squares overlap-add denominator never vanishes.
std::vector<double> sine_window(int len);

/// Frame count for a signal of the given length: the tail is zero-padded so
/// the last partial frame is kept.
std::ptrdiff_t stft_num_frames(std::ptrdiff_t len, int window_len, int hop);

ComplexSpectrogram stft(const Waveform& w, int window_len, int hop);

/// Least-squares overlap-add inverse with the matching sine window.
Waveform istft(const ComplexSpectrogram& spec);

PowerSpectrogram power(const ComplexSpectrogram& spec);

}  // namespace minvae::dsp

#endif  // MINVAE_DSP_HPP_
