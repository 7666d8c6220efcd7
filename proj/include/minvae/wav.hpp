#ifndef MINVAE_WAV_HPP_
#define MINVAE_WAV_HPP_

#include <string>

#include "minvae/dsp.hpp"

namespace minvae::wav {

/// Reads a 16-bit PCM mono WAV file. Rejects anything but 16 kHz mono PCM;
/// resampling is out of scope.
dsp::Waveform read(const std::string& path);

/// Writes 16-bit PCM mono at 16 kHz. Samples are clipped to [-1, 1].
void write(const std::string& path, const dsp::Waveform& w);

}  // namespace minvae::wav

#endif  // MINVAE_WAV_HPP_
