#include "minvae/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace minvae::wav {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}
void wr_u16(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

}  // namespace

dsp::Waveform read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open WAV file: " + path);
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
        std::memcmp(data.data() + 8, "WAVE", 4) != 0)
        throw IoError("not a RIFF/WAVE file: " + path);

    std::size_t pos = 12;
    int channels = 0, bits = 0, rate = 0;
    bool have_fmt = false;
    const unsigned char* pcm = nullptr;
    std::size_t pcm_len = 0;
    while (pos + 8 <= data.size()) {
        std::uint32_t chunk_len = rd_u32(data.data() + pos + 4);
        const unsigned char* body = data.data() + pos + 8;
        if (pos + 8 + chunk_len > data.size()) throw IoError("truncated WAV chunk: " + path);
        if (std::memcmp(data.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
            std::uint16_t fmt = rd_u16(body);
            channels = rd_u16(body + 2);
            rate = static_cast<int>(rd_u32(body + 4));
            bits = rd_u16(body + 14);
            if (fmt != 1) throw InvalidInput("WAV must be 16-bit integer PCM: " + path);
            have_fmt = true;
        } else if (std::memcmp(data.data() + pos, "data", 4) == 0) {
            pcm = body;
            pcm_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (!have_fmt || pcm == nullptr) throw IoError("missing fmt/data chunk: " + path);
    if (channels != 1) throw InvalidInput("WAV must be mono: " + path);
    if (bits != 16) throw InvalidInput("WAV must be 16-bit PCM: " + path);
    if (rate != 16000)
        throw InvalidInput("WAV must be sampled at 16 kHz (got " + std::to_string(rate) +
                           " Hz); resampling is not supported: " + path);

    dsp::Waveform w;
    w.sample_rate = rate;
    w.samples.resize(pcm_len / 2);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        auto s = static_cast<std::int16_t>(rd_u16(pcm + 2 * i));
        w.samples[i] = static_cast<double>(s) / 32768.0;
    }
    return w;
}

void write(const std::string& path, const dsp::Waveform& w) {
    std::vector<unsigned char> out;
    out.reserve(44 + 2 * w.samples.size());
    auto pcm_len = static_cast<std::uint32_t>(2 * w.samples.size());
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    wr_u32(out, 36 + pcm_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    wr_u32(out, 16);
    wr_u16(out, 1);       // PCM
    wr_u16(out, 1);       // mono
    wr_u32(out, 16000);   // sample rate
    wr_u32(out, 32000);   // byte rate
    wr_u16(out, 2);       // block align
    wr_u16(out, 16);      // bits
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    wr_u32(out, pcm_len);
    for (double x : w.samples) {
        double c = std::clamp(x, -1.0, 1.0);
        long q = std::clamp(std::lround(c * 32768.0), -32768L, 32767L);
        wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write WAV file: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write: " + path);
}

}  // namespace minvae::wav
