#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ditas {

// Mono audio normalized to [-1,1]. The sample rate is carried as metadata
// only; no operation in the toolkit depends on it.
struct AudioStream {
    std::vector<double> samples;
    int sample_rate = 0;

    std::size_t length() const { return samples.size(); }
};

// 16-bit signed PCM WAV reader. Multichannel files are reduced to channel 0
// (with a warning on stderr). Integer sample v maps to v/32768.
AudioStream load_pcm(const std::string& path);

// Writes 16-bit PCM: v -> round(clamp(v,-1,1)*32768), clamped to int16 range.
void save_pcm(const AudioStream& stream, const std::string& path);

// Lossless path for float containers: WAV format 3 with 64-bit IEEE samples.
// load_wav reads either representation.
void save_wav_float(const AudioStream& stream, const std::string& path);
AudioStream load_wav(const std::string& path);

int16_t quantize_sample(double v);

}  // namespace ditas
