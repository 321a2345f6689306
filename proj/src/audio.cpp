#include "ditas/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ditas {

namespace {

struct WavInfo {
    uint16_t format = 0;
    uint16_t channels = 0;
    uint32_t sample_rate = 0;
    uint16_t bits = 0;
    std::vector<char> data;
};

uint32_t rd32(const char* p) {
    uint32_t x;
    std::memcpy(&x, p, 4);
    return x;
}
uint16_t rd16(const char* p) {
    uint16_t x;
    std::memcpy(&x, p, 2);
    return x;
}

WavInfo read_wav_chunks(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("wav: cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("wav: " + path + " is not a RIFF/WAVE file");

    WavInfo info;
    bool have_fmt = false, have_data = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        char id[5] = {0};
        std::memcpy(id, bytes.data() + pos, 4);
        uint32_t len = rd32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + len > bytes.size())
            throw std::runtime_error("wav: truncated chunk in " + path);
        if (std::strcmp(id, "fmt ") == 0) {
            if (len < 16) throw std::runtime_error("wav: short fmt chunk in " + path);
            info.format = rd16(bytes.data() + pos);
            info.channels = rd16(bytes.data() + pos + 2);
            info.sample_rate = rd32(bytes.data() + pos + 4);
            info.bits = rd16(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::strcmp(id, "data") == 0) {
            info.data.assign(bytes.begin() + pos, bytes.begin() + pos + len);
            have_data = true;
        }
        pos += len + (len & 1);  // chunks are word-aligned
    }
    if (!have_fmt || !have_data)
        throw std::runtime_error("wav: missing fmt or data chunk in " + path);
    if (info.channels == 0)
        throw std::runtime_error("wav: zero channels in " + path);
    if (info.data.empty())
        throw std::runtime_error("wav: empty payload in " + path);
    return info;
}

void write_wav(const std::string& path, uint16_t format, uint16_t bits,
               uint32_t sample_rate, const std::vector<char>& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("wav: cannot write " + path);
    uint16_t channels = 1;
    uint32_t byte_rate = sample_rate * channels * bits / 8;
    uint16_t block_align = channels * bits / 8;
    uint32_t data_len = static_cast<uint32_t>(data.size());
    uint32_t riff_len = 36 + data_len;
    auto put32 = [&](uint32_t x) { f.write(reinterpret_cast<char*>(&x), 4); };
    auto put16 = [&](uint16_t x) { f.write(reinterpret_cast<char*>(&x), 2); };
    f.write("RIFF", 4);
    put32(riff_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put32(16);
    put16(format);
    put16(channels);
    put32(sample_rate);
    put32(byte_rate);
    put16(block_align);
    put16(bits);
    f.write("data", 4);
    put32(data_len);
    f.write(data.data(), data.size());
    if (!f) throw std::runtime_error("wav: write failed for " + path);
}

}  // namespace

int16_t quantize_sample(double v) {
    double q = std::round(std::clamp(v, -1.0, 1.0) * 32768.0);
    q = std::clamp(q, -32768.0, 32767.0);
    return static_cast<int16_t>(q);
}

AudioStream load_wav(const std::string& path) {
    WavInfo info = read_wav_chunks(path);
    AudioStream out;
    out.sample_rate = static_cast<int>(info.sample_rate);
    std::size_t stride = info.channels;
    if (info.channels > 1)
        std::fprintf(stderr, "wav: %s has %u channels, taking channel 0\n",
                     path.c_str(), info.channels);
    if (info.format == 1 && info.bits == 16) {
        std::size_t n = info.data.size() / 2 / stride;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            int16_t s;
            std::memcpy(&s, info.data.data() + 2 * i * stride, 2);
            out.samples[i] = static_cast<double>(s) / 32768.0;
        }
    } else if (info.format == 3 && info.bits == 32) {
        std::size_t n = info.data.size() / 4 / stride;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            float s;
            std::memcpy(&s, info.data.data() + 4 * i * stride, 4);
            out.samples[i] = s;
        }
    } else if (info.format == 3 && info.bits == 64) {
        std::size_t n = info.data.size() / 8 / stride;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            std::memcpy(&out.samples[i], info.data.data() + 8 * i * stride, 8);
    } else {
        throw std::runtime_error("wav: unsupported format in " + path +
                                 " (format " + std::to_string(info.format) + ", " +
                                 std::to_string(info.bits) + " bits)");
    }
    if (out.samples.empty()) throw std::runtime_error("wav: empty payload in " + path);
    return out;
}

AudioStream load_pcm(const std::string& path) {
    WavInfo info = read_wav_chunks(path);
    if (info.format != 1 || info.bits != 16)
        throw std::runtime_error("wav: " + path + " is not 16-bit PCM (format " +
                                 std::to_string(info.format) + ", " +
                                 std::to_string(info.bits) + " bits)");
    return load_wav(path);
}

void save_pcm(const AudioStream& stream, const std::string& path) {
    std::vector<char> data(stream.samples.size() * 2);
    for (std::size_t i = 0; i < stream.samples.size(); ++i) {
        int16_t q = quantize_sample(stream.samples[i]);
        std::memcpy(data.data() + 2 * i, &q, 2);
    }
    write_wav(path, 1, 16, stream.sample_rate > 0 ? stream.sample_rate : 16000, data);
}

void save_wav_float(const AudioStream& stream, const std::string& path) {
    std::vector<char> data(stream.samples.size() * 8);
    for (std::size_t i = 0; i < stream.samples.size(); ++i)
        std::memcpy(data.data() + 8 * i, &stream.samples[i], 8);
    write_wav(path, 3, 64, stream.sample_rate > 0 ? stream.sample_rate : 16000, data);
}

}  // namespace ditas
