#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ditas/audio.hpp"
#include "ditas/carrier.hpp"

using namespace ditas;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

AudioStream make_stream(std::size_t n, std::uint64_t seed = 1) {
    AudioStream s;
    s.sample_rate = 16000;
    s.samples.resize(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (double& v : s.samples) v = uni(rng);
    return s;
}

}  // namespace

TEST_CASE("pcm quantization endpoints") {
    CHECK(quantize_sample(0.0) == 0);
    CHECK(quantize_sample(-1.0) == -32768);
    CHECK(quantize_sample(1.0) == 32767);  // round(32768) clamped
    CHECK(quantize_sample(2.0) == 32767);
    CHECK(quantize_sample(-2.0) == -32768);
}

TEST_CASE("pcm load maps v/32768") {
    std::string path = tmp_path("ditas_pcm_map.wav");
    AudioStream s;
    s.sample_rate = 8000;
    s.samples = {0.0, -1.0, 32767.0 / 32768.0};
    save_pcm(s, path);
    AudioStream r = load_pcm(path);
    REQUIRE(r.samples.size() == 3);
    CHECK(r.samples[0] == 0.0);
    CHECK(r.samples[1] == -1.0);
    CHECK(r.samples[2] == 0.999969482421875);
    CHECK(r.sample_rate == 8000);
    std::filesystem::remove(path);
}

TEST_CASE("pcm round trip is bit-identical on quantized streams") {
    std::string p1 = tmp_path("ditas_pcm_rt1.wav");
    std::string p2 = tmp_path("ditas_pcm_rt2.wav");
    AudioStream s = make_stream(5000);
    save_pcm(s, p1);
    AudioStream once = load_pcm(p1);
    // quantization error bound vs the pre-quantization stream
    for (std::size_t i = 0; i < s.samples.size(); ++i)
        CHECK(std::abs(once.samples[i] - s.samples[i]) <= 1.0 / 32768.0);
    save_pcm(once, p2);
    AudioStream twice = load_pcm(p2);
    CHECK(once.samples == twice.samples);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("float wav round trip is exact") {
    std::string path = tmp_path("ditas_f64.wav");
    AudioStream s = make_stream(1234);
    save_wav_float(s, path);
    AudioStream r = load_wav(path);
    CHECK(r.samples == s.samples);
    std::filesystem::remove(path);
}

TEST_CASE("load_pcm rejects malformed input") {
    std::string path = tmp_path("ditas_bad.wav");
    {
        std::ofstream f(path, std::ios::binary);
        f << "NOTAWAVFILE";
    }
    CHECK_THROWS(load_pcm(path));
    std::filesystem::remove(path);
    CHECK_THROWS(load_pcm(tmp_path("ditas_does_not_exist.wav")));
}

TEST_CASE("select_frames contiguous policy") {
    AudioStream s = make_stream(12288);
    auto frames = select_frames(s, 3, 64, 64);
    REQUIRE(frames.size() == 3);
    CHECK(frames[0].offset == 0);
    CHECK(frames[1].offset == 4096);
    CHECK(frames[2].offset == 8192);
    for (const auto& f : frames) CHECK(f.flat.size() == 4096);
}

TEST_CASE("select_frames capacity error") {
    AudioStream s = make_stream(4095);
    CHECK_THROWS_WITH_AS(select_frames(s, 1, 64, 64),
                         doctest::Contains("4096"), std::runtime_error);
}

TEST_CASE("select_frames leaves the tail alone") {
    AudioStream s = make_stream(10000);
    auto frames = select_frames(s, 2, 64, 64);
    CHECK(frames[0].offset == 0);
    CHECK(frames[1].offset == 4096);
    // 1808 tail samples are simply not framed
    CHECK(s.samples.size() - (frames[1].offset + frames[1].flat.size()) == 1808);
}

TEST_CASE("frame/grid reshape is a row-major bijection") {
    CarrierFrame f;
    f.w = 2;
    f.h = 2;
    f.flat = {1.0, 2.0, 3.0, 4.0};
    Tensor g = frame_to_grid(f);
    CHECK(g.at(0, 0, 0) == 1.0);
    CHECK(g.at(0, 0, 1) == 2.0);
    CHECK(g.at(0, 1, 0) == 3.0);
    CHECK(g.at(0, 1, 1) == 4.0);
    CarrierFrame back = grid_to_frame(g, 17);
    CHECK(back.offset == 17);
    CHECK(back.flat == f.flat);

    AudioStream s = make_stream(4096);
    auto frames = select_frames(s, 1, 64, 64);
    CarrierFrame rt = grid_to_frame(frame_to_grid(frames[0]), frames[0].offset);
    CHECK(rt.flat == frames[0].flat);
}

TEST_CASE("frame/grid size mismatch errors") {
    CarrierFrame f;
    f.w = 2;
    f.h = 2;
    f.flat = {1.0, 2.0, 3.0};
    CHECK_THROWS(frame_to_grid(f));
    Tensor multi(3, 2, 2);
    CHECK_THROWS(grid_to_frame(multi, 0));
}

TEST_CASE("splice locality") {
    AudioStream s = make_stream(10000);
    SUBCASE("no containers is the identity") {
        AudioStream out = splice(s, {});
        CHECK(out.samples == s.samples);
    }
    SUBCASE("container equal to the cover frame is the identity") {
        auto frames = select_frames(s, 2, 64, 64);
        AudioStream out = splice(s, frames);
        CHECK(out.samples == s.samples);
    }
    SUBCASE("only the frame span changes") {
        auto frames = select_frames(s, 1, 64, 64);
        for (double& v : frames[0].flat) v = 0.5;
        AudioStream out = splice(s, frames);
        for (std::size_t i = 0; i < 4096; ++i) CHECK(out.samples[i] == 0.5);
        for (std::size_t i = 4096; i < s.samples.size(); ++i)
            CHECK(out.samples[i] == s.samples[i]);
    }
    SUBCASE("out of range offset errors") {
        CarrierFrame f;
        f.offset = 9999;
        f.w = 2;
        f.h = 2;
        f.flat = {0, 0, 0, 0};
        CHECK_THROWS(splice(s, {f}));
    }
}

TEST_CASE("manifest round trip and validation") {
    Manifest m;
    m.w = 64;
    m.h = 64;
    m.t = 3;
    m.offsets = {0, 4096, 8192};
    m.variant = "M-ED";
    m.checkpoint_id = "abc123";
    m.pcm_bits = "float";
    std::string path = tmp_path("ditas.manifest");
    save_manifest(m, path);
    Manifest r = load_manifest(path);
    CHECK(r.w == 64);
    CHECK(r.t == 3);
    CHECK(r.offsets == m.offsets);
    CHECK(r.variant == "M-ED");
    CHECK(r.checkpoint_id == "abc123");
    CHECK(r.pcm_bits == "float");
    std::filesystem::remove(path);

    Manifest bad = m;
    bad.offsets = {0, 1000, 8192};  // overlap: gap < w*h
    CHECK_THROWS(bad.validate());
    bad = m;
    bad.w = 4;
    CHECK_THROWS(bad.validate());
}
