#include "ditas/carrier.hpp"

#include <algorithm>
#include <stdexcept>

#include "ditas/kv.hpp"

namespace ditas {

void Manifest::validate() const {
    if (t < 1) throw std::invalid_argument("manifest: t must be >= 1");
    if (w < 8 || h < 8) throw std::invalid_argument("manifest: w and h must be >= 8");
    if (static_cast<int>(offsets.size()) != t)
        throw std::invalid_argument("manifest: offsets count must equal t");
    std::size_t span = static_cast<std::size_t>(w) * h;
    for (int i = 1; i < t; ++i) {
        if (offsets[i] <= offsets[i - 1] || offsets[i] - offsets[i - 1] < span)
            throw std::invalid_argument("manifest: offsets must be strictly increasing with gap >= w*h");
    }
}

Manifest load_manifest(const std::string& path) {
    KvMap kv = load_kv(path);
    Manifest m;
    m.w = std::stoi(kv_get(kv, "w"));
    m.h = std::stoi(kv_get(kv, "h"));
    m.t = std::stoi(kv_get(kv, "t"));
    m.offsets = parse_index_list(kv_get(kv, "offsets"));
    m.variant = kv_get(kv, "variant");
    m.checkpoint_id = kv_get(kv, "checkpoint_id");
    m.pcm_bits = kv_get(kv, "pcm_bits");
    m.validate();
    return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
    m.validate();
    KvMap kv;
    kv["w"] = std::to_string(m.w);
    kv["h"] = std::to_string(m.h);
    kv["t"] = std::to_string(m.t);
    kv["offsets"] = join_index_list(m.offsets);
    kv["variant"] = m.variant;
    kv["checkpoint_id"] = m.checkpoint_id;
    kv["pcm_bits"] = m.pcm_bits;
    save_kv(kv, path);
}

std::vector<CarrierFrame> select_frames(const AudioStream& stream, int t, int w, int h) {
    std::vector<std::size_t> offsets(t);
    std::size_t span = static_cast<std::size_t>(w) * h;
    for (int i = 0; i < t; ++i) offsets[i] = static_cast<std::size_t>(i) * span;
    return select_frames_at(stream, offsets, w, h);
}

std::vector<CarrierFrame> select_frames_at(const AudioStream& stream,
                                           const std::vector<std::size_t>& offsets,
                                           int w, int h) {
    std::size_t span = static_cast<std::size_t>(w) * h;
    std::size_t need = offsets.empty() ? 0 : offsets.back() + span;
    if (need > stream.length())
        throw std::runtime_error("carrier: stream too short, need " + std::to_string(need) +
                                 " samples but only " + std::to_string(stream.length()) +
                                 " available");
    std::vector<CarrierFrame> frames;
    frames.reserve(offsets.size());
    for (std::size_t off : offsets) {
        CarrierFrame f;
        f.offset = off;
        f.w = w;
        f.h = h;
        f.flat.assign(stream.samples.begin() + off, stream.samples.begin() + off + span);
        frames.push_back(std::move(f));
    }
    return frames;
}

Tensor frame_to_grid(const CarrierFrame& frame) {
    if (frame.flat.size() != static_cast<std::size_t>(frame.w) * frame.h)
        throw std::invalid_argument("carrier: frame size does not match w*h");
    Tensor g(1, frame.h, frame.w);
    std::copy(frame.flat.begin(), frame.flat.end(), g.v.begin());
    return g;
}

CarrierFrame grid_to_frame(const Tensor& grid, std::size_t offset) {
    if (grid.ch != 1) throw std::invalid_argument("carrier: grid must be single-channel");
    CarrierFrame f;
    f.offset = offset;
    f.w = grid.w;
    f.h = grid.h;
    f.flat.assign(grid.v.begin(), grid.v.end());
    return f;
}

AudioStream splice(const AudioStream& stream, const std::vector<CarrierFrame>& containers) {
    AudioStream out = stream;
    for (const CarrierFrame& f : containers) {
        if (f.offset + f.flat.size() > out.samples.size())
            throw std::runtime_error("carrier: container offset " + std::to_string(f.offset) +
                                     " out of range");
        for (std::size_t i = 0; i < f.flat.size(); ++i)
            out.samples[f.offset + i] = std::clamp(f.flat[i], -1.0, 1.0);
    }
    return out;
}

}  // namespace ditas
