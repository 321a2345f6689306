#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ditas/audio.hpp"
#include "ditas/tensor.hpp"

namespace ditas {

// One audio subsequence of w*h samples plus its position in the parent
// stream. The 2-D carrier grid is a row-major reshape of `flat`.
struct CarrierFrame {
    std::size_t offset = 0;
    int w = 0;
    int h = 0;
    std::vector<double> flat;
};

// Extraction-side protocol contract: everything the receiver needs to
// re-frame the container stream, short of the model weights themselves.
struct Manifest {
    int w = 0;
    int h = 0;
    int t = 0;
    std::vector<std::size_t> offsets;
    std::string variant = "M";        // M | M-E | M-D | M-ED | S | single-shot
    std::string checkpoint_id;
    std::string pcm_bits = "16";      // "16" | "float"

    void validate() const;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& m, const std::string& path);

// Contiguous-from-zero is the default framing policy; arbitrary offsets are
// honoured via the manifest.
std::vector<CarrierFrame> select_frames(const AudioStream& stream, int t, int w, int h);
std::vector<CarrierFrame> select_frames_at(const AudioStream& stream,
                                           const std::vector<std::size_t>& offsets,
                                           int w, int h);

Tensor frame_to_grid(const CarrierFrame& frame);               // 1 x h x w
CarrierFrame grid_to_frame(const Tensor& grid, std::size_t offset);

// Copies `stream`, overwriting each frame span with the container samples
// clamped to [-1,1]. Samples outside the frames are untouched.
AudioStream splice(const AudioStream& stream, const std::vector<CarrierFrame>& containers);

}  // namespace ditas
