#pragma once

#include <vector>

#include "ditas/audio.hpp"
#include "ditas/carrier.hpp"
#include "ditas/nn.hpp"
#include "ditas/tensor.hpp"

namespace ditas {

struct SecretImage {
    Tensor pixels;  // 3 x h x w in [0,1]
};

// Progressive reconstruction state. partials[i] is C_i with C_0 the zero
// tensor; residuals[i-1] is R_i (empty where the frame was dropped).
struct RevealState {
    std::vector<Tensor> residuals;
    std::vector<Tensor> partials;
    std::vector<bool> mask;

    const Tensor& final_partial() const { return partials.back(); }
};

// S_i = S_0 - C_{i-1}. Exact elementwise subtraction, unclipped.
Tensor compute_residual(const Tensor& secret, const Tensor& partial);

struct HideResult {
    std::vector<CarrierFrame> containers;
    RevealState trace;
};

// Runs the interleaved t-stage protocol: stage i hides S_i = S_0 - C_{i-1}
// where C_{i-1} accumulates the revealing outputs of stages < i. Container
// samples are clamped to the valid carrier range [-1,1].
HideResult hide_all(const SecretImage& secret, const std::vector<CarrierFrame>& frames,
                    const StageModels& models);

RevealState reveal_all(const std::vector<CarrierFrame>& containers, const StageModels& models,
                       const std::vector<bool>& mask = {});

Tensor final_image(const RevealState& state);  // clamp(C_t, 0, 1)

struct StegoBundle {
    AudioStream container;
    Manifest manifest;
};

StegoBundle embed(const SecretImage& secret, const AudioStream& cover,
                  const StageModels& models, Manifest manifest);

SecretImage extract(const StegoBundle& bundle, const StageModels& models,
                    const std::vector<bool>& mask = {});

}  // namespace ditas
