#include "ditas/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

namespace ditas {

namespace {

Tensor clamp_carrier(Tensor t) {
    for (double& x : t.v) x = std::clamp(x, -1.0, 1.0);
    return t;
}

void check_mask(std::vector<bool>& mask, int t) {
    if (mask.empty()) mask.assign(t, true);
    if (static_cast<int>(mask.size()) != t)
        throw std::invalid_argument("pipeline: availability mask length must equal t");
}

// Concatenates t single-channel frame grids into one t x h x w tensor for
// the single-shot baseline.
Tensor stack_frames(const std::vector<CarrierFrame>& frames) {
    std::vector<Tensor> grids;
    grids.reserve(frames.size());
    for (const CarrierFrame& f : frames) grids.push_back(frame_to_grid(f));
    std::vector<const Tensor*> parts;
    for (const Tensor& g : grids) parts.push_back(&g);
    return concat_channels(parts);
}

}  // namespace

Tensor compute_residual(const Tensor& secret, const Tensor& partial) {
    if (!secret.same_shape(partial))
        throw std::invalid_argument("compute_residual: shape mismatch");
    return secret - partial;
}

HideResult hide_all(const SecretImage& secret, const std::vector<CarrierFrame>& frames,
                    const StageModels& models) {
    const int t = models.config.t;
    if (static_cast<int>(frames.size()) != t)
        throw std::invalid_argument("hide_all: expected " + std::to_string(t) + " frames, got " +
                                    std::to_string(frames.size()));
    require_shape(secret.pixels, 3, frames[0].h, frames[0].w, "hide_all secret");

    HideResult result;
    result.trace.mask.assign(t, true);
    result.trace.partials.push_back(zeros_like(secret.pixels));  // C_0

    if (models.config.variant == Variant::SingleShot) {
        Tensor cover = stack_frames(frames);
        HideOut hidden = hide_forward(models, 0, secret.pixels, cover, nullptr);
        Tensor container = clamp_carrier(hidden.container);
        RevealOut revealed = reveal_forward(models, 0, container, nullptr);
        result.trace.residuals.push_back(revealed.residual);
        result.trace.partials.push_back(result.trace.partials[0] + revealed.residual);
        for (int i = 0; i < t; ++i)
            result.containers.push_back(
                grid_to_frame(take_channels(container, i, 1), frames[i].offset));
        return result;
    }

    Tensor hide_feat, reveal_feat;
    for (int i = 0; i < t; ++i) {
        Tensor s_i = compute_residual(secret.pixels, result.trace.partials.back());
        Tensor carrier = frame_to_grid(frames[i]);
        const Tensor* hf = (hiding_connected(models.config.variant) && i > 0) ? &hide_feat : nullptr;
        HideOut hidden = hide_forward(models, i, s_i, carrier, hf);
        hide_feat = std::move(hidden.features);
        Tensor container = clamp_carrier(std::move(hidden.container));
        const Tensor* rf =
            (revealing_connected(models.config.variant) && i > 0) ? &reveal_feat : nullptr;
        RevealOut revealed = reveal_forward(models, i, container, rf);
        reveal_feat = std::move(revealed.features);
        result.trace.partials.push_back(result.trace.partials.back() + revealed.residual);
        result.trace.residuals.push_back(std::move(revealed.residual));
        result.containers.push_back(grid_to_frame(container, frames[i].offset));
    }
    return result;
}

RevealState reveal_all(const std::vector<CarrierFrame>& containers, const StageModels& models,
                       const std::vector<bool>& mask_in) {
    const int t = models.config.t;
    if (static_cast<int>(containers.size()) != t)
        throw std::invalid_argument("reveal_all: expected " + std::to_string(t) +
                                    " containers, got " + std::to_string(containers.size()));
    std::vector<bool> mask = mask_in;
    check_mask(mask, t);

    RevealState state;
    state.mask = mask;
    Tensor zero(3, containers[0].h, containers[0].w);
    state.partials.push_back(zero);  // C_0

    if (models.config.variant == Variant::SingleShot) {
        Tensor container = stack_frames(containers);
        // dropped frames contribute a zero channel
        for (int i = 0; i < t; ++i)
            if (!mask[i])
                std::fill(container.v.begin() + static_cast<std::size_t>(i) * container.plane(),
                          container.v.begin() + static_cast<std::size_t>(i + 1) * container.plane(),
                          0.0);
        RevealOut revealed = reveal_forward(models, 0, container, nullptr);
        state.partials.push_back(state.partials[0] + revealed.residual);
        state.residuals.push_back(std::move(revealed.residual));
        return state;
    }

    Tensor reveal_feat;
    bool have_feat = false;
    for (int i = 0; i < t; ++i) {
        bool connected = revealing_connected(models.config.variant) && i > 0;
        if (connected && !have_feat)
            reveal_feat = Tensor(kBodyChannels, containers[i].h, containers[i].w);
        if (!mask[i]) {
            // dropped frame: zero residual, and a zero feature map feeds a
            // connected successor
            state.residuals.push_back(Tensor());
            state.partials.push_back(state.partials.back());
            have_feat = false;
            continue;
        }
        Tensor grid = frame_to_grid(containers[i]);
        const Tensor* rf = connected ? &reveal_feat : nullptr;
        RevealOut revealed = reveal_forward(models, i, grid, rf);
        reveal_feat = std::move(revealed.features);
        have_feat = true;
        state.partials.push_back(state.partials.back() + revealed.residual);
        state.residuals.push_back(std::move(revealed.residual));
    }
    return state;
}

Tensor final_image(const RevealState& state) { return clamp01(state.final_partial()); }

StegoBundle embed(const SecretImage& secret, const AudioStream& cover,
                  const StageModels& models, Manifest manifest) {
    if (manifest.offsets.empty()) {
        std::size_t span = static_cast<std::size_t>(manifest.w) * manifest.h;
        for (int i = 0; i < manifest.t; ++i)
            manifest.offsets.push_back(static_cast<std::size_t>(i) * span);
    }
    manifest.validate();
    if (manifest.t != models.config.t || manifest.variant != variant_name(models.config.variant))
        throw std::runtime_error("embed: manifest does not match model config");
    std::vector<CarrierFrame> frames = select_frames_at(cover, manifest.offsets, manifest.w, manifest.h);
    HideResult hidden = hide_all(secret, frames, models);
    StegoBundle bundle;
    bundle.container = splice(cover, hidden.containers);
    if (manifest.pcm_bits == "16") {
        for (double& s : bundle.container.samples)
            s = static_cast<double>(quantize_sample(s)) / 32768.0;
    }
    bundle.manifest = std::move(manifest);
    return bundle;
}

SecretImage extract(const StegoBundle& bundle, const StageModels& models,
                    const std::vector<bool>& mask) {
    const Manifest& m = bundle.manifest;
    m.validate();
    if (m.t != models.config.t || m.variant != variant_name(models.config.variant))
        throw std::runtime_error("extract: manifest does not match model config");
    std::vector<CarrierFrame> containers =
        select_frames_at(bundle.container, m.offsets, m.w, m.h);
    RevealState state = reveal_all(containers, models, mask);
    return SecretImage{final_image(state)};
}

}  // namespace ditas
