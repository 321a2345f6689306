#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ditas/tensor.hpp"

namespace ditas {

// Inter-stage wiring options. M is the plain multi-stage model; E/D add a
// 64-channel feature connection between successive hiding / revealing
// stages; S shares one parameter set across all stages. SingleShot is the
// one-stage baseline that embeds into all t frames at once.
enum class Variant { M, ME, MD, MED, S, SingleShot };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);
bool hiding_connected(Variant v);     // M-E, M-ED
bool revealing_connected(Variant v);  // M-D, M-ED

constexpr int kBodyChannels = 64;

// 3x3 convolution, padding 1, spatial size preserved.
struct Conv2d {
    int in_ch = 0;
    int out_ch = 0;
    std::vector<double> weight;  // [out][in][3][3]
    std::vector<double> bias;    // [out]

    Conv2d() = default;
    Conv2d(int in, int out)
        : in_ch(in), out_ch(out),
          weight(static_cast<std::size_t>(out) * in * 9, 0.0), bias(out, 0.0) {}

    Tensor forward(const Tensor& x) const;
    // Accumulates parameter gradients into `grad` (same shape as *this)
    // and returns the gradient w.r.t. x.
    Tensor backward(const Tensor& x, const Tensor& dy, Conv2d& grad) const;
};

// y = x + conv_b(relu(conv_a(x))), 64 channels throughout.
struct ResBlock {
    Conv2d a{kBodyChannels, kBodyChannels};
    Conv2d b{kBodyChannels, kBodyChannels};
};

// stem conv -> relu -> B residual blocks -> head conv. The body output
// (64 x h x w) doubles as the feature handed to a connected next stage.
struct ConvNet {
    Conv2d stem;
    std::vector<ResBlock> body;
    Conv2d head;

    ConvNet() = default;
    ConvNet(int c_in, int c_out, int blocks);
};

struct ResBlockCache {
    Tensor in;
    Tensor a_pre;
};

struct ConvNetCache {
    Tensor in;
    Tensor stem_pre;
    std::vector<ResBlockCache> blocks;
    Tensor body_out;
};

struct ConvNetOut {
    Tensor head;      // c_out x h x w
    Tensor features;  // 64 x h x w (body output)
};

ConvNetOut conv_net_forward(const ConvNet& net, const Tensor& in, ConvNetCache* cache);

// d_head: gradient at the head output; d_feat: gradient arriving at the
// body output from a connected next stage (nullptr if none). Parameter
// gradients accumulate into `grad`; returns the gradient w.r.t. the input.
Tensor conv_net_backward(const ConvNet& net, const ConvNetCache& cache,
                         const Tensor& d_head, const Tensor* d_feat, ConvNet& grad);

ConvNet make_grad_like(const ConvNet& net);
void zero_params(ConvNet& net);
std::size_t param_count(const ConvNet& net);
void for_each_param(ConvNet& net, const std::function<void(std::vector<double>&)>& fn);
void for_each_param(const ConvNet& net, const std::function<void(const std::vector<double>&)>& fn);

struct ModelConfig {
    int t = 5;
    int blocks = 4;
    Variant variant = Variant::M;
    std::uint64_t seed = 0;
};

struct StageModels {
    ModelConfig config;
    std::vector<ConvNet> hiding;     // one entry for S / SingleShot, else t
    std::vector<ConvNet> revealing;

    bool shared() const { return config.variant == Variant::S; }
    const ConvNet& hide_net(int stage) const { return hiding[shared() ? 0 : stage]; }
    const ConvNet& reveal_net(int stage) const { return revealing[shared() ? 0 : stage]; }
    int hide_index(int stage) const { return shared() ? 0 : stage; }
};

// Deterministic per seed. Both head convolutions start at zero, so a fresh
// model is an exact pass-through: container = cover and residual = 0.
StageModels init_models(const ModelConfig& cfg);

std::size_t total_param_count(const StageModels& m);

// Hiding sub-network wrapper: input = concat(secret, carrier [, features]),
// container = carrier + head output (global carrier skip).
struct HideOut {
    Tensor container;
    Tensor features;
};
HideOut hide_forward(const StageModels& m, int stage, const Tensor& secret_residual,
                     const Tensor& carrier_grid, const Tensor* incoming_features,
                     ConvNetCache* cache = nullptr);

struct RevealOut {
    Tensor residual;
    Tensor features;
};
RevealOut reveal_forward(const StageModels& m, int stage, const Tensor& container_grid,
                         const Tensor* incoming_features, ConvNetCache* cache = nullptr);

// Versioned binary checkpoint. Round-trips bit-exactly.
void save_checkpoint(const StageModels& m, const std::string& path);
StageModels load_checkpoint(const std::string& path);

// SHA-256 (hex) of the checkpoint file; stored in the manifest as
// checkpoint_id.
std::string checkpoint_id(const std::string& path);

}  // namespace ditas
