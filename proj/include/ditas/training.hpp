#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ditas/audio.hpp"
#include "ditas/kv.hpp"
#include "ditas/nn.hpp"
#include "ditas/tensor.hpp"

namespace ditas {

struct TrainingConfig {
    int t = 5;
    int blocks = 4;
    Variant variant = Variant::M;
    std::uint64_t seed = 0;
    std::vector<double> lambda;        // per-stage weights; empty = all 0.8
    int batch = 16;
    double lr = 1e-4;
    int lr_decay_epochs = 20;          // lr divided by lr_decay_factor every N epochs
    double lr_decay_factor = 3.0;
    int epochs = 200;
    int steps_per_epoch = 100;
    int patch = 64;
    bool quantize_in_loop = false;     // straight-through 16-bit quantizer before revealing
    bool detach_residual_chain = false;
    int checkpoint_every = 0;          // epochs; 0 disables
    std::string checkpoint_prefix;
    // corpus: directories of .ppm / .wav files, or synthetic generators
    std::string image_dir;
    std::string audio_dir;
    int synth_images = 64;
    int synth_image_size = 64;
    int synth_audio_clips = 8;
    std::size_t synth_audio_len = 1u << 17;

    std::vector<double> stage_lambda() const;  // length t, default-filled
    void validate() const;
};

TrainingConfig config_from_kv(const KvMap& kv);
KvMap config_to_kv(const TrainingConfig& cfg);

double lr_at_epoch(const TrainingConfig& cfg, int epoch);

// Eq.-style losses: per-sample sum of squared entries, averaged over the
// batch.
double hiding_loss(const std::vector<Tensor>& containers, const std::vector<Tensor>& covers);
double revealing_loss(const std::vector<Tensor>& estimates, const std::vector<Tensor>& targets);
double total_loss(const std::vector<double>& per_stage_H, const std::vector<double>& per_stage_R,
                  const std::vector<double>& lambda);

struct Batch {
    std::vector<Tensor> secrets;                // N x (3 x p x p)
    std::vector<std::vector<Tensor>> carriers;  // N x t x (1 x p x p)
};

Batch sample_batch(const std::vector<Tensor>& images, const std::vector<AudioStream>& audio,
                   const TrainingConfig& cfg, std::mt19937_64& rng);

// Gradients mirror the model's parameter layout.
struct ModelGrads {
    std::vector<ConvNet> hiding;
    std::vector<ConvNet> revealing;
};
ModelGrads make_grads(const StageModels& m);
void zero_grads(ModelGrads& g);

struct StepStats {
    std::vector<double> loss_h;  // per stage
    std::vector<double> loss_r;
    double total = 0.0;
    double container_mse = 0.0;  // over framed samples
    double revealed_psnr = 0.0;  // clamp(C_t) vs secret, batch mean MSE
};

// Forward + backward over one batch through the interleaved pipeline.
// Parameter gradients of the batch-mean total loss accumulate into `grads`
// (pass nullptr for a forward-only loss evaluation).
StepStats train_step(const StageModels& models, const Batch& batch, const TrainingConfig& cfg,
                     ModelGrads* grads);

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;
    long step = 0;

    void update(StageModels& models, const ModelGrads& grads, double lr);
};

struct TrainResult {
    StageModels models;
    std::vector<StepStats> epoch_log;
    double initial_total = 0.0;
    double final_total = 0.0;
};

// End-to-end training over the configured corpora. `log` (optional) receives
// one tab-separated line per epoch:
//   epoch  lr  total  L_H[0..t)  L_R[0..t)  audio_mse  psnr
TrainResult train(const TrainingConfig& cfg, const std::vector<Tensor>& images,
                  const std::vector<AudioStream>& audio, std::ostream* log = nullptr);

// Deterministic desk-scale corpora: gradients / checkerboards / filtered
// noise images, and tone-mixture audio clips.
std::vector<Tensor> synth_images(int n, int size, std::uint64_t seed);
std::vector<AudioStream> synth_audio(int n, std::size_t len, std::uint64_t seed);

// Loads the corpora named by the config (directories if set, else synthetic).
std::vector<Tensor> load_image_corpus(const TrainingConfig& cfg);
std::vector<AudioStream> load_audio_corpus(const TrainingConfig& cfg);

}  // namespace ditas
