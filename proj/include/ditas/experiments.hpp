#pragma once

#include <string>
#include <vector>

#include "ditas/metrics.hpp"
#include "ditas/nn.hpp"
#include "ditas/pipeline.hpp"
#include "ditas/training.hpp"

namespace ditas {

struct ExpRecord {
    std::string key;    // config hash
    std::string label;  // "t=3" or variant name
    QualityReport quality;
    double wall_seconds = 0.0;
    std::size_t params = 0;
    int stage_independent = -1;  // 1 pass, 0 fail, -1 not applicable
};

struct SweepResult {
    std::vector<ExpRecord> records;
    int saturation_t = -1;  // first t where marginal PSNR gain < 0.2 dB
};

// Canonical minutes-scale acceptance workload: 16 synthetic 32x32 images,
// 4 synthetic audio clips of 2^15 samples, t=3, B=2, 200 optimizer steps,
// seed 7.
TrainingConfig fixture_config();

std::string config_hash(const TrainingConfig& cfg);

// Mean quality of a trained model over the full image corpus against a fixed
// carrier schedule drawn from the audio corpus.
QualityReport evaluate_model(const StageModels& models, const TrainingConfig& cfg,
                             const std::vector<Tensor>& images,
                             const std::vector<AudioStream>& audio);

SweepResult sweep_stages(const std::vector<int>& t_values, TrainingConfig base);

SweepResult ablate_variants(const std::vector<Variant>& variants, TrainingConfig base);

ExpRecord baseline_single_shot(TrainingConfig base);

struct DropRecord {
    std::vector<bool> mask;
    double psnr = 0.0;
};
std::vector<DropRecord> robustness_drop(const StageModels& models, const TrainingConfig& cfg,
                                        const std::vector<Tensor>& images,
                                        const std::vector<AudioStream>& audio,
                                        const std::vector<std::vector<bool>>& drop_patterns);

// Writes per-stage S_i, R_i and clamp(C_i) PPM images for one sample.
// Residuals are visualized as 0.5 + x/2.
void dump_intermediates(const StageModels& models, const TrainingConfig& cfg,
                        const Tensor& secret, const std::vector<AudioStream>& audio,
                        const std::string& out_dir);

void write_sweep_csv(const SweepResult& result, const std::string& path);

}  // namespace ditas
