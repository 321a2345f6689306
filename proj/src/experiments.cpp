#include "ditas/experiments.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ditas/image_io.hpp"

namespace ditas {

namespace {

std::vector<CarrierFrame> eval_frames(const AudioStream& clip, int t, int p) {
    return select_frames(clip, t, p, p);
}

int ms_ssim_levels_for(int dim) {
    int levels = 1;
    while (levels < 5 && (8 << levels) <= dim) ++levels;
    return levels;
}

Tensor encode_residual(const Tensor& r) {
    Tensor out = r;
    for (double& v : out.v) v = std::clamp(0.5 + v / 2.0, 0.0, 1.0);
    return out;
}

}  // namespace

TrainingConfig fixture_config() {
    TrainingConfig cfg;
    cfg.t = 3;
    cfg.blocks = 2;
    cfg.variant = Variant::M;
    cfg.seed = 7;
    cfg.patch = 32;
    cfg.batch = 16;
    cfg.lr = 2e-3;
    cfg.epochs = 10;           // 200 optimizer steps in total
    cfg.steps_per_epoch = 20;
    cfg.synth_images = 16;
    cfg.synth_image_size = 32;
    cfg.synth_audio_clips = 4;
    cfg.synth_audio_len = 1u << 15;
    return cfg;
}

std::string config_hash(const TrainingConfig& cfg) {
    // FNV-1a over the canonical kv rendering
    KvMap kv = config_to_kv(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& [k, v] : kv)
        for (char c : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

QualityReport evaluate_model(const StageModels& models, const TrainingConfig& cfg,
                             const std::vector<Tensor>& images,
                             const std::vector<AudioStream>& audio) {
    if (images.empty() || audio.empty())
        throw std::runtime_error("evaluate_model: empty corpus");
    const int p = cfg.patch;
    const int stages = static_cast<int>(models.config.variant == Variant::SingleShot
                                            ? 1
                                            : models.config.t);
    QualityReport report;
    report.per_stage_psnr.assign(stages, 0.0);
    std::vector<double> stage_mse(stages, 0.0);
    double cover_se = 0.0, img_mse_sum = 0.0, ssim_sum = 0.0, msssim_sum = 0.0;
    std::size_t cover_count = 0;
    int levels = ms_ssim_levels_for(std::min(p, p));

    for (std::size_t n = 0; n < images.size(); ++n) {
        const Tensor& img = images[n];
        Tensor secret = take_channels(img, 0, 3);
        if (img.h != p || img.w != p) {
            secret = Tensor(3, p, p);
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < p; ++y)
                    for (int x = 0; x < p; ++x) secret.at(c, y, x) = img.at(c, y, x);
        }
        const AudioStream& clip = audio[n % audio.size()];
        std::vector<CarrierFrame> frames = eval_frames(clip, models.config.t, p);
        HideResult hidden = hide_all(SecretImage{secret}, frames, models);
        for (int i = 0; i < models.config.t; ++i) {
            for (std::size_t k = 0; k < frames[i].flat.size(); ++k) {
                double d = hidden.containers[i].flat[k] - frames[i].flat[k];
                cover_se += d * d;
            }
            cover_count += frames[i].flat.size();
        }
        for (int i = 0; i < stages; ++i)
            stage_mse[i] += image_mse(clamp01(hidden.trace.partials[i + 1]), secret);
        Tensor revealed = final_image(hidden.trace);
        img_mse_sum += image_mse(revealed, secret);
        ssim_sum += ssim(secret, revealed);
        msssim_sum += ms_ssim(secret, revealed, levels);
    }
    const double n = static_cast<double>(images.size());
    report.audio_mse = cover_se / static_cast<double>(cover_count);
    double mse = img_mse_sum / n;
    report.psnr = mse <= 0.0 ? std::numeric_limits<double>::infinity()
                             : 10.0 * std::log10(1.0 / mse);
    report.ssim = ssim_sum / n;
    report.ms_ssim = msssim_sum / n;
    for (int i = 0; i < stages; ++i) {
        double m = stage_mse[i] / n;
        report.per_stage_psnr[i] =
            m <= 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / m);
    }
    return report;
}

namespace {

// Perturbs one container frame and checks that every other stage's residual
// is bit-identical. Only meaningful for unconnected revealing (M, S).
int stage_independence_check(const StageModels& models, const TrainingConfig& cfg,
                             const std::vector<Tensor>& images,
                             const std::vector<AudioStream>& audio) {
    if (revealing_connected(models.config.variant) ||
        models.config.variant == Variant::SingleShot)
        return -1;
    const int p = cfg.patch;
    Tensor secret = take_channels(images[0], 0, 3);
    std::vector<CarrierFrame> frames = eval_frames(audio[0], models.config.t, p);
    HideResult hidden = hide_all(SecretImage{secret}, frames, models);
    RevealState base = reveal_all(hidden.containers, models);
    std::mt19937_64 rng(models.config.seed + 99);
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    for (int j = 0; j < models.config.t; ++j) {
        std::vector<CarrierFrame> perturbed = hidden.containers;
        for (double& s : perturbed[j].flat) s = std::clamp(s + uni(rng), -1.0, 1.0);
        RevealState st = reveal_all(perturbed, models);
        for (int i = 0; i < models.config.t; ++i) {
            if (i == j) continue;
            if (st.residuals[i].v != base.residuals[i].v) return 0;
        }
    }
    return 1;
}

ExpRecord run_one(TrainingConfig cfg, const std::string& label) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Tensor> images = load_image_corpus(cfg);
    std::vector<AudioStream> audio = load_audio_corpus(cfg);
    TrainResult tr = train(cfg, images, audio);
    ExpRecord rec;
    rec.key = config_hash(cfg);
    rec.label = label;
    rec.quality = evaluate_model(tr.models, cfg, images, audio);
    rec.params = total_param_count(tr.models);
    rec.stage_independent = stage_independence_check(tr.models, cfg, images, audio);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

SweepResult sweep_stages(const std::vector<int>& t_values, TrainingConfig base) {
    SweepResult result;
    for (int t : t_values) {
        TrainingConfig cfg = base;
        cfg.t = t;
        result.records.push_back(run_one(cfg, "t=" + std::to_string(t)));
    }
    for (std::size_t i = 1; i < result.records.size(); ++i) {
        double gain = result.records[i].quality.psnr - result.records[i - 1].quality.psnr;
        if (gain < 0.2) {
            result.saturation_t = t_values[i];
            break;
        }
    }
    return result;
}

SweepResult ablate_variants(const std::vector<Variant>& variants, TrainingConfig base) {
    SweepResult result;
    for (Variant v : variants) {
        TrainingConfig cfg = base;
        cfg.variant = v;
        result.records.push_back(run_one(cfg, variant_name(v)));
    }
    return result;
}

ExpRecord baseline_single_shot(TrainingConfig base) {
    base.variant = Variant::SingleShot;
    return run_one(base, "single-shot");
}

std::vector<DropRecord> robustness_drop(const StageModels& models, const TrainingConfig& cfg,
                                        const std::vector<Tensor>& images,
                                        const std::vector<AudioStream>& audio,
                                        const std::vector<std::vector<bool>>& drop_patterns) {
    const int p = cfg.patch;
    std::vector<DropRecord> out;
    for (const std::vector<bool>& mask : drop_patterns) {
        if (static_cast<int>(mask.size()) != models.config.t)
            throw std::invalid_argument("robustness_drop: mask length must equal t");
        double mse_sum = 0.0;
        for (std::size_t n = 0; n < images.size(); ++n) {
            Tensor secret = take_channels(images[n], 0, 3);
            std::vector<CarrierFrame> frames =
                eval_frames(audio[n % audio.size()], models.config.t, p);
            HideResult hidden = hide_all(SecretImage{secret}, frames, models);
            RevealState st = reveal_all(hidden.containers, models, mask);
            mse_sum += image_mse(final_image(st), secret);
        }
        double mse = mse_sum / static_cast<double>(images.size());
        DropRecord rec;
        rec.mask = mask;
        rec.psnr = mse <= 0.0 ? std::numeric_limits<double>::infinity()
                              : 10.0 * std::log10(1.0 / mse);
        out.push_back(std::move(rec));
    }
    return out;
}

void dump_intermediates(const StageModels& models, const TrainingConfig& cfg,
                        const Tensor& secret, const std::vector<AudioStream>& audio,
                        const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<CarrierFrame> frames = eval_frames(audio[0], models.config.t, cfg.patch);
    HideResult hidden = hide_all(SecretImage{secret}, frames, models);
    save_ppm(secret, out_dir + "/secret.ppm");
    Tensor c = zeros_like(secret);
    for (std::size_t i = 0; i < hidden.trace.residuals.size(); ++i) {
        std::string n = std::to_string(i + 1);
        Tensor s_i = compute_residual(secret, c);
        save_ppm(encode_residual(s_i), out_dir + "/S" + n + ".ppm");
        save_ppm(encode_residual(hidden.trace.residuals[i]), out_dir + "/R" + n + ".ppm");
        c += hidden.trace.residuals[i];
        save_ppm(clamp01(c), out_dir + "/C" + n + ".ppm");
    }
    save_ppm(final_image(hidden.trace), out_dir + "/revealed.ppm");
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("csv: cannot write " + path);
    f << "key,label,audio_mse,psnr,ssim,ms_ssim,params,wall_seconds,stage_independent,"
         "per_stage_psnr\n";
    for (const ExpRecord& r : result.records) {
        f << r.key << ',' << r.label << ',' << r.quality.audio_mse << ',' << r.quality.psnr
          << ',' << r.quality.ssim << ',' << r.quality.ms_ssim << ',' << r.params << ','
          << r.wall_seconds << ',';
        if (r.stage_independent < 0)
            f << "n/a";
        else
            f << (r.stage_independent ? "pass" : "fail");
        f << ',';
        for (std::size_t i = 0; i < r.quality.per_stage_psnr.size(); ++i) {
            if (i) f << ';';
            f << r.quality.per_stage_psnr[i];
        }
        f << '\n';
    }
    if (result.saturation_t >= 0)
        f << "# saturation: first t with marginal PSNR gain < 0.2 dB is t="
          << result.saturation_t << "\n";
}

}  // namespace ditas
