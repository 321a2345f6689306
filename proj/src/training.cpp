#include "ditas/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "ditas/audio.hpp"
#include "ditas/image_io.hpp"

namespace ditas {

std::vector<double> TrainingConfig::stage_lambda() const {
    if (lambda.empty()) return std::vector<double>(t, 0.8);
    if (lambda.size() == 1) return std::vector<double>(t, lambda[0]);
    if (static_cast<int>(lambda.size()) != t)
        throw std::invalid_argument("config: lambda must have 1 or t entries");
    return lambda;
}

void TrainingConfig::validate() const {
    if (t < 1) throw std::invalid_argument("config: t must be >= 1");
    if (blocks < 1) throw std::invalid_argument("config: blocks must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("config: lr must be > 0");
    if (patch < 8) throw std::invalid_argument("config: patch must be >= 8");
    if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
    for (double l : stage_lambda())
        if (l <= 0.0) throw std::invalid_argument("config: lambda entries must be > 0");
}

TrainingConfig config_from_kv(const KvMap& kv) {
    TrainingConfig c;
    auto geti = [&](const char* k, int d) { return std::stoi(kv_get_or(kv, k, std::to_string(d))); };
    auto getd = [&](const char* k, double d) {
        return std::stod(kv_get_or(kv, k, std::to_string(d)));
    };
    auto getb = [&](const char* k, bool d) {
        std::string s = kv_get_or(kv, k, d ? "true" : "false");
        return s == "true" || s == "1";
    };
    c.t = geti("t", c.t);
    c.blocks = geti("blocks", c.blocks);
    c.variant = variant_from_name(kv_get_or(kv, "variant", "M"));
    c.seed = std::stoull(kv_get_or(kv, "seed", "0"));
    std::string lam = kv_get_or(kv, "lambda", "");
    if (!lam.empty()) {
        c.lambda.clear();
        std::size_t pos = 0;
        while (pos < lam.size()) {
            std::size_t comma = lam.find(',', pos);
            c.lambda.push_back(std::stod(lam.substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    c.batch = geti("batch", c.batch);
    c.lr = getd("lr", c.lr);
    c.lr_decay_epochs = geti("lr_decay_epochs", c.lr_decay_epochs);
    c.lr_decay_factor = getd("lr_decay_factor", c.lr_decay_factor);
    c.epochs = geti("epochs", c.epochs);
    c.steps_per_epoch = geti("steps_per_epoch", c.steps_per_epoch);
    c.patch = geti("patch", c.patch);
    c.quantize_in_loop = getb("quantize_in_loop", c.quantize_in_loop);
    c.detach_residual_chain = getb("detach_residual_chain", c.detach_residual_chain);
    c.checkpoint_every = geti("checkpoint_every", c.checkpoint_every);
    c.checkpoint_prefix = kv_get_or(kv, "checkpoint_prefix", "");
    c.image_dir = kv_get_or(kv, "image_dir", "");
    c.audio_dir = kv_get_or(kv, "audio_dir", "");
    c.synth_images = geti("synth_images", c.synth_images);
    c.synth_image_size = geti("synth_image_size", c.synth_image_size);
    c.synth_audio_clips = geti("synth_audio_clips", c.synth_audio_clips);
    c.synth_audio_len = std::stoull(kv_get_or(kv, "synth_audio_len",
                                              std::to_string(c.synth_audio_len)));
    c.validate();
    return c;
}

KvMap config_to_kv(const TrainingConfig& cfg) {
    KvMap kv;
    kv["t"] = std::to_string(cfg.t);
    kv["blocks"] = std::to_string(cfg.blocks);
    kv["variant"] = variant_name(cfg.variant);
    kv["seed"] = std::to_string(cfg.seed);
    std::string lam;
    for (double l : cfg.stage_lambda()) {
        if (!lam.empty()) lam += ",";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", l);
        lam += buf;
    }
    kv["lambda"] = lam;
    kv["batch"] = std::to_string(cfg.batch);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", cfg.lr);
    kv["lr"] = buf;
    kv["lr_decay_epochs"] = std::to_string(cfg.lr_decay_epochs);
    std::snprintf(buf, sizeof(buf), "%g", cfg.lr_decay_factor);
    kv["lr_decay_factor"] = buf;
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["steps_per_epoch"] = std::to_string(cfg.steps_per_epoch);
    kv["patch"] = std::to_string(cfg.patch);
    kv["quantize_in_loop"] = cfg.quantize_in_loop ? "true" : "false";
    kv["detach_residual_chain"] = cfg.detach_residual_chain ? "true" : "false";
    kv["checkpoint_every"] = std::to_string(cfg.checkpoint_every);
    if (!cfg.checkpoint_prefix.empty()) kv["checkpoint_prefix"] = cfg.checkpoint_prefix;
    if (!cfg.image_dir.empty()) kv["image_dir"] = cfg.image_dir;
    if (!cfg.audio_dir.empty()) kv["audio_dir"] = cfg.audio_dir;
    kv["synth_images"] = std::to_string(cfg.synth_images);
    kv["synth_image_size"] = std::to_string(cfg.synth_image_size);
    kv["synth_audio_clips"] = std::to_string(cfg.synth_audio_clips);
    kv["synth_audio_len"] = std::to_string(cfg.synth_audio_len);
    return kv;
}

double lr_at_epoch(const TrainingConfig& cfg, int epoch) {
    return cfg.lr / std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_epochs);
}

double hiding_loss(const std::vector<Tensor>& containers, const std::vector<Tensor>& covers) {
    if (containers.size() != covers.size() || containers.empty())
        throw std::invalid_argument("hiding_loss: batch size mismatch");
    double s = 0.0;
    for (std::size_t n = 0; n < containers.size(); ++n) {
        if (!containers[n].same_shape(covers[n]))
            throw std::invalid_argument("hiding_loss: shape mismatch");
        s += sum_sq_diff(containers[n], covers[n]);
    }
    return s / static_cast<double>(containers.size());
}

double revealing_loss(const std::vector<Tensor>& estimates, const std::vector<Tensor>& targets) {
    return hiding_loss(estimates, targets);
}

double total_loss(const std::vector<double>& per_stage_H, const std::vector<double>& per_stage_R,
                  const std::vector<double>& lambda) {
    if (per_stage_H.size() != per_stage_R.size() || per_stage_H.size() != lambda.size())
        throw std::invalid_argument("total_loss: per-stage length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < per_stage_H.size(); ++i)
        s += per_stage_H[i] + lambda[i] * per_stage_R[i];
    return s;
}

Batch sample_batch(const std::vector<Tensor>& images, const std::vector<AudioStream>& audio,
                   const TrainingConfig& cfg, std::mt19937_64& rng) {
    if (images.empty() || audio.empty())
        throw std::runtime_error("sample_batch: empty corpus");
    const int p = cfg.patch;
    const std::size_t span = static_cast<std::size_t>(p) * p;
    const std::size_t need = span * cfg.t;
    for (const Tensor& img : images)
        if (img.h < p || img.w < p)
            throw std::runtime_error("sample_batch: image smaller than patch size");
    for (const AudioStream& a : audio)
        if (a.length() < need)
            throw std::runtime_error("sample_batch: audio clip shorter than t*patch^2 samples");

    Batch b;
    std::uniform_int_distribution<std::size_t> img_pick(0, images.size() - 1);
    std::uniform_int_distribution<std::size_t> clip_pick(0, audio.size() - 1);
    for (int n = 0; n < cfg.batch; ++n) {
        const Tensor& img = images[img_pick(rng)];
        std::uniform_int_distribution<int> ypick(0, img.h - p), xpick(0, img.w - p);
        int y0 = ypick(rng), x0 = xpick(rng);
        Tensor crop(3, p, p);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x)
                    crop.at(c, y, x) = img.at(c, y0 + y, x0 + x);
        b.secrets.push_back(std::move(crop));

        const AudioStream& clip = audio[clip_pick(rng)];
        std::uniform_int_distribution<std::size_t> spick(0, clip.length() - need);
        std::size_t start = spick(rng);
        std::vector<Tensor> frames;
        for (int i = 0; i < cfg.t; ++i) {
            Tensor g(1, p, p);
            std::copy(clip.samples.begin() + start + i * span,
                      clip.samples.begin() + start + (i + 1) * span, g.v.begin());
            frames.push_back(std::move(g));
        }
        b.carriers.push_back(std::move(frames));
    }
    return b;
}

ModelGrads make_grads(const StageModels& m) {
    ModelGrads g;
    for (const ConvNet& n : m.hiding) g.hiding.push_back(make_grad_like(n));
    for (const ConvNet& n : m.revealing) g.revealing.push_back(make_grad_like(n));
    return g;
}

void zero_grads(ModelGrads& g) {
    for (ConvNet& n : g.hiding) zero_params(n);
    for (ConvNet& n : g.revealing) zero_params(n);
}

namespace {

// straight-through 16-bit quantizer: quantize on the forward pass, identity
// on the backward pass
Tensor ste_quantize(const Tensor& t) {
    Tensor q = t;
    for (double& x : q.v) x = static_cast<double>(quantize_sample(x)) / 32768.0;
    return q;
}

struct SampleTrace {
    std::vector<Tensor> secrets_i;     // S_i per stage
    std::vector<Tensor> containers;    // unquantized T~_i
    std::vector<Tensor> residuals;     // R_i
    std::vector<ConvNetCache> hcache, rcache;
    Tensor final_c;                    // C_t
};

// Forward through the interleaved pipeline for one sample; caches are only
// populated when backward is needed.
void sample_forward(const StageModels& models, const Tensor& secret,
                    const std::vector<Tensor>& frames, const TrainingConfig& cfg,
                    bool keep_caches, SampleTrace& tr) {
    const int t = cfg.t;
    tr.secrets_i.resize(t);
    tr.containers.resize(t);
    tr.residuals.resize(t);
    if (keep_caches) {
        tr.hcache.resize(t);
        tr.rcache.resize(t);
    }
    Tensor c = zeros_like(secret);
    Tensor hfeat, rfeat;
    for (int i = 0; i < t; ++i) {
        tr.secrets_i[i] = secret - c;
        const Tensor* hf = (hiding_connected(cfg.variant) && i > 0) ? &hfeat : nullptr;
        HideOut hidden = hide_forward(models, i, tr.secrets_i[i], frames[i], hf,
                                      keep_caches ? &tr.hcache[i] : nullptr);
        hfeat = std::move(hidden.features);
        tr.containers[i] = std::move(hidden.container);
        Tensor reveal_in = cfg.quantize_in_loop ? ste_quantize(tr.containers[i]) : tr.containers[i];
        const Tensor* rf = (revealing_connected(cfg.variant) && i > 0) ? &rfeat : nullptr;
        RevealOut revealed = reveal_forward(models, i, reveal_in, rf,
                                            keep_caches ? &tr.rcache[i] : nullptr);
        rfeat = std::move(revealed.features);
        tr.residuals[i] = std::move(revealed.residual);
        c += tr.residuals[i];
    }
    tr.final_c = std::move(c);
}

// Backward pass for one sample; gradients of the batch-mean loss (hence the
// 1/N scale) accumulate into `grads`.
void sample_backward(const StageModels& models, const std::vector<Tensor>& frames,
                     const TrainingConfig& cfg, const SampleTrace& tr, double inv_n,
                     const std::vector<double>& lambda, ModelGrads& grads) {
    const int t = cfg.t;
    Tensor d_c = zeros_like(tr.final_c);  // dL/dC_i, zero at i = t
    Tensor d_hfeat_next, d_rfeat_next;
    bool have_dh = false, have_dr = false;
    for (int i = t - 1; i >= 0; --i) {
        int mi = models.hide_index(i);
        // dL/dR_i: through C_i plus the revealing loss term
        Tensor d_r = d_c;
        for (std::size_t k = 0; k < d_r.v.size(); ++k)
            d_r.v[k] += 2.0 * inv_n * lambda[i] * (tr.residuals[i].v[k] - tr.secrets_i[i].v[k]);
        Tensor d_reveal_in = conv_net_backward(models.reveal_net(i), tr.rcache[i], d_r,
                                               have_dr ? &d_rfeat_next : nullptr,
                                               grads.revealing[mi]);
        bool reveal_conn = revealing_connected(cfg.variant) && i > 0;
        Tensor d_container = take_channels(d_reveal_in, 0, 1);
        if (reveal_conn) {
            d_rfeat_next = take_channels(d_reveal_in, 1, kBodyChannels);
            have_dr = true;
        } else {
            have_dr = false;
        }
        // hiding loss term; the in-loop quantizer is a straight-through
        // identity in the backward pass
        for (std::size_t k = 0; k < d_container.v.size(); ++k)
            d_container.v[k] += 2.0 * inv_n * (tr.containers[i].v[k] - frames[i].v[k]);
        Tensor d_hide_in = conv_net_backward(models.hide_net(i), tr.hcache[i], d_container,
                                             have_dh ? &d_hfeat_next : nullptr,
                                             grads.hiding[mi]);
        bool hide_conn = hiding_connected(cfg.variant) && i > 0;
        Tensor d_s = take_channels(d_hide_in, 0, 3);
        if (hide_conn) {
            d_hfeat_next = take_channels(d_hide_in, 4, kBodyChannels);
            have_dh = true;
        } else {
            have_dh = false;
        }
        // revealing loss also depends on its target S_i
        for (std::size_t k = 0; k < d_s.v.size(); ++k)
            d_s.v[k] -= 2.0 * inv_n * lambda[i] * (tr.residuals[i].v[k] - tr.secrets_i[i].v[k]);
        // S_i = S_0 - C_{i-1}; C_i = C_{i-1} + R_i
        if (cfg.detach_residual_chain) {
            d_c.fill(0.0);
        } else {
            d_c -= d_s;
        }
    }
}

double psnr01(double mse) {
    return mse <= 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
}

// Single-shot baseline: one hiding pass over the stacked t-channel carrier,
// one revealing pass. Reported as a single stage.
struct SingleTrace {
    Tensor cover, container, residual;
    ConvNetCache hcache, rcache;
};

void single_forward(const StageModels& models, const Tensor& secret,
                    const std::vector<Tensor>& frames, const TrainingConfig& cfg,
                    bool keep_caches, SingleTrace& tr) {
    std::vector<const Tensor*> parts;
    for (const Tensor& f : frames) parts.push_back(&f);
    tr.cover = concat_channels(parts);
    HideOut hidden = hide_forward(models, 0, secret, tr.cover, nullptr,
                                  keep_caches ? &tr.hcache : nullptr);
    tr.container = std::move(hidden.container);
    Tensor reveal_in = cfg.quantize_in_loop ? ste_quantize(tr.container) : tr.container;
    RevealOut revealed = reveal_forward(models, 0, reveal_in, nullptr,
                                        keep_caches ? &tr.rcache : nullptr);
    tr.residual = std::move(revealed.residual);
}

void single_backward(const StageModels& models, const Tensor& secret, const TrainingConfig& cfg,
                     const SingleTrace& tr, double inv_n, double lambda, ModelGrads& grads) {
    Tensor d_r = zeros_like(tr.residual);
    for (std::size_t k = 0; k < d_r.v.size(); ++k)
        d_r.v[k] = 2.0 * inv_n * lambda * (tr.residual.v[k] - secret.v[k]);
    Tensor d_container =
        conv_net_backward(models.reveal_net(0), tr.rcache, d_r, nullptr, grads.revealing[0]);
    for (std::size_t k = 0; k < d_container.v.size(); ++k)
        d_container.v[k] += 2.0 * inv_n * (tr.container.v[k] - tr.cover.v[k]);
    conv_net_backward(models.hide_net(0), tr.hcache, d_container, nullptr, grads.hiding[0]);
}

}  // namespace

StepStats train_step(const StageModels& models, const Batch& batch, const TrainingConfig& cfg,
                     ModelGrads* grads) {
    const std::size_t n = batch.secrets.size();
    if (n == 0 || batch.carriers.size() != n)
        throw std::invalid_argument("train_step: malformed batch");
    const std::vector<double> lambda = cfg.stage_lambda();
    const double inv_n = 1.0 / static_cast<double>(n);

    if (cfg.variant == Variant::SingleShot) {
        StepStats stats;
        stats.loss_h.assign(1, 0.0);
        stats.loss_r.assign(1, 0.0);
        double cont_se = 0.0, img_se = 0.0;
        std::size_t cont_count = 0, img_count = 0;
        SingleTrace tr;
        for (std::size_t s = 0; s < n; ++s) {
            single_forward(models, batch.secrets[s], batch.carriers[s], cfg, grads != nullptr, tr);
            stats.loss_h[0] += inv_n * sum_sq_diff(tr.container, tr.cover);
            stats.loss_r[0] += inv_n * sum_sq_diff(tr.residual, batch.secrets[s]);
            cont_se += sum_sq_diff(tr.container, tr.cover);
            cont_count += tr.container.size();
            img_se += sum_sq_diff(clamp01(tr.residual), batch.secrets[s]);
            img_count += batch.secrets[s].size();
            if (grads)
                single_backward(models, batch.secrets[s], cfg, tr, inv_n, lambda[0], *grads);
        }
        stats.total = stats.loss_h[0] + lambda[0] * stats.loss_r[0];
        stats.container_mse = cont_se / static_cast<double>(cont_count);
        stats.revealed_psnr = psnr01(img_se / static_cast<double>(img_count));
        return stats;
    }

    const int t = cfg.t;
    StepStats stats;
    stats.loss_h.assign(t, 0.0);
    stats.loss_r.assign(t, 0.0);
    double cont_se = 0.0, img_se = 0.0;
    std::size_t cont_count = 0, img_count = 0;

    SampleTrace tr;
    for (std::size_t s = 0; s < n; ++s) {
        sample_forward(models, batch.secrets[s], batch.carriers[s], cfg, grads != nullptr, tr);
        for (int i = 0; i < t; ++i) {
            stats.loss_h[i] += inv_n * sum_sq_diff(tr.containers[i], batch.carriers[s][i]);
            stats.loss_r[i] += inv_n * sum_sq_diff(tr.residuals[i], tr.secrets_i[i]);
        }
        for (int i = 0; i < t; ++i) {
            cont_se += sum_sq_diff(tr.containers[i], batch.carriers[s][i]);
            cont_count += tr.containers[i].size();
        }
        img_se += sum_sq_diff(clamp01(tr.final_c), batch.secrets[s]);
        img_count += batch.secrets[s].size();
        if (grads)
            sample_backward(models, batch.carriers[s], cfg, tr, inv_n, lambda, *grads);
    }
    stats.total = total_loss(stats.loss_h, stats.loss_r, lambda);
    stats.container_mse = cont_se / static_cast<double>(cont_count);
    stats.revealed_psnr = psnr01(img_se / static_cast<double>(img_count));
    return stats;
}

void Adam::update(StageModels& models, const ModelGrads& grads, double lr) {
    // deterministic flat order: hiding nets then revealing nets
    std::vector<std::vector<double>*> params;
    std::vector<const std::vector<double>*> gs;
    for (std::size_t i = 0; i < models.hiding.size(); ++i) {
        for_each_param(models.hiding[i], [&](std::vector<double>& p) { params.push_back(&p); });
        for_each_param(grads.hiding[i], [&](const std::vector<double>& g) { gs.push_back(&g); });
    }
    for (std::size_t i = 0; i < models.revealing.size(); ++i) {
        for_each_param(models.revealing[i], [&](std::vector<double>& p) { params.push_back(&p); });
        for_each_param(grads.revealing[i], [&](const std::vector<double>& g) { gs.push_back(&g); });
    }
    std::size_t total = 0;
    for (auto* p : params) total += p->size();
    if (m.empty()) {
        m.assign(total, 0.0);
        v.assign(total, 0.0);
    }
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, step);
    const double bc2 = 1.0 - std::pow(beta2, step);
    std::size_t k = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::vector<double>& p = *params[i];
        const std::vector<double>& g = *gs[i];
        for (std::size_t j = 0; j < p.size(); ++j, ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[j];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[j] * g[j];
            p[j] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        }
    }
}

TrainResult train(const TrainingConfig& cfg, const std::vector<Tensor>& images,
                  const std::vector<AudioStream>& audio, std::ostream* log) {
    cfg.validate();
    ModelConfig mc{cfg.t, cfg.blocks, cfg.variant, cfg.seed};
    TrainResult result;
    result.models = init_models(mc);
    ModelGrads grads = make_grads(result.models);
    Adam adam;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    bool first = true;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        StepStats stats;
        for (int s = 0; s < cfg.steps_per_epoch; ++s) {
            Batch batch = sample_batch(images, audio, cfg, rng);
            zero_grads(grads);
            stats = train_step(result.models, batch, cfg, &grads);
            if (!std::isfinite(stats.total))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", aborting");
            if (first) {
                result.initial_total = stats.total;
                first = false;
            }
            adam.update(result.models, grads, lr);
        }
        result.epoch_log.push_back(stats);
        if (log) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%d\t%.6g\t%.8g", epoch, lr, stats.total);
            *log << buf;
            for (double h : stats.loss_h) *log << '\t' << h;
            for (double r : stats.loss_r) *log << '\t' << r;
            *log << '\t' << stats.container_mse << '\t' << stats.revealed_psnr << '\n';
        }
        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_prefix.empty() &&
            (epoch + 1) % cfg.checkpoint_every == 0) {
            save_checkpoint(result.models,
                            cfg.checkpoint_prefix + "_epoch" + std::to_string(epoch) + ".ckpt");
        }
    }
    result.final_total = result.epoch_log.empty() ? result.initial_total
                                                  : result.epoch_log.back().total;
    return result;
}

std::vector<Tensor> synth_images(int n, int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Tensor> out;
    for (int i = 0; i < n; ++i) {
        Tensor img(3, size, size);
        switch (i % 3) {
            case 0: {  // oriented colour gradient
                double gx = uni(rng) * 2.0 - 1.0, gy = uni(rng) * 2.0 - 1.0;
                double base[3] = {uni(rng), uni(rng), uni(rng)};
                for (int c = 0; c < 3; ++c)
                    for (int y = 0; y < size; ++y)
                        for (int x = 0; x < size; ++x) {
                            double v = base[c] + 0.5 * (gx * x + gy * y) / size;
                            img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
                        }
                break;
            }
            case 1: {  // two-colour checkerboard
                int cell = 2 + static_cast<int>(uni(rng) * 6);
                double a[3] = {uni(rng), uni(rng), uni(rng)};
                double b[3] = {uni(rng), uni(rng), uni(rng)};
                for (int c = 0; c < 3; ++c)
                    for (int y = 0; y < size; ++y)
                        for (int x = 0; x < size; ++x)
                            img.at(c, y, x) = ((x / cell + y / cell) % 2 == 0) ? a[c] : b[c];
                break;
            }
            default: {  // box-filtered noise
                Tensor noise(3, size, size);
                for (double& v : noise.v) v = uni(rng);
                for (int c = 0; c < 3; ++c)
                    for (int y = 0; y < size; ++y)
                        for (int x = 0; x < size; ++x) {
                            double s = 0.0;
                            int cnt = 0;
                            for (int dy = -2; dy <= 2; ++dy)
                                for (int dx = -2; dx <= 2; ++dx) {
                                    int yy = y + dy, xx = x + dx;
                                    if (yy < 0 || yy >= size || xx < 0 || xx >= size) continue;
                                    s += noise.at(c, yy, xx);
                                    ++cnt;
                                }
                            img.at(c, y, x) = s / cnt;
                        }
                break;
            }
        }
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<AudioStream> synth_audio(int n, std::size_t len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<AudioStream> out;
    for (int i = 0; i < n; ++i) {
        AudioStream a;
        a.sample_rate = 16000;
        a.samples.resize(len);
        int tones = 3 + static_cast<int>(uni(rng) * 3);
        std::vector<double> freq(tones), amp(tones), phase(tones);
        for (int k = 0; k < tones; ++k) {
            freq[k] = 0.001 + uni(rng) * 0.05;  // radians per sample / 2pi
            amp[k] = 0.1 + uni(rng) * 0.2;
            phase[k] = uni(rng) * 6.283185307179586;
        }
        std::normal_distribution<double> noise(0.0, 0.01);
        double peak = 0.0;
        for (std::size_t s = 0; s < len; ++s) {
            double v = noise(rng);
            for (int k = 0; k < tones; ++k)
                v += amp[k] * std::sin(6.283185307179586 * freq[k] * s + phase[k]);
            a.samples[s] = v;
            peak = std::max(peak, std::abs(v));
        }
        // keep headroom so trained perturbations stay inside [-1,1]
        double scale = 0.7 / std::max(peak, 1e-9);
        for (double& v : a.samples) v *= scale;
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Tensor> load_image_corpus(const TrainingConfig& cfg) {
    if (cfg.image_dir.empty())
        return synth_images(cfg.synth_images, cfg.synth_image_size, cfg.seed + 1);
    std::vector<std::string> paths;
    for (const auto& e : std::filesystem::directory_iterator(cfg.image_dir))
        if (e.path().extension() == ".ppm") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty())
        throw std::runtime_error("corpus: no .ppm files in " + cfg.image_dir);
    std::vector<Tensor> images;
    for (const std::string& p : paths) {
        Tensor img = load_ppm(p);
        if (img.h < cfg.patch || img.w < cfg.patch)
            throw std::runtime_error("corpus: " + p + " is smaller than the patch size");
        images.push_back(std::move(img));
    }
    return images;
}

std::vector<AudioStream> load_audio_corpus(const TrainingConfig& cfg) {
    if (cfg.audio_dir.empty())
        return synth_audio(cfg.synth_audio_clips, cfg.synth_audio_len, cfg.seed + 2);
    std::vector<std::string> paths;
    for (const auto& e : std::filesystem::directory_iterator(cfg.audio_dir))
        if (e.path().extension() == ".wav") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty())
        throw std::runtime_error("corpus: no .wav files in " + cfg.audio_dir);
    std::vector<AudioStream> audio;
    std::size_t need = static_cast<std::size_t>(cfg.t) * cfg.patch * cfg.patch;
    for (const std::string& p : paths) {
        AudioStream a = load_pcm(p);
        if (a.length() < need)
            throw std::runtime_error("corpus: " + p + " is shorter than t*patch^2 samples");
        audio.push_back(std::move(a));
    }
    return audio;
}

}  // namespace ditas
