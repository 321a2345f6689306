#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ditas/experiments.hpp"
#include "ditas/image_io.hpp"
#include "ditas/kv.hpp"
#include "ditas/metrics.hpp"
#include "ditas/pipeline.hpp"
#include "ditas/training.hpp"

using namespace ditas;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string secret, cover, bundle, checkpoint, out;
    std::string drop;
};

KvMap resolved_kv(const CommonOpts& opts) {
    KvMap kv;
    if (!opts.config_path.empty()) kv = load_kv(opts.config_path);
    for (const std::string& s : opts.sets) {
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return kv;
}

// Every run prints its fully resolved configuration before doing work, so a
// run can be reproduced from its own output.
TrainingConfig echo_config(const KvMap& kv) {
    TrainingConfig cfg = config_from_kv(kv);
    KvMap full = config_to_kv(cfg);
    for (const auto& [k, v] : kv)
        if (!full.count(k)) full[k] = v;  // passthrough keys like pcm_bits
    for (const auto& [k, v] : full) std::cout << "config " << k << "=" << v << "\n";
    return cfg;
}

std::vector<bool> drop_mask(const std::string& drop, int t) {
    std::vector<bool> mask(t, true);
    if (drop.empty()) return mask;
    for (std::size_t idx : parse_index_list(drop)) {
        if (idx >= static_cast<std::size_t>(t))
            throw std::runtime_error("--drop: stage index " + std::to_string(idx) +
                                     " out of range for t=" + std::to_string(t));
        mask[idx] = false;
    }
    return mask;
}

int cmd_train(const CommonOpts& opts) {
    TrainingConfig cfg = echo_config(resolved_kv(opts));
    std::vector<Tensor> images = load_image_corpus(cfg);
    std::vector<AudioStream> audio = load_audio_corpus(cfg);
    TrainResult result = train(cfg, images, audio, &std::cout);
    std::string out = !opts.checkpoint.empty() ? opts.checkpoint
                      : opts.out.empty()       ? "model.ckpt"
                                               : opts.out;
    save_checkpoint(result.models, out);
    std::cout << "ok verb=train checkpoint=" << out << " checkpoint_id=" << checkpoint_id(out)
              << " initial_total=" << result.initial_total
              << " final_total=" << result.final_total << "\n";
    return 0;
}

int cmd_embed(const CommonOpts& opts) {
    KvMap kv = resolved_kv(opts);
    echo_config(kv);
    StageModels models = load_checkpoint(opts.checkpoint);
    SecretImage secret{load_ppm(opts.secret)};
    AudioStream cover = load_pcm(opts.cover);
    Manifest manifest;
    manifest.w = secret.pixels.w;
    manifest.h = secret.pixels.h;
    manifest.t = models.config.t;
    manifest.variant = variant_name(models.config.variant);
    manifest.checkpoint_id = checkpoint_id(opts.checkpoint);
    manifest.pcm_bits = kv_get_or(kv, "pcm_bits", "16");
    StegoBundle bundle = embed(secret, cover, models, std::move(manifest));
    std::string out = !opts.bundle.empty() ? opts.bundle
                      : opts.out.empty()   ? "bundle"
                                           : opts.out;
    if (bundle.manifest.pcm_bits == "16")
        save_pcm(bundle.container, out + ".wav");
    else
        save_wav_float(bundle.container, out + ".wav");
    save_manifest(bundle.manifest, out + ".manifest");
    std::cout << "ok verb=embed bundle=" << out << ".wav manifest=" << out
              << ".manifest t=" << bundle.manifest.t << "\n";
    return 0;
}

StegoBundle load_bundle(const std::string& prefix) {
    StegoBundle bundle;
    bundle.manifest = load_manifest(prefix + ".manifest");
    bundle.container = load_wav(prefix + ".wav");
    return bundle;
}

void check_checkpoint_id(const Manifest& m, const std::string& ckpt_path) {
    std::string id = checkpoint_id(ckpt_path);
    if (!m.checkpoint_id.empty() && m.checkpoint_id != id)
        std::cerr << "warning: checkpoint_id mismatch (manifest " << m.checkpoint_id
                  << ", file " << id << "); output will be garbage\n";
}

int cmd_extract(const CommonOpts& opts) {
    echo_config(resolved_kv(opts));
    StegoBundle bundle = load_bundle(opts.bundle);
    check_checkpoint_id(bundle.manifest, opts.checkpoint);
    StageModels models = load_checkpoint(opts.checkpoint);
    std::vector<bool> mask = drop_mask(opts.drop, bundle.manifest.t);
    SecretImage revealed = extract(bundle, models, mask);
    std::string out = opts.out.empty() ? "revealed.ppm" : opts.out;
    save_ppm(revealed.pixels, out);
    std::cout << "ok verb=extract out=" << out << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    echo_config(resolved_kv(opts));
    StegoBundle bundle = load_bundle(opts.bundle);
    check_checkpoint_id(bundle.manifest, opts.checkpoint);
    StageModels models = load_checkpoint(opts.checkpoint);
    Tensor secret = load_ppm(opts.secret);

    std::vector<CarrierFrame> containers = select_frames_at(
        bundle.container, bundle.manifest.offsets, bundle.manifest.w, bundle.manifest.h);
    RevealState state = reveal_all(containers, models);
    Tensor revealed = final_image(state);

    QualityReport report;
    // cover transparency needs the original cover; optional for a
    // receiver-side report
    if (!opts.cover.empty())
        report.audio_mse = audio_mse(load_wav(opts.cover), bundle.container);
    report.psnr = psnr(secret, revealed);
    report.ssim = ssim(secret, revealed);
    int levels = 1;
    while (levels < 5 && (8 << levels) <= std::min(secret.h, secret.w)) ++levels;
    report.ms_ssim = ms_ssim(secret, revealed, levels);
    for (std::size_t i = 1; i < state.partials.size(); ++i)
        report.per_stage_psnr.push_back(psnr(secret, clamp01(state.partials[i])));

    std::cout << "audio_mse\tpsnr\tssim\tms_ssim\n";
    std::cout << report.audio_mse << '\t' << report.psnr << '\t' << report.ssim << '\t'
              << report.ms_ssim << "\n";
    if (!opts.out.empty()) {
        std::ofstream f(opts.out);
        f << "stage,psnr\n";
        for (std::size_t i = 0; i < report.per_stage_psnr.size(); ++i)
            f << (i + 1) << ',' << report.per_stage_psnr[i] << '\n';
    }
    std::cout << "ok verb=eval psnr=" << report.psnr << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    KvMap kv = resolved_kv(opts);
    TrainingConfig cfg = echo_config(kv);
    std::vector<int> t_values;
    for (std::size_t t : parse_index_list(kv_get_or(kv, "sweep_t", "1,2,3")))
        t_values.push_back(static_cast<int>(t));
    SweepResult result = sweep_stages(t_values, cfg);
    std::string out = opts.out.empty() ? "sweep.csv" : opts.out;
    write_sweep_csv(result, out);
    std::cout << "ok verb=sweep out=" << out << " saturation_t=" << result.saturation_t << "\n";
    return 0;
}

int cmd_ablate(const CommonOpts& opts) {
    KvMap kv = resolved_kv(opts);
    TrainingConfig cfg = echo_config(kv);
    std::string list = kv_get_or(kv, "variants", "M,M-E,M-D,M-ED,S");
    SweepResult result;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        std::size_t comma = list.find(',', pos);
        std::string name = list.substr(pos, comma - pos);
        if (!name.empty()) {
            if (name == "single-shot") {
                result.records.push_back(baseline_single_shot(cfg));
            } else {
                SweepResult one = ablate_variants({variant_from_name(name)}, cfg);
                result.records.push_back(std::move(one.records[0]));
            }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    std::string out = opts.out.empty() ? "ablate.csv" : opts.out;
    write_sweep_csv(result, out);
    std::cout << "ok verb=ablate out=" << out << "\n";
    return 0;
}

int cmd_dump(const CommonOpts& opts) {
    TrainingConfig cfg = echo_config(resolved_kv(opts));
    StageModels models = load_checkpoint(opts.checkpoint);
    // geometry comes from the model and the supplied secret, not the
    // training defaults
    cfg.t = models.config.t;
    cfg.blocks = models.config.blocks;
    cfg.variant = models.config.variant;
    Tensor secret = opts.secret.empty()
                        ? take_channels(load_image_corpus(cfg)[0], 0, 3)
                        : load_ppm(opts.secret);
    cfg.patch = secret.w;
    std::vector<AudioStream> audio = load_audio_corpus(cfg);
    std::string out = opts.out.empty() ? "intermediates" : opts.out;
    dump_intermediates(models, cfg, secret, audio, out);
    std::cout << "ok verb=dump out=" << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-stage residual image-into-audio steganography toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "flat key=value config file");
        sub->add_option("--set", opts.sets, "config override, repeatable: --set key=value");
        sub->add_option("--secret", opts.secret, "secret image (.ppm)");
        sub->add_option("--cover", opts.cover, "cover audio (.wav, 16-bit PCM)");
        sub->add_option("--bundle", opts.bundle, "bundle prefix (<p>.wav + <p>.manifest)");
        sub->add_option("--checkpoint", opts.checkpoint, "model checkpoint path");
        sub->add_option("--out", opts.out, "output path");
        sub->add_option("--drop", opts.drop, "comma-separated stage indices to drop");
        return sub;
    };

    auto* train_cmd = add_common(app.add_subcommand("train", "train stage models"));
    auto* embed_cmd = add_common(app.add_subcommand("embed", "hide a secret image in cover audio"));
    auto* extract_cmd = add_common(app.add_subcommand("extract", "reveal the secret from a bundle"));
    auto* eval_cmd = add_common(app.add_subcommand("eval", "quality report for a bundle"));
    auto* sweep_cmd = add_common(app.add_subcommand("sweep", "stage-count sweep"));
    auto* ablate_cmd = add_common(app.add_subcommand("ablate", "wiring-variant ablation"));
    auto* dump_cmd = add_common(app.add_subcommand("dump", "per-stage intermediate images"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(opts);
        if (embed_cmd->parsed()) return cmd_embed(opts);
        if (extract_cmd->parsed()) return cmd_extract(opts);
        if (eval_cmd->parsed()) return cmd_eval(opts);
        if (sweep_cmd->parsed()) return cmd_sweep(opts);
        if (ablate_cmd->parsed()) return cmd_ablate(opts);
        if (dump_cmd->parsed()) return cmd_dump(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
