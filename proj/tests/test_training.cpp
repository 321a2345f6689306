#include <doctest.h>

#include <random>

#include "ditas/training.hpp"

using namespace ditas;

namespace {

std::vector<std::vector<double>*> all_params(StageModels& m) {
    std::vector<std::vector<double>*> out;
    for (ConvNet& n : m.hiding)
        for_each_param(n, [&](std::vector<double>& p) { out.push_back(&p); });
    for (ConvNet& n : m.revealing)
        for_each_param(n, [&](std::vector<double>& p) { out.push_back(&p); });
    return out;
}

std::vector<std::vector<double>*> all_grads(ModelGrads& g) {
    std::vector<std::vector<double>*> out;
    for (ConvNet& n : g.hiding)
        for_each_param(n, [&](std::vector<double>& p) { out.push_back(&p); });
    for (ConvNet& n : g.revealing)
        for_each_param(n, [&](std::vector<double>& p) { out.push_back(&p); });
    return out;
}

TrainingConfig tiny_config(Variant variant = Variant::M) {
    TrainingConfig cfg;
    cfg.t = 2;
    cfg.blocks = 1;
    cfg.variant = variant;
    cfg.patch = 8;
    cfg.batch = 2;
    cfg.seed = 7;
    cfg.epochs = 1;
    cfg.steps_per_epoch = 1;
    cfg.synth_images = 4;
    cfg.synth_image_size = 8;
    cfg.synth_audio_clips = 2;
    cfg.synth_audio_len = 2048;
    return cfg;
}

Batch make_batch(const TrainingConfig& cfg, std::uint64_t seed) {
    auto images = synth_images(cfg.synth_images, cfg.synth_image_size, seed);
    auto audio = synth_audio(cfg.synth_audio_clips, cfg.synth_audio_len, seed + 1);
    std::mt19937_64 rng(seed + 2);
    return sample_batch(images, audio, cfg, rng);
}

// nonzero heads so every loss term is active
StageModels perturbed_models(const TrainingConfig& cfg) {
    StageModels m = init_models(ModelConfig{cfg.t, cfg.blocks, cfg.variant, cfg.seed});
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    for (auto* p : all_params(m))
        for (double& x : *p)
            if (x == 0.0) x = uni(rng);
    return m;
}

}  // namespace

TEST_CASE("hiding_loss convention: sum per sample, mean over batch") {
    Tensor cover(1, 2, 2), cont(1, 2, 2);
    cover.fill(0.0);
    cont.fill(0.1);
    CHECK(hiding_loss({cont}, {cover}) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(hiding_loss({cover}, {cover}) == 0.0);
    // duplicating the batch leaves the mean unchanged
    CHECK(hiding_loss({cont, cont}, {cover, cover}) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("revealing_loss convention") {
    Tensor s(3, 2, 2);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : s.v) v = uni(rng);
    CHECK(revealing_loss({s}, {s}) == 0.0);
    Tensor zero(3, 2, 2);
    double sq = 0.0;
    for (double v : s.v) sq += v * v;
    CHECK(revealing_loss({zero}, {s}) == doctest::Approx(sq).epsilon(1e-12));

    Tensor one(1, 1, 1), half(1, 1, 1);
    half.fill(0.5);
    CHECK(revealing_loss({half}, {one}) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("total_loss hand cases") {
    CHECK(total_loss({0.1}, {0.5}, {0.8}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(total_loss({0.0, 0.0}, {0.0, 0.0}, {0.8, 0.8}) == 0.0);
    CHECK(total_loss({0.1, 0.2}, {0.3, 0.4}, {0.8, 0.8}) == doctest::Approx(0.86).epsilon(1e-12));
    CHECK_THROWS(total_loss({0.1}, {0.2, 0.3}, {0.8}));
}

TEST_CASE("total_loss is strictly increasing in lambda when L_R > 0") {
    std::vector<double> h{0.1, 0.2}, r{0.3, 0.4};
    double base = total_loss(h, r, {0.8, 0.8});
    CHECK(total_loss(h, r, {0.9, 0.8}) > base);
    CHECK(total_loss(h, r, {0.8, 0.9}) > base);
}

TEST_CASE("lambda defaults to 0.8 per stage") {
    TrainingConfig cfg;
    cfg.t = 5;
    auto lam = cfg.stage_lambda();
    REQUIRE(lam.size() == 5);
    for (double l : lam) CHECK(l == 0.8);
}

TEST_CASE("lr schedule: 1e-4 divided by 3 every 20 epochs") {
    TrainingConfig cfg;
    CHECK(cfg.lr == 1e-4);
    CHECK(lr_at_epoch(cfg, 0) == 1e-4);
    CHECK(lr_at_epoch(cfg, 19) == 1e-4);
    CHECK(lr_at_epoch(cfg, 20) == doctest::Approx(1e-4 / 3.0).epsilon(1e-12));
    CHECK(lr_at_epoch(cfg, 39) == doctest::Approx(1e-4 / 3.0).epsilon(1e-12));
    CHECK(lr_at_epoch(cfg, 40) == doctest::Approx(1e-4 / 9.0).epsilon(1e-12));
}

TEST_CASE("config kv round trip and echo") {
    TrainingConfig cfg = tiny_config();
    cfg.quantize_in_loop = true;
    cfg.lr = 5e-4;
    KvMap kv = config_to_kv(cfg);
    CHECK(kv["lambda"] == "0.8,0.8");
    CHECK(kv["lr"] == "0.0005");
    TrainingConfig back = config_from_kv(kv);
    CHECK(back.t == cfg.t);
    CHECK(back.lr == cfg.lr);
    CHECK(back.quantize_in_loop == true);
    CHECK(back.variant == cfg.variant);
}

TEST_CASE("sample_batch stays inside source bounds") {
    TrainingConfig cfg = tiny_config();
    cfg.patch = 8;
    auto images = synth_images(4, 13, 3);  // odd size, crops must fit
    auto audio = synth_audio(2, 2048, 4);
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 10000 / cfg.batch; ++rep) {
        Batch b = sample_batch(images, audio, cfg, rng);
        for (const Tensor& s : b.secrets) {
            CHECK(s.ch == 3);
            CHECK(s.h == 8);
            for (double v : s.v) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
        for (const auto& frames : b.carriers) {
            CHECK(frames.size() == 2);
            for (const Tensor& f : frames)
                for (double v : f.v) CHECK(std::abs(v) <= 1.0);
        }
    }
}

TEST_CASE("sample_batch with patch equal to image size takes the full image") {
    TrainingConfig cfg = tiny_config();
    cfg.batch = 1;
    auto images = synth_images(1, 8, 6);
    auto audio = synth_audio(1, 2048, 7);
    std::mt19937_64 rng(8);
    Batch b = sample_batch(images, audio, cfg, rng);
    CHECK(b.secrets[0].v == images[0].v);
}

TEST_CASE("sample_batch is deterministic given the rng state") {
    TrainingConfig cfg = tiny_config();
    auto images = synth_images(4, 8, 9);
    auto audio = synth_audio(2, 2048, 10);
    std::mt19937_64 r1(11), r2(11);
    Batch a = sample_batch(images, audio, cfg, r1);
    Batch b = sample_batch(images, audio, cfg, r2);
    for (std::size_t i = 0; i < a.secrets.size(); ++i)
        CHECK(a.secrets[i].v == b.secrets[i].v);
}

TEST_CASE("undersized corpora are rejected") {
    TrainingConfig cfg = tiny_config();
    auto small_images = synth_images(2, 4, 12);
    auto audio = synth_audio(1, 2048, 13);
    std::mt19937_64 rng(14);
    CHECK_THROWS(sample_batch(small_images, audio, cfg, rng));
    auto images = synth_images(2, 8, 15);
    auto short_audio = synth_audio(1, 64, 16);
    CHECK_THROWS(sample_batch(images, short_audio, cfg, rng));
}

TEST_CASE("total_loss gradients match central differences (t=2 interleaved)") {
    for (Variant variant : {Variant::M, Variant::MED}) {
        CAPTURE(variant_name(variant));
        TrainingConfig cfg = tiny_config(variant);
        StageModels m = perturbed_models(cfg);
        Batch batch = make_batch(cfg, 20);
        ModelGrads grads = make_grads(m);
        zero_grads(grads);
        train_step(m, batch, cfg, &grads);

        auto params = all_params(m);
        auto gs = all_grads(grads);
        REQUIRE(params.size() == gs.size());
        std::mt19937_64 rng(21);
        std::uniform_int_distribution<std::size_t> vec_pick(0, params.size() - 1);
        for (int rep = 0; rep < 30; ++rep) {
            std::size_t vi = vec_pick(rng);
            std::uniform_int_distribution<std::size_t> idx(0, params[vi]->size() - 1);
            std::size_t j = idx(rng);
            double& theta = (*params[vi])[j];
            double saved = theta;
            double analytic = (*gs[vi])[j];
            double best = 1.0;
            for (double h : {1e-6, 1e-7}) {
                theta = saved + h;
                double fp = train_step(m, batch, cfg, nullptr).total;
                theta = saved - h;
                double fm = train_step(m, batch, cfg, nullptr).total;
                theta = saved;
                double numeric = (fp - fm) / (2.0 * h);
                double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
                best = std::min(best, std::abs(numeric - analytic) / denom);
            }
            CHECK(best < 1e-4);
        }
    }
}

TEST_CASE("single-shot gradients match central differences") {
    TrainingConfig cfg = tiny_config(Variant::SingleShot);
    StageModels m = perturbed_models(cfg);
    Batch batch = make_batch(cfg, 22);
    ModelGrads grads = make_grads(m);
    zero_grads(grads);
    train_step(m, batch, cfg, &grads);
    auto params = all_params(m);
    auto gs = all_grads(grads);
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> vec_pick(0, params.size() - 1);
    for (int rep = 0; rep < 15; ++rep) {
        std::size_t vi = vec_pick(rng);
        std::uniform_int_distribution<std::size_t> idx(0, params[vi]->size() - 1);
        std::size_t j = idx(rng);
        double& theta = (*params[vi])[j];
        double saved = theta;
        double analytic = (*gs[vi])[j];
        // two step sizes: a ReLU kink inside the larger interval biases that
        // estimate, but the smaller one then recovers the true derivative
        double best = 1.0;
        for (double h : {1e-6, 1e-7}) {
            theta = saved + h;
            double fp = train_step(m, batch, cfg, nullptr).total;
            theta = saved - h;
            double fm = train_step(m, batch, cfg, nullptr).total;
            theta = saved;
            double numeric = (fp - fm) / (2.0 * h);
            double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            best = std::min(best, std::abs(numeric - analytic) / denom);
        }
        CHECK(best < 1e-4);
    }
}

TEST_CASE("one plain gradient step from init decreases the loss") {
    TrainingConfig cfg = tiny_config();
    StageModels m = init_models(ModelConfig{cfg.t, cfg.blocks, cfg.variant, cfg.seed});
    Batch batch = make_batch(cfg, 24);
    ModelGrads grads = make_grads(m);
    zero_grads(grads);
    double before = train_step(m, batch, cfg, &grads).total;
    auto params = all_params(m);
    auto gs = all_grads(grads);
    // small enough to stay in the descent regime for this loss surface
    const double lr = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t j = 0; j < params[i]->size(); ++j)
            (*params[i])[j] -= lr * (*gs[i])[j];
    double after = train_step(m, batch, cfg, nullptr).total;
    CHECK(after < before);
}

TEST_CASE("training is reproducible given the seed") {
    TrainingConfig cfg = tiny_config();
    cfg.epochs = 1;
    cfg.steps_per_epoch = 2;
    auto images = load_image_corpus(cfg);
    auto audio = load_audio_corpus(cfg);
    TrainResult a = train(cfg, images, audio);
    TrainResult b = train(cfg, images, audio);
    CHECK(a.initial_total == b.initial_total);
    CHECK(a.final_total == b.final_total);
}

TEST_CASE("quantize_in_loop and detach variants run") {
    TrainingConfig cfg = tiny_config();
    cfg.quantize_in_loop = true;
    StageModels m = perturbed_models(cfg);
    Batch batch = make_batch(cfg, 25);
    ModelGrads grads = make_grads(m);
    zero_grads(grads);
    StepStats s = train_step(m, batch, cfg, &grads);
    CHECK(std::isfinite(s.total));
    cfg.quantize_in_loop = false;
    cfg.detach_residual_chain = true;
    zero_grads(grads);
    s = train_step(m, batch, cfg, &grads);
    CHECK(std::isfinite(s.total));
}

TEST_CASE("losses are non-negative and zero only at exact match") {
    Tensor a(2, 2, 2), b(2, 2, 2);
    a.fill(0.3);
    b = a;
    CHECK(hiding_loss({a}, {b}) == 0.0);
    b.v[0] += 1e-9;
    CHECK(hiding_loss({a}, {b}) > 0.0);
}
