#include <doctest.h>

#include <cmath>
#include <random>

#include "ditas/metrics.hpp"

using namespace ditas;

namespace {

Tensor random_image(int size, std::uint64_t seed) {
    Tensor t(3, size, size);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : t.v) v = uni(rng);
    return t;
}

// Brute-force per-window SSIM reference, written independently of the
// library path: explicit two-pass mean/variance per 8x8 uniform window.
double ssim_oracle(const Tensor& a, const Tensor& b) {
    const int k = 8;
    const double c1 = 0.0001, c2 = 0.0009;
    double total = 0.0;
    long count = 0;
    for (int c = 0; c < a.ch; ++c)
        for (int y0 = 0; y0 + k <= a.h; ++y0)
            for (int x0 = 0; x0 + k <= a.w; ++x0) {
                double mx = 0, my = 0;
                for (int y = y0; y < y0 + k; ++y)
                    for (int x = x0; x < x0 + k; ++x) {
                        mx += a.at(c, y, x);
                        my += b.at(c, y, x);
                    }
                mx /= k * k;
                my /= k * k;
                double vx = 0, vy = 0, cov = 0;
                for (int y = y0; y < y0 + k; ++y)
                    for (int x = x0; x < x0 + k; ++x) {
                        vx += (a.at(c, y, x) - mx) * (a.at(c, y, x) - mx);
                        vy += (b.at(c, y, x) - my) * (b.at(c, y, x) - my);
                        cov += (a.at(c, y, x) - mx) * (b.at(c, y, x) - my);
                    }
                vx /= k * k;
                vy /= k * k;
                cov /= k * k;
                total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                         ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
    return total / count;
}

double cs_oracle(const Tensor& a, const Tensor& b) {
    const int k = 8;
    const double c2 = 0.0009;
    double total = 0.0;
    long count = 0;
    for (int c = 0; c < a.ch; ++c)
        for (int y0 = 0; y0 + k <= a.h; ++y0)
            for (int x0 = 0; x0 + k <= a.w; ++x0) {
                double mx = 0, my = 0;
                for (int y = y0; y < y0 + k; ++y)
                    for (int x = x0; x < x0 + k; ++x) {
                        mx += a.at(c, y, x);
                        my += b.at(c, y, x);
                    }
                mx /= k * k;
                my /= k * k;
                double vx = 0, vy = 0, cov = 0;
                for (int y = y0; y < y0 + k; ++y)
                    for (int x = x0; x < x0 + k; ++x) {
                        vx += (a.at(c, y, x) - mx) * (a.at(c, y, x) - mx);
                        vy += (b.at(c, y, x) - my) * (b.at(c, y, x) - my);
                        cov += (a.at(c, y, x) - mx) * (b.at(c, y, x) - my);
                    }
                vx /= k * k;
                vy /= k * k;
                cov /= k * k;
                total += (2 * cov + c2) / (vx + vy + c2);
                ++count;
            }
    return total / count;
}

Tensor half(const Tensor& t) {
    Tensor out(t.ch, t.h / 2, t.w / 2);
    for (int c = 0; c < t.ch; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                out.at(c, y, x) = (t.at(c, 2 * y, 2 * x) + t.at(c, 2 * y, 2 * x + 1) +
                                   t.at(c, 2 * y + 1, 2 * x) + t.at(c, 2 * y + 1, 2 * x + 1)) / 4.0;
    return out;
}

double ms_ssim_oracle(Tensor a, Tensor b, int levels) {
    static const double w5[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    double wsum = 0.0;
    for (int j = 0; j < levels; ++j) wsum += w5[j];
    double result = 1.0;
    for (int j = 0; j < levels; ++j) {
        if (j == levels - 1) {
            result *= std::pow(std::max(ssim_oracle(a, b), 0.0), w5[j] / wsum);
        } else {
            result *= std::pow(std::max(cs_oracle(a, b), 0.0), w5[j] / wsum);
            a = half(a);
            b = half(b);
        }
    }
    return result;
}

}  // namespace

TEST_CASE("audio_mse basics") {
    AudioStream a, b;
    a.samples.assign(100, 0.25);
    b.samples.assign(100, 0.25);
    CHECK(audio_mse(a, b) == 0.0);
    for (double& v : b.samples) v += 0.1;
    CHECK(audio_mse(a, b) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(audio_mse(a, b) == audio_mse(b, a));
    b.samples.resize(99);
    CHECK_THROWS(audio_mse(a, b));
}

TEST_CASE("psnr closed-form cases") {
    Tensor a = random_image(16, 4);
    CHECK(std::isinf(psnr(a, a)));
    Tensor b = a;
    for (double& v : b.v) v += 0.1;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
    Tensor c = a;
    for (double& v : c.v) v += 0.5;
    CHECK(psnr(a, c) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-9));
    CHECK(psnr(a, b) == psnr(b, a));
}

TEST_CASE("psnr decreases with perturbation magnitude") {
    Tensor a = random_image(16, 5);
    double last = std::numeric_limits<double>::infinity();
    for (double eps : {0.01, 0.05, 0.1, 0.2, 0.4}) {
        Tensor b = a;
        for (double& v : b.v) v += eps;
        double p = psnr(a, b);
        CHECK(p < last);
        last = p;
    }
}

TEST_CASE("ssim self-similarity and negation") {
    Tensor a = random_image(32, 6);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ms_ssim(a, a, 3) == doctest::Approx(1.0).epsilon(1e-12));
    Tensor neg = a;
    for (double& v : neg.v) v = 1.0 - v;
    CHECK(ssim(a, neg) < 1.0);
}

TEST_CASE("ssim matches the brute-force oracle") {
    Tensor a = random_image(64, 7);
    Tensor b = a;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (double& v : b.v) v = std::clamp(v + noise(rng), 0.0, 1.0);
    CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-9));
}

TEST_CASE("ms_ssim matches the brute-force oracle") {
    Tensor a = random_image(64, 9);
    Tensor b = a;
    std::mt19937_64 rng(10);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (double& v : b.v) v = std::clamp(v + noise(rng), 0.0, 1.0);
    CHECK(ms_ssim(a, b, 3) == doctest::Approx(ms_ssim_oracle(a, b, 3)).epsilon(1e-9));
}

TEST_CASE("ms_ssim rejects undersized images") {
    Tensor a = random_image(32, 11);
    CHECK_THROWS(ms_ssim(a, a, 5));  // needs 8 * 2^4 = 128 pixels per side
    CHECK_NOTHROW(ms_ssim(a, a, 3));
}
