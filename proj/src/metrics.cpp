#include "ditas/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ditas {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

struct Window {
    int size = 8;
    std::vector<double> weight;  // size*size, sums to 1
};

Window make_window(SsimWindow kind) {
    Window w;
    if (kind == SsimWindow::Uniform8) {
        w.size = 8;
        w.weight.assign(64, 1.0 / 64.0);
    } else {
        w.size = 11;
        w.weight.resize(121);
        const double sigma = 1.5;
        double sum = 0.0;
        for (int y = 0; y < 11; ++y)
            for (int x = 0; x < 11; ++x) {
                double dy = y - 5, dx = x - 5;
                double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                w.weight[y * 11 + x] = g;
                sum += g;
            }
        for (double& g : w.weight) g /= sum;
    }
    return w;
}

struct SsimSums {
    double ssim = 0.0;
    double cs = 0.0;
    long count = 0;
};

void ssim_accumulate(const Tensor& a, const Tensor& b, const Window& win, SsimSums& out) {
    const int k = win.size;
    for (int c = 0; c < a.ch; ++c) {
        for (int y0 = 0; y0 + k <= a.h; ++y0) {
            for (int x0 = 0; x0 + k <= a.w; ++x0) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int y = 0; y < k; ++y)
                    for (int x = 0; x < k; ++x) {
                        double wgt = win.weight[y * k + x];
                        double va = a.at(c, y0 + y, x0 + x);
                        double vb = b.at(c, y0 + y, x0 + x);
                        mx += wgt * va;
                        my += wgt * vb;
                        sxx += wgt * va * va;
                        syy += wgt * vb * vb;
                        sxy += wgt * va * vb;
                    }
                double vx = sxx - mx * mx;
                double vy = syy - my * my;
                double cov = sxy - mx * my;
                double l = (2.0 * mx * my + kC1) / (mx * mx + my * my + kC1);
                double cs = (2.0 * cov + kC2) / (vx + vy + kC2);
                out.ssim += l * cs;
                out.cs += cs;
                ++out.count;
            }
        }
    }
}

Tensor downsample2(const Tensor& t) {
    Tensor out(t.ch, t.h / 2, t.w / 2);
    for (int c = 0; c < t.ch; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                out.at(c, y, x) = 0.25 * (t.at(c, 2 * y, 2 * x) + t.at(c, 2 * y, 2 * x + 1) +
                                          t.at(c, 2 * y + 1, 2 * x) + t.at(c, 2 * y + 1, 2 * x + 1));
    return out;
}

}  // namespace

double audio_mse(const AudioStream& cover, const AudioStream& container) {
    if (cover.length() != container.length())
        throw std::invalid_argument("audio_mse: length mismatch");
    if (cover.length() == 0) throw std::invalid_argument("audio_mse: empty streams");
    double s = 0.0;
    for (std::size_t i = 0; i < cover.length(); ++i) {
        double d = cover.samples[i] - container.samples[i];
        s += d * d;
    }
    return s / static_cast<double>(cover.length());
}

double image_mse(const Tensor& reference, const Tensor& test) {
    if (!reference.same_shape(test)) throw std::invalid_argument("image_mse: shape mismatch");
    return sum_sq_diff(reference, test) / static_cast<double>(reference.size());
}

double psnr(const Tensor& reference, const Tensor& test) {
    double mse = image_mse(reference, test);
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& reference, const Tensor& test, SsimWindow window) {
    if (!reference.same_shape(test)) throw std::invalid_argument("ssim: shape mismatch");
    Window win = make_window(window);
    if (reference.h < win.size || reference.w < win.size)
        throw std::invalid_argument("ssim: image smaller than the window");
    SsimSums sums;
    ssim_accumulate(reference, test, win, sums);
    return sums.ssim / static_cast<double>(sums.count);
}

double ms_ssim(const Tensor& reference, const Tensor& test, int levels, SsimWindow window) {
    if (!reference.same_shape(test)) throw std::invalid_argument("ms_ssim: shape mismatch");
    if (levels < 1 || levels > 5) throw std::invalid_argument("ms_ssim: levels must be in [1,5]");
    static const double kWeights5[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    // renormalize when fewer levels are requested
    double wsum = 0.0;
    for (int j = 0; j < levels; ++j) wsum += kWeights5[j];
    Window win = make_window(window);
    int min_dim = std::min(reference.h, reference.w);
    if (min_dim < win.size << (levels - 1))
        throw std::invalid_argument("ms_ssim: image too small for requested levels");

    Tensor a = reference, b = test;
    double result = 1.0;
    for (int j = 0; j < levels; ++j) {
        SsimSums sums;
        ssim_accumulate(a, b, win, sums);
        double w = kWeights5[j] / wsum;
        if (j == levels - 1) {
            double s = sums.ssim / sums.count;
            result *= std::pow(std::max(s, 0.0), w);
        } else {
            double cs = sums.cs / sums.count;
            result *= std::pow(std::max(cs, 0.0), w);
            a = downsample2(a);
            b = downsample2(b);
        }
    }
    return result;
}

}  // namespace ditas
