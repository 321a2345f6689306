#pragma once

#include <vector>

#include "ditas/audio.hpp"
#include "ditas/tensor.hpp"

namespace ditas {

struct QualityReport {
    double audio_mse = 0.0;
    double psnr = 0.0;  // dB; infinity when the image MSE is 0
    double ssim = 0.0;
    double ms_ssim = 0.0;
    std::vector<double> per_stage_psnr;  // PSNR of clamp(C_i), i = 1..t
};

double audio_mse(const AudioStream& cover, const AudioStream& container);

double image_mse(const Tensor& reference, const Tensor& test);

// 10*log10(1/MSE) with MAX = 1 on [0,1] images.
double psnr(const Tensor& reference, const Tensor& test);

enum class SsimWindow { Uniform8, Gauss11 };

// Mean SSIM over all sliding windows and channels, stabilizers
// C1 = 0.01^2, C2 = 0.03^2 on the [0,1] range.
double ssim(const Tensor& reference, const Tensor& test,
            SsimWindow window = SsimWindow::Uniform8);

// Multi-scale SSIM: dyadic 2x2-average downsampling, standard level weights
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333).
double ms_ssim(const Tensor& reference, const Tensor& test, int levels = 5,
               SsimWindow window = SsimWindow::Uniform8);

}  // namespace ditas
