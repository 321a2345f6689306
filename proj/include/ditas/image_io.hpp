#pragma once

#include <string>

#include "ditas/tensor.hpp"

namespace ditas {

// Binary PPM (P6, 8-bit). Pixels map to [0,1] via v/255.
Tensor load_ppm(const std::string& path);
void save_ppm(const Tensor& image, const std::string& path);

}  // namespace ditas
