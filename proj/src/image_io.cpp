#include "ditas/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ditas {

namespace {

int read_token(std::istream& in) {
    // skips whitespace and '#' comments between header fields
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v;
    if (!(in >> v)) throw std::runtime_error("ppm: malformed header");
    return v;
}

}  // namespace

Tensor load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ppm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P6") throw std::runtime_error("ppm: " + path + " is not binary P6");
    int w = read_token(f);
    int h = read_token(f);
    int maxval = read_token(f);
    if (maxval != 255) throw std::runtime_error("ppm: only 8-bit images supported");
    f.get();  // single whitespace after header
    std::vector<char> raw(static_cast<std::size_t>(w) * h * 3);
    f.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!f) throw std::runtime_error("ppm: truncated pixel data in " + path);
    Tensor img(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) =
                    static_cast<unsigned char>(raw[(static_cast<std::size_t>(y) * w + x) * 3 + c]) / 255.0;
    return img;
}

void save_ppm(const Tensor& image, const std::string& path) {
    if (image.ch != 3) throw std::invalid_argument("ppm: image must have 3 channels");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ppm: cannot write " + path);
    f << "P6\n" << image.w << " " << image.h << "\n255\n";
    std::vector<char> raw(static_cast<std::size_t>(image.w) * image.h * 3);
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
                raw[(static_cast<std::size_t>(y) * image.w + x) * 3 + c] =
                    static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
            }
    f.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!f) throw std::runtime_error("ppm: write failed for " + path);
}

}  // namespace ditas
