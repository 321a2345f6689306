#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ditas {

// Dense CHW tensor of doubles. All network math runs at 64-bit precision.
struct Tensor {
    int ch = 0;
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int channels, int height, int width)
        : ch(channels), h(height), w(width),
          v(static_cast<std::size_t>(channels) * height * width, 0.0) {}

    std::size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
    int plane() const { return h * w; }

    double& at(int c, int y, int x) {
        return v[(static_cast<std::size_t>(c) * h + y) * w + x];
    }
    double at(int c, int y, int x) const {
        return v[(static_cast<std::size_t>(c) * h + y) * w + x];
    }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    bool same_shape(const Tensor& o) const {
        return ch == o.ch && h == o.h && w == o.w;
    }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    Tensor& operator+=(const Tensor& o) {
        assert(same_shape(o));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        assert(same_shape(o));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (double& x : v) x *= s;
        return *this;
    }
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.ch, t.h, t.w); }

inline Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
inline Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }

inline void require_shape(const Tensor& t, int c, int y, int x, const char* what) {
    if (t.ch != c || t.h != y || t.w != x)
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

// Stacks tensors along the channel axis; all inputs share h and w.
inline Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    int c = 0;
    for (const Tensor* p : parts) {
        if (p->h != parts[0]->h || p->w != parts[0]->w)
            throw std::invalid_argument("concat_channels: spatial mismatch");
        c += p->ch;
    }
    Tensor out(c, parts[0]->h, parts[0]->w);
    double* dst = out.data();
    for (const Tensor* p : parts) {
        std::copy(p->v.begin(), p->v.end(), dst);
        dst += p->size();
    }
    return out;
}

// First `c` channels of t as a copy.
inline Tensor take_channels(const Tensor& t, int first, int count) {
    Tensor out(count, t.h, t.w);
    std::copy(t.v.begin() + static_cast<std::size_t>(first) * t.plane(),
              t.v.begin() + static_cast<std::size_t>(first + count) * t.plane(),
              out.v.begin());
    return out;
}

inline double sum_abs(const Tensor& t) {
    double s = 0.0;
    for (double x : t.v) s += std::abs(x);
    return s;
}

inline double sum_sq_diff(const Tensor& a, const Tensor& b) {
    assert(a.same_shape(b));
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        double d = a.v[i] - b.v[i];
        s += d * d;
    }
    return s;
}

inline Tensor clamp01(Tensor t) {
    for (double& x : t.v) x = std::clamp(x, 0.0, 1.0);
    return t;
}

}  // namespace ditas
