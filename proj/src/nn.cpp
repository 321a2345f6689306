#include "ditas/nn.hpp"

#include <Eigen/Dense>
#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace ditas {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using MapRowC = Eigen::Map<const RowMat>;

// col(k, y*w+x) = x(ci, y+ky-1, x+kx-1) with k = (ci*3+ky)*3+kx, zero pad.
void im2col(const Tensor& x, RowMat& col) {
    const int h = x.h, w = x.w;
    col.resize(static_cast<Eigen::Index>(x.ch) * 9, static_cast<Eigen::Index>(h) * w);
    for (int ci = 0; ci < x.ch; ++ci) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* row = col.data() + static_cast<std::size_t>((ci * 3 + ky) * 3 + kx) * h * w;
                for (int y = 0; y < h; ++y) {
                    int sy = y + ky - 1;
                    double* dst = row + static_cast<std::size_t>(y) * w;
                    if (sy < 0 || sy >= h) {
                        std::memset(dst, 0, sizeof(double) * w);
                        continue;
                    }
                    const double* src = x.data() + (static_cast<std::size_t>(ci) * h + sy) * w;
                    int x0 = std::max(0, 1 - kx);
                    int x1 = std::min(w, w + 1 - kx);
                    if (x0 > 0) dst[0] = 0.0;
                    for (int xi = x0; xi < x1; ++xi) dst[xi] = src[xi + kx - 1];
                    if (x1 < w) dst[w - 1] = 0.0;
                }
            }
        }
    }
}

void col2im_add(const RowMat& col, Tensor& dx) {
    const int h = dx.h, w = dx.w;
    for (int ci = 0; ci < dx.ch; ++ci) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const double* row =
                    col.data() + static_cast<std::size_t>((ci * 3 + ky) * 3 + kx) * h * w;
                for (int y = 0; y < h; ++y) {
                    int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    double* dst = dx.data() + (static_cast<std::size_t>(ci) * h + sy) * w;
                    const double* src = row + static_cast<std::size_t>(y) * w;
                    int x0 = std::max(0, 1 - kx);
                    int x1 = std::min(w, w + 1 - kx);
                    for (int xi = x0; xi < x1; ++xi) dst[xi + kx - 1] += src[xi];
                }
            }
        }
    }
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.v) v = v > 0.0 ? v : 0.0;
    return y;
}

// dy masked by the sign of the cached pre-activation.
Tensor relu_backward(const Tensor& pre, const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
        if (pre.v[i] <= 0.0) dx.v[i] = 0.0;
    return dx;
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::M: return "M";
        case Variant::ME: return "M-E";
        case Variant::MD: return "M-D";
        case Variant::MED: return "M-ED";
        case Variant::S: return "S";
        case Variant::SingleShot: return "single-shot";
    }
    throw std::logic_error("bad variant");
}

Variant variant_from_name(const std::string& s) {
    if (s == "M") return Variant::M;
    if (s == "M-E") return Variant::ME;
    if (s == "M-D") return Variant::MD;
    if (s == "M-ED") return Variant::MED;
    if (s == "S") return Variant::S;
    if (s == "single-shot") return Variant::SingleShot;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

bool hiding_connected(Variant v) { return v == Variant::ME || v == Variant::MED; }
bool revealing_connected(Variant v) { return v == Variant::MD || v == Variant::MED; }

Tensor Conv2d::forward(const Tensor& x) const {
    if (x.ch != in_ch) throw std::invalid_argument("conv: input channel mismatch");
    static thread_local RowMat col;
    im2col(x, col);
    Tensor y(out_ch, x.h, x.w);
    MapRow ym(y.data(), out_ch, x.plane());
    MapRowC wm(weight.data(), out_ch, static_cast<Eigen::Index>(in_ch) * 9);
    ym.noalias() = wm * col;
    for (int o = 0; o < out_ch; ++o) ym.row(o).array() += bias[o];
    return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy, Conv2d& grad) const {
    static thread_local RowMat col, dcol;
    im2col(x, col);
    MapRowC dym(dy.data(), out_ch, dy.plane());
    MapRow gwm(grad.weight.data(), out_ch, static_cast<Eigen::Index>(in_ch) * 9);
    gwm.noalias() += dym * col.transpose();
    for (int o = 0; o < out_ch; ++o) grad.bias[o] += dym.row(o).sum();
    MapRowC wm(weight.data(), out_ch, static_cast<Eigen::Index>(in_ch) * 9);
    dcol.resize(static_cast<Eigen::Index>(in_ch) * 9, dy.plane());
    dcol.noalias() = wm.transpose() * dym;
    Tensor dx(in_ch, x.h, x.w);
    col2im_add(dcol, dx);
    return dx;
}

ConvNet::ConvNet(int c_in, int c_out, int blocks)
    : stem(c_in, kBodyChannels), body(blocks), head(kBodyChannels, c_out) {}

ConvNetOut conv_net_forward(const ConvNet& net, const Tensor& in, ConvNetCache* cache) {
    Tensor stem_pre = net.stem.forward(in);
    Tensor cur = relu(stem_pre);
    if (cache) {
        cache->in = in;
        cache->stem_pre = stem_pre;
        cache->blocks.resize(net.body.size());
    }
    for (std::size_t b = 0; b < net.body.size(); ++b) {
        Tensor a_pre = net.body[b].a.forward(cur);
        Tensor mid = relu(a_pre);
        Tensor out = net.body[b].b.forward(mid);
        out += cur;
        if (cache) {
            cache->blocks[b].in = std::move(cur);
            cache->blocks[b].a_pre = std::move(a_pre);
        }
        cur = std::move(out);
    }
    ConvNetOut result;
    result.head = net.head.forward(cur);
    if (cache) cache->body_out = cur;
    result.features = std::move(cur);
    return result;
}

Tensor conv_net_backward(const ConvNet& net, const ConvNetCache& cache,
                         const Tensor& d_head, const Tensor* d_feat, ConvNet& grad) {
    Tensor d_body = net.head.backward(cache.body_out, d_head, grad.head);
    if (d_feat) d_body += *d_feat;
    for (std::size_t i = net.body.size(); i-- > 0;) {
        const ResBlock& blk = net.body[i];
        const ResBlockCache& bc = cache.blocks[i];
        Tensor mid = relu(bc.a_pre);
        Tensor d_mid = blk.b.backward(mid, d_body, grad.body[i].b);
        Tensor d_a_pre = relu_backward(bc.a_pre, d_mid);
        Tensor d_in = blk.a.backward(bc.in, d_a_pre, grad.body[i].a);
        d_body += d_in;  // skip path carries d_body through unchanged
    }
    Tensor d_stem_pre = relu_backward(cache.stem_pre, d_body);
    return net.stem.backward(cache.in, d_stem_pre, grad.stem);
}

ConvNet make_grad_like(const ConvNet& net) {
    ConvNet g;
    g.stem = Conv2d(net.stem.in_ch, net.stem.out_ch);
    g.body.assign(net.body.size(), ResBlock{});
    g.head = Conv2d(net.head.in_ch, net.head.out_ch);
    return g;
}

void zero_params(ConvNet& net) {
    for_each_param(net, [](std::vector<double>& p) { std::fill(p.begin(), p.end(), 0.0); });
}

std::size_t param_count(const ConvNet& net) {
    std::size_t n = 0;
    for_each_param(net, [&](const std::vector<double>& p) { n += p.size(); });
    return n;
}

void for_each_param(ConvNet& net, const std::function<void(std::vector<double>&)>& fn) {
    fn(net.stem.weight);
    fn(net.stem.bias);
    for (ResBlock& b : net.body) {
        fn(b.a.weight);
        fn(b.a.bias);
        fn(b.b.weight);
        fn(b.b.bias);
    }
    fn(net.head.weight);
    fn(net.head.bias);
}

void for_each_param(const ConvNet& net, const std::function<void(const std::vector<double>&)>& fn) {
    for_each_param(const_cast<ConvNet&>(net),
                   [&](std::vector<double>& p) { fn(p); });
}

namespace {

void init_conv(Conv2d& c, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / (c.in_ch * 9));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : c.weight) w = dist(rng);
    // biases stay zero
}

ConvNet init_net(int c_in, int c_out, int blocks, std::mt19937_64& rng) {
    ConvNet net(c_in, c_out, blocks);
    init_conv(net.stem, rng);
    for (ResBlock& b : net.body) {
        init_conv(b.a, rng);
        init_conv(b.b, rng);
    }
    // head left at zero: fresh models are exact pass-throughs
    return net;
}

}  // namespace

StageModels init_models(const ModelConfig& cfg) {
    if (cfg.t < 1) throw std::invalid_argument("init_models: t must be >= 1");
    if (cfg.blocks < 1) throw std::invalid_argument("init_models: blocks must be >= 1");
    std::mt19937_64 rng(cfg.seed);
    StageModels m;
    m.config = cfg;
    if (cfg.variant == Variant::SingleShot) {
        // One net pair over all t frames at once, with the same total
        // residual-block budget as a t-stage model.
        m.hiding.push_back(init_net(3 + cfg.t, cfg.t, cfg.t * cfg.blocks, rng));
        m.revealing.push_back(init_net(cfg.t, 3, cfg.t * cfg.blocks, rng));
        return m;
    }
    int n = cfg.variant == Variant::S ? 1 : cfg.t;
    for (int i = 0; i < n; ++i) {
        int c_in = 4;
        if (hiding_connected(cfg.variant) && i > 0) c_in += kBodyChannels;
        m.hiding.push_back(init_net(c_in, 1, cfg.blocks, rng));
    }
    for (int i = 0; i < n; ++i) {
        int c_in = 1;
        if (revealing_connected(cfg.variant) && i > 0) c_in += kBodyChannels;
        m.revealing.push_back(init_net(c_in, 3, cfg.blocks, rng));
    }
    return m;
}

std::size_t total_param_count(const StageModels& m) {
    std::size_t n = 0;
    for (const ConvNet& net : m.hiding) n += param_count(net);
    for (const ConvNet& net : m.revealing) n += param_count(net);
    return n;
}

HideOut hide_forward(const StageModels& m, int stage, const Tensor& secret_residual,
                     const Tensor& carrier_grid, const Tensor* incoming_features,
                     ConvNetCache* cache) {
    const ConvNet& net = m.hide_net(stage);
    bool wants_features = hiding_connected(m.config.variant) && stage > 0;
    if (incoming_features && !wants_features)
        throw std::invalid_argument("hide_forward: features supplied for non-connected variant");
    if (!incoming_features && wants_features)
        throw std::invalid_argument("hide_forward: connected variant needs incoming features");
    std::vector<const Tensor*> parts{&secret_residual, &carrier_grid};
    if (incoming_features) parts.push_back(incoming_features);
    Tensor in = concat_channels(parts);
    if (in.ch != net.stem.in_ch)
        throw std::invalid_argument("hide_forward: input channel mismatch");
    ConvNetOut out = conv_net_forward(net, in, cache);
    HideOut result;
    result.container = carrier_grid + out.head;
    result.features = std::move(out.features);
    return result;
}

RevealOut reveal_forward(const StageModels& m, int stage, const Tensor& container_grid,
                         const Tensor* incoming_features, ConvNetCache* cache) {
    const ConvNet& net = m.reveal_net(stage);
    bool wants_features = revealing_connected(m.config.variant) && stage > 0;
    if (incoming_features && !wants_features)
        throw std::invalid_argument("reveal_forward: features supplied for non-connected variant");
    if (!incoming_features && wants_features)
        throw std::invalid_argument("reveal_forward: connected variant needs incoming features");
    Tensor in = container_grid;
    if (incoming_features)
        in = concat_channels({&container_grid, incoming_features});
    if (in.ch != net.stem.in_ch)
        throw std::invalid_argument("reveal_forward: input channel mismatch");
    ConvNetOut out = conv_net_forward(net, in, cache);
    return RevealOut{std::move(out.head), std::move(out.features)};
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {

constexpr char kMagic[8] = {'D', 'I', 'T', 'A', 'S', 'C', 'P', '1'};

template <typename T>
void put(std::ostream& os, T x) {
    os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T x{};
    is.read(reinterpret_cast<char*>(&x), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return x;
}

void put_vec(std::ostream& os, const std::vector<double>& v) {
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_vec(std::istream& is, std::vector<double>& v) {
    auto n = get<std::uint64_t>(is);
    if (n != v.size()) throw std::runtime_error("checkpoint: tensor size mismatch");
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
}

void put_net(std::ostream& os, const ConvNet& net) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.stem.in_ch));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.head.out_ch));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.body.size()));
    for_each_param(net, [&](const std::vector<double>& p) { put_vec(os, p); });
}

ConvNet get_net(std::istream& is) {
    auto c_in = get<std::uint32_t>(is);
    auto c_out = get<std::uint32_t>(is);
    auto blocks = get<std::uint32_t>(is);
    ConvNet net(static_cast<int>(c_in), static_cast<int>(c_out), static_cast<int>(blocks));
    for_each_param(net, [&](std::vector<double>& p) { get_vec(is, p); });
    return net;
}

}  // namespace

void save_checkpoint(const StageModels& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    f.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(f, 1);  // version
    put<std::uint8_t>(f, static_cast<std::uint8_t>(m.config.variant));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(m.config.t));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(m.config.blocks));
    put<std::uint64_t>(f, m.config.seed);
    put<std::uint32_t>(f, static_cast<std::uint32_t>(m.hiding.size()));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(m.revealing.size()));
    for (const ConvNet& n : m.hiding) put_net(f, n);
    for (const ConvNet& n : m.revealing) put_net(f, n);
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

StageModels load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    auto version = get<std::uint32_t>(f);
    if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
    StageModels m;
    m.config.variant = static_cast<Variant>(get<std::uint8_t>(f));
    m.config.t = static_cast<int>(get<std::uint32_t>(f));
    m.config.blocks = static_cast<int>(get<std::uint32_t>(f));
    m.config.seed = get<std::uint64_t>(f);
    auto nh = get<std::uint32_t>(f);
    auto nr = get<std::uint32_t>(f);
    for (std::uint32_t i = 0; i < nh; ++i) m.hiding.push_back(get_net(f));
    for (std::uint32_t i = 0; i < nr; ++i) m.revealing.push_back(get_net(f));
    return m;
}

std::string checkpoint_id(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("checkpoint: hash failure");
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (unsigned int i = 0; i < len; ++i) {
        id += hex[md[i] >> 4];
        id += hex[md[i] & 0xf];
    }
    return id;
}

}  // namespace ditas
