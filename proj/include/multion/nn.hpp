#pragma once

// Minimal dense/conv layer kit with hand-written backprop. Templated on the
// scalar so training runs float and finite-difference checks run double.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "multion/util.hpp"

namespace multion::nn {

template <typename T>
struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<T> w;
    std::vector<T> g;

    Param() = default;
    Param(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
        std::size_t total = 1;
        for (int d : shape) total *= std::size_t(d);
        w.assign(total, T(0));
        g.assign(total, T(0));
    }
    std::size_t size() const { return w.size(); }
    void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

template <typename T>
void zero_grads(const ParamList<T>& ps) {
    for (auto* p : ps) p->zero_grad();
}

// FNV over the exact parameter bytes; detects any weight change.
template <typename T>
std::uint64_t param_checksum(const ParamList<T>& ps) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto* p : ps) {
        const unsigned char* bytes = reinterpret_cast<const unsigned char*>(p->w.data());
        for (std::size_t i = 0; i < p->w.size() * sizeof(T); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    }
    return h;
}

// Orthogonal rows (or columns when rows > cols) via modified Gram-Schmidt on
// a gaussian draw. Biases stay zero.
template <typename T>
void orthogonal_init(Param<T>& p, int rows, int cols, Rng& rng) {
    if (std::size_t(rows) * std::size_t(cols) != p.size())
        throw ValidationError("orthogonal init shape mismatch for " + p.name);
    bool transpose = rows > cols;
    int r = transpose ? cols : rows;
    int c = transpose ? rows : cols;

    std::vector<double> m(std::size_t(r) * std::size_t(c));
    for (auto& v : m) v = rng.gaussian();
    for (int i = 0; i < r; ++i) {
        double* vi = &m[std::size_t(i) * std::size_t(c)];
        for (int attempt = 0; attempt < 16; ++attempt) {
            for (int j = 0; j < i; ++j) {
                const double* vj = &m[std::size_t(j) * std::size_t(c)];
                double dot = 0;
                for (int k = 0; k < c; ++k) dot += vi[k] * vj[k];
                for (int k = 0; k < c; ++k) vi[k] -= dot * vj[k];
            }
            double norm = 0;
            for (int k = 0; k < c; ++k) norm += vi[k] * vi[k];
            norm = std::sqrt(norm);
            if (norm > 1e-8) {
                for (int k = 0; k < c; ++k) vi[k] /= norm;
                break;
            }
            for (int k = 0; k < c; ++k) vi[k] = rng.gaussian();
        }
    }
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double v = transpose ? m[std::size_t(j) * std::size_t(rows) + std::size_t(i)]
                                 : m[std::size_t(i) * std::size_t(cols) + std::size_t(j)];
            p.w[std::size_t(i) * std::size_t(cols) + std::size_t(j)] = T(v);
        }
}

// 2-D convolution, stride 1, no padding, square kernel. Data layout CHW.
template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, k = 3;
    Param<T> weight, bias;

    Conv2d() = default;
    Conv2d(const std::string& name, int in_channels, int out_channels, int kernel)
        : in_ch(in_channels),
          out_ch(out_channels),
          k(kernel),
          weight(name + ".weight", {out_channels, in_channels, kernel, kernel}),
          bias(name + ".bias", {out_channels}) {}

    void init(Rng& rng) { orthogonal_init(weight, out_ch, in_ch * k * k, rng); }
    void collect(ParamList<T>& ps) {
        ps.push_back(&weight);
        ps.push_back(&bias);
    }
    int out_side(int side) const { return side - k + 1; }

    // x: in_ch*H*W, y: out_ch*OH*OW
    void forward(const T* x, int H, int W, T* y) const {
        const int OH = H - k + 1, OW = W - k + 1;
        for (int oc = 0; oc < out_ch; ++oc) {
            T* yc = y + std::size_t(oc) * OH * OW;
            T bv = bias.w[std::size_t(oc)];
            for (int i = 0; i < OH * OW; ++i) yc[i] = bv;
        }
        for (int oc = 0; oc < out_ch; ++oc) {
            T* yc = y + std::size_t(oc) * OH * OW;
            for (int ic = 0; ic < in_ch; ++ic) {
                const T* xc = x + std::size_t(ic) * H * W;
                const T* wq = &weight.w[(std::size_t(oc) * in_ch + ic) * k * k];
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        T wv = wq[ky * k + kx];
                        for (int oy = 0; oy < OH; ++oy) {
                            const T* xr = xc + (oy + ky) * W + kx;
                            T* yr = yc + oy * OW;
                            for (int ox = 0; ox < OW; ++ox) yr[ox] += wv * xr[ox];
                        }
                    }
            }
        }
    }

    // gy: out grad; gx (may be null): input grad, accumulated into
    void backward(const T* x, int H, int W, const T* gy, T* gx) {
        const int OH = H - k + 1, OW = W - k + 1;
        for (int oc = 0; oc < out_ch; ++oc) {
            const T* gc = gy + std::size_t(oc) * OH * OW;
            T s = 0;
            for (int i = 0; i < OH * OW; ++i) s += gc[i];
            bias.g[std::size_t(oc)] += s;
        }
        for (int oc = 0; oc < out_ch; ++oc) {
            const T* gc = gy + std::size_t(oc) * OH * OW;
            for (int ic = 0; ic < in_ch; ++ic) {
                const T* xc = x + std::size_t(ic) * H * W;
                T* gxc = gx ? gx + std::size_t(ic) * H * W : nullptr;
                const T* wq = &weight.w[(std::size_t(oc) * in_ch + ic) * k * k];
                T* gwq = &weight.g[(std::size_t(oc) * in_ch + ic) * k * k];
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        T wv = wq[ky * k + kx];
                        T acc = 0;
                        for (int oy = 0; oy < OH; ++oy) {
                            const T* xr = xc + (oy + ky) * W + kx;
                            const T* gr = gc + oy * OW;
                            T dot = 0;
                            for (int ox = 0; ox < OW; ++ox) dot += xr[ox] * gr[ox];
                            acc += dot;
                            if (gxc) {
                                T* gxr = gxc + (oy + ky) * W + kx;
                                for (int ox = 0; ox < OW; ++ox) gxr[ox] += wv * gr[ox];
                            }
                        }
                        gwq[ky * k + kx] += acc;
                    }
            }
        }
    }
};

template <typename T>
struct Linear {
    int in_dim = 0, out_dim = 0;
    Param<T> weight, bias;  // weight is out x in

    Linear() = default;
    Linear(const std::string& name, int in, int out)
        : in_dim(in),
          out_dim(out),
          weight(name + ".weight", {out, in}),
          bias(name + ".bias", {out}) {}

    void init(Rng& rng) { orthogonal_init(weight, out_dim, in_dim, rng); }
    void collect(ParamList<T>& ps) {
        ps.push_back(&weight);
        ps.push_back(&bias);
    }

    void forward(const T* x, T* y) const {
        for (int o = 0; o < out_dim; ++o) {
            const T* wr = &weight.w[std::size_t(o) * in_dim];
            T s = bias.w[std::size_t(o)];
            for (int i = 0; i < in_dim; ++i) s += wr[i] * x[i];
            y[o] = s;
        }
    }

    void backward(const T* x, const T* gy, T* gx) {
        if (gx)
            for (int i = 0; i < in_dim; ++i) gx[i] = T(0);
        for (int o = 0; o < out_dim; ++o) {
            T go = gy[o];
            bias.g[std::size_t(o)] += go;
            const T* wr = &weight.w[std::size_t(o) * in_dim];
            T* gwr = &weight.g[std::size_t(o) * in_dim];
            for (int i = 0; i < in_dim; ++i) gwr[i] += go * x[i];
            if (gx)
                for (int i = 0; i < in_dim; ++i) gx[i] += go * wr[i];
        }
    }
};

template <typename T>
struct LayerNormCache {
    std::vector<T> xhat;
    T rstd = T(1);
};

template <typename T>
struct LayerNorm {
    int dim = 0;
    T eps = T(1e-5);
    Param<T> gamma, beta;

    LayerNorm() = default;
    LayerNorm(const std::string& name, int d)
        : dim(d), gamma(name + ".gamma", {d}), beta(name + ".beta", {d}) {
        std::fill(gamma.w.begin(), gamma.w.end(), T(1));
    }

    void collect(ParamList<T>& ps) {
        ps.push_back(&gamma);
        ps.push_back(&beta);
    }

    void forward(const T* x, T* y, LayerNormCache<T>& cache) const {
        T mean = 0;
        for (int i = 0; i < dim; ++i) mean += x[i];
        mean /= T(dim);
        T var = 0;
        for (int i = 0; i < dim; ++i) var += (x[i] - mean) * (x[i] - mean);
        var /= T(dim);
        cache.rstd = T(1) / std::sqrt(var + eps);
        cache.xhat.resize(std::size_t(dim));
        for (int i = 0; i < dim; ++i) {
            cache.xhat[std::size_t(i)] = (x[i] - mean) * cache.rstd;
            y[i] = gamma.w[std::size_t(i)] * cache.xhat[std::size_t(i)] + beta.w[std::size_t(i)];
        }
    }

    void backward(const LayerNormCache<T>& cache, const T* gy, T* gx) {
        T mean_gxhat = 0, mean_gxhat_xhat = 0;
        for (int i = 0; i < dim; ++i) {
            T gxhat = gy[i] * gamma.w[std::size_t(i)];
            mean_gxhat += gxhat;
            mean_gxhat_xhat += gxhat * cache.xhat[std::size_t(i)];
            gamma.g[std::size_t(i)] += gy[i] * cache.xhat[std::size_t(i)];
            beta.g[std::size_t(i)] += gy[i];
        }
        mean_gxhat /= T(dim);
        mean_gxhat_xhat /= T(dim);
        for (int i = 0; i < dim; ++i) {
            T gxhat = gy[i] * gamma.w[std::size_t(i)];
            gx[i] = cache.rstd * (gxhat - mean_gxhat - cache.xhat[std::size_t(i)] * mean_gxhat_xhat);
        }
    }
};

template <typename T>
inline void relu_forward(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}
template <typename T>
inline void relu_backward(const T* x, const T* gy, T* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > T(0) ? gy[i] : T(0);
}
template <typename T>
inline void tanh_forward(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}
// gx from the forward output y
template <typename T>
inline void tanh_backward(const T* y, const T* gy, T* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] = gy[i] * (T(1) - y[i] * y[i]);
}
template <typename T>
inline void sigmoid_forward(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}
template <typename T>
inline void sigmoid_backward(const T* y, const T* gy, T* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] = gy[i] * y[i] * (T(1) - y[i]);
}

// Adaptive-moment first-order optimizer over a fixed parameter list.
template <typename T>
class Adam {
  public:
    Adam() = default;
    explicit Adam(const ParamList<T>& ps, double lr = 1e-4, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(ps), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
        for (auto* p : params_) {
            m_.emplace_back(p->size(), T(0));
            v_.emplace_back(p->size(), T(0));
        }
    }

    void set_lr(double lr) { lr_ = lr; }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(b1_, double(t_));
        double bc2 = 1.0 - std::pow(b2_, double(t_));
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            Param<T>& p = *params_[pi];
            auto& m = m_[pi];
            auto& v = v_[pi];
            for (std::size_t i = 0; i < p.size(); ++i) {
                double g = double(p.g[i]);
                double mi = b1_ * double(m[i]) + (1.0 - b1_) * g;
                double vi = b2_ * double(v[i]) + (1.0 - b2_) * g * g;
                m[i] = T(mi);
                v[i] = T(vi);
                double mhat = mi / bc1;
                double vhat = vi / bc2;
                p.w[i] = T(double(p.w[i]) - lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

  private:
    ParamList<T> params_;
    std::vector<std::vector<T>> m_, v_;
    double lr_ = 1e-4, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
    std::int64_t t_ = 0;
};

// target <- (1 - tau) * target + tau * online, parameter lists aligned
template <typename T>
void soft_update(const ParamList<T>& target, const ParamList<T>& online, double tau) {
    if (target.size() != online.size())
        throw ValidationError("soft update over mismatched parameter lists");
    for (std::size_t pi = 0; pi < target.size(); ++pi) {
        Param<T>& t = *target[pi];
        const Param<T>& o = *online[pi];
        if (t.size() != o.size())
            throw ValidationError("soft update shape mismatch at " + t.name);
        for (std::size_t i = 0; i < t.size(); ++i)
            t.w[i] = T((1.0 - tau) * double(t.w[i]) + tau * double(o.w[i]));
    }
}

}  // namespace multion::nn
