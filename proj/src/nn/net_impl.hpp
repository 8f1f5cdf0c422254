#pragma once

// Internal forward/backward engine, templated on the scalar type. The float
// instantiation routes through the dispatched kernel backend; the double
// instantiation always uses the scalar reference kernels and exists for the
// finite-difference gradient checker.

#include <cmath>
#include <cstring>
#include <vector>

#include "waffle/kernels/kernels.hpp"
#include "waffle/nn/model.hpp"

namespace waffle::nn {

template <typename T>
struct Ops {
    static void gemm_nn(std::size_t M, std::size_t N, std::size_t K, T a, const T* A, const T* B,
                        T b, T* C) {
        kernels::ref::gemm_nn<T>(M, N, K, a, A, B, b, C);
    }
    static void gemm_nt(std::size_t M, std::size_t N, std::size_t K, T a, const T* A, const T* B,
                        T b, T* C) {
        kernels::ref::gemm_nt<T>(M, N, K, a, A, B, b, C);
    }
    static void gemm_tn(std::size_t M, std::size_t N, std::size_t K, T a, const T* A, const T* B,
                        T b, T* C) {
        kernels::ref::gemm_tn<T>(M, N, K, a, A, B, b, C);
    }
    static void relu_fwd(std::size_t n, const T* x, T* y) { kernels::ref::relu_fwd<T>(n, x, y); }
    static void relu_bwd(std::size_t n, const T* x, const T* dy, T* dx) {
        kernels::ref::relu_bwd<T>(n, x, dy, dx);
    }
    static void bias_add(std::size_t M, std::size_t N, T* C, const T* b) {
        kernels::ref::bias_add<T>(M, N, C, b);
    }
    static void row_sum(std::size_t M, std::size_t N, const T* A, T* out) {
        kernels::ref::row_sum<T>(M, N, A, out);
    }
};

template <>
struct Ops<float> {
    static void gemm_nn(std::size_t M, std::size_t N, std::size_t K, float a, const float* A,
                        const float* B, float b, float* C) {
        kernels::active().gemm_nn(M, N, K, a, A, B, b, C);
    }
    static void gemm_nt(std::size_t M, std::size_t N, std::size_t K, float a, const float* A,
                        const float* B, float b, float* C) {
        kernels::active().gemm_nt(M, N, K, a, A, B, b, C);
    }
    static void gemm_tn(std::size_t M, std::size_t N, std::size_t K, float a, const float* A,
                        const float* B, float b, float* C) {
        kernels::active().gemm_tn(M, N, K, a, A, B, b, C);
    }
    static void relu_fwd(std::size_t n, const float* x, float* y) {
        kernels::active().relu_fwd(n, x, y);
    }
    static void relu_bwd(std::size_t n, const float* x, const float* dy, float* dx) {
        kernels::active().relu_bwd(n, x, dy, dx);
    }
    static void bias_add(std::size_t M, std::size_t N, float* C, const float* b) {
        kernels::active().bias_add(M, N, C, b);
    }
    static void row_sum(std::size_t M, std::size_t N, const float* A, float* out) {
        kernels::active().row_sum(M, N, A, out);
    }
};

// Dataset images are HWC; the engine works in CHW.
template <typename T>
void hwc_to_chw(const float* src, int h, int w, int c, T* dst) {
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) dst[(ch * h + y) * w + x] = static_cast<T>(src[(y * w + x) * c + ch]);
}

template <typename T>
struct Workspace {
    int batch = 0;
    std::vector<std::vector<T>> acts;                // acts[l] = input of layer l; back() = logits
    std::vector<std::vector<std::uint8_t>> pool_arg; // per layer (empty unless Pool)
    std::vector<T> cols;                             // im2col scratch, one sample
    std::vector<T> dcur, dprev;                      // backward ping-pong
};

template <typename T>
void ensure_workspace(const std::vector<LayerDesc>& layers, int n, Workspace<T>& ws) {
    ws.batch = n;
    ws.acts.resize(layers.size() + 1);
    ws.pool_arg.resize(layers.size());
    std::size_t max_act = layers.empty() ? 0 : layers[0].in_size;
    std::size_t max_cols = 0;
    ws.acts[0].resize(static_cast<std::size_t>(n) * layers[0].in_size);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerDesc& d = layers[l];
        ws.acts[l + 1].resize(static_cast<std::size_t>(n) * d.out_size);
        max_act = std::max(max_act, std::max(d.in_size, d.out_size));
        if (d.kind == LayerDesc::Kind::Pool)
            ws.pool_arg[l].resize(static_cast<std::size_t>(n) * d.out_size);
        if (d.kind == LayerDesc::Kind::Conv)
            max_cols = std::max(max_cols,
                                static_cast<std::size_t>(d.out_h) * d.out_w * d.in_c * d.kh * d.kw);
    }
    ws.cols.resize(max_cols);
    ws.dcur.resize(static_cast<std::size_t>(n) * max_act);
    ws.dprev.resize(static_cast<std::size_t>(n) * max_act);
}

template <typename T>
void im2col(const T* x, const LayerDesc& d, T* cols) {
    // cols: (out_h*out_w) x (in_c*kh*kw), row-major
    const int K = d.in_c * d.kh * d.kw;
    for (int oy = 0; oy < d.out_h; ++oy)
        for (int ox = 0; ox < d.out_w; ++ox) {
            T* row = cols + (static_cast<std::size_t>(oy) * d.out_w + ox) * K;
            int idx = 0;
            for (int ic = 0; ic < d.in_c; ++ic)
                for (int ky = 0; ky < d.kh; ++ky) {
                    const T* src = x + (static_cast<std::size_t>(ic) * d.in_h + oy + ky) * d.in_w +
                                   ox;
                    for (int kx = 0; kx < d.kw; ++kx) row[idx++] = src[kx];
                }
        }
}

template <typename T>
void col2im_add(const T* cols, const LayerDesc& d, T* dx) {
    const int K = d.in_c * d.kh * d.kw;
    for (int oy = 0; oy < d.out_h; ++oy)
        for (int ox = 0; ox < d.out_w; ++ox) {
            const T* row = cols + (static_cast<std::size_t>(oy) * d.out_w + ox) * K;
            int idx = 0;
            for (int ic = 0; ic < d.in_c; ++ic)
                for (int ky = 0; ky < d.kh; ++ky) {
                    T* dst = dx + (static_cast<std::size_t>(ic) * d.in_h + oy + ky) * d.in_w + ox;
                    for (int kx = 0; kx < d.kw; ++kx) dst[kx] += row[idx++];
                }
        }
}

// Forward pass; ws.acts[0] must already hold the CHW batch.
template <typename T>
void forward(const std::vector<LayerDesc>& layers, const T* params, int n, Workspace<T>& ws) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerDesc& d = layers[l];
        const T* in = ws.acts[l].data();
        T* out = ws.acts[l + 1].data();
        switch (d.kind) {
            case LayerDesc::Kind::Conv: {
                const T* W = params + d.w_off;
                const T* b = params + d.b_off;
                const int K = d.in_c * d.kh * d.kw;
                const int ohw = d.out_h * d.out_w;
                for (int s = 0; s < n; ++s) {
                    im2col(in + static_cast<std::size_t>(s) * d.in_size, d, ws.cols.data());
                    // Y_s (out_c x ohw) = W (out_c x K) * cols^T
                    T* y = out + static_cast<std::size_t>(s) * d.out_size;
                    Ops<T>::gemm_nt(d.out_c, ohw, K, T(1), W, ws.cols.data(), T(0), y);
                    for (int oc = 0; oc < d.out_c; ++oc) {
                        T bv = b[oc];
                        T* yr = y + static_cast<std::size_t>(oc) * ohw;
                        for (int i = 0; i < ohw; ++i) yr[i] += bv;
                    }
                }
                break;
            }
            case LayerDesc::Kind::Relu:
                Ops<T>::relu_fwd(static_cast<std::size_t>(n) * d.out_size, in, out);
                break;
            case LayerDesc::Kind::Pool: {
                std::uint8_t* arg = ws.pool_arg[l].data();
                for (int s = 0; s < n; ++s) {
                    const T* x = in + static_cast<std::size_t>(s) * d.in_size;
                    T* y = out + static_cast<std::size_t>(s) * d.out_size;
                    std::uint8_t* am = arg + static_cast<std::size_t>(s) * d.out_size;
                    for (int ch = 0; ch < d.in_c; ++ch)
                        for (int oy = 0; oy < d.out_h; ++oy)
                            for (int ox = 0; ox < d.out_w; ++ox) {
                                const T* p = x + (static_cast<std::size_t>(ch) * d.in_h + 2 * oy) *
                                                     d.in_w +
                                             2 * ox;
                                T v00 = p[0], v01 = p[1];
                                T v10 = p[d.in_w], v11 = p[d.in_w + 1];
                                int best = 0;
                                T bv = v00;
                                if (v01 > bv) { bv = v01; best = 1; }
                                if (v10 > bv) { bv = v10; best = 2; }
                                if (v11 > bv) { bv = v11; best = 3; }
                                std::size_t o =
                                    (static_cast<std::size_t>(ch) * d.out_h + oy) * d.out_w + ox;
                                y[o] = bv;
                                am[o] = static_cast<std::uint8_t>(best);
                            }
                }
                break;
            }
            case LayerDesc::Kind::Flatten:
                std::memcpy(out, in, static_cast<std::size_t>(n) * d.out_size * sizeof(T));
                break;
            case LayerDesc::Kind::Fc: {
                const T* W = params + d.w_off;  // (out_n x in_n)
                const T* b = params + d.b_off;
                Ops<T>::gemm_nt(n, d.out_n, d.in_n, T(1), in, W, T(0), out);
                Ops<T>::bias_add(n, d.out_n, out, b);
                break;
            }
        }
    }
}

// Mean cross-entropy over the batch; fills dlogits with d(loss)/d(logit).
// Returns the loss; probs (n x m) optional.
template <typename T>
double softmax_xent(const T* logits, const int* labels, int n, int m, T* dlogits,
                    T* probs = nullptr) {
    double loss = 0.0;
    for (int s = 0; s < n; ++s) {
        const T* z = logits + static_cast<std::size_t>(s) * m;
        T* dz = dlogits + static_cast<std::size_t>(s) * m;
        T zmax = z[0];
        for (int j = 1; j < m; ++j) zmax = std::max(zmax, z[j]);
        double denom = 0.0;
        for (int j = 0; j < m; ++j) denom += std::exp(static_cast<double>(z[j] - zmax));
        double logdenom = std::log(denom);
        int y = labels[s];
        loss += -(static_cast<double>(z[y] - zmax) - logdenom);
        for (int j = 0; j < m; ++j) {
            double p = std::exp(static_cast<double>(z[j] - zmax)) / denom;
            if (probs) probs[static_cast<std::size_t>(s) * m + j] = static_cast<T>(p);
            dz[j] = static_cast<T>((p - (j == y ? 1.0 : 0.0)) / n);
        }
    }
    return loss / n;
}

// Backward pass. dlogits (n x m) seeds the chain; parameter gradients are
// accumulated into pgrads (same layout as params, caller zeroes). When
// dinput != nullptr the gradient w.r.t. the CHW input batch is produced.
template <typename T>
void backward(const std::vector<LayerDesc>& layers, const T* params, int n, Workspace<T>& ws,
              const T* dlogits, T* pgrads, T* dinput = nullptr) {
    std::size_t last = layers.size() - 1;
    std::copy(dlogits, dlogits + static_cast<std::size_t>(n) * layers[last].out_size,
              ws.dcur.begin());
    std::vector<T> colgrad;  // dcols scratch for conv
    for (std::size_t li = layers.size(); li-- > 0;) {
        const LayerDesc& d = layers[li];
        const T* in = ws.acts[li].data();
        const T* dout = ws.dcur.data();
        bool need_dx = (li > 0) || (dinput != nullptr);
        T* dx = ws.dprev.data();
        switch (d.kind) {
            case LayerDesc::Kind::Conv: {
                const T* W = params + d.w_off;
                T* dW = pgrads + d.w_off;
                T* db = pgrads + d.b_off;
                const int K = d.in_c * d.kh * d.kw;
                const int ohw = d.out_h * d.out_w;
                colgrad.resize(static_cast<std::size_t>(ohw) * K);
                if (need_dx)
                    std::fill(dx, dx + static_cast<std::size_t>(n) * d.in_size, T(0));
                for (int s = 0; s < n; ++s) {
                    const T* x = in + static_cast<std::size_t>(s) * d.in_size;
                    const T* dy = dout + static_cast<std::size_t>(s) * d.out_size;  // (out_c x ohw)
                    im2col(x, d, ws.cols.data());
                    // dW (out_c x K) += dY (out_c x ohw) * cols (ohw x K)
                    Ops<T>::gemm_nn(d.out_c, K, ohw, T(1), dy, ws.cols.data(), T(1), dW);
                    for (int oc = 0; oc < d.out_c; ++oc) {
                        const T* r = dy + static_cast<std::size_t>(oc) * ohw;
                        T acc = T(0);
                        for (int i = 0; i < ohw; ++i) acc += r[i];
                        db[oc] += acc;
                    }
                    if (need_dx) {
                        // dcols (ohw x K) = dY^T (ohw x out_c) * W (out_c x K)
                        Ops<T>::gemm_tn(ohw, K, d.out_c, T(1), dy, W, T(0), colgrad.data());
                        col2im_add(colgrad.data(), d, dx + static_cast<std::size_t>(s) * d.in_size);
                    }
                }
                break;
            }
            case LayerDesc::Kind::Relu:
                Ops<T>::relu_bwd(static_cast<std::size_t>(n) * d.out_size, in, dout, dx);
                break;
            case LayerDesc::Kind::Pool: {
                const std::uint8_t* arg = ws.pool_arg[li].data();
                std::fill(dx, dx + static_cast<std::size_t>(n) * d.in_size, T(0));
                for (int s = 0; s < n; ++s) {
                    const T* dy = dout + static_cast<std::size_t>(s) * d.out_size;
                    const std::uint8_t* am = arg + static_cast<std::size_t>(s) * d.out_size;
                    T* g = dx + static_cast<std::size_t>(s) * d.in_size;
                    for (int ch = 0; ch < d.in_c; ++ch)
                        for (int oy = 0; oy < d.out_h; ++oy)
                            for (int ox = 0; ox < d.out_w; ++ox) {
                                std::size_t o =
                                    (static_cast<std::size_t>(ch) * d.out_h + oy) * d.out_w + ox;
                                int a = am[o];
                                int iy = 2 * oy + (a >> 1), ix = 2 * ox + (a & 1);
                                g[(static_cast<std::size_t>(ch) * d.in_h + iy) * d.in_w + ix] +=
                                    dy[o];
                            }
                }
                break;
            }
            case LayerDesc::Kind::Flatten:
                std::memcpy(dx, dout, static_cast<std::size_t>(n) * d.in_size * sizeof(T));
                break;
            case LayerDesc::Kind::Fc: {
                const T* W = params + d.w_off;
                // dW (out_n x in_n) += dY^T (out_n x n) * X (n x in_n)
                Ops<T>::gemm_tn(d.out_n, d.in_n, n, T(1), dout, in, T(1), pgrads + d.w_off);
                std::vector<T> db(d.out_n);
                Ops<T>::row_sum(n, d.out_n, dout, db.data());
                for (int j = 0; j < d.out_n; ++j) pgrads[d.b_off + j] += db[j];
                if (need_dx)
                    Ops<T>::gemm_nn(n, d.in_n, d.out_n, T(1), dout, W, T(0), dx);
                break;
            }
        }
        if (!need_dx) break;
        std::swap(ws.dcur, ws.dprev);
    }
    if (dinput)
        std::copy(ws.dcur.begin(),
                  ws.dcur.begin() + static_cast<std::size_t>(n) * layers[0].in_size, dinput);
}

}  // namespace waffle::nn
