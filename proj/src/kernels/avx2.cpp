// AVX2+FMA backend. Compiled with -mavx2 -mfma in this TU only; the dispatcher
// verifies cpu support before handing out these pointers.

#include <immintrin.h>

#include "waffle/kernels/kernels.hpp"

namespace waffle::kernels {
namespace {

inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

// ---- gemm_nn: 4x16 micro-kernel over K ----

void nn_block4(std::size_t N, std::size_t K, float alpha, const float* A, std::size_t rows,
               const float* B, float beta, float* C) {
    std::size_t j = 0;
    for (; j + 16 <= N; j += 16) {
        __m256 acc[4][2];
        for (std::size_t r = 0; r < rows; ++r) acc[r][0] = acc[r][1] = _mm256_setzero_ps();
        for (std::size_t k = 0; k < K; ++k) {
            __m256 b0 = _mm256_loadu_ps(B + k * N + j);
            __m256 b1 = _mm256_loadu_ps(B + k * N + j + 8);
            for (std::size_t r = 0; r < rows; ++r) {
                __m256 a = _mm256_set1_ps(A[r * K + k]);
                acc[r][0] = _mm256_fmadd_ps(a, b0, acc[r][0]);
                acc[r][1] = _mm256_fmadd_ps(a, b1, acc[r][1]);
            }
        }
        __m256 va = _mm256_set1_ps(alpha);
        for (std::size_t r = 0; r < rows; ++r) {
            float* c = C + r * N + j;
            __m256 r0 = _mm256_mul_ps(va, acc[r][0]);
            __m256 r1 = _mm256_mul_ps(va, acc[r][1]);
            if (beta != 0.0f) {
                __m256 vb = _mm256_set1_ps(beta);
                r0 = _mm256_fmadd_ps(vb, _mm256_loadu_ps(c), r0);
                r1 = _mm256_fmadd_ps(vb, _mm256_loadu_ps(c + 8), r1);
            }
            _mm256_storeu_ps(c, r0);
            _mm256_storeu_ps(c + 8, r1);
        }
    }
    for (; j + 8 <= N; j += 8) {
        __m256 acc[4];
        for (std::size_t r = 0; r < rows; ++r) acc[r] = _mm256_setzero_ps();
        for (std::size_t k = 0; k < K; ++k) {
            __m256 b0 = _mm256_loadu_ps(B + k * N + j);
            for (std::size_t r = 0; r < rows; ++r)
                acc[r] = _mm256_fmadd_ps(_mm256_set1_ps(A[r * K + k]), b0, acc[r]);
        }
        __m256 va = _mm256_set1_ps(alpha);
        for (std::size_t r = 0; r < rows; ++r) {
            float* c = C + r * N + j;
            __m256 r0 = _mm256_mul_ps(va, acc[r]);
            if (beta != 0.0f) r0 = _mm256_fmadd_ps(_mm256_set1_ps(beta), _mm256_loadu_ps(c), r0);
            _mm256_storeu_ps(c, r0);
        }
    }
    for (; j < N; ++j) {
        for (std::size_t r = 0; r < rows; ++r) {
            float acc = 0.0f;
            for (std::size_t k = 0; k < K; ++k) acc += A[r * K + k] * B[k * N + j];
            float* c = C + r * N + j;
            *c = alpha * acc + (beta == 0.0f ? 0.0f : beta * *c);
        }
    }
}

void gemm_nn(std::size_t M, std::size_t N, std::size_t K, float alpha, const float* A,
             const float* B, float beta, float* C) {
    std::size_t i = 0;
    for (; i + 4 <= M; i += 4) nn_block4(N, K, alpha, A + i * K, 4, B, beta, C + i * N);
    if (i < M) nn_block4(N, K, alpha, A + i * K, M - i, B, beta, C + i * N);
}

// ---- gemm_nt: vectorized dot products, 4 columns at a time ----

void gemm_nt(std::size_t M, std::size_t N, std::size_t K, float alpha, const float* A,
             const float* B, float beta, float* C) {
    for (std::size_t i = 0; i < M; ++i) {
        const float* a = A + i * K;
        float* c = C + i * N;
        std::size_t j = 0;
        for (; j + 4 <= N; j += 4) {
            __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
            __m256 s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
            const float* b0 = B + (j + 0) * K;
            const float* b1 = B + (j + 1) * K;
            const float* b2 = B + (j + 2) * K;
            const float* b3 = B + (j + 3) * K;
            std::size_t k = 0;
            for (; k + 8 <= K; k += 8) {
                __m256 av = _mm256_loadu_ps(a + k);
                s0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + k), s0);
                s1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + k), s1);
                s2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + k), s2);
                s3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + k), s3);
            }
            float d0 = hsum8(s0), d1 = hsum8(s1), d2 = hsum8(s2), d3 = hsum8(s3);
            for (; k < K; ++k) {
                float av = a[k];
                d0 += av * b0[k];
                d1 += av * b1[k];
                d2 += av * b2[k];
                d3 += av * b3[k];
            }
            if (beta == 0.0f) {
                c[j + 0] = alpha * d0;
                c[j + 1] = alpha * d1;
                c[j + 2] = alpha * d2;
                c[j + 3] = alpha * d3;
            } else {
                c[j + 0] = alpha * d0 + beta * c[j + 0];
                c[j + 1] = alpha * d1 + beta * c[j + 1];
                c[j + 2] = alpha * d2 + beta * c[j + 2];
                c[j + 3] = alpha * d3 + beta * c[j + 3];
            }
        }
        for (; j < N; ++j) {
            const float* b = B + j * K;
            __m256 s = _mm256_setzero_ps();
            std::size_t k = 0;
            for (; k + 8 <= K; k += 8)
                s = _mm256_fmadd_ps(_mm256_loadu_ps(a + k), _mm256_loadu_ps(b + k), s);
            float d = hsum8(s);
            for (; k < K; ++k) d += a[k] * b[k];
            c[j] = alpha * d + (beta == 0.0f ? 0.0f : beta * c[j]);
        }
    }
}

// ---- gemm_tn: rank-1 accumulation, vectorized over N ----

void gemm_tn(std::size_t M, std::size_t N, std::size_t K, float alpha, const float* A,
             const float* B, float beta, float* C) {
    for (std::size_t i = 0; i < M; ++i) {
        float* c = C + i * N;
        if (beta == 0.0f) {
            for (std::size_t j = 0; j < N; ++j) c[j] = 0.0f;
        } else if (beta != 1.0f) {
            for (std::size_t j = 0; j < N; ++j) c[j] *= beta;
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        const float* b = B + k * N;
        const float* arow = A + k * M;
        for (std::size_t i = 0; i < M; ++i) {
            float av = alpha * arow[i];
            if (av == 0.0f) continue;
            float* c = C + i * N;
            __m256 vav = _mm256_set1_ps(av);
            std::size_t j = 0;
            for (; j + 8 <= N; j += 8)
                _mm256_storeu_ps(c + j,
                                 _mm256_fmadd_ps(vav, _mm256_loadu_ps(b + j), _mm256_loadu_ps(c + j)));
            for (; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// ---- element-wise kernels ----

void axpy(std::size_t n, float a, const float* x, float* y) {
    __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void scal(std::size_t n, float a, float* x) {
    __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void scale_copy(std::size_t n, float a, const float* x, float* out) {
    __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = a * x[i];
}

void vadd(std::size_t n, const float* x, const float* y, float* out) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void relu_fwd(std::size_t n, const float* x, float* y) {
    __m256 z = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), z));
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd(std::size_t n, const float* x, const float* dy, float* dx) {
    __m256 z = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), z, _CMP_GT_OQ);
        _mm256_storeu_ps(dx + i, _mm256_and_ps(_mm256_loadu_ps(dy + i), mask));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void sgd_update(std::size_t n, float* w, const float* g, float* vel, float lr, float momentum,
                float weight_decay) {
    std::size_t i = 0;
    if (momentum == 0.0f && weight_decay == 0.0f) {
        __m256 vlr = _mm256_set1_ps(lr);
        for (; i + 8 <= n; i += 8)
            _mm256_storeu_ps(w + i,
                             _mm256_fnmadd_ps(vlr, _mm256_loadu_ps(g + i), _mm256_loadu_ps(w + i)));
        for (; i < n; ++i) w[i] -= lr * g[i];
        return;
    }
    if (momentum == 0.0f) {
        __m256 vlr = _mm256_set1_ps(lr), vwd = _mm256_set1_ps(weight_decay);
        for (; i + 8 <= n; i += 8) {
            __m256 wv = _mm256_loadu_ps(w + i);
            __m256 eff = _mm256_fmadd_ps(vwd, wv, _mm256_loadu_ps(g + i));
            _mm256_storeu_ps(w + i, _mm256_fnmadd_ps(vlr, eff, wv));
        }
        for (; i < n; ++i) w[i] -= lr * (g[i] + weight_decay * w[i]);
        return;
    }
    __m256 vlr = _mm256_set1_ps(lr), vwd = _mm256_set1_ps(weight_decay),
           vmo = _mm256_set1_ps(momentum);
    for (; i + 8 <= n; i += 8) {
        __m256 wv = _mm256_loadu_ps(w + i);
        __m256 vv = _mm256_loadu_ps(vel + i);
        vv = _mm256_fmadd_ps(vmo, vv, _mm256_fmadd_ps(vwd, wv, _mm256_loadu_ps(g + i)));
        _mm256_storeu_ps(vel + i, vv);
        _mm256_storeu_ps(w + i, _mm256_fnmadd_ps(vlr, vv, wv));
    }
    for (; i < n; ++i) {
        vel[i] = momentum * vel[i] + g[i] + weight_decay * w[i];
        w[i] -= lr * vel[i];
    }
}

void bias_add(std::size_t M, std::size_t N, float* C, const float* b) {
    for (std::size_t i = 0; i < M; ++i) {
        float* c = C + i * N;
        std::size_t j = 0;
        for (; j + 8 <= N; j += 8)
            _mm256_storeu_ps(c + j, _mm256_add_ps(_mm256_loadu_ps(c + j), _mm256_loadu_ps(b + j)));
        for (; j < N; ++j) c[j] += b[j];
    }
}

void row_sum(std::size_t M, std::size_t N, const float* A, float* out) {
    std::size_t j = 0;
    for (; j + 8 <= N; j += 8) _mm256_storeu_ps(out + j, _mm256_setzero_ps());
    for (; j < N; ++j) out[j] = 0.0f;
    for (std::size_t i = 0; i < M; ++i) {
        const float* a = A + i * N;
        j = 0;
        for (; j + 8 <= N; j += 8)
            _mm256_storeu_ps(out + j, _mm256_add_ps(_mm256_loadu_ps(out + j), _mm256_loadu_ps(a + j)));
        for (; j < N; ++j) out[j] += a[j];
    }
}

}  // namespace

const Backend* avx2_backend_impl() {
    static const Backend b = {
        "avx2",   &gemm_nn, &gemm_nt,  &gemm_tn,  &axpy,       &scal,
        &scale_copy, &vadd, &relu_fwd, &relu_bwd, &sgd_update, &bias_add,
        &row_sum,
    };
    return &b;
}

}  // namespace waffle::kernels
