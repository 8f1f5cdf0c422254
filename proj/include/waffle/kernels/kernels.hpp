#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace waffle::kernels {

// Scalar reference kernels. These are the semantic definition of every
// operation; SIMD backends must agree with them up to floating-point
// reassociation. Templated so the gradient checker can run the whole
// network in double precision.
namespace ref {

// C(MxN) = alpha * A(MxK) * B(KxN) + beta * C   (row-major, packed)
template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, T alpha, const T* A, const T* B,
             T beta, T* C) {
    for (std::size_t i = 0; i < M; ++i) {
        T* c = C + i * N;
        if (beta == T(0)) {
            for (std::size_t j = 0; j < N; ++j) c[j] = T(0);
        } else if (beta != T(1)) {
            for (std::size_t j = 0; j < N; ++j) c[j] *= beta;
        }
        const T* a = A + i * K;
        for (std::size_t k = 0; k < K; ++k) {
            T av = alpha * a[k];
            const T* b = B + k * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// C(MxN) = alpha * A(MxK) * B(NxK)^T + beta * C
template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, T alpha, const T* A, const T* B,
             T beta, T* C) {
    for (std::size_t i = 0; i < M; ++i) {
        const T* a = A + i * K;
        T* c = C + i * N;
        for (std::size_t j = 0; j < N; ++j) {
            const T* b = B + j * K;
            T acc = T(0);
            for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = alpha * acc + (beta == T(0) ? T(0) : beta * c[j]);
        }
    }
}

// C(MxN) = alpha * A(KxM)^T * B(KxN) + beta * C
template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, T alpha, const T* A, const T* B,
             T beta, T* C) {
    for (std::size_t i = 0; i < M; ++i) {
        T* c = C + i * N;
        if (beta == T(0)) {
            for (std::size_t j = 0; j < N; ++j) c[j] = T(0);
        } else if (beta != T(1)) {
            for (std::size_t j = 0; j < N; ++j) c[j] *= beta;
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        const T* b = B + k * N;
        for (std::size_t i = 0; i < M; ++i) {
            T av = alpha * A[k * M + i];
            if (av == T(0)) continue;
            T* c = C + i * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void scal(std::size_t n, T a, T* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

template <typename T>
void scale_copy(std::size_t n, T a, const T* x, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

template <typename T>
void vadd(std::size_t n, const T* x, const T* y, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

template <typename T>
void relu_fwd(std::size_t n, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd(std::size_t n, const T* x, const T* dy, T* dx) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

// v = momentum*v + g + weight_decay*w;  w -= lr*v.
// With momentum == 0 and weight_decay == 0 this is plain SGD. vel must be a
// valid buffer whenever momentum != 0; may be null otherwise.
template <typename T>
void sgd_update(std::size_t n, T* w, const T* g, T* vel, T lr, T momentum, T weight_decay) {
    if (momentum == T(0)) {
        if (weight_decay == T(0)) {
            for (std::size_t i = 0; i < n; ++i) w[i] -= lr * g[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) w[i] -= lr * (g[i] + weight_decay * w[i]);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        vel[i] = momentum * vel[i] + g[i] + weight_decay * w[i];
        w[i] -= lr * vel[i];
    }
}

// Each of the M rows of C gets b(N) added.
template <typename T>
void bias_add(std::size_t M, std::size_t N, T* C, const T* b) {
    for (std::size_t i = 0; i < M; ++i) {
        T* c = C + i * N;
        for (std::size_t j = 0; j < N; ++j) c[j] += b[j];
    }
}

// out(N) = sum over the M rows of A(MxN).
template <typename T>
void row_sum(std::size_t M, std::size_t N, const T* A, T* out) {
    for (std::size_t j = 0; j < N; ++j) out[j] = T(0);
    for (std::size_t i = 0; i < M; ++i) {
        const T* a = A + i * N;
        for (std::size_t j = 0; j < N; ++j) out[j] += a[j];
    }
}

}  // namespace ref

// Float fast path, selected at runtime.
struct Backend {
    const char* name;
    void (*gemm_nn)(std::size_t, std::size_t, std::size_t, float, const float*, const float*,
                    float, float*);
    void (*gemm_nt)(std::size_t, std::size_t, std::size_t, float, const float*, const float*,
                    float, float*);
    void (*gemm_tn)(std::size_t, std::size_t, std::size_t, float, const float*, const float*,
                    float, float*);
    void (*axpy)(std::size_t, float, const float*, float*);
    void (*scal)(std::size_t, float, float*);
    void (*scale_copy)(std::size_t, float, const float*, float*);
    void (*vadd)(std::size_t, const float*, const float*, float*);
    void (*relu_fwd)(std::size_t, const float*, float*);
    void (*relu_bwd)(std::size_t, const float*, const float*, float*);
    void (*sgd_update)(std::size_t, float*, const float*, float*, float, float, float);
    void (*bias_add)(std::size_t, std::size_t, float*, const float*);
    void (*row_sum)(std::size_t, std::size_t, const float*, float*);
};

const Backend& scalar_backend();
const Backend* avx2_backend();  // null when not compiled in or CPU lacks AVX2+FMA

// Names of all backends usable on this machine ("scalar" always present).
std::vector<std::string> available_backends();

// Active backend. Defaults to the fastest available; WAFFLE_BACKEND
// (auto|scalar|avx2) overrides, as does set_backend().
const Backend& active();
void set_backend(const std::string& name);

}  // namespace waffle::kernels
