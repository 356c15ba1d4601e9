#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rhythmlab::kernels {

/// Instruction sets the dense kernels can run on. Scalar is the reference
/// implementation; vector backends must match it element-for-element up to
/// reassociation round-off (see tests/test_kernels.cpp).
enum class Isa {
    Scalar,
    Avx2,
    Neon,
};

const char* isa_name(Isa isa);

/// Backends compiled in and usable on this CPU (Scalar always present).
std::vector<Isa> available_isas();

/// Backend the free functions below currently dispatch to. Picked once at
/// startup: best available, unless RHYTHMLAB_KERNELS={scalar,avx2,neon}
/// forces one.
Isa active_isa();

/// Force dispatch to a specific backend. Throws ConfigError if unavailable.
void force_isa(Isa isa);

template <typename T>
struct AdamwScalars {
    T lr;
    T beta1;
    T beta2;
    T eps;
    T weight_decay;
    T bias_corr1; // 1 - beta1^step
    T bias_corr2; // 1 - beta2^step
};

/// Function table for one scalar type on one backend.
template <typename T>
struct Ops {
    // c[m x n] = a[m x k] * b[k x n], all row-major
    void (*matmul_nn)(const T* a, const T* b, T* c, int m, int k, int n);
    // c[m x n] = a[m x k] * b[n x k]^T
    void (*matmul_nt)(const T* a, const T* b, T* c, int m, int k, int n);
    // c[m x n] = a[k x m]^T * b[k x n]
    void (*matmul_tn)(const T* a, const T* b, T* c, int m, int k, int n);

    void (*add)(const T* x, const T* y, T* out, std::size_t n);
    void (*sub)(const T* x, const T* y, T* out, std::size_t n);
    void (*mul)(const T* x, const T* y, T* out, std::size_t n);
    void (*scale)(const T* x, T alpha, T* out, std::size_t n);
    void (*axpy)(T alpha, const T* x, T* y, std::size_t n); // y += alpha*x

    T (*sum)(const T* x, std::size_t n);
    T (*dot)(const T* x, const T* y, std::size_t n);
    T (*sq_diff_sum)(const T* x, const T* y, std::size_t n);

    // In-place AdamW: updates moments then the parameter.
    void (*adamw)(T* param, const T* grad, T* m, T* v, std::size_t n,
                  const AdamwScalars<T>& s);
    // shadow = decay*shadow + (1-decay)*param
    void (*ema)(T* shadow, const T* param, std::size_t n, T decay);
};

template <typename T>
const Ops<T>& ops(); // active backend

template <typename T>
const Ops<T>& ops_for(Isa isa); // specific backend; throws if unavailable

namespace detail {
template <typename T>
Ops<T> scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
template <typename T>
Ops<T> avx2_table();
#endif
#if defined(__aarch64__)
template <typename T>
Ops<T> neon_table();
#endif
} // namespace detail

} // namespace rhythmlab::kernels
