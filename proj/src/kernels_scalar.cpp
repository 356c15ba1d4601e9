// Reference kernels. Plain loops, no intrinsics: every vector backend is
// equivalence-tested against these.

#include "rhythmlab/kernels.hpp"

#include <cmath>

namespace rhythmlab::kernels::detail {

namespace {

template <typename T>
void matmul_nn_s(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = T(0);
        const T* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void matmul_nt_s(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<std::size_t>(j) * k;
            T acc = T(0);
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
    }
}

template <typename T>
void matmul_tn_s(const T* a, const T* b, T* c, int m, int k, int n) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(m) * n; ++i) c[i] = T(0);
    for (int p = 0; p < k; ++p) {
        const T* arow = a + static_cast<std::size_t>(p) * m;
        const T* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void add_s(const T* x, const T* y, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

template <typename T>
void sub_s(const T* x, const T* y, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

template <typename T>
void mul_s(const T* x, const T* y, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

template <typename T>
void scale_s(const T* x, T alpha, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
void axpy_s(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T sum_s(const T* x, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

template <typename T>
T dot_s(const T* x, const T* y, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

template <typename T>
T sq_diff_sum_s(const T* x, const T* y, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        const T d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

template <typename T>
void adamw_s(T* param, const T* grad, T* m, T* v, std::size_t n,
             const AdamwScalars<T>& s) {
    for (std::size_t i = 0; i < n; ++i) {
        const T g = grad[i];
        m[i] = s.beta1 * m[i] + (T(1) - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (T(1) - s.beta2) * g * g;
        const T mhat = m[i] / s.bias_corr1;
        const T vhat = v[i] / s.bias_corr2;
        param[i] -= s.lr * (mhat / (std::sqrt(vhat) + s.eps) + s.weight_decay * param[i]);
    }
}

template <typename T>
void ema_s(T* shadow, const T* param, std::size_t n, T decay) {
    for (std::size_t i = 0; i < n; ++i) {
        shadow[i] = decay * shadow[i] + (T(1) - decay) * param[i];
    }
}

} // namespace

template <typename T>
Ops<T> scalar_table() {
    Ops<T> t;
    t.matmul_nn = &matmul_nn_s<T>;
    t.matmul_nt = &matmul_nt_s<T>;
    t.matmul_tn = &matmul_tn_s<T>;
    t.add = &add_s<T>;
    t.sub = &sub_s<T>;
    t.mul = &mul_s<T>;
    t.scale = &scale_s<T>;
    t.axpy = &axpy_s<T>;
    t.sum = &sum_s<T>;
    t.dot = &dot_s<T>;
    t.sq_diff_sum = &sq_diff_sum_s<T>;
    t.adamw = &adamw_s<T>;
    t.ema = &ema_s<T>;
    return t;
}

template Ops<float> scalar_table<float>();
template Ops<double> scalar_table<double>();

} // namespace rhythmlab::kernels::detail
