// NEON kernels for aarch64 (ASIMD is baseline there, no runtime probe needed).

#if defined(__aarch64__)

#include "rhythmlab/kernels.hpp"

#include <arm_neon.h>
#include <cmath>

namespace rhythmlab::kernels::detail {

namespace {

void matmul_nn_f(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        float* crow = c + static_cast<std::size_t>(i) * n;
        int j = 0;
        for (; j + 4 <= n; j += 4) vst1q_f32(crow + j, vdupq_n_f32(0.0f));
        for (; j < n; ++j) crow[j] = 0.0f;
        const float* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const float32x4_t av = vdupq_n_f32(arow[p]);
            const float* brow = b + static_cast<std::size_t>(p) * n;
            j = 0;
            for (; j + 4 <= n; j += 4) {
                float32x4_t cv = vld1q_f32(crow + j);
                cv = vfmaq_f32(cv, av, vld1q_f32(brow + j));
                vst1q_f32(crow + j, cv);
            }
            for (; j < n; ++j) crow[j] += arow[p] * brow[j];
        }
    }
}

void matmul_nt_f(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const float* brow = b + static_cast<std::size_t>(j) * k;
            float32x4_t acc = vdupq_n_f32(0.0f);
            int p = 0;
            for (; p + 4 <= k; p += 4) {
                acc = vfmaq_f32(acc, vld1q_f32(arow + p), vld1q_f32(brow + p));
            }
            float r = vaddvq_f32(acc);
            for (; p < k; ++p) r += arow[p] * brow[p];
            c[static_cast<std::size_t>(i) * n + j] = r;
        }
    }
}

void matmul_tn_f(const float* a, const float* b, float* c, int m, int k, int n) {
    const std::size_t total = static_cast<std::size_t>(m) * n;
    for (std::size_t z = 0; z < total; ++z) c[z] = 0.0f;
    for (int p = 0; p < k; ++p) {
        const float* arow = a + static_cast<std::size_t>(p) * m;
        const float* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const float32x4_t av = vdupq_n_f32(arow[i]);
            float* crow = c + static_cast<std::size_t>(i) * n;
            int j = 0;
            for (; j + 4 <= n; j += 4) {
                float32x4_t cv = vld1q_f32(crow + j);
                cv = vfmaq_f32(cv, av, vld1q_f32(brow + j));
                vst1q_f32(crow + j, cv);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void add_f(const float* x, const float* y, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_f(const float* x, const float* y, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vsubq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void mul_f(const float* x, const float* y, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_f(const float* x, float alpha, float* out, std::size_t n) {
    const float32x4_t av = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(av, vld1q_f32(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_f(float alpha, const float* x, float* y, std::size_t n) {
    const float32x4_t av = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t yv = vld1q_f32(y + i);
        yv = vfmaq_f32(yv, av, vld1q_f32(x + i));
        vst1q_f32(y + i, yv);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

float sum_f(const float* x, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

float dot_f(const float* x, const float* y, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(x + i), vld1q_f32(y + i));
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += x[i] * y[i];
    return r;
}

float sq_diff_sum_f(const float* x, const float* y, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t d = vsubq_f32(vld1q_f32(x + i), vld1q_f32(y + i));
        acc = vfmaq_f32(acc, d, d);
    }
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) {
        const float d = x[i] - y[i];
        r += d * d;
    }
    return r;
}

void adamw_f(float* param, const float* grad, float* m, float* v, std::size_t n,
             const AdamwScalars<float>& s) {
    for (std::size_t i = 0; i < n; ++i) {
        const float g = grad[i];
        m[i] = s.beta1 * m[i] + (1.0f - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (1.0f - s.beta2) * g * g;
        const float mhat = m[i] / s.bias_corr1;
        const float vhat = v[i] / s.bias_corr2;
        param[i] -= s.lr * (mhat / (std::sqrt(vhat) + s.eps) + s.weight_decay * param[i]);
    }
}

void ema_f(float* shadow, const float* param, std::size_t n, float decay) {
    const float32x4_t d = vdupq_n_f32(decay);
    const float32x4_t od = vdupq_n_f32(1.0f - decay);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t sv = vmulq_f32(d, vld1q_f32(shadow + i));
        sv = vfmaq_f32(sv, od, vld1q_f32(param + i));
        vst1q_f32(shadow + i, sv);
    }
    for (; i < n; ++i) shadow[i] = decay * shadow[i] + (1.0f - decay) * param[i];
}

// Double-precision NEON paths mirror the float structure with 2 lanes; the
// scalar tails dominate at small sizes so only the hot ops are vectorized.

void matmul_nn_d(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const float64x2_t av = vdupq_n_f64(arow[p]);
            const double* brow = b + static_cast<std::size_t>(p) * n;
            int j = 0;
            for (; j + 2 <= n; j += 2) {
                float64x2_t cv = vld1q_f64(crow + j);
                cv = vfmaq_f64(cv, av, vld1q_f64(brow + j));
                vst1q_f64(crow + j, cv);
            }
            for (; j < n; ++j) crow[j] += arow[p] * brow[j];
        }
    }
}

} // namespace

template <>
Ops<float> neon_table<float>() {
    Ops<float> t;
    t.matmul_nn = &matmul_nn_f;
    t.matmul_nt = &matmul_nt_f;
    t.matmul_tn = &matmul_tn_f;
    t.add = &add_f;
    t.sub = &sub_f;
    t.mul = &mul_f;
    t.scale = &scale_f;
    t.axpy = &axpy_f;
    t.sum = &sum_f;
    t.dot = &dot_f;
    t.sq_diff_sum = &sq_diff_sum_f;
    t.adamw = &adamw_f;
    t.ema = &ema_f;
    return t;
}

template <>
Ops<double> neon_table<double>() {
    // Start from the scalar reference and swap in the vectorized matmul.
    Ops<double> t = scalar_table<double>();
    t.matmul_nn = &matmul_nn_d;
    return t;
}

} // namespace rhythmlab::kernels::detail

#endif // __aarch64__
