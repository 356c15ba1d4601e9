// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma;
// the dispatcher only installs the table after a runtime CPU check.

#if defined(__x86_64__) || defined(_M_X64)

#include "rhythmlab/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace rhythmlab::kernels::detail {

namespace {

// ---- float (8 lanes) ----

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
}

inline double hsum256d(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void matmul_nn_f(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        float* crow = c + static_cast<std::size_t>(i) * n;
        int j = 0;
        for (; j + 8 <= n; j += 8) _mm256_storeu_ps(crow + j, _mm256_setzero_ps());
        for (; j < n; ++j) crow[j] = 0.0f;
        const float* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const __m256 av = _mm256_set1_ps(arow[p]);
            const float* brow = b + static_cast<std::size_t>(p) * n;
            j = 0;
            for (; j + 16 <= n; j += 16) {
                __m256 c0 = _mm256_loadu_ps(crow + j);
                __m256 c1 = _mm256_loadu_ps(crow + j + 8);
                c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), c0);
                c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j + 8), c1);
                _mm256_storeu_ps(crow + j, c0);
                _mm256_storeu_ps(crow + j + 8, c1);
            }
            for (; j + 8 <= n; j += 8) {
                __m256 c0 = _mm256_loadu_ps(crow + j);
                c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), c0);
                _mm256_storeu_ps(crow + j, c0);
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
            __m256 acc0 = _mm256_setzero_ps();
            __m256 acc1 = _mm256_setzero_ps();
            int p = 0;
            for (; p + 16 <= k; p += 16) {
                acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                                       _mm256_loadu_ps(brow + p), acc0);
                acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p + 8),
                                       _mm256_loadu_ps(brow + p + 8), acc1);
            }
            for (; p + 8 <= k; p += 8) {
                acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                                       _mm256_loadu_ps(brow + p), acc0);
            }
            float acc = hsum256(_mm256_add_ps(acc0, acc1));
            for (; p < k; ++p) acc += arow[p] * brow[p];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
    }
}

void matmul_tn_f(const float* a, const float* b, float* c, int m, int k, int n) {
    const std::size_t total = static_cast<std::size_t>(m) * n;
    std::size_t z = 0;
    for (; z + 8 <= total; z += 8) _mm256_storeu_ps(c + z, _mm256_setzero_ps());
    for (; z < total; ++z) c[z] = 0.0f;
    for (int p = 0; p < k; ++p) {
        const float* arow = a + static_cast<std::size_t>(p) * m;
        const float* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const __m256 av = _mm256_set1_ps(arow[i]);
            float* crow = c + static_cast<std::size_t>(i) * n;
            int j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256 c0 = _mm256_loadu_ps(crow + j);
                c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), c0);
                _mm256_storeu_ps(crow + j, c0);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void add_f(const float* x, const float* y, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(out + i,
                         _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_f(const float* x, const float* y, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(out + i,
                         _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void mul_f(const float* x, const float* y, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(out + i,
                         _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_f(const float* x, float alpha, float* out, std::size_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
    }
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_f(float alpha, const float* x, float* y, std::size_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 yv = _mm256_loadu_ps(y + i);
        yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
        _mm256_storeu_ps(y + i, yv);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

float sum_f(const float* x, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_add_ps(acc0, _mm256_loadu_ps(x + i));
        acc1 = _mm256_add_ps(acc1, _mm256_loadu_ps(x + i + 8));
    }
    for (; i + 8 <= n; i += 8) acc0 = _mm256_add_ps(acc0, _mm256_loadu_ps(x + i));
    float acc = hsum256(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

float dot_f(const float* x, const float* y, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    }
    float acc = hsum256(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

float sq_diff_sum_f(const float* x, const float* y, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        acc = _mm256_fmadd_ps(d, d, acc);
    }
    float r = hsum256(acc);
    for (; i < n; ++i) {
        const float d = x[i] - y[i];
        r += d * d;
    }
    return r;
}

void adamw_f(float* param, const float* grad, float* m, float* v, std::size_t n,
             const AdamwScalars<float>& s) {
    const __m256 b1 = _mm256_set1_ps(s.beta1);
    const __m256 b2 = _mm256_set1_ps(s.beta2);
    const __m256 one_b1 = _mm256_set1_ps(1.0f - s.beta1);
    const __m256 one_b2 = _mm256_set1_ps(1.0f - s.beta2);
    const __m256 inv_bc1 = _mm256_set1_ps(1.0f / s.bias_corr1);
    const __m256 inv_bc2 = _mm256_set1_ps(1.0f / s.bias_corr2);
    const __m256 lr = _mm256_set1_ps(s.lr);
    const __m256 eps = _mm256_set1_ps(s.eps);
    const __m256 wd = _mm256_set1_ps(s.weight_decay);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 g = _mm256_loadu_ps(grad + i);
        __m256 mv = _mm256_loadu_ps(m + i);
        __m256 vv = _mm256_loadu_ps(v + i);
        mv = _mm256_fmadd_ps(one_b1, g, _mm256_mul_ps(b1, mv));
        vv = _mm256_fmadd_ps(one_b2, _mm256_mul_ps(g, g), _mm256_mul_ps(b2, vv));
        _mm256_storeu_ps(m + i, mv);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mhat = _mm256_mul_ps(mv, inv_bc1);
        const __m256 vhat = _mm256_mul_ps(vv, inv_bc2);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), eps);
        __m256 p = _mm256_loadu_ps(param + i);
        const __m256 step =
            _mm256_add_ps(_mm256_div_ps(mhat, denom), _mm256_mul_ps(wd, p));
        p = _mm256_fnmadd_ps(lr, step, p);
        _mm256_storeu_ps(param + i, p);
    }
    for (; i < n; ++i) {
        const float g = grad[i];
        m[i] = s.beta1 * m[i] + (1.0f - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (1.0f - s.beta2) * g * g;
        const float mhat = m[i] / s.bias_corr1;
        const float vhat = v[i] / s.bias_corr2;
        param[i] -= s.lr * (mhat / (std::sqrt(vhat) + s.eps) + s.weight_decay * param[i]);
    }
}

void ema_f(float* shadow, const float* param, std::size_t n, float decay) {
    const __m256 d = _mm256_set1_ps(decay);
    const __m256 od = _mm256_set1_ps(1.0f - decay);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 sv = _mm256_mul_ps(d, _mm256_loadu_ps(shadow + i));
        _mm256_storeu_ps(shadow + i,
                         _mm256_fmadd_ps(od, _mm256_loadu_ps(param + i), sv));
    }
    for (; i < n; ++i) shadow[i] = decay * shadow[i] + (1.0f - decay) * param[i];
}

// ---- double (4 lanes) ----

void matmul_nn_d(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        int j = 0;
        for (; j + 4 <= n; j += 4) _mm256_storeu_pd(crow + j, _mm256_setzero_pd());
        for (; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const __m256d av = _mm256_set1_pd(arow[p]);
            const double* brow = b + static_cast<std::size_t>(p) * n;
            j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256d c0 = _mm256_loadu_pd(crow + j);
                __m256d c1 = _mm256_loadu_pd(crow + j + 4);
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
                c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j + 4), c1);
                _mm256_storeu_pd(crow + j, c0);
                _mm256_storeu_pd(crow + j + 4, c1);
            }
            for (; j + 4 <= n; j += 4) {
                __m256d c0 = _mm256_loadu_pd(crow + j);
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
                _mm256_storeu_pd(crow + j, c0);
            }
            for (; j < n; ++j) crow[j] += arow[p] * brow[j];
        }
    }
}

void matmul_nt_d(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * k;
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            int p = 0;
            for (; p + 8 <= k; p += 8) {
                acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p),
                                       _mm256_loadu_pd(brow + p), acc0);
                acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p + 4),
                                       _mm256_loadu_pd(brow + p + 4), acc1);
            }
            for (; p + 4 <= k; p += 4) {
                acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p),
                                       _mm256_loadu_pd(brow + p), acc0);
            }
            double acc = hsum256d(_mm256_add_pd(acc0, acc1));
            for (; p < k; ++p) acc += arow[p] * brow[p];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
    }
}

void matmul_tn_d(const double* a, const double* b, double* c, int m, int k, int n) {
    const std::size_t total = static_cast<std::size_t>(m) * n;
    for (std::size_t zi = 0; zi < total; ++zi) c[zi] = 0.0;
    for (int p = 0; p < k; ++p) {
        const double* arow = a + static_cast<std::size_t>(p) * m;
        const double* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const __m256d av = _mm256_set1_pd(arow[i]);
            double* crow = c + static_cast<std::size_t>(i) * n;
            int j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d c0 = _mm256_loadu_pd(crow + j);
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
                _mm256_storeu_pd(crow + j, c0);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void add_d(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_d(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void mul_d(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_d(const double* x, double alpha, double* out, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_d(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_d(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double r = hsum256d(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

double dot_d(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    double r = hsum256d(acc);
    for (; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sq_diff_sum_d(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double r = hsum256d(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        r += d * d;
    }
    return r;
}

void adamw_d(double* param, const double* grad, double* m, double* v, std::size_t n,
             const AdamwScalars<double>& s) {
    std::size_t i = 0;
    const __m256d b1 = _mm256_set1_pd(s.beta1);
    const __m256d b2 = _mm256_set1_pd(s.beta2);
    const __m256d one_b1 = _mm256_set1_pd(1.0 - s.beta1);
    const __m256d one_b2 = _mm256_set1_pd(1.0 - s.beta2);
    const __m256d inv_bc1 = _mm256_set1_pd(1.0 / s.bias_corr1);
    const __m256d inv_bc2 = _mm256_set1_pd(1.0 / s.bias_corr2);
    const __m256d lr = _mm256_set1_pd(s.lr);
    const __m256d eps = _mm256_set1_pd(s.eps);
    const __m256d wd = _mm256_set1_pd(s.weight_decay);
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        __m256d mv = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        mv = _mm256_fmadd_pd(one_b1, g, _mm256_mul_pd(b1, mv));
        vv = _mm256_fmadd_pd(one_b2, _mm256_mul_pd(g, g), _mm256_mul_pd(b2, vv));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(mv, inv_bc1);
        const __m256d vhat = _mm256_mul_pd(vv, inv_bc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), eps);
        __m256d p = _mm256_loadu_pd(param + i);
        const __m256d step =
            _mm256_add_pd(_mm256_div_pd(mhat, denom), _mm256_mul_pd(wd, p));
        p = _mm256_fnmadd_pd(lr, step, p);
        _mm256_storeu_pd(param + i, p);
    }
    for (; i < n; ++i) {
        const double g = grad[i];
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
        const double mhat = m[i] / s.bias_corr1;
        const double vhat = v[i] / s.bias_corr2;
        param[i] -= s.lr * (mhat / (std::sqrt(vhat) + s.eps) + s.weight_decay * param[i]);
    }
}

void ema_d(double* shadow, const double* param, std::size_t n, double decay) {
    const __m256d d = _mm256_set1_pd(decay);
    const __m256d od = _mm256_set1_pd(1.0 - decay);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d sv = _mm256_mul_pd(d, _mm256_loadu_pd(shadow + i));
        _mm256_storeu_pd(shadow + i,
                         _mm256_fmadd_pd(od, _mm256_loadu_pd(param + i), sv));
    }
    for (; i < n; ++i) shadow[i] = decay * shadow[i] + (1.0 - decay) * param[i];
}

} // namespace

template <>
Ops<float> avx2_table<float>() {
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
Ops<double> avx2_table<double>() {
    Ops<double> t;
    t.matmul_nn = &matmul_nn_d;
    t.matmul_nt = &matmul_nt_d;
    t.matmul_tn = &matmul_tn_d;
    t.add = &add_d;
    t.sub = &sub_d;
    t.mul = &mul_d;
    t.scale = &scale_d;
    t.axpy = &axpy_d;
    t.sum = &sum_d;
    t.dot = &dot_d;
    t.sq_diff_sum = &sq_diff_sum_d;
    t.adamw = &adamw_d;
    t.ema = &ema_d;
    return t;
}

} // namespace rhythmlab::kernels::detail

#endif // x86_64
