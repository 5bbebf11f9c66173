// Compiled with -mavx2 (see src/CMakeLists.txt); only reached through the
// dispatcher after a cpuid check.
#include "gwmut/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace gwmut::kernels::avx2 {

namespace {

// Same combination order as the scalar reference: (s0 + s1) + (s2 + s3),
// then the tail elements land in lanes 0, 1, 2 in order.
double finish(__m256d acc, const double* tail_x, const double* tail_y, std::size_t rem, int mode) {
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (std::size_t j = 0; j < rem; ++j) {
        double t;
        if (mode == 0)
            t = tail_x[j] * tail_y[j];
        else if (mode == 1)
            t = std::fabs(tail_x[j] - tail_y[j]);
        else
            t = tail_x[j];
        s[j] = s[j] + t;
    }
    return (s[0] + s[1]) + (s[2] + s[3]);
}

}  // namespace

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) {
        double t = a * x[i];
        y[i] = y[i] + t;
    }
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    return finish(acc, x + i, y + i, n - i, 0);
}

double l1_distance(const double* x, const double* y, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, d));
    }
    return finish(acc, x + i, y + i, n - i, 1);
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    return finish(acc, x + i, nullptr, n - i, 2);
}

}  // namespace gwmut::kernels::avx2
