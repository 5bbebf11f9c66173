#include "gwmut/kernels.hpp"

#include <cmath>

namespace gwmut::kernels::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double t = a * x[i];
        y[i] = y[i] + t;
    }
}

double dot(const double* x, const double* y, std::size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (int j = 0; j < 4; ++j) {
            double t = x[i + j] * y[i + j];
            s[j] = s[j] + t;
        }
    }
    for (int j = 0; i < n; ++i, ++j) {
        double t = x[i] * y[i];
        s[j] = s[j] + t;
    }
    return (s[0] + s[1]) + (s[2] + s[3]);
}

double l1_distance(const double* x, const double* y, std::size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (int j = 0; j < 4; ++j) s[j] += std::fabs(x[i + j] - y[i + j]);
    }
    for (int j = 0; i < n; ++i, ++j) s[j] += std::fabs(x[i] - y[i]);
    return (s[0] + s[1]) + (s[2] + s[3]);
}

double sum(const double* x, std::size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (int j = 0; j < 4; ++j) s[j] += x[i + j];
    }
    for (int j = 0; i < n; ++i, ++j) s[j] += x[i];
    return (s[0] + s[1]) + (s[2] + s[3]);
}

}  // namespace gwmut::kernels::scalar
