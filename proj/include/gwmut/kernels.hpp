#pragma once

// Inner loops of the pmf convolution and table-evaluation code.
//
// Every kernel has a scalar reference and an AVX2 variant. The reductions use
// four interleaved partial sums (lane i takes indices i mod 4) combined as
// (s0 + s1) + (s2 + s3), in both variants, so the two paths agree bit for bit.

#include <cstddef>

namespace gwmut::kernels {

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);
// sum x[i] * y[i]
double dot(const double* x, const double* y, std::size_t n);
// sum |x[i] - y[i]|
double l1_distance(const double* x, const double* y, std::size_t n);
// sum x[i]
double sum(const double* x, std::size_t n);

enum class Isa { Scalar, Avx2 };

Isa active_isa();
const char* isa_name(Isa isa);
bool cpu_has_avx2();
// Forces a path; returns false if the CPU cannot run it. Not thread safe,
// meant for tests and the GWMUT_ISA override at startup.
bool set_isa(Isa isa);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double l1_distance(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
#define GWMUT_HAVE_AVX2_KERNELS 1
namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double l1_distance(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace gwmut::kernels
