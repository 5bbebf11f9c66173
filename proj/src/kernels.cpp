#include "gwmut/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace gwmut::kernels {

namespace {

struct Table {
    void (*axpy)(double, const double*, double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*l1)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    Isa isa;
};

const Table kScalar{scalar::axpy, scalar::dot, scalar::l1_distance, scalar::sum, Isa::Scalar};
#ifdef GWMUT_HAVE_AVX2_KERNELS
const Table kAvx2{avx2::axpy, avx2::dot, avx2::l1_distance, avx2::sum, Isa::Avx2};
#endif

const Table* pick() {
    const char* env = std::getenv("GWMUT_ISA");
    if (env && std::strcmp(env, "scalar") == 0) return &kScalar;
#ifdef GWMUT_HAVE_AVX2_KERNELS
    if (cpu_has_avx2()) return &kAvx2;
#endif
    return &kScalar;
}

const Table*& active() {
    static const Table* t = pick();
    return t;
}

}  // namespace

bool cpu_has_avx2() {
#ifdef GWMUT_HAVE_AVX2_KERNELS
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() { return active()->isa; }

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool set_isa(Isa isa) {
    if (isa == Isa::Scalar) {
        active() = &kScalar;
        return true;
    }
#ifdef GWMUT_HAVE_AVX2_KERNELS
    if (cpu_has_avx2()) {
        active() = &kAvx2;
        return true;
    }
#endif
    return false;
}

void axpy(double a, const double* x, double* y, std::size_t n) { active()->axpy(a, x, y, n); }
double dot(const double* x, const double* y, std::size_t n) { return active()->dot(x, y, n); }
double l1_distance(const double* x, const double* y, std::size_t n) { return active()->l1(x, y, n); }
double sum(const double* x, std::size_t n) { return active()->sum(x, n); }

}  // namespace gwmut::kernels
