#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gwmut/laws.hpp"

namespace gwmut {

// Law of (T, M) under P_a on k = 0..kmax, l = 0..lmax.
struct PairPmf {
    std::size_t kmax = 0, lmax = 0;
    std::vector<double> v;  // row-major in k
    long long ancestors = 1;
    int n = 1;
    double dropped_mass = 0.0;

    PairPmf() = default;
    PairPmf(std::size_t kmax_, std::size_t lmax_)
        : kmax(kmax_), lmax(lmax_), v((kmax_ + 1) * (lmax_ + 1), 0.0) {}
    double& at(std::size_t k, std::size_t l) { return v[k * (lmax + 1) + l]; }
    double at(std::size_t k, std::size_t l) const { return v[k * (lmax + 1) + l]; }
    double get(std::size_t k, std::size_t l) const { return k <= kmax && l <= lmax ? at(k, l) : 0.0; }
    const double* row(std::size_t k) const { return v.data() + k * (lmax + 1); }
    double* row(std::size_t k) { return v.data() + k * (lmax + 1); }
    double total() const;
    // Marginal of the second coordinate.
    std::vector<double> l_marginal() const;
    // sum P(k,l) x^k y^l
    double pgf(double x, double y) const;
};

// 2-d convolution of pair laws (branching property), truncated to a's shape.
PairPmf convolve_pairs(const PairPmf& a, const PairPmf& b);

// Smallest fixed point of phi = x g(phi, y). Monotone iteration from 0,
// accelerated by Newton steps taken from below the root.
double solve_phi(const JointLaw& joint, double x, double y);

// P_a(T0 = k, M1 = l) = (a/k) pi^{*k}_{k-a, l}. lmax defaults to kmax * max offspring.
PairPmf law_T0M1(long long a, const JointLaw& joint, std::size_t kmax, std::size_t lmax = 0,
                 double tol = 1e-6);

// Smallest root of f(s) = s for a pgf given by its coefficients.
double extinction_prob(const std::vector<double>& f);

// f, m, q for the mutant chain of a joint law.
struct PgfContext {
    const JointLaw* joint = nullptr;
    double m = 0.0;        // E M1
    double q = 1.0;        // extinction probability of M
    double fprime_q = 0.0; // f'(q)

    explicit PgfContext(const JointLaw& j);
    double g(double s, double y) const { return joint->pgf(s, y); }
    double f(double y) const { return solve_phi(*joint, 1.0, y); }
    double f_derivative(double y) const;
    // f iterated n times.
    double f_iter(int n, double y) const;
};

// n-step law P^n_{(., j), (k, l)} of the type chain from j mutants.
PairPmf chain_transition(const JointLaw& joint, int n, long long j, std::size_t kmax,
                         std::size_t lmax = 0, double tol = 1e-6);
// Same table with an explicit placeholder first coordinate i, which the
// transition law ignores.
PairPmf chain_transition_from(long long i, const JointLaw& joint, int n, long long j,
                              std::size_t kmax, std::size_t lmax = 0, double tol = 1e-6);
// Number of times the composition asked for P_j(T0 = k) with j > k (must stay 0).
long long composition_violations();

// Q^n = l q^{l-j} / (j f'(q)^n) P^n.
PairPmf q_transition(const JointLaw& joint, int n, long long j, std::size_t kmax,
                     std::size_t lmax = 0, double tol = 1e-6);

// P^up_a(T0 = k, M1 = l) = (l / (m k)) pi^{*k}_{k-a, l}.
PairPmf spine_law(long long a, const JointLaw& joint, std::size_t kmax, std::size_t lmax = 0,
                  double tol = 1e-6);

// P(T_{n-1} = k, M_n = l | M_n > 0) from one ancestor.
PairPmf yaglom_pmf(const JointLaw& joint, int n, std::size_t kmax, std::size_t lmax = 0,
                   double tol = 1e-6);

// pmf with pgf f'(s)/m.
std::vector<double> immigration_pgf_coeffs(const std::vector<double>& f, std::size_t kmax);

// Coefficients of f (law of M1 from one ancestor) up to lmax, from law_T0M1.
std::vector<double> mutant_offspring_pmf(const JointLaw& joint, std::size_t kmax, std::size_t lmax = 0);

double pgf_eval(const std::vector<double>& coeffs, double s);

}  // namespace gwmut
