#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwmut/laws.hpp"
#include "gwmut/rng.hpp"

namespace gwmut {

// Continuum reproduction: Stable(alpha) with Levy density c'_alpha y^{-1-1/alpha},
// or FiniteVariance(c, sigma2) with density c (2 pi sigma2 y^3)^{-1/2} exp(-c^2 y / (2 sigma2)).
struct BranchingMechanism {
    enum class Kind { Stable, FiniteVariance };
    Kind kind = Kind::Stable;
    double alpha = 1.5;
    double c = 1.0;
    double sigma2 = 1.0;

    static BranchingMechanism stable(double alpha);
    static BranchingMechanism finite_variance(double c, double sigma2);

    bool is_stable() const { return kind == Kind::Stable; }
    std::string describe() const;

    // kappa(lambda) = int (1 - e^{-lambda y}) nu(dy)
    double cumulant(double lambda) const;
    // nu((z, inf))
    double tail(double z) const;
    double levy_density(double y) const;
    // y nu(y), written so it stays finite as y -> 0
    double size_biased_density(double y) const;
    // Laplace transform of the immigration law z nu(dz) (normalized in the
    // finite-variance case; kappa' in the stable case).
    double immigration(double lambda) const;
    // int_0^eps y nu(dy): mean mass of the jumps below eps per unit length.
    double small_jump_mean(double eps) const;

    // 1/Gamma(3 - alpha)
    double c_alpha() const;
    // alpha^{-1} / Gamma(1 - alpha^{-1})
    double c_alpha_prime() const;
};

// kappa by numerical quadrature of the Levy integral (independent of the closed forms).
double cumulant_by_quadrature(const BranchingMechanism& mech, double lambda);

// 1 / E[1 - e^{-xi/n} - (xi/n) e^{-xi/n}], stored support plus the analytic tail.
double compute_r(const OffspringLaw& plus, double n);

double cumulant(const BranchingMechanism& mech, double lambda);

// One draw of tau_x, E exp(-lambda tau_x) = exp(-x kappa(lambda)).
double sample_subordinator(const BranchingMechanism& mech, double x, Rng& rng);

// Positive stable variate with E exp(-lambda S) = exp(-lambda^beta), 0 < beta < 1.
double sample_positive_stable(double beta, Rng& rng);
// Inverse Gaussian with the given mean and shape.
double sample_inverse_gaussian(double mean, double shape, Rng& rng);

// Jumps of tau on an interval of length x that exceed eps, decreasing.
std::vector<double> sample_jump_ranks(const BranchingMechanism& mech, double x, double eps, Rng& rng);

struct CsbpNode {
    double mass = 0.0;
    std::int64_t parent = -1;
    std::int64_t first_child = -1;
    std::int64_t children = 0;
    std::int32_t depth = 0;
    std::int32_t ordinal = 0;
};

struct CsbpTree {
    std::vector<CsbpNode> nodes;  // breadth-first, root first
    std::vector<std::int64_t> level_start;
    double eps = 0.0;
    double dropped_mass = 0.0;  // expected mass of sub-eps jumps, over all expanded nodes
    int degenerate_level = -1;  // first level with total mass < eps, if any
    std::vector<std::int32_t> label(std::int64_t i) const;
    double level_mass(int k) const;
};

// Children of u are the ranked jumps above eps of an independent subordinator
// run over [0, Z_u].
CsbpTree build_csbp_tree(double x, const BranchingMechanism& mech, int depth, double eps, Rng& rng,
                         std::int64_t max_nodes = 10'000'000);

// Z_0 = x, Z_{k+1} = tau^{(k)}(Z_k).
std::vector<double> simulate_discrete_csbp(double x, const BranchingMechanism& mech, int steps, Rng& rng);

// Z_{k+1} = tau^{(k)}(Z_k) + I_k with I_k ~ Gamma(1/2, rate c^2/(2 sigma2)).
std::vector<double> simulate_csbpi_fv(double x, double c, double sigma2, int steps, Rng& rng);
// Same, rejecting Stable mechanisms (their immigration measure has infinite mass).
std::vector<double> simulate_csbpi(double x, const BranchingMechanism& mech, int steps, Rng& rng);

// Laplace functional arguments Lambda_1..Lambda_k from lambda_i = s_{i-1} + beta t_i:
// Lambda_k = lambda_k, Lambda_i = lambda_i + kappa(Lambda_{i+1}).
std::vector<double> laplace_arguments(const BranchingMechanism& mech, const std::vector<double>& s,
                                      const std::vector<double>& t, double beta);

// E exp(-sum s_{i-1} Y_i - beta t_i Y_i) for the CSBP started at x.
double fdd_laplace_csbp(const BranchingMechanism& mech, double x, const std::vector<double>& s,
                        const std::vector<double>& t);
// Same with immigration: exp(-x kappa(Lambda_1)) prod iota(Lambda_i).
// beta = c (finite variance) or 1 (stable).
double fdd_laplace_csbpi(const BranchingMechanism& mech, double x, const std::vector<double>& s,
                         const std::vector<double>& t);

}  // namespace gwmut
