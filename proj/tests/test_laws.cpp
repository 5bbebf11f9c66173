#include <cmath>

#include "doctest.h"
#include "gwmut/error.hpp"
#include "gwmut/laws.hpp"

using namespace gwmut;

namespace {

OffspringLaw lstar_plus() { return OffspringLaw::from_probs({0.5, 0.0, 0.5}); }

double binom(int n, int k) { return std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)); }

}  // namespace

TEST_SUITE("laws") {

TEST_CASE("critical stable law") {
    auto law = build_critical_stable_law(1.5, 1e-9);
    CHECK(std::fabs(law.mean() - 1.0) < 1e-12);
    CHECK(law[2] / law[4] == doctest::Approx(std::pow(2.0, 2.5)).epsilon(1e-13));
    CHECK(law[1] == doctest::Approx(0.1).epsilon(1e-12));
    REQUIRE(law.tail().has_value());
    CHECK(law.tail()->alpha == 1.5);
    const std::size_t K = law.max_value();
    CHECK(law[K] == doctest::Approx(law.tail()->scale * std::pow(double(K), -2.5)).epsilon(1e-14));

    auto l12 = build_critical_stable_law(1.2, 1e-9);
    double stored = 0.0, excess = 0.0;
    for (std::size_t k = l12.size(); k-- > 0;) stored += l12[k];
    for (std::size_t k = 2; k < l12.size(); ++k) excess += (double(k) - 1.0) * l12[k];
    CHECK(std::fabs(stored + l12.truncation_mass() - 1.0) < 1e-12);
    CHECK(l12[0] > 0.0);
    // pi_0 = sum (k-1) pi_k, including the analytic part beyond storage
    CHECK(l12[0] >= excess);
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(OffspringLaw::from_probs({0.5, 0.2}), Error);
    CHECK_THROWS_AS(OffspringLaw::from_probs({1.5, -0.5}), Error);
    CHECK_THROWS_AS(build_critical_stable_law(2.5), Error);
}

TEST_CASE("thinning of the two-child law") {
    auto j = thin_offspring(lstar_plus(), 0.5);
    CHECK(j.prob(0, 0) == 0.5);
    CHECK(j.prob(1, 1) == 0.25);
    CHECK(j.prob(2, 0) == 0.125);
    CHECK(j.prob(0, 2) == 0.125);
    CHECK(j.prob(1, 0) == 0.0);
    CHECK(j.mean_clones() == 0.5);
    CHECK(j.mean_mutants() == 0.5);
}

TEST_CASE("thinning matches the binomial formula term by term") {
    std::vector<double> probs(65, 0.0);
    double tot = 0.0;
    for (int k = 0; k <= 64; ++k) tot += probs[k] = 1.0 / (1.0 + k * k);
    for (auto& q : probs) q /= tot;
    double s = 0.0;
    for (auto q : probs) s += q;
    probs[0] += 1.0 - s;
    auto plus = OffspringLaw::from_probs(probs);
    const double p = 0.3;
    auto j = thin_offspring(plus, p);
    for (int m = 0; m <= 64; ++m) {
        double row = 0.0;
        for (int l = 0; l <= m; ++l) {
            const double want = probs[m] * binom(m, l) * std::pow(1 - p, m - l) * std::pow(p, l);
            CHECK(std::fabs(j.prob(m - l, l) - want) < 1e-14);
            row += j.prob(m - l, l);
        }
        CHECK(std::fabs(row - probs[m]) < 1e-14);
    }
    // clone marginal is the (1-p)-thinning of xi+
    for (int k = 0; k <= 64; ++k) {
        double marg = 0.0, want = 0.0;
        for (int l = 0; k + l <= 64; ++l) marg += j.prob(k, l);
        for (int m = k; m <= 64; ++m) want += probs[m] * binom(m, k) * std::pow(1 - p, k) * std::pow(p, m - k);
        CHECK(std::fabs(marg - want) < 1e-13);
    }
}

TEST_CASE("convolution powers") {
    auto j = thin_offspring(lstar_plus(), 0.5);
    auto p0 = convolve_power(j, 0, 8);
    CHECK(p0.at(0, 0) == 1.0);
    CHECK(p0.total() == 1.0);
    auto p1 = convolve_power(j, 1, 8);
    for (std::size_t k = 0; k <= 8; ++k)
        for (std::size_t l = 0; l <= 8; ++l) CHECK(p1.get(k, l) == j.prob(k, l));
    auto p2 = convolve_power(j, 2, 8);
    CHECK(p2.at(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
    auto p5 = convolve_power(j, 5, 16);
    auto p23 = convolve(convolve_power(j, 2, 16), convolve_power(j, 3, 16));
    for (std::size_t i = 0; i < p5.v.size(); ++i) CHECK(std::fabs(p5.v[i] - p23.v[i]) < 1e-12);
    CHECK_THROWS_AS(convolve_power(j, 40, 4), Error);
}

TEST_CASE("exact Laplace identity of the thinned law") {
    auto j = thin_offspring(lstar_plus(), 0.5);
    CHECK(joint_laplace(j, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(joint_laplace(j, 60.0, 60.0) == doctest::Approx(0.5).epsilon(1e-15));
    for (double t : {0.1, 1.0, 3.0}) CHECK(std::fabs(joint_laplace(j, t, t) - (0.5 + 0.5 * std::exp(-2 * t))) < 1e-15);

    auto heavy = build_critical_stable_law(1.5, 1e-9);
    for (const auto& jl : {j, thin_offspring(heavy, 0.01)}) {
        const double p = jl.p();
        for (double lam : {0.0, 0.01, 0.3, 1.0, 5.0})
            for (double th : {0.0, 0.02, 0.5, 2.0, 9.0}) {
                const double u = -std::log(1.0 - (1.0 - (1.0 - p) * std::exp(-lam) - p * std::exp(-th)));
                CHECK(std::fabs(joint_laplace(jl, lam, th) - plus_laplace(jl.plus(), u)) < 1e-12);
            }
    }
}

}
