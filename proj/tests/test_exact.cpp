#include <cmath>

#include "doctest.h"
#include "gwmut/error.hpp"
#include "gwmut/exact.hpp"
#include "oracles.hpp"

using namespace gwmut;

namespace {

JointLaw lstar() { return thin_offspring(OffspringLaw::from_probs({0.5, 0.0, 0.5}), 0.5); }
JointLaw subcritical() { return thin_offspring(OffspringLaw::from_probs({0.6, 0.0, 0.4}), 0.5); }

}  // namespace

TEST_SUITE("exact") {

TEST_CASE("fixed point of the bivariate pgf") {
    auto j = lstar();
    CHECK(solve_phi(j, 1.0, 1.0) == 1.0);
    CHECK(solve_phi(j, 0.0, 0.3) == 0.0);
    CHECK(solve_phi(j, 1.0, 0.0) == doctest::Approx(4.0 - 2.0 * std::sqrt(3.0)).epsilon(1e-14));
    for (double x : {0.1, 0.5, 0.9, 1.0})
        for (double y : {0.0, 0.4, 1.0}) {
            const double phi = solve_phi(j, x, y);
            CHECK(std::fabs(phi - x * j.pgf(phi, y)) < 1e-13);
        }
    auto heavy = thin_offspring(build_critical_stable_law(1.5), 0.01);
    for (double x : {0.5, 0.99, 1.0}) {
        const double phi = solve_phi(heavy, x, 0.5);
        CHECK(std::fabs(phi - x * heavy.pgf(phi, 0.5)) < 1e-13);
    }
}

TEST_CASE("Lagrange law against tree enumeration") {
    auto j = lstar();
    auto t = law_T0M1(1, j, 80);
    CHECK(t.at(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.at(1, 2) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(t.at(1, 1) == 0.0);
    CHECK(t.at(2, 1) == doctest::Approx(0.125).epsilon(1e-15));
    for (int a : {1, 2, 3}) {
        auto tab = law_T0M1(a, j, 80);
        auto ref = oracle::enumerate_T0M1(oracle::thinned_atoms({0.5, 0.0, 0.5}, 0.5), a, 6);
        for (const auto& [kl, prob] : ref) CHECK(std::fabs(tab.get(kl.first, kl.second) - prob) < 1e-13);
        for (std::size_t k = 0; k < static_cast<std::size_t>(a); ++k)
            for (std::size_t l = 0; l <= tab.lmax; ++l) CHECK(tab.at(k, l) == 0.0);
    }
    CHECK_THROWS_AS(law_T0M1(1, j, 3), Error);
}

TEST_CASE("extinction probability") {
    CHECK(extinction_prob({0.5, 0.0, 0.5}) == 1.0);
    CHECK(extinction_prob({0.25, 0.0, 0.75}) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(extinction_prob({0.0, 1.0}), Error);
    auto law = lstar();
    PgfContext ctx(law);
    CHECK(ctx.q == 1.0);
    CHECK(ctx.m == doctest::Approx(1.0).epsilon(1e-15));
    const double h = 1e-7;
    CHECK((ctx.f(1.0) - ctx.f(1.0 - h)) / h == doctest::Approx(ctx.m).epsilon(1e-6));
}

TEST_CASE("chain transitions") {
    auto j = lstar();
    auto p1 = chain_transition(j, 1, 1, 80);
    auto t = law_T0M1(1, j, 80);
    for (std::size_t i = 0; i < t.v.size(); ++i) CHECK(p1.v[i] == t.v[i]);
    auto p12 = chain_transition(j, 1, 2, 80);
    auto tt = convolve_pairs(t, t);
    for (std::size_t i = 0; i < tt.v.size(); ++i) CHECK(std::fabs(p12.v[i] - tt.v[i]) < 1e-15);
    auto p2 = chain_transition(j, 2, 1, 120);
    CHECK(p2.total() + p2.dropped_mass == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p2.dropped_mass < 1e-6);
    // the placeholder first coordinate is irrelevant
    auto a = chain_transition_from(1, j, 2, 2, 120);
    auto b = chain_transition_from(7, j, 2, 2, 120);
    CHECK(a.v == b.v);
    CHECK(composition_violations() == 0);
}

TEST_CASE("key identity phi_n = f_{n-1}(phi)") {
    for (auto j : {subcritical(), lstar()}) {
        PgfContext ctx(j);
        for (int n = 1; n <= 4; ++n) {
            auto tab = chain_transition(j, n, 1, 120, 0, 1e-3);
            for (int xi = 0; xi < 5; ++xi)
                for (int yi = 0; yi < 5; ++yi) {
                    const double x = xi / 4.0, y = yi / 4.0;
                    const double lhs = tab.pgf(x, y);
                    const double rhs = ctx.f_iter(n - 1, solve_phi(j, x, y));
                    // at x = y = 1 the table is short by its dropped mass
                    CHECK(std::fabs(lhs - rhs) < 1e-10 + (x == 1.0 && y == 1.0 ? tab.dropped_mass : 0.0));
                }
        }
    }
}

TEST_CASE("h-transform tables") {
    auto j = lstar();
    auto q1 = q_transition(j, 1, 1, 60);
    CHECK(q1.at(2, 1) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(q1.at(1, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(q1.total() == doctest::Approx(1.0).epsilon(1e-6));
    auto s = spine_law(1, j, 60);
    CHECK(s.at(1, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(s.at(2, 1) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(s.total() == doctest::Approx(1.0).epsilon(1e-6));
    for (auto law : {lstar(), subcritical()}) {
        PgfContext ctx(law);
        for (int n = 1; n <= 2; ++n)
            for (long long jj = 1; jj <= 3; ++jj) {
                auto p = chain_transition(law, n, jj, 120, 0, 1e-4);
                double mart = 0.0;
                for (std::size_t k = 0; k <= p.kmax; ++k)
                    for (std::size_t l = 0; l <= p.lmax; ++l)
                        mart += double(l) * std::pow(ctx.q, double(l) - double(jj)) /
                                (double(jj) * std::pow(ctx.fprime_q, n)) * p.at(k, l);
                CHECK(std::fabs(mart - 1.0) < 1e-3);
            }
    }
}

TEST_CASE("Yaglom conditional laws") {
    auto j = lstar();
    auto y1 = yaglom_pmf(j, 1, 120);
    CHECK(y1.at(1, 2) == doctest::Approx(0.125 / (1.0 - (4.0 - 2.0 * std::sqrt(3.0)))).epsilon(1e-12));
    CHECK(y1.at(1, 0) == 0.0);
    CHECK(std::fabs(y1.total() - 1.0) < 1e-10);
    auto super = thin_offspring(OffspringLaw::from_probs({0.2, 0.0, 0.8}), 0.5);
    CHECK_THROWS_AS(yaglom_pmf(super, 1, 30), Error);
}

TEST_CASE("immigration law") {
    auto c = immigration_pgf_coeffs({0.25, 0.0, 0.75}, 5);
    CHECK(c[1] == doctest::Approx(1.0));
    CHECK(c[0] == 0.0);
    auto d = immigration_pgf_coeffs({0, 0, 0, 0, 1.0}, 5);
    CHECK(d[3] == doctest::Approx(1.0));
    std::vector<double> f{0.3, 0.2, 0.1, 0.4};
    auto g = immigration_pgf_coeffs(f, 5);
    double mean = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) mean += k * g[k];
    // f''(1) / f'(1)
    CHECK(mean == doctest::Approx((2 * 0.1 + 6 * 0.4) / (0.2 + 2 * 0.1 + 3 * 0.4)));
}

}
