#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "doctest.h"
#include "gwmut/error.hpp"
#include "gwmut/scaling.hpp"

using namespace gwmut;

namespace {

// mean and standard error of e^{-lambda X}
template <class Draw>
std::pair<double, double> laplace_mc(Draw&& draw, double lambda, int N) {
    double s = 0, s2 = 0;
    for (int i = 0; i < N; ++i) {
        const double v = std::exp(-lambda * draw());
        s += v;
        s2 += v * v;
    }
    const double m = s / N;
    return {m, std::sqrt((s2 / N - m * m) / N)};
}

double integrate(const std::function<double(double)>& f, double a) {
    boost::math::quadrature::exp_sinh<double> es;
    return es.integrate(f, a, std::numeric_limits<double>::infinity(), 1e-12);
}

}  // namespace

TEST_SUITE("scaling") {

TEST_CASE("stable cumulant matches the Levy integral") {
    for (double alpha : {1.2, 1.5, 1.8}) {
        auto m = BranchingMechanism::stable(alpha);
        CHECK(m.cumulant(0.0) == 0.0);
        for (double lam : {0.5, 1.0, 2.0}) {
            CHECK(std::fabs(cumulant_by_quadrature(m, lam) - std::pow(lam, 1.0 / alpha)) < 1e-6);
            const double h = 1e-5;
            const double fd = (m.cumulant(lam + h) - m.cumulant(lam - h)) / (2 * h);
            CHECK(std::fabs(fd - m.immigration(lam)) < 1e-6);
        }
        // increasing and concave on a grid
        double prev = 0.0, prev_inc = INFINITY;
        for (int i = 1; i <= 50; ++i) {
            const double v = m.cumulant(0.1 * i);
            CHECK(v > prev);
            CHECK(v - prev <= prev_inc + 1e-15);
            prev_inc = v - prev;
            prev = v;
        }
    }
    CHECK(BranchingMechanism::stable(1.5).cumulant(1.0) == 1.0);
}

TEST_CASE("finite-variance mechanism") {
    auto m = BranchingMechanism::finite_variance(1.0, 1.0);
    CHECK(m.cumulant(1.0) == doctest::Approx(std::sqrt(3.0) - 1.0).epsilon(1e-14));
    CHECK(std::fabs(cumulant_by_quadrature(m, 1.0) - (std::sqrt(3.0) - 1.0)) < 1e-8);
    auto m2 = BranchingMechanism::finite_variance(1.7, 0.6);
    CHECK(std::fabs(cumulant_by_quadrature(m2, 0.8) - m2.cumulant(0.8)) < 1e-8);
    CHECK(m2.size_biased_density(0.3) == doctest::Approx(0.3 * m2.levy_density(0.3)).epsilon(1e-14));
    for (double z : {0.01, 0.5, 3.0}) {
        const double num = integrate([&](double y) { return m2.levy_density(y); }, z);
        CHECK(m2.tail(z) == doctest::Approx(num).epsilon(1e-8));
    }
    // z nu(z) is a probability density with mean sigma2 / c^2
    const double mass = integrate([&](double y) { return m2.size_biased_density(y); }, 0.0);
    const double mean = integrate([&](double y) { return y * m2.size_biased_density(y); }, 0.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(mean == doctest::Approx(0.6 / (1.7 * 1.7)).epsilon(1e-8));
    const double lt = integrate([&](double y) { return std::exp(-0.9 * y) * m2.size_biased_density(y); }, 0.0);
    CHECK(m2.immigration(0.9) == doctest::Approx(lt).epsilon(1e-8));
    CHECK(m.immigration(1.0) == doctest::Approx(1.0 / std::sqrt(3.0)));
    Rng rng(4);
    CHECK_THROWS_AS(simulate_csbpi(1.0, BranchingMechanism::stable(1.5), 2, rng), Error);
    auto path = simulate_csbpi_fv(1.0, 1.0, 1.0, 3, rng);
    CHECK(path.size() == 4);
}

TEST_CASE("normalizer r(n)") {
    auto lstar = OffspringLaw::from_probs({0.5, 0.0, 0.5});
    CHECK(compute_r(lstar, 1000.0) == doctest::Approx(1e6).epsilon(2e-3));
    auto one = OffspringLaw::from_probs({0.0, 1.0});
    const double n = 50.0;
    CHECK(compute_r(one, n) == doctest::Approx(1.0 / (1.0 - std::exp(-1 / n) - std::exp(-1 / n) / n)).epsilon(1e-12));
    auto heavy = build_critical_stable_law(1.5);
    const double idx = std::log(compute_r(heavy, 1e4) / compute_r(heavy, 1e3)) / std::log(10.0);
    CHECK(std::fabs(idx - 1.5) < 0.1);
}

TEST_CASE("subordinator samplers hit the Laplace target") {
    Rng rng(8);
    auto st = BranchingMechanism::stable(1.5);
    for (double lam : {0.5, 1.0, 2.0}) {
        auto [m, se] = laplace_mc([&] { return sample_subordinator(st, 1.0, rng); }, lam, 100000);
        CHECK(std::fabs(m - std::exp(-std::pow(lam, 2.0 / 3.0))) < 3.5 * se);
    }
    auto [m2, se2] = laplace_mc([&] { return sample_subordinator(st, 2.5, rng); }, 0.7, 100000);
    CHECK(std::fabs(m2 - std::exp(-2.5 * st.cumulant(0.7))) < 3.5 * se2);
    auto fv = BranchingMechanism::finite_variance(1.3, 0.8);
    for (double lam : {0.3, 1.0, 4.0}) {
        auto [m, se] = laplace_mc([&] { return sample_subordinator(fv, 0.7, rng); }, lam, 100000);
        CHECK(std::fabs(m - std::exp(-0.7 * fv.cumulant(lam))) < 3.5 * se);
    }
    CHECK(sample_subordinator(st, 0.0, rng) == 0.0);
}

TEST_CASE("ranked jumps") {
    auto st = BranchingMechanism::stable(1.5);
    CHECK(st.tail(1.0) == doctest::Approx(1.0 / std::tgamma(1.0 / 3.0)).epsilon(1e-12));
    CHECK(std::exp(-st.tail(1.0)) == doctest::Approx(0.68853).epsilon(1e-4));
    Rng rng(12);
    const int N = 100000;
    double count = 0, count2 = 0, below = 0;
    for (int i = 0; i < N; ++i) {
        auto j = sample_jump_ranks(st, 1.0, 1.0, rng);
        for (std::size_t r = 1; r < j.size(); ++r) CHECK(j[r] < j[r - 1]);
        count += j.size();
        count2 += sample_jump_ranks(st, 2.0, 1.0, rng).size();
        auto k = sample_jump_ranks(st, 1.0, 1e-3, rng);
        below += !k.empty() && k[0] <= 1.0;
    }
    const double target = st.tail(1.0);
    CHECK(std::fabs(count / N - target) < 3 * std::sqrt(target / N));
    CHECK(std::fabs(count2 / N - 2 * target) < 3 * std::sqrt(2 * target / N));
    // largest atom below 1 with probability exp(-nu(1))
    CHECK(std::fabs(below / N - std::exp(-target)) < 3 * std::sqrt(0.25 / N));
    auto fv = BranchingMechanism::finite_variance(1.0, 1.0);
    auto j = sample_jump_ranks(fv, 5.0, 1e-3, rng);
    for (double z : j) CHECK(z > 1e-3);
}

TEST_CASE("csbp tree and discrete csbp") {
    auto st = BranchingMechanism::stable(1.5);
    Rng rng(21);
    auto t0 = build_csbp_tree(1.0, st, 0, 1e-6, rng);
    CHECK(t0.nodes.size() == 1);
    auto t = build_csbp_tree(1.0, st, 2, 1e-4, rng);
    for (std::int64_t i = 1; i < static_cast<std::int64_t>(t.nodes.size()); ++i) {
        CHECK(t.nodes[i].mass > 0.0);
        if (t.nodes[i].ordinal > 1) CHECK(t.nodes[i - 1].mass > t.nodes[i].mass);
    }
    auto [m, se] = laplace_mc([&] { return simulate_discrete_csbp(1.0, st, 1, rng)[1]; }, 1.0, 100000);
    CHECK(std::fabs(m - std::exp(-1.0)) < 3.5 * se);
    auto [m2, se2] = laplace_mc([&] { return simulate_discrete_csbp(1.0, st, 2, rng)[2]; }, 1.0, 100000);
    CHECK(std::fabs(m2 - std::exp(-1.0)) < 3.5 * se2);
    auto z = simulate_discrete_csbp(0.0, st, 3, rng);
    CHECK(z[3] == 0.0);
}

TEST_CASE("Laplace functionals") {
    auto st = BranchingMechanism::stable(1.5);
    CHECK(fdd_laplace_csbpi(st, 1.0, {1.0}, {0.0}) == doctest::Approx(2.0 / 3.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(fdd_laplace_csbpi(st, 1.0, {0.5}, {0.5}) == doctest::Approx(0.24525).epsilon(1e-4));
    CHECK_THROWS_AS(fdd_laplace_csbpi(st, 1.0, {0.0}, {0.0}), Error);
    auto fv = BranchingMechanism::finite_variance(1.0, 1.0);
    CHECK(fdd_laplace_csbpi(fv, 1.0, {1.0}, {0.0}) ==
          doctest::Approx(std::exp(-(std::sqrt(3.0) - 1.0)) / std::sqrt(3.0)).epsilon(1e-12));
    // two steps: Lambda_1 = s0 + t1 + kappa(s1 + t2)
    const double l2 = 0.3 + 0.2, l1 = 0.4 + 0.1 + st.cumulant(l2);
    CHECK(fdd_laplace_csbp(st, 2.0, {0.4, 0.3}, {0.1, 0.2}) == doctest::Approx(std::exp(-2.0 * st.cumulant(l1))));
    CHECK(fdd_laplace_csbpi(st, 2.0, {0.4, 0.3}, {0.1, 0.2}) ==
          doctest::Approx(std::exp(-2.0 * st.cumulant(l1)) * st.immigration(l1) * st.immigration(l2)));
}

}
