#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "gwmut/error.hpp"
#include "gwmut/io.hpp"
#include "gwmut/validate.hpp"

using namespace gwmut;

TEST_SUITE("validate") {

TEST_CASE("two-sample KS by hand") {
    CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_two_sample({1, 2, 3}, {2, 3, 4}) == doctest::Approx(1.0 / 3.0));
    CHECK(ks_two_sample({1, 1, 1, 1}, {2, 2}) == 1.0);
    // censored values sit at +inf and tie with each other
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(ks_two_sample({1, inf}, {1, inf}) == 0.0);
    CHECK(ks_two_sample({1, inf}, {1, 2}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_two_sample({}, {1}), Error);
}

TEST_CASE("one-sample KS by hand") {
    auto uni = [](double x) { return std::clamp(x, 0.0, 1.0); };
    // points 0.1, 0.5: D = max(0.5 - 0.1, 0.5 - 0.5, 1 - 0.5, 0.5 - 0.5) = 0.5
    CHECK(ks_one_sample({0.5, 0.1}, uni) == doctest::Approx(0.5));
    CHECK(ks_one_sample({0.25, 0.75}, uni) == doctest::Approx(0.25));
}

TEST_CASE("KS is invariant under relabeling") {
    Rng rng(3);
    std::vector<double> a(500), b(700);
    for (auto& v : a) v = uniform01(rng);
    for (auto& v : b) v = uniform01(rng) * 1.1;
    const double d = ks_two_sample(a, b);
    std::reverse(a.begin(), a.end());
    std::shuffle(b.begin(), b.end(), rng);
    CHECK(ks_two_sample(a, b) == d);
    CHECK(d >= 0.0);
}

TEST_CASE("chi-square p-values") {
    std::vector<double> probs(6, 1.0 / 6.0);
    CHECK(chi_square_pvalue({100, 98, 103, 99, 101, 99}, probs) > 0.9);
    CHECK(chi_square_pvalue({200, 50, 100, 100, 100, 50}, probs) < 1e-10);
}

TEST_CASE("replicate runner does not depend on the worker count") {
    auto f = [](std::int64_t i, Rng& rng) { return static_cast<double>(i) + uniform01(rng); };
    auto one = run_replicates(1000, 42, 0, 1, f);
    auto four = run_replicates(1000, 42, 0, 4, f);
    CHECK(one == four);
    CHECK(run_replicates(1000, 43, 0, 1, f) != one);
    auto failing = [](std::int64_t i, Rng&) -> int {
        if (i == 17 || i == 900) throw Error(ErrorKind::EmptySample, std::to_string(i));
        return 0;
    };
    try {
        run_replicates(1000, 1, 0, 4, failing);
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
}

TEST_CASE("pmf_vs_sample") {
    PairPmf point(3, 3);
    point.at(2, 1) = 1.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> same(50, {2, 1});
    CHECK(pmf_vs_sample(point, same, 0.005).statistic == 0.0);
    CHECK_THROWS_AS(pmf_vs_sample(point, {}, 0.005), Error);

    auto plus = OffspringLaw::from_probs({0.5, 0.0, 0.5});
    JointLaw j = thin_offspring(plus, 0.5);
    PairPmf pmf = law_T0M1(1, j, 80);
    std::vector<double> w(pmf.v.begin(), pmf.v.end());
    AliasTable table(w);
    Rng rng(9);
    std::vector<std::pair<std::int64_t, std::int64_t>> s(1'000'000);
    for (auto& x : s) {
        const std::size_t c = table.sample(rng);
        x = {static_cast<std::int64_t>(c / (pmf.lmax + 1)), static_cast<std::int64_t>(c % (pmf.lmax + 1))};
    }
    TestReport r = pmf_vs_sample(pmf, s, 0.005);
    CHECK(r.pass);
    CHECK(r.statistic < 0.005);
    // a sample from a different law fails
    for (auto& x : s) x.second += 1;
    CHECK_FALSE(pmf_vs_sample(pmf, s, 0.005).pass);
}

TEST_CASE("martingale check") {
    SUBCASE("critical") {
        auto plus = OffspringLaw::from_probs({0.5, 0.0, 0.5});
        JointLaw j = thin_offspring(plus, 0.5);
        TestReport r = martingale_check(j, 1, 2, 200'000, 5);
        CHECK(r.pass);
        CHECK(r.details["strata"].size() == 3);
        std::set<int> js;
        for (const auto& st : r.details["strata"]) js.insert(st["j"].get<int>());
        CHECK(js == std::set<int>{1, 2, 3});
    }
    SUBCASE("subcritical") {
        auto plus = OffspringLaw::from_probs({0.6, 0.0, 0.4});
        JointLaw j = thin_offspring(plus, 0.5);
        TestReport r = martingale_check(j, 1, 2, 200'000, 1);
        CHECK(r.params["fprime_q"].get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
        CHECK(r.pass);
    }
    SUBCASE("deterministic line") {
        auto plus = OffspringLaw::from_probs({0.0, 1.0});
        JointLaw j = thin_offspring(plus, 0.5);
        TestReport r = martingale_check(j, 1, 2, 5000, 7);
        CHECK(r.statistic == 0.0);
        CHECK(r.pass);
    }
    SUBCASE("too few hits") {
        auto plus = OffspringLaw::from_probs({0.5, 0.0, 0.5});
        JointLaw j = thin_offspring(plus, 0.5);
        CHECK_THROWS_AS(martingale_check(j, 1, 2, 100, 5), Error);
    }
}

TEST_CASE("PRM order statistics") {
    auto mech = BranchingMechanism::stable(1.5);
    CHECK(prm_rank_cdf(mech, 1.0, 1, 1.0) == doctest::Approx(std::exp(-1.0 / std::tgamma(1.0 / 3.0))).epsilon(1e-12));
    CHECK(prm_rank_cdf(mech, 1.0, 1, 1.0) == doctest::Approx(0.68847).epsilon(1e-5));
    // rank k CDF lies above rank k-1's
    for (double z : {0.1, 1.0, 5.0}) {
        CHECK(prm_rank_cdf(mech, 1.0, 2, z) >= prm_rank_cdf(mech, 1.0, 1, z));
        CHECK(prm_rank_cdf(mech, 1.0, 3, z) >= prm_rank_cdf(mech, 1.0, 2, z));
    }
    // nu-bar at the median of the largest atom halves when b doubles
    auto median = [&](double b) {
        double lo = 1e-6, hi = 1e6;
        for (int i = 0; i < 200; ++i) {
            const double mid = std::sqrt(lo * hi);
            (prm_rank_cdf(mech, b, 1, mid) < 0.5 ? lo : hi) = mid;
        }
        return lo;
    };
    CHECK(mech.tail(median(2.0)) == doctest::Approx(mech.tail(median(1.0)) / 2.0).epsilon(1e-6));
    // joint-tail target is symmetric in (s, t)
    CHECK(mech.tail(std::min(1.0, 2.0)) == mech.tail(std::min(2.0, 1.0)));
    CHECK(mech.tail(1.0) == doctest::Approx(0.37328).epsilon(1e-5));
}

TEST_CASE("regimes") {
    auto lstar = OffspringLaw::from_probs({0.5, 0.0, 0.5});
    auto fv = BranchingMechanism::finite_variance(1.0, 1.0);
    Regime g = make_regime(lstar, fv, 100, 1.0, 1.0);
    CHECK(g.a == 100);
    CHECK(g.t_scale == 1e4);
    CHECK(g.m_scale == 100);
    CHECK(g.p == 0.01);
    auto stable_law = build_critical_stable_law(1.5);
    CHECK_THROWS_AS(make_regime(stable_law, fv, 100, 1.0, 1.0), Error);
    CHECK_THROWS_AS(make_regime(lstar, BranchingMechanism::stable(1.5), 100, 1.0, 1.0), Error);
    CHECK_THROWS_AS(make_regime(lstar, BranchingMechanism::finite_variance(1.0, 2.0), 100, 1.0, 1.0), Error);
    Regime s = make_regime(stable_law, BranchingMechanism::stable(1.5), 1000, 1.0, 1.0);
    CHECK(s.a == std::llround(1000 * std::pow(0.5, -1.0 / 1.5)));
    CHECK(s.literal_a == doctest::Approx(s.r * s.p));
    Regime lit = make_regime(stable_law, BranchingMechanism::stable(1.5), 1000, 1.0, 1.0, AncestorRule::Literal);
    CHECK(lit.a == std::llround(s.r * s.p));
}

TEST_CASE("null calibration of the two-sample KS") {
    // target against target at the sweep threshold, 100 seeds
    auto mech = BranchingMechanism::stable(1.5);
    int passes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = substream(seed, 0, 99);
        std::vector<double> a(20000), b(20000);
        for (auto& v : a) v = sample_subordinator(mech, 1.0, rng);
        for (auto& v : b) v = sample_subordinator(mech, 1.0, rng);
        passes += ks_two_sample(a, b) < 0.02 ? 1 : 0;
    }
    CHECK(passes >= 95);
}

TEST_CASE("small sweeps are self-describing and deterministic") {
    SweepConfig cfg;
    cfg.plus = OffspringLaw::from_probs({0.5, 0.0, 0.5});
    cfg.mech = BranchingMechanism::finite_variance(1.0, 1.0);
    cfg.n_grid = {5, 10};
    SweepReport r1 = convergence_sweep(cfg, SweepKind::Pair, 2000, 11);
    cfg.workers = 3;
    SweepReport r2 = convergence_sweep(cfg, SweepKind::Pair, 2000, 11);
    CHECK(r1.to_json().dump() == r2.to_json().dump());
    REQUIRE(r1.entries.size() == 2);
    CHECK(r1.entries[0].seed != r1.entries[1].seed);
    CHECK(r1.entries[1].regime["a"] == 10);
    CHECK(r1.to_csv().rfind("n,distance,test\n", 0) == 0);
    auto j = r1.to_json();
    for (const char* key : {"name", "grid", "threshold", "pass", "seed", "params", "entries"}) CHECK(j.contains(key));

    for (SweepKind k : {SweepKind::Chain, SweepKind::AlleleTree, SweepKind::Conditioned}) {
        cfg.depth = 2;
        SweepReport r = convergence_sweep(cfg, k, 500, 3);
        CHECK(r.entries.size() == 2);
        CHECK(r.entries[0].distance >= 0.0);
    }
    cfg.n_grid = {10, 5};
    CHECK_THROWS_AS(convergence_sweep(cfg, SweepKind::Pair, 10, 1), Error);
    cfg.n_grid = {5, 10};
    cfg.mech = BranchingMechanism::stable(1.5);
    try {
        convergence_sweep(cfg, SweepKind::Pair, 10, 1);
        FAIL("expected RegimeMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RegimeMismatch);
    }
}

TEST_CASE("tail and rank sweeps at small n") {
    TailConfig tc;
    tc.plus = build_critical_stable_law(1.5);
    tc.n_grid = {20, 50};
    tc.N = 20000;
    tc.min_hits = 200;
    SweepReport t = tail_scaling_check(tc, 4);
    REQUIRE(t.entries.size() == 2);
    CHECK(t.entries[1].details["hits"].get<std::int64_t>() > 100);
    CHECK(t.entries[1].details.contains("clone_tail_ratio"));

    RankConfig rc;
    rc.plus = tc.plus;
    rc.mech = BranchingMechanism::stable(1.5);
    rc.n_grid = {20, 50};
    SweepReport rk = ranked_jump_check(rc, 300, 4);
    CHECK(rk.details["ranks_ordered"] == true);
}

TEST_CASE("allele identities on forest-built trees") {
    auto plus = OffspringLaw::from_probs({0.5, 0.0, 0.5});
    JointLaw j = thin_offspring(plus, 0.2);
    ForestCaps caps{200'000, 200};
    TestReport r = allele_identity_check(j, 3, 4, 400, 8, caps);
    CHECK(r.pass);
    CHECK(r.details["checked"].get<std::int64_t>() > 300);

    // one type only: every forest with a mutant is truncated and skipped
    TestReport t = allele_identity_check(j, 3, 4, 200, 9, ForestCaps{200'000, 1});
    CHECK(t.details["capped"].get<std::int64_t>() > 100);
    CHECK(t.details["checked"].get<std::int64_t>() + t.details["capped"].get<std::int64_t>() == 200);
}

}  // TEST_SUITE

TEST_SUITE("io") {

TEST_CASE("number formatting") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1e-20) == "9.9999999999999995e-21");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("law JSON round trip") {
    for (const char* spec : {"lstar", "stable:1.5"}) {
        std::optional<double> p;
        OffspringLaw law = parse_law_spec(spec, &p);
        auto j = law_to_json(law, p);
        std::optional<double> p2;
        OffspringLaw back = law_from_json(nlohmann::json::parse(j.dump()), &p2);
        CHECK(back == law);
        CHECK(p2 == p);
    }
    CHECK_THROWS_AS(parse_law_spec("stable:x"), Error);
    CHECK_THROWS_AS(law_from_json(nlohmann::json{{"probs", {0.5, 0.4}}}), Error);
}

TEST_CASE("config hash") {
    nlohmann::json a = {{"seed", 1}, {"law", "lstar"}};
    nlohmann::json b = {{"law", "lstar"}, {"seed", 1}};
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    // FNV-1a of "{}"
    CHECK(config_hash(nlohmann::json::object()) == "08f44b07b5901a25");
}

TEST_CASE("pair pmf CSV") {
    auto plus = OffspringLaw::from_probs({0.5, 0.0, 0.5});
    JointLaw j = thin_offspring(plus, 0.5);
    PairPmf pmf = law_T0M1(1, j, 80);
    std::ostringstream os;
    write_pair_pmf_csv(os, pmf);
    CHECK(os.str().rfind("k,l,prob\n1,0,0.5\n", 0) == 0);
}

}  // TEST_SUITE
