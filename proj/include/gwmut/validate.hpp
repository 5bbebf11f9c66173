#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gwmut/exact.hpp"
#include "gwmut/forest.hpp"
#include "gwmut/rng.hpp"
#include "gwmut/scaling.hpp"

namespace gwmut {

using Json = nlohmann::json;

struct TestReport {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    std::int64_t n_samples = 0;
    bool pass = false;
    std::uint64_t seed = 0;
    Json params = Json::object();
    Json details = Json::object();
    Json to_json() const;
};

struct SweepEntry {
    double n = 0.0;
    double distance = 0.0;
    std::string test;
    std::uint64_t seed = 0;
    Json regime = Json::object();
    Json details = Json::object();
};

struct SweepReport {
    std::string name;
    std::vector<double> grid;
    std::vector<SweepEntry> entries;
    double threshold = 0.0;
    bool pass = false;
    std::uint64_t seed = 0;
    Json params = Json::object();
    Json details = Json::object();
    Json to_json() const;
    // n,distance,test
    std::string to_csv() const;
    std::vector<double> distances(const std::string& test) const;
};

// ---- statistics ----

// Sup distance between empirical CDFs. +inf entries (censored values) are fine.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);
// Asymptotic two-sample KS critical value at level `level` (0.05 -> 1.358).
double ks_critical(std::size_t n, std::size_t m, double level = 0.05);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_se(const std::vector<double>& v);

// Pearson chi-square goodness of fit; cells with expected count below
// min_expected are pooled. Returns the p-value.
double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& probs,
                         double min_expected = 5.0);

// ---- replicate runner ----

int default_workers();

// f(rep, rng) for rep = 0..count-1 with rng = substream(seed, rep, tag).
// Results are stored by replicate index, so the output (and anything folded
// from it in order) does not depend on the worker count. If replicates
// throw, the exception of the lowest index is rethrown.
template <class F>
auto run_replicates(std::int64_t count, std::uint64_t seed, std::uint32_t tag, int workers, F f)
    -> std::vector<decltype(f(std::int64_t{}, std::declval<Rng&>()))> {
    using R = decltype(f(std::int64_t{}, std::declval<Rng&>()));
    std::vector<R> out(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
    if (count <= 0) return out;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::int64_t>(count, 256))));
    const std::int64_t chunk = std::max<std::int64_t>(1, std::min<std::int64_t>(64, count / (8 * workers)));
    std::atomic<std::int64_t> next{0};
    std::mutex mu;
    std::int64_t failed_at = std::numeric_limits<std::int64_t>::max();
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            const std::int64_t begin = next.fetch_add(chunk);
            if (begin >= count) return;
            const std::int64_t end = std::min(count, begin + chunk);
            for (std::int64_t i = begin; i < end; ++i) {
                try {
                    Rng rng = substream(seed, static_cast<std::uint64_t>(i), tag);
                    out[static_cast<std::size_t>(i)] = f(i, rng);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (i < failed_at) {
                        failed_at = i;
                        failure = std::current_exception();
                    }
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

// ---- regimes ----

enum class AncestorRule {
    Calibrated,  // stable: a = x n (alpha - 1)^{-1/alpha}, the scale on which T0 / r(n) -> tau_x
    Literal,     // stable: a = x r(n) p(n)
};

struct Regime {
    BranchingMechanism mech;
    double n = 0.0, x = 1.0, c = 1.0;
    double p = 0.0;
    double r = 0.0;
    std::int64_t a = 1;
    double literal_a = 0.0;
    double unit = 0.0;     // ancestors per unit of limiting mass
    double t_scale = 0.0;  // T ~ t_scale (1 / b1)
    double m_scale = 0.0;  // M ~ m_scale (1 / b2)
    double beta = 1.0;     // M / m_scale -> beta * (limit of T / t_scale)
    double x_eff = 1.0;    // initial mass of the limit
    AncestorRule rule = AncestorRule::Calibrated;
    Json to_json() const;
};

// Stable mechanisms need a law with a Pareto tail of the same index; finite
// variance ones a law without tail whose variance matches sigma2.
Regime make_regime(const OffspringLaw& plus, const BranchingMechanism& mech, double n, double x, double c,
                   AncestorRule rule = AncestorRule::Calibrated);

// ---- tests ----

// TV on the table's support (optionally only rows k <= kcut) plus the
// out-of-support mass.
TestReport pmf_vs_sample(const PairPmf& pmf, const std::vector<std::pair<std::int64_t, std::int64_t>>& samples,
                         double threshold, std::size_t kcut = std::numeric_limits<std::size_t>::max());

// E[Y_{n+1} | M_n = j] = Y_n(j) with Y_n = M_n q^{M_n - a} / f'(q)^n, for the
// (up to three) most frequent states j >= 1 with at least min_hits hits.
TestReport martingale_check(const JointLaw& joint, std::int64_t a, int n, std::int64_t N, std::uint64_t seed,
                            int workers = 1, std::int64_t min_hits = 1000);

struct TailConfig {
    OffspringLaw plus;
    double c = 1.0;
    std::vector<double> n_grid{1e2, 1e3, 1e4};
    double s = 1.0, t = 1.0;
    std::int64_t N = 100'000;      // minimum number of single-ancestor trees per n
    std::int64_t min_hits = 1000;  // raise the tree count so this many exceedances are expected
    AncestorRule rule = AncestorRule::Calibrated;
    double threshold = 0.15;
    int workers = 1;
};

// prefactor * P_1(T0 > s r, M1 > t r p) against nu-bar(s ^ t); prefactor is
// the calibrated unit (default) or r p. Also reports r pi+(n y) and the
// clone/total tail ratio as diagnostics.
SweepReport tail_scaling_check(const TailConfig& cfg, std::uint64_t seed);

enum class SweepKind { Pair, Chain, AlleleTree, Conditioned };
const char* sweep_kind_name(SweepKind k);

struct SweepConfig {
    OffspringLaw plus;
    BranchingMechanism mech;
    double x = 1.0, c = 1.0;
    std::vector<double> n_grid{1e2, 1e3, 1e4};
    AncestorRule rule = AncestorRule::Calibrated;
    double censor = 100.0;  // pair values beyond censor (in limit units) compare as +inf
    int steps = 3;          // chain / conditioned: k = 0..steps-1
    int depth = 1;          // allele tree levels compared
    double eps = 1e-4;      // CSBP tree jump cutoff
    std::vector<std::pair<double, double>> st{{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}};
    double threshold = 0.02;  // KS (pair, allele_tree); chain / conditioned use 3 standard errors
    int workers = 1;
};

SweepReport convergence_sweep(const SweepConfig& cfg, SweepKind what, std::int64_t N, std::uint64_t seed);

// Sum_{|u|=k} A_u = T_k and Sum_{|u|=k} d_u = M_{k+1} on forest-built allele
// trees, plus decreasing sibling order. Replicates that hit a cap are counted
// and skipped.
TestReport allele_identity_check(const JointLaw& joint, std::int64_t a, int depth, std::int64_t N,
                                 std::uint64_t seed, const ForestCaps& caps, int workers = 1);

struct RankConfig {
    OffspringLaw plus;
    BranchingMechanism mech;
    double c = 1.0;
    double b = 1.0;
    std::vector<double> n_grid{1e2, 1e3};
    AncestorRule rule = AncestorRule::Calibrated;
    double censor = 100.0;
    double threshold = 0.02;
    int workers = 1;
};

// Blocks of b * unit single-ancestor pairs; the top three T0 / r(n) of each
// block against the PRM order statistics with intensity b nu.
SweepReport ranked_jump_check(const RankConfig& cfg, std::int64_t N, std::uint64_t seed);

// P(k-th largest atom <= z) for a PRM with intensity b nu.
double prm_rank_cdf(const BranchingMechanism& mech, double b, int k, double z);

}  // namespace gwmut
