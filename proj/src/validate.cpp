#include "gwmut/validate.hpp"

#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "gwmut/error.hpp"
#include "gwmut/io.hpp"

namespace gwmut {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed of grid point gi of a sweep of kind `kind`.
std::uint64_t entry_seed(std::uint64_t seed, std::uint64_t kind, std::size_t gi) {
    return mix64(seed ^ mix64((kind << 16) + gi + 1));
}

std::int64_t to_count(double v) {
    if (!(v >= 0.0)) return 0;
    if (v > 4e18) return static_cast<std::int64_t>(4e18);
    return static_cast<std::int64_t>(std::floor(v));
}

double capped(double v, double cap) { return v > cap ? kInf : v; }

double json_number(double v) { return std::isfinite(v) ? v : (v > 0 ? 1e308 : -1e308); }

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw Error(ErrorKind::InvalidRegime, "empty n grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw Error(ErrorKind::InvalidRegime, "n grid must increase strictly");
}

double ancestor_mass_unit(const BranchingMechanism& mech, double n, double c) {
    if (mech.is_stable()) return n * std::pow(mech.alpha - 1.0, -1.0 / mech.alpha);
    return n * c;
}

double plus_variance(const OffspringLaw& plus) {
    const double m = plus.mean();
    return plus.factorial_moment2() + m - m * m;
}

// Smallest cutoff z >= eps with len * nu((z, inf)) >= target count.
double jump_cutoff(const BranchingMechanism& mech, double len, double eps, double target = 200.0) {
    if (!(len > 0.0) || len * mech.tail(eps) <= target) return eps;
    double lo = std::log(eps), hi = lo + 1.0;
    while (len * mech.tail(std::exp(hi)) > target) hi += 2.0 * (hi - lo);
    for (int i = 0; i < 100 && hi - lo > 1e-6; ++i) {
        const double mid = 0.5 * (lo + hi);
        (len * mech.tail(std::exp(mid)) > target ? lo : hi) = mid;
    }
    return std::exp(lo);
}

}  // namespace

// ---- reports ----

Json TestReport::to_json() const {
    Json j;
    j["name"] = name;
    j["statistic"] = json_number(statistic);
    j["threshold"] = threshold;
    j["n_samples"] = n_samples;
    j["pass"] = pass;
    j["seed"] = seed;
    j["params"] = params;
    j["details"] = details;
    return j;
}

Json SweepReport::to_json() const {
    Json j;
    j["name"] = name;
    j["grid"] = grid;
    j["threshold"] = threshold;
    j["pass"] = pass;
    j["seed"] = seed;
    j["params"] = params;
    j["details"] = details;
    Json es = Json::array();
    for (const auto& e : entries) {
        Json je;
        je["n"] = e.n;
        je["distance"] = json_number(e.distance);
        je["test"] = e.test;
        je["seed"] = e.seed;
        je["regime"] = e.regime;
        je["details"] = e.details;
        es.push_back(je);
    }
    j["entries"] = es;
    return j;
}

std::string SweepReport::to_csv() const {
    std::ostringstream os;
    os << "n,distance,test\n";
    for (const auto& e : entries) os << format_double(e.n) << ',' << format_double(e.distance) << ',' << e.test << '\n';
    return os.str();
}

std::vector<double> SweepReport::distances(const std::string& test) const {
    std::vector<double> d;
    for (const auto& e : entries)
        if (e.test == test) d.push_back(e.distance);
    return d;
}

// ---- statistics ----

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySample, "KS needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return d;
}

double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
    if (a.empty()) throw Error(ErrorKind::EmptySample, "KS needs a non-empty sample");
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < a.size()) {
        const double v = a[i];
        const std::size_t i0 = i;
        while (i < a.size() && a[i] == v) ++i;
        const double F = std::isinf(v) && v > 0 ? 1.0 : cdf(v);
        d = std::max({d, static_cast<double>(i) / n - F, F - static_cast<double>(i0) / n});
    }
    return d;
}

double ks_critical(std::size_t n, std::size_t m, double level) {
    const double c = std::sqrt(-0.5 * std::log(level / 2.0));
    return c * std::sqrt((static_cast<double>(n) + static_cast<double>(m)) /
                         (static_cast<double>(n) * static_cast<double>(m)));
}

MeanSe mean_se(const std::vector<double>& v) {
    if (v.empty()) throw Error(ErrorKind::EmptySample, "mean of an empty sample");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(v.size());
    return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& probs,
                         double min_expected) {
    if (observed.size() != probs.size()) throw Error(ErrorKind::DomainError, "observed/probs size mismatch");
    double total = 0.0;
    for (double o : observed) total += o;
    if (!(total > 0.0)) throw Error(ErrorKind::EmptySample, "chi-square on an empty sample");
    double stat = 0.0, pool_o = 0.0, pool_e = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = probs[i] * total;
        if (e < min_expected) {
            pool_o += observed[i];
            pool_e += e;
            continue;
        }
        stat += (observed[i] - e) * (observed[i] - e) / e;
        ++cells;
    }
    if (pool_e > 0.0) {
        stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        ++cells;
    } else if (pool_o > 0.0) {
        return 0.0;
    }
    if (cells < 2) return 1.0;
    boost::math::chi_squared dist(cells - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

int default_workers() {
    const unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : static_cast<int>(h);
}

// ---- regimes ----

Json Regime::to_json() const {
    Json j;
    j["mechanism"] = mech.describe();
    j["n"] = n;
    j["x"] = x;
    j["c"] = c;
    j["alpha"] = mech.is_stable() ? mech.alpha : 2.0;
    j["p"] = p;
    j["r"] = r;
    j["a"] = a;
    j["literal_a"] = literal_a;
    j["unit"] = unit;
    j["b1"] = 1.0 / t_scale;
    j["b2"] = 1.0 / m_scale;
    j["beta"] = beta;
    j["x_eff"] = x_eff;
    j["rule"] = rule == AncestorRule::Calibrated ? "calibrated" : "literal";
    return j;
}

Regime make_regime(const OffspringLaw& plus, const BranchingMechanism& mech, double n, double x, double c,
                   AncestorRule rule) {
    if (!(n >= 1.0) || !(x > 0.0) || !(c > 0.0) || !(c <= n))
        throw Error(ErrorKind::InvalidRegime, "need n >= 1, x > 0, 0 < c <= n");
    Regime g;
    g.mech = mech;
    g.n = n;
    g.x = x;
    g.c = c;
    g.rule = rule;
    g.p = c / n;
    if (mech.is_stable()) {
        if (!plus.tail() || std::abs(plus.tail()->alpha - mech.alpha) > 1e-12)
            throw Error(ErrorKind::RegimeMismatch, "stable mechanism needs a law with a Pareto tail of the same index");
        g.r = compute_r(plus, n);
        g.literal_a = x * g.r * g.p;
        g.t_scale = g.r;
        g.m_scale = g.r * g.p;
        g.beta = 1.0;
        g.x_eff = x;
        g.unit = rule == AncestorRule::Calibrated ? ancestor_mass_unit(mech, n, c) : g.r * g.p;
        g.a = std::max<std::int64_t>(1, std::llround(x * g.unit));
    } else {
        if (plus.tail()) throw Error(ErrorKind::RegimeMismatch, "finite-variance mechanism with a heavy-tailed law");
        const double v = plus_variance(plus);
        if (std::abs(v - mech.sigma2) > 1e-9 * std::max(1.0, v) || std::abs(mech.c - c) > 1e-12)
            throw Error(ErrorKind::RegimeMismatch, "mechanism (c, sigma2) must match the regime c and the law's variance");
        g.r = n * n;
        g.literal_a = n * x;
        g.t_scale = n * n;
        g.m_scale = n;
        g.beta = c;
        g.x_eff = x / c;
        g.unit = ancestor_mass_unit(mech, n, c);
        g.a = std::max<std::int64_t>(1, std::llround(n * x));
    }
    return g;
}

// ---- exact-law tests ----

TestReport pmf_vs_sample(const PairPmf& pmf, const std::vector<std::pair<std::int64_t, std::int64_t>>& samples,
                         double threshold, std::size_t kcut) {
    if (samples.empty()) throw Error(ErrorKind::EmptySample, "no samples");
    const std::size_t kmax = std::min(kcut, pmf.kmax), lmax = pmf.lmax;
    std::vector<double> counts((kmax + 1) * (lmax + 1), 0.0);
    double out_count = 0.0;
    for (const auto& [k, l] : samples) {
        if (k >= 0 && l >= 0 && static_cast<std::size_t>(k) <= kmax && static_cast<std::size_t>(l) <= lmax)
            counts[static_cast<std::size_t>(k) * (lmax + 1) + static_cast<std::size_t>(l)] += 1.0;
        else
            out_count += 1.0;
    }
    const double N = static_cast<double>(samples.size());
    double tv = 0.0, in_mass = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k)
        for (std::size_t l = 0; l <= lmax; ++l) {
            const double q = pmf.at(k, l);
            in_mass += q;
            tv += std::abs(counts[k * (lmax + 1) + l] / N - q);
        }
    const double out_mass = std::max(0.0, 1.0 - in_mass);
    tv += std::abs(out_count / N - out_mass);
    tv *= 0.5;
    TestReport rep;
    rep.name = "pmf_vs_sample";
    rep.statistic = tv;
    rep.threshold = threshold;
    rep.n_samples = static_cast<std::int64_t>(samples.size());
    rep.pass = tv <= threshold;
    rep.params = {{"kmax", kmax}, {"lmax", lmax}, {"ancestors", pmf.ancestors}};
    rep.details = {{"out_of_support_mass", out_mass}, {"out_of_support_fraction", out_count / N}};
    return rep;
}

TestReport martingale_check(const JointLaw& joint, std::int64_t a, int n, std::int64_t N, std::uint64_t seed,
                            int workers, std::int64_t min_hits) {
    if (n < 0 || a < 1 || N < 1) throw Error(ErrorKind::InvalidRegime, "need a >= 1, n >= 0, N >= 1");
    PgfContext ctx(joint);
    const OffspringModel model(joint);
    auto states = run_replicates(N, seed, 11, workers, [&](std::int64_t, Rng& rng) {
        TypeChain ch = simulate_type_chain(a, model, n + 1, rng);
        auto m_at = [&](int i) -> std::int64_t {
            if (i == 0) return a;
            return static_cast<std::size_t>(i) <= ch.pairs.size() ? ch.pairs[i - 1].second : 0;
        };
        return std::make_pair(m_at(n), m_at(n + 1));
    });
    const double q = ctx.q, fq = ctx.fprime_q;
    auto Y = [&](std::int64_t j, int k) {
        const double qp = std::pow(q, static_cast<double>(j - a));
        return static_cast<double>(j) * qp / std::pow(fq, k);
    };
    std::map<std::int64_t, std::int64_t> hits;
    for (const auto& s : states)
        if (s.first >= 1) ++hits[s.first];
    std::vector<std::pair<std::int64_t, std::int64_t>> ranked;  // (-hits, j)
    for (const auto& [j, h] : hits)
        if (h >= min_hits) ranked.emplace_back(-h, j);
    if (ranked.empty()) throw Error(ErrorKind::InsufficientStrata, "no state reached the minimum number of hits");
    std::sort(ranked.begin(), ranked.end());
    if (ranked.size() > 3) ranked.resize(3);

    TestReport rep;
    rep.name = "martingale_check";
    rep.threshold = 3.0;
    rep.n_samples = N;
    rep.seed = seed;
    rep.params = {{"a", a}, {"n", n}, {"p", joint.p()}, {"q", q}, {"fprime_q", fq}};
    Json strata = Json::array();
    double worst = 0.0;
    for (const auto& [negh, j] : ranked) {
        std::vector<double> ys;
        ys.reserve(static_cast<std::size_t>(-negh));
        for (const auto& s : states)
            if (s.first == j) ys.push_back(Y(s.second, n + 1));
        const MeanSe ms = mean_se(ys);
        const double target = Y(j, n);
        const double diff = std::abs(ms.mean - target);
        double z = 0.0;
        if (ms.se > 0.0)
            z = diff / ms.se;
        else if (diff > 1e-12 * std::max(1.0, target))
            z = kInf;
        worst = std::max(worst, z);
        strata.push_back({{"j", j}, {"hits", -negh}, {"mean", ms.mean}, {"se", ms.se}, {"target", target},
                          {"z", json_number(z)}});
    }
    rep.statistic = worst;
    rep.pass = worst <= rep.threshold;
    rep.details = {{"strata", strata}};
    return rep;
}

// ---- tail scaling ----

namespace {

// P(xi+ > y) including the analytic tail.
double plus_tail(const OffspringLaw& plus, double y) {
    double s = plus.truncation_mass();
    const std::size_t from = static_cast<std::size_t>(std::floor(y)) + 1;
    for (std::size_t k = plus.size(); k-- > from;) s += plus[k];
    return s;
}

// P(xi_c > y) for xi_c ~ Bin(xi+, 1 - p); the mass beyond the stored support
// counts as exceeding y.
double clone_tail(const OffspringLaw& plus, double p, double y) {
    const std::size_t yi = static_cast<std::size_t>(std::floor(y));
    double s = plus.truncation_mass();
    for (std::size_t m = plus.size(); m-- > yi + 1;) {
        if (plus[m] == 0.0) continue;
        // P(Bin(m, 1-p) >= yi + 1)
        s += plus[m] * boost::math::ibeta(static_cast<double>(yi + 1), static_cast<double>(m - yi), 1.0 - p);
    }
    return s;
}

}  // namespace

SweepReport tail_scaling_check(const TailConfig& cfg, std::uint64_t seed) {
    check_grid(cfg.n_grid);
    if (!cfg.plus.tail()) throw Error(ErrorKind::RegimeMismatch, "tail scaling needs a heavy-tailed law");
    const BranchingMechanism mech = BranchingMechanism::stable(cfg.plus.tail()->alpha);
    const double alpha = mech.alpha;
    const double target = mech.tail(std::min(cfg.s, cfg.t));
    SweepReport rep;
    rep.name = "tails";
    rep.grid = cfg.n_grid;
    rep.threshold = cfg.threshold;
    rep.seed = seed;
    rep.params = {{"alpha", alpha}, {"c", cfg.c}, {"s", cfg.s}, {"t", cfg.t}, {"N", cfg.N},
                  {"min_hits", cfg.min_hits}, {"rule", cfg.rule == AncestorRule::Calibrated ? "calibrated" : "literal"},
                  {"target", target}};
    constexpr std::int64_t block = 4096;
    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
        const double n = cfg.n_grid[gi];
        const Regime g = make_regime(cfg.plus, mech, n, 1.0, cfg.c, cfg.rule);
        const JointLaw joint = thin_offspring(cfg.plus, g.p);
        const OffspringModel model(joint);
        const double cal_unit = ancestor_mass_unit(mech, n, cfg.c);
        const double want = std::max(static_cast<double>(cfg.N),
                                     std::ceil(static_cast<double>(cfg.min_hits) * cal_unit / target));
        const std::int64_t blocks = static_cast<std::int64_t>(std::ceil(want / block));
        const std::int64_t trees = blocks * block;
        const std::int64_t t_cut = to_count(cfg.s * g.r), m_cut = to_count(cfg.t * g.r * g.p);
        const std::uint64_t es = entry_seed(seed, 5, gi);
        auto counts = run_replicates(blocks, es, 0, cfg.workers, [&](std::int64_t, Rng& rng) {
            std::int64_t h = 0;
            for (std::int64_t i = 0; i < block; ++i) {
                PairSample s = sample_T0M1(1, model, rng, t_cut, 4'000'000'000'000'000'000LL, m_cut);
                if (s.censored || (s.t0 > t_cut && s.m1 > m_cut)) ++h;
            }
            return h;
        });
        std::int64_t hits = 0;
        for (auto h : counts) hits += h;
        const double qhat = static_cast<double>(hits) / static_cast<double>(trees);
        const double se_q = std::sqrt(qhat * (1.0 - qhat) / static_cast<double>(trees));
        const double est = g.unit * qhat;
        SweepEntry e;
        e.n = n;
        e.test = "tail";
        e.seed = es;
        e.regime = g.to_json();
        e.distance = std::abs(est - target) / target;
        const double rtail = g.r * plus_tail(cfg.plus, n);
        const double mean_c = (1.0 - g.p) * cfg.plus.mean();
        e.details = {{"trees", trees},
                     {"hits", hits},
                     {"estimate", est},
                     {"se", g.unit * se_q},
                     {"estimate_calibrated", cal_unit * qhat},
                     {"estimate_literal_rp", g.r * g.p * qhat},
                     {"target", target},
                     {"r_plus_tail_at_n", rtail},
                     {"c_alpha", mech.c_alpha()},
                     {"inv_gamma_2_minus_alpha", 1.0 / std::tgamma(2.0 - alpha)},
                     {"clone_tail_ratio", clone_tail(cfg.plus, g.p, n) / plus_tail(cfg.plus, n / mean_c)}};
        rep.entries.push_back(e);
    }
    const auto d = rep.distances("tail");
    rep.details = {{"monotone", strictly_decreasing(d)}, {"final_distance", d.back()}};
    rep.pass = d.back() < cfg.threshold;
    return rep;
}

// ---- convergence sweeps ----

const char* sweep_kind_name(SweepKind k) {
    switch (k) {
        case SweepKind::Pair: return "pair";
        case SweepKind::Chain: return "chain";
        case SweepKind::AlleleTree: return "allele_tree";
        case SweepKind::Conditioned: return "conditioned";
    }
    return "?";
}

namespace {

struct Cell {
    int k;
    double s, t;
};

std::vector<double> unit_vector(int k, double v) {
    std::vector<double> out(static_cast<std::size_t>(k) + 1, 0.0);
    out.back() = v;
    return out;
}

// Laplace comparisons of (T_k / t_scale, M_{k+1} / m_scale) per cell.
Json laplace_cells(const std::vector<std::vector<std::pair<double, double>>>& paths, const std::vector<Cell>& cells,
                   const std::function<double(const Cell&)>& target, double& worst) {
    Json out = Json::array();
    worst = 0.0;
    for (const Cell& cell : cells) {
        std::vector<double> v;
        v.reserve(paths.size());
        for (const auto& path : paths) {
            const auto& [T, M] = path[static_cast<std::size_t>(cell.k)];
            double e = 0.0;
            if (std::isfinite(T) && std::isfinite(M)) e = std::exp(-cell.s * T - cell.t * M);
            v.push_back(e);
        }
        const MeanSe ms = mean_se(v);
        const double tv = target(cell);
        const double z = ms.se > 0.0 ? std::abs(ms.mean - tv) / ms.se : (ms.mean == tv ? 0.0 : kInf);
        worst = std::max(worst, z);
        out.push_back({{"k", cell.k}, {"s", cell.s}, {"t", cell.t}, {"empirical", ms.mean}, {"se", ms.se},
                       {"target", tv}, {"z", json_number(z)}});
    }
    return out;
}

struct AlleleFeatures {
    std::vector<double> v;  // level-1 sizes x3, level-1 degrees x3, level-2 sizes x3
};

struct Child {
    double size = 0.0;    // scaled, +inf beyond the cap
    double degree = 0.0;  // scaled, +inf beyond the cap
    std::int64_t raw_degree = 0;
    bool censored = false;
};

// Top three of `d` single-ancestor families, ranked by size; families
// crossing the cap in both coordinates are stopped early.
std::vector<Child> top_children(std::int64_t d, const OffspringModel& model, const Regime& g, double cap, Rng& rng) {
    const std::int64_t t_cut = to_count(cap * g.t_scale);
    const std::int64_t m_cut = to_count(cap * g.m_scale * g.beta);
    constexpr std::int64_t kTop = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(d));
    std::vector<std::int64_t> degs(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < d; ++i) {
        PairSample s = sample_T0M1(1, model, rng, t_cut, 4'000'000'000'000'000'000LL, m_cut);
        sizes[i] = s.censored ? kTop : s.t0;
        degs[i] = s.m1;
    }
    auto order = rank_sizes(sizes, rng);
    std::vector<Child> out;
    for (std::size_t r = 0; r < std::min<std::size_t>(3, order.size()); ++r) {
        const std::size_t i = order[r];
        Child ch;
        ch.censored = sizes[i] == kTop;
        ch.raw_degree = degs[i];
        ch.size = ch.censored ? kInf : capped(static_cast<double>(sizes[i]) / g.t_scale, cap);
        ch.degree = ch.censored ? kInf : capped(static_cast<double>(degs[i]) / (g.m_scale * g.beta), cap);
        out.push_back(ch);
    }
    return out;
}

}  // namespace

SweepReport convergence_sweep(const SweepConfig& cfg, SweepKind what, std::int64_t N, std::uint64_t seed) {
    check_grid(cfg.n_grid);
    if (N < 1) throw Error(ErrorKind::EmptySample, "need N >= 1");
    SweepReport rep;
    rep.name = sweep_kind_name(what);
    rep.grid = cfg.n_grid;
    rep.seed = seed;
    const bool by_se = what == SweepKind::Chain || what == SweepKind::Conditioned;
    rep.threshold = by_se ? 3.0 : cfg.threshold;
    Json st = Json::array();
    for (auto [s, t] : cfg.st) st.push_back({s, t});
    rep.params = {{"mechanism", cfg.mech.describe()}, {"x", cfg.x}, {"c", cfg.c}, {"N", N},
                  {"rule", cfg.rule == AncestorRule::Calibrated ? "calibrated" : "literal"},
                  {"censor", cfg.censor}, {"steps", cfg.steps}, {"depth", cfg.depth}, {"eps", cfg.eps}, {"st", st}};
    const double C = cfg.censor;
    const std::uint64_t kind = static_cast<std::uint64_t>(what) + 1;

    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
        const double n = cfg.n_grid[gi];
        const Regime g = make_regime(cfg.plus, cfg.mech, n, cfg.x, cfg.c, cfg.rule);
        const JointLaw joint = thin_offspring(cfg.plus, g.p);
        const OffspringModel model(joint);
        const std::uint64_t es = entry_seed(seed, kind, gi);
        SweepEntry e;
        e.n = n;
        e.test = rep.name;
        e.seed = es;
        e.regime = g.to_json();

        if (what == SweepKind::Pair) {
            const std::int64_t t_cut = to_count(C * g.t_scale);
            const std::int64_t m_cut = to_count(C * g.m_scale * g.beta);
            auto pairs = run_replicates(N, es, 0, cfg.workers, [&](std::int64_t, Rng& rng) {
                PairSample s = sample_T0M1(g.a, model, rng, t_cut, 4'000'000'000'000'000'000LL, m_cut);
                if (s.censored) return std::make_pair(kInf, kInf);
                return std::make_pair(capped(static_cast<double>(s.t0) / g.t_scale, C),
                                      capped(static_cast<double>(s.m1) / (g.m_scale * g.beta), C));
            });
            auto target = run_replicates(N, es, 1, cfg.workers, [&](std::int64_t, Rng& rng) {
                return capped(sample_subordinator(cfg.mech, g.x_eff, rng), C);
            });
            std::vector<double> T, M;
            T.reserve(pairs.size());
            M.reserve(pairs.size());
            std::int64_t cens = 0;
            for (const auto& [t, m] : pairs) {
                T.push_back(t);
                M.push_back(m);
                cens += std::isinf(t) ? 1 : 0;
            }
            const double kt = ks_two_sample(T, target), km = ks_two_sample(M, target);
            e.distance = std::max(kt, km);
            e.details = {{"ks_T", kt}, {"ks_M", km}, {"ks_null_95", ks_critical(T.size(), target.size())},
                         {"beyond_censor_fraction", static_cast<double>(cens) / static_cast<double>(N)}};
        } else if (what == SweepKind::Chain || what == SweepKind::Conditioned) {
            const int K = std::max(1, cfg.steps);
            const bool cond = what == SweepKind::Conditioned;
            double smin = kInf;
            for (auto [s, t] : cfg.st) smin = std::min(smin, s);
            // a single conditioned step can stop early once exp(-s T) is negligible
            const std::int64_t t_cut = cond && K == 1 && smin > 0.0 ? to_count(40.0 / smin * g.t_scale) : 0;
            auto paths = run_replicates(N, es, 0, cfg.workers, [&](std::int64_t, Rng& rng) {
                std::vector<std::pair<double, double>> path(static_cast<std::size_t>(K), {0.0, 0.0});
                if (t_cut > 0) {
                    PairSample s = sample_spine_pair(g.a, model, rng, t_cut);
                    path[0] = s.censored ? std::make_pair(kInf, kInf)
                                         : std::make_pair(static_cast<double>(s.t0) / g.t_scale,
                                                          static_cast<double>(s.m1) / g.m_scale);
                    return path;
                }
                TypeChain ch = cond ? simulate_conditioned_chain(g.a, model, K, rng)
                                    : simulate_type_chain(g.a, model, K, rng);
                for (std::size_t k = 0; k < ch.pairs.size() && k < path.size(); ++k)
                    path[k] = {static_cast<double>(ch.pairs[k].first) / g.t_scale,
                               static_cast<double>(ch.pairs[k].second) / g.m_scale};
                return path;
            });
            std::vector<Cell> cells;
            for (int k = 0; k < K; ++k)
                for (auto [s, t] : cfg.st) cells.push_back({k, s, t});
            double worst = 0.0;
            Json cj = laplace_cells(paths, cells, [&](const Cell& cell) {
                auto sv = unit_vector(cell.k, cell.s), tv = unit_vector(cell.k, cell.t);
                return cond ? fdd_laplace_csbpi(cfg.mech, g.x_eff, sv, tv) : fdd_laplace_csbp(cfg.mech, g.x_eff, sv, tv);
            }, worst);
            e.distance = worst;
            e.details = {{"cells", cj}};
        } else {
            const int depth = std::clamp(cfg.depth, 1, 2);
            const std::size_t nf = depth == 2 ? 9 : 6;
            auto emp = run_replicates(N, es, 0, cfg.workers, [&](std::int64_t, Rng& rng) {
                std::vector<double> f(nf, 0.0);
                PairSample root = sample_T0M1(g.a, model, rng);
                auto top = top_children(root.m1, model, g, C, rng);
                for (std::size_t r = 0; r < top.size(); ++r) {
                    f[r] = top[r].size;
                    f[3 + r] = top[r].degree;
                }
                if (depth == 2 && !top.empty()) {
                    if (std::isinf(top[0].size)) {
                        for (std::size_t r = 0; r < 3; ++r) f[6 + r] = kInf;
                    } else {
                        auto lvl2 = top_children(top[0].raw_degree, model, g, C, rng);
                        for (std::size_t r = 0; r < lvl2.size(); ++r) f[6 + r] = lvl2[r].size;
                    }
                }
                return f;
            });
            auto tgt = run_replicates(N, es, 1, cfg.workers, [&](std::int64_t, Rng& rng) {
                std::vector<double> f(nf, 0.0);
                const double root = sample_subordinator(cfg.mech, g.x_eff, rng);
                auto jumps = sample_jump_ranks(cfg.mech, root, jump_cutoff(cfg.mech, root, cfg.eps), rng);
                for (std::size_t r = 0; r < std::min<std::size_t>(3, jumps.size()); ++r)
                    f[r] = f[3 + r] = capped(jumps[r], C);
                if (depth == 2 && !jumps.empty()) {
                    if (jumps[0] > C) {
                        for (std::size_t r = 0; r < 3; ++r) f[6 + r] = kInf;
                    } else {
                        auto kids = sample_jump_ranks(cfg.mech, jumps[0], jump_cutoff(cfg.mech, jumps[0], cfg.eps), rng);
                        for (std::size_t r = 0; r < std::min<std::size_t>(3, kids.size()); ++r) f[6 + r] = capped(kids[r], C);
                    }
                }
                return f;
            });
            static const char* names[] = {"A1", "A2", "A3", "d1", "d2", "d3", "A11", "A12", "A13"};
            Json ks = Json::object();
            double worst_l1 = 0.0, worst = 0.0;
            for (std::size_t i = 0; i < nf; ++i) {
                std::vector<double> a, b;
                a.reserve(emp.size());
                b.reserve(tgt.size());
                for (const auto& f : emp) a.push_back(f[i]);
                for (const auto& f : tgt) b.push_back(f[i]);
                const double d = ks_two_sample(a, b);
                ks[names[i]] = d;
                worst = std::max(worst, d);
                if (i < 3) worst_l1 = std::max(worst_l1, d);
            }
            e.distance = worst;
            e.details = {{"ks", ks}, {"ks_level1_sizes", worst_l1}, {"ks_null_95", ks_critical(emp.size(), tgt.size())}};
        }
        rep.entries.push_back(e);
    }
    const auto d = rep.distances(rep.name);
    rep.details = {{"monotone", strictly_decreasing(d)}, {"final_distance", json_number(d.back())}};
    if (what == SweepKind::Pair)
        rep.pass = strictly_decreasing(d) && d.back() < rep.threshold;
    else
        rep.pass = d.back() <= rep.threshold;
    return rep;
}

// ---- allele tree identities ----

TestReport allele_identity_check(const JointLaw& joint, std::int64_t a, int depth, std::int64_t N,
                                 std::uint64_t seed, const ForestCaps& caps, int workers) {
    const OffspringModel model(joint);
    struct Outcome {
        int status = 0;  // 0 checked, 1 capped
        std::int64_t violations = 0;
        std::int64_t levels = 0;
    };
    auto res = run_replicates(N, seed, 13, workers, [&](std::int64_t, Rng& rng) {
        Outcome o;
        MarkedForest forest;
        try {
            forest = simulate_marked_forest(a, model, caps, rng);
        } catch (const CapError&) {
            o.status = 1;
            return o;
        }
        // hit max_types: the last type's mutants were never explored
        if (forest.truncated) {
            o.status = 1;
            return o;
        }
        const TypeChain chain = extract_type_chain(forest);
        const AlleleTree tree = build_allele_tree(forest, rng);
        const int top = std::min<int>({depth, static_cast<int>(chain.pairs.size()) - 1, tree.depth()});
        for (int k = 0; k <= top; ++k) {
            ++o.levels;
            if (tree.level_size_sum(k) != chain.pairs[k].first) ++o.violations;
            if (tree.level_degree_sum(k) != chain.pairs[k].second) ++o.violations;
        }
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const AlleleNode& u = tree.nodes[i];
            if (u.first_child < 0) continue;
            for (std::int64_t c = 1; c < u.degree; ++c)
                if (tree.nodes[u.first_child + c].size > tree.nodes[u.first_child + c - 1].size) ++o.violations;
        }
        return o;
    });
    std::int64_t capped_reps = 0, bad = 0, checked = 0, levels = 0;
    for (const auto& o : res) {
        if (o.status == 1) {
            ++capped_reps;
            continue;
        }
        ++checked;
        levels += o.levels;
        if (o.violations > 0) ++bad;
    }
    TestReport rep;
    rep.name = "allele_identities";
    rep.statistic = static_cast<double>(bad);
    rep.threshold = 0.0;
    rep.n_samples = N;
    rep.seed = seed;
    rep.pass = checked > 0 && bad == 0;
    rep.params = {{"a", a}, {"depth", depth}, {"p", joint.p()}, {"max_nodes", caps.max_nodes}, {"max_types", caps.max_types}};
    rep.details = {{"checked", checked}, {"capped", capped_reps}, {"levels_checked", levels}, {"violating_replicates", bad}};
    return rep;
}

// ---- ranked jumps ----

double prm_rank_cdf(const BranchingMechanism& mech, double b, int k, double z) {
    if (!(z > 0.0)) return 0.0;
    if (std::isinf(z)) return 1.0;
    const double mu = b * mech.tail(z);
    double term = std::exp(-mu), sum = 0.0;
    for (int i = 0; i < k; ++i) {
        sum += term;
        term *= mu / static_cast<double>(i + 1);
    }
    return std::min(1.0, sum);
}

SweepReport ranked_jump_check(const RankConfig& cfg, std::int64_t N, std::uint64_t seed) {
    check_grid(cfg.n_grid);
    if (N < 1) throw Error(ErrorKind::EmptySample, "need N >= 1");
    SweepReport rep;
    rep.name = "ranks";
    rep.grid = cfg.n_grid;
    rep.threshold = cfg.threshold;
    rep.seed = seed;
    rep.params = {{"mechanism", cfg.mech.describe()}, {"c", cfg.c}, {"b", cfg.b}, {"N", N}, {"censor", cfg.censor},
                  {"rule", cfg.rule == AncestorRule::Calibrated ? "calibrated" : "literal"}};
    const double C = cfg.censor;
    bool ordered = true;
    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
        const double n = cfg.n_grid[gi];
        const Regime g = make_regime(cfg.plus, cfg.mech, n, 1.0, cfg.c, cfg.rule);
        const JointLaw joint = thin_offspring(cfg.plus, g.p);
        const OffspringModel model(joint);
        const std::int64_t B = std::max<std::int64_t>(1, std::llround(cfg.b * g.unit));
        const std::int64_t t_cut = to_count(C * g.t_scale);
        const std::uint64_t es = entry_seed(seed, 7, gi);
        auto tops = run_replicates(N, es, 0, cfg.workers, [&](std::int64_t, Rng& rng) {
            std::array<double, 3> top{0.0, 0.0, 0.0};
            for (std::int64_t i = 0; i < B; ++i) {
                PairSample s = sample_T0M1(1, model, rng, t_cut);
                const double v = s.censored ? kInf : capped(static_cast<double>(s.t0) / g.t_scale, C);
                if (v > top[2]) {
                    top[2] = v;
                    if (top[2] > top[1]) std::swap(top[1], top[2]);
                    if (top[1] > top[0]) std::swap(top[0], top[1]);
                }
            }
            return top;
        });
        Json ks = Json::array();
        double worst = 0.0;
        for (int k = 0; k < 3; ++k) {
            std::vector<double> v;
            v.reserve(tops.size());
            for (const auto& t : tops) v.push_back(t[k]);
            const double d = ks_one_sample(v, [&](double z) { return prm_rank_cdf(cfg.mech, cfg.b, k + 1, z); });
            ks.push_back(d);
            worst = std::max(worst, d);
        }
        for (const auto& t : tops) ordered = ordered && t[0] >= t[1] && t[1] >= t[2];
        SweepEntry e;
        e.n = n;
        e.test = "ranks";
        e.seed = es;
        e.regime = g.to_json();
        e.distance = worst;
        e.details = {{"block", B}, {"ks_by_rank", ks}, {"ks_null_95", 1.358 / std::sqrt(static_cast<double>(N))}};
        rep.entries.push_back(e);
    }
    const auto d = rep.distances("ranks");
    rep.details = {{"monotone", strictly_decreasing(d)}, {"ranks_ordered", ordered}, {"final_distance", d.back()}};
    rep.pass = ordered && d.back() < cfg.threshold;
    return rep;
}

}  // namespace gwmut
