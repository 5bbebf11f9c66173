#include "gwmut/scaling.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gwmut/error.hpp"

namespace gwmut {

namespace {

constexpr double kPi = std::numbers::pi;

// 1 - e^{-u} - u e^{-u}, accurate for small u.
double h_small(double u) {
    if (u < 1e-2) {
        // sum_{j>=2} (-1)^j (j-1) u^j / j!
        double term = u * u / 2.0, s = 0.0;
        for (int j = 2; j < 12; ++j) {
            s += (j % 2 == 0 ? 1.0 : -1.0) * (j - 1) * term;
            term *= u / (j + 1);
        }
        return s;
    }
    return -std::expm1(-u) - u * std::exp(-u);
}

}  // namespace

BranchingMechanism BranchingMechanism::stable(double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw Error(ErrorKind::DomainError, "stable mechanism needs alpha in (1,2)");
    BranchingMechanism m;
    m.kind = Kind::Stable;
    m.alpha = alpha;
    return m;
}

BranchingMechanism BranchingMechanism::finite_variance(double c, double sigma2) {
    if (!(c > 0.0 && sigma2 > 0.0)) throw Error(ErrorKind::DomainError, "finite-variance mechanism needs c, sigma2 > 0");
    BranchingMechanism m;
    m.kind = Kind::FiniteVariance;
    m.c = c;
    m.sigma2 = sigma2;
    return m;
}

std::string BranchingMechanism::describe() const {
    std::ostringstream os;
    if (is_stable())
        os << "stable(alpha=" << alpha << ")";
    else
        os << "fv(c=" << c << ", sigma2=" << sigma2 << ")";
    return os.str();
}

double BranchingMechanism::c_alpha() const { return 1.0 / std::tgamma(3.0 - alpha); }

double BranchingMechanism::c_alpha_prime() const { return (1.0 / alpha) / std::tgamma(1.0 - 1.0 / alpha); }

double BranchingMechanism::cumulant(double lambda) const {
    if (lambda < 0.0) throw Error(ErrorKind::DomainError, "cumulant needs lambda >= 0");
    if (is_stable()) return std::pow(lambda, 1.0 / alpha);
    return (c / sigma2) * (std::sqrt(c * c + 2.0 * sigma2 * lambda) - c);
}

double BranchingMechanism::levy_density(double y) const {
    if (!(y > 0.0)) return 0.0;
    if (is_stable()) return c_alpha_prime() * std::pow(y, -1.0 - 1.0 / alpha);
    return c / std::sqrt(2.0 * kPi * sigma2 * y * y * y) * std::exp(-c * c * y / (2.0 * sigma2));
}

double BranchingMechanism::size_biased_density(double y) const {
    if (!(y > 0.0)) return 0.0;
    if (is_stable()) return c_alpha_prime() * std::pow(y, -1.0 / alpha);
    return c / std::sqrt(2.0 * kPi * sigma2 * y) * std::exp(-c * c * y / (2.0 * sigma2));
}

double BranchingMechanism::tail(double z) const {
    if (!(z > 0.0)) return INFINITY;
    if (is_stable()) return std::pow(z, -1.0 / alpha) / std::tgamma(1.0 - 1.0 / alpha);
    // int_z^inf y^{-3/2} e^{-b y} dy = 2 z^{-1/2} e^{-b z} - 2 sqrt(pi b) erfc(sqrt(b z))
    const double b = c * c / (2.0 * sigma2);
    const double k = c / std::sqrt(2.0 * kPi * sigma2);
    return k * (2.0 * std::exp(-b * z) / std::sqrt(z) - 2.0 * std::sqrt(kPi * b) * std::erfc(std::sqrt(b * z)));
}

double BranchingMechanism::immigration(double lambda) const {
    if (is_stable()) {
        if (!(lambda > 0.0)) throw Error(ErrorKind::DomainError, "stable immigration transform is infinite at 0");
        return (1.0 / alpha) * std::pow(lambda, 1.0 / alpha - 1.0);
    }
    return 1.0 / std::sqrt(1.0 + 2.0 * sigma2 * lambda / (c * c));
}

double BranchingMechanism::small_jump_mean(double eps) const {
    if (!(eps > 0.0)) return 0.0;
    if (is_stable()) return c_alpha_prime() * std::pow(eps, 1.0 - 1.0 / alpha) / (1.0 - 1.0 / alpha);
    // y nu(dy) is the Gamma(1/2, b) density
    const double b = c * c / (2.0 * sigma2);
    return boost::math::gamma_p(0.5, b * eps);
}

double cumulant_by_quadrature(const BranchingMechanism& mech, double lambda) {
    // (1 - e^{-lambda y}) / y times y nu(y): finite all the way down to 0
    auto f = [&](double y) { return -std::expm1(-lambda * y) / y * mech.size_biased_density(y); };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    return ts.integrate(f, 0.0, 1.0, 1e-13) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity(), 1e-13);
}

double cumulant(const BranchingMechanism& mech, double lambda) { return mech.cumulant(lambda); }

double compute_r(const OffspringLaw& plus, double n) {
    if (!(n >= 1.0)) throw Error(ErrorKind::DomainError, "compute_r needs n >= 1");
    double e = 0.0;
    const auto& pr = plus.probs();
    for (std::size_t k = pr.size(); k-- > 1;) e += pr[k] * h_small(static_cast<double>(k) / n);
    if (const auto& t = plus.tail()) {
        // analytic continuation beyond storage; midpoint rule for the sum
        const double from = static_cast<double>(pr.size()) - 0.5;
        auto f = [&](double u) {
            const double y = from + u;
            return t->scale * std::pow(y, -1.0 - t->alpha) * h_small(y / n);
        };
        boost::math::quadrature::exp_sinh<double> es;
        e += es.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
    }
    if (!(e > 0.0)) throw Error(ErrorKind::DomainError, "compute_r: degenerate law");
    return 1.0 / e;
}

double sample_positive_stable(double beta, Rng& rng) {
    const double u = kPi * uniform_open(rng);
    const double e = -std::log(uniform_open(rng));
    const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
    const double b = std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
    return a * b;
}

double sample_inverse_gaussian(double mean, double shape, Rng& rng) {
    // Michael, Schucany and Haas, with the root written without cancellation
    std::normal_distribution<double> nd;
    const double nu = nd(rng);
    const double w = mean * nu * nu / (2.0 * shape);
    const double x = mean / (1.0 + w + std::sqrt(w * (2.0 + w)));
    return uniform01(rng) * (mean + x) <= mean ? x : mean * mean / x;
}

double sample_subordinator(const BranchingMechanism& mech, double x, Rng& rng) {
    if (!(x > 0.0)) return 0.0;
    if (mech.is_stable()) return std::pow(x, mech.alpha) * sample_positive_stable(1.0 / mech.alpha, rng);
    return sample_inverse_gaussian(x, x * x * mech.c * mech.c / mech.sigma2, rng);
}

namespace {

// z with nu((z, inf)) = v.
double invert_tail(const BranchingMechanism& mech, double v) {
    if (mech.is_stable()) return std::pow(std::tgamma(1.0 - 1.0 / mech.alpha) * v, -mech.alpha);
    double lo = 1e-300, hi = 1.0;
    while (mech.tail(hi) > v) hi *= 2.0;
    if (mech.tail(lo) < v) return lo;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (mech.tail(mid) > v ? lo : hi) = mid;
        if (hi / lo < 1.0 + 1e-14) break;
    }
    return std::sqrt(lo * hi);
}

}  // namespace

std::vector<double> sample_jump_ranks(const BranchingMechanism& mech, double x, double eps, Rng& rng) {
    if (!(eps > 0.0)) throw Error(ErrorKind::DomainError, "jump truncation eps must be > 0");
    std::vector<double> out;
    if (!(x > 0.0)) return out;
    const double limit = mech.tail(eps);
    double gamma = 0.0;
    while (true) {
        gamma += -std::log(uniform_open(rng));
        const double v = gamma / x;
        if (v >= limit) break;
        out.push_back(invert_tail(mech, v));
    }
    return out;
}

std::vector<std::int32_t> CsbpTree::label(std::int64_t i) const {
    std::vector<std::int32_t> out;
    for (std::int64_t v = i; v > 0; v = nodes[v].parent) out.push_back(nodes[v].ordinal);
    std::reverse(out.begin(), out.end());
    return out;
}

double CsbpTree::level_mass(int k) const {
    double s = 0.0;
    for (std::int64_t i = level_start[k]; i < level_start[k + 1]; ++i) s += nodes[i].mass;
    return s;
}

CsbpTree build_csbp_tree(double x, const BranchingMechanism& mech, int depth, double eps, Rng& rng,
                         std::int64_t max_nodes) {
    if (!(x > 0.0)) throw Error(ErrorKind::DomainError, "root mass must be > 0");
    if (depth < 0) throw Error(ErrorKind::DomainError, "depth must be >= 0");
    CsbpTree t;
    t.eps = eps;
    CsbpNode root;
    root.mass = x;
    t.nodes.push_back(root);
    t.level_start = {0, 1};
    for (int k = 0; k < depth; ++k) {
        if (t.level_mass(k) < eps) {
            t.degenerate_level = k;
            break;
        }
        const std::int64_t begin = t.level_start[k], end = t.level_start[k + 1];
        for (std::int64_t i = begin; i < end; ++i) {
            // independent Poisson strip per node
            auto jumps = sample_jump_ranks(mech, t.nodes[i].mass, eps, rng);
            t.dropped_mass += t.nodes[i].mass * mech.small_jump_mean(eps);
            if (static_cast<std::int64_t>(t.nodes.size() + jumps.size()) > max_nodes)
                throw CapError(ErrorKind::PopulationCapExceeded, "csbp tree exceeds node cap",
                               static_cast<long long>(t.nodes.size()), k + 1);
            t.nodes[i].children = static_cast<std::int64_t>(jumps.size());
            t.nodes[i].first_child = jumps.empty() ? -1 : static_cast<std::int64_t>(t.nodes.size());
            for (std::size_t r = 0; r < jumps.size(); ++r) {
                CsbpNode n;
                n.mass = jumps[r];
                n.parent = i;
                n.depth = k + 1;
                n.ordinal = static_cast<std::int32_t>(r + 1);
                t.nodes.push_back(n);
            }
        }
        t.level_start.push_back(static_cast<std::int64_t>(t.nodes.size()));
    }
    return t;
}

std::vector<double> simulate_discrete_csbp(double x, const BranchingMechanism& mech, int steps, Rng& rng) {
    if (steps < 1) throw Error(ErrorKind::DomainError, "steps must be >= 1");
    std::vector<double> z{x};
    for (int k = 0; k < steps; ++k) z.push_back(sample_subordinator(mech, z.back(), rng));
    return z;
}

std::vector<double> simulate_csbpi_fv(double x, double c, double sigma2, int steps, Rng& rng) {
    if (steps < 1) throw Error(ErrorKind::DomainError, "steps must be >= 1");
    auto mech = BranchingMechanism::finite_variance(c, sigma2);
    std::gamma_distribution<double> imm(0.5, 2.0 * sigma2 / (c * c));
    std::vector<double> z{x};
    for (int k = 0; k < steps; ++k) z.push_back(sample_subordinator(mech, z.back(), rng) + imm(rng));
    return z;
}

std::vector<double> simulate_csbpi(double x, const BranchingMechanism& mech, int steps, Rng& rng) {
    if (mech.is_stable())
        throw Error(ErrorKind::InvalidRegime, "stable immigration measure has infinite mass; no path sampler");
    return simulate_csbpi_fv(x, mech.c, mech.sigma2, steps, rng);
}

std::vector<double> laplace_arguments(const BranchingMechanism& mech, const std::vector<double>& s,
                                      const std::vector<double>& t, double beta) {
    if (s.size() != t.size() || s.empty()) throw Error(ErrorKind::DomainError, "s and t need the same length k >= 1");
    const std::size_t k = s.size();
    std::vector<double> lam(k);
    for (std::size_t i = k; i-- > 0;) {
        if (s[i] < 0.0 || t[i] < 0.0) throw Error(ErrorKind::DomainError, "Laplace arguments must be >= 0");
        lam[i] = s[i] + beta * t[i] + (i + 1 < k ? mech.cumulant(lam[i + 1]) : 0.0);
    }
    return lam;
}

double fdd_laplace_csbp(const BranchingMechanism& mech, double x, const std::vector<double>& s,
                        const std::vector<double>& t) {
    const double beta = mech.is_stable() ? 1.0 : mech.c;
    auto lam = laplace_arguments(mech, s, t, beta);
    return std::exp(-x * mech.cumulant(lam[0]));
}

double fdd_laplace_csbpi(const BranchingMechanism& mech, double x, const std::vector<double>& s,
                         const std::vector<double>& t) {
    const double beta = mech.is_stable() ? 1.0 : mech.c;
    auto lam = laplace_arguments(mech, s, t, beta);
    double v = std::exp(-x * mech.cumulant(lam[0]));
    for (double l : lam) v *= mech.immigration(l);
    return v;
}

}  // namespace gwmut
