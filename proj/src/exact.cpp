#include "gwmut/exact.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "gwmut/error.hpp"
#include "gwmut/kernels.hpp"

namespace gwmut {

namespace {

std::atomic<long long> g_violations{0};

std::size_t default_lmax(const JointLaw& joint, std::size_t kmax) {
    const std::size_t deg = joint.max_total();
    if (deg <= 4) return std::max<std::size_t>(1, kmax * std::max<std::size_t>(deg, 1));
    return 4 * kmax;
}

void check_dropped(double dropped, double tol, const char* what) {
    if (dropped > tol)
        throw Error(ErrorKind::CapTooSmall, std::string(what) + " dropped mass " + std::to_string(dropped));
}

// Feeds pi^{*k} for k = 1..kmax to `visit`, truncated to clones <= kmax, mutants <= lmax.
template <class Visit>
void for_each_power(const JointLaw& joint, std::size_t kmax, std::size_t lmax, Visit&& visit) {
    Grid2D cur(kmax + 1, lmax + 1), next(kmax + 1, lmax + 1);
    cur.at(0, 0) = 1.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        multiply_by_joint(cur, joint, next);
        std::swap(cur, next);
        visit(k, cur);
    }
}

// P_j(T0 = k, M1 = .) row from pi^{*k}; only meaningful for j <= k.
const double* pair_row(long long j, std::size_t k, const Grid2D& powk) {
    if (j > static_cast<long long>(k)) {
        ++g_violations;
        return nullptr;
    }
    return powk.row(k - static_cast<std::size_t>(j));
}

// One composition step: P(k, l) = sum_j w(j) (j/k) pi^{*k}_{k-j, l}.
PairPmf compose(const JointLaw& joint, const std::vector<double>& w, std::size_t kmax, std::size_t lmax) {
    PairPmf out(kmax, lmax);
    out.at(0, 0) = w[0];  // absorbed: no mutants left, nothing follows
    for_each_power(joint, kmax, lmax, [&](std::size_t k, const Grid2D& powk) {
        double* dst = out.row(k);
        const std::size_t jmax = std::min<std::size_t>(k, w.size() - 1);
        for (std::size_t j = 1; j <= jmax; ++j) {
            if (w[j] == 0.0) continue;
            const double* src = pair_row(static_cast<long long>(j), k, powk);
            kernels::axpy(w[j] * static_cast<double>(j) / static_cast<double>(k), src, dst, lmax + 1);
        }
    });
    return out;
}

PairPmf power_pairs(const PairPmf& base, long long j) {
    PairPmf result(base.kmax, base.lmax);
    result.at(0, 0) = 1.0;
    PairPmf b = base;
    bool first = true;
    while (j > 0) {
        if (j & 1) {
            result = first ? b : convolve_pairs(result, b);
            first = false;
        }
        j >>= 1;
        if (j) b = convolve_pairs(b, b);
    }
    return result;
}

}  // namespace

double PairPmf::total() const { return kernels::sum(v.data(), v.size()); }

std::vector<double> PairPmf::l_marginal() const {
    std::vector<double> w(lmax + 1, 0.0);
    for (std::size_t k = 0; k <= kmax; ++k) kernels::axpy(1.0, row(k), w.data(), lmax + 1);
    return w;
}

double PairPmf::pgf(double x, double y) const {
    std::vector<double> ypow(lmax + 1);
    double t = 1.0;
    for (std::size_t l = 0; l <= lmax; ++l) {
        ypow[l] = t;
        t *= y;
    }
    // Horner in x over rows, highest k first.
    double acc = 0.0;
    for (std::size_t k = kmax + 1; k-- > 0;) acc = acc * x + kernels::dot(row(k), ypow.data(), lmax + 1);
    return acc;
}

PairPmf convolve_pairs(const PairPmf& a, const PairPmf& b) {
    PairPmf out(a.kmax, a.lmax);
    out.ancestors = a.ancestors + b.ancestors;
    out.n = a.n;
    for (std::size_t k1 = 0; k1 <= a.kmax; ++k1) {
        for (std::size_t l1 = 0; l1 <= a.lmax; ++l1) {
            const double w = a.at(k1, l1);
            if (w == 0.0) continue;
            for (std::size_t k2 = 0; k2 <= b.kmax && k1 + k2 <= out.kmax; ++k2) {
                const std::size_t len = std::min(b.lmax + 1, out.lmax + 1 - l1);
                kernels::axpy(w, b.row(k2), out.row(k1 + k2) + l1, len);
            }
        }
    }
    out.dropped_mass = std::max(0.0, 1.0 - out.total());
    return out;
}

double solve_phi(const JointLaw& joint, double x, double y) {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
        throw Error(ErrorKind::DomainError, "solve_phi needs x, y in [0,1]");
    if (x == 0.0) return 0.0;
    // At (1,1) the clone tree is finite a.s. iff E xi_c <= 1; the root is then
    // exactly 1 (a double root at criticality, where iteration is slow).
    if (x == 1.0 && y == 1.0 && joint.stored_mean_clones() <= 1.0 + 1e-12) return 1.0;
    // Newton from below on the convex h(phi) = x g(phi,y) - phi: iterates
    // increase monotonically and never pass the smallest root.
    double phi = 0.0;
    double resid = 0.0;
    for (int it = 0; it < 100000; ++it) {
        const double h = x * joint.pgf(phi, y) - phi;
        resid = std::fabs(h);
        const double dh = x * joint.pgf_ds(phi, y) - 1.0;
        double next;
        if (dh < 0.0)
            next = phi - h / dh;
        else
            next = phi + h;  // plain fixed-point step
        if (!(next > phi)) {
            if (resid < 1e-13) return phi;
            next = phi + std::max(h, 0.0);
            if (!(next > phi)) return phi;
        }
        if (resid < 1e-13 && next - phi < 1e-15) return next;
        phi = std::min(next, 1.0);
    }
    throw Error(ErrorKind::NonConvergence, "solve_phi residual " + std::to_string(resid));
}

PairPmf law_T0M1(long long a, const JointLaw& joint, std::size_t kmax, std::size_t lmax, double tol) {
    if (a < 1) throw Error(ErrorKind::DomainError, "ancestors must be >= 1");
    if (static_cast<long long>(kmax) < a) throw Error(ErrorKind::DomainError, "kmax < ancestors");
    if (lmax == 0) lmax = default_lmax(joint, kmax);
    std::vector<double> w(static_cast<std::size_t>(a) + 1, 0.0);
    w[static_cast<std::size_t>(a)] = 1.0;
    PairPmf out = compose(joint, w, kmax, lmax);
    out.ancestors = a;
    out.n = 1;
    out.dropped_mass = std::max(0.0, 1.0 - out.total());
    check_dropped(out.dropped_mass, tol, "law_T0M1");
    return out;
}

double pgf_eval(const std::vector<double>& coeffs, double s) {
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * s + coeffs[k];
    return acc;
}

double extinction_prob(const std::vector<double>& f) {
    double total = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!(f[k] >= 0.0)) throw Error(ErrorKind::InvalidLaw, "negative pgf coefficient");
        total += f[k];
        mean += static_cast<double>(k) * f[k];
    }
    if (std::fabs(total - 1.0) > 1e-9) throw Error(ErrorKind::InvalidLaw, "pgf coefficients do not sum to 1");
    if (f.size() > 1 && f[1] == 1.0) throw Error(ErrorKind::InvalidLaw, "degenerate law f(s) = s");
    if (mean <= 1.0 + 1e-12) return 1.0;
    if (f[0] == 0.0) return 0.0;
    auto h = [&](double s) { return pgf_eval(f, s) - s; };
    double hi = 1.0 - 1e-3;
    while (h(hi) >= 0.0) hi = 1.0 - (1.0 - hi) / 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? lo : hi) = mid;
    }
    double q = 0.5 * (lo + hi);
    // Newton polish.
    for (int i = 0; i < 3; ++i) {
        double d = 0.0;
        for (std::size_t k = f.size(); k-- > 1;) d = d * q + static_cast<double>(k) * f[k];
        double step = h(q) / (d - 1.0);
        if (std::isfinite(step) && std::fabs(step) < 1e-8) q -= step;
    }
    return q;
}

PgfContext::PgfContext(const JointLaw& j) : joint(&j) {
    const double ec = j.stored_mean_clones();
    if (!(ec < 1.0)) throw Error(ErrorKind::InvalidRegime, "clone subtrees are not subcritical (E xi_c >= 1)");
    m = j.stored_mean_mutants() / (1.0 - ec);
    if (m <= 1.0 + 1e-12) {
        q = 1.0;
        fprime_q = m;
        return;
    }
    auto h = [&](double s) { return f(s) - s; };
    double hi = 1.0 - 1e-3;
    while (h(hi) >= 0.0 && hi < 1.0 - 1e-12) hi = 1.0 - (1.0 - hi) / 2.0;
    double lo = 0.0;
    if (h(0.0) <= 0.0) {
        q = 0.0;
    } else {
        for (int i = 0; i < 100 && hi - lo > 1e-15; ++i) {
            double mid = 0.5 * (lo + hi);
            (h(mid) > 0.0 ? lo : hi) = mid;
        }
        q = 0.5 * (lo + hi);
    }
    fprime_q = f_derivative(q);
}

double PgfContext::f_derivative(double y) const {
    if (y == 1.0 && q == 1.0) return m;
    const double phi = f(y);
    return joint->pgf_dy(phi, y) / (1.0 - joint->pgf_ds(phi, y));
}

double PgfContext::f_iter(int n, double y) const {
    for (int i = 0; i < n; ++i) y = f(y);
    return y;
}

PairPmf chain_transition(const JointLaw& joint, int n, long long j, std::size_t kmax, std::size_t lmax,
                         double tol) {
    if (n < 1) throw Error(ErrorKind::DomainError, "n must be >= 1");
    if (j < 1) throw Error(ErrorKind::DomainError, "j must be >= 1");
    if (lmax == 0) lmax = default_lmax(joint, kmax);
    // Single-ancestor tables by composition: w_0 = delta_1, P^i from w_{i-1}, w_i = M-marginal of P^i.
    std::vector<double> w(2, 0.0);
    w[1] = 1.0;
    PairPmf single;
    for (int i = 1; i <= n; ++i) {
        single = compose(joint, w, kmax, lmax);
        w = single.l_marginal();
    }
    single.ancestors = 1;
    PairPmf out = j == 1 ? single : power_pairs(single, j);
    out.ancestors = j;
    out.n = n;
    out.dropped_mass = std::max(0.0, 1.0 - out.total());
    check_dropped(out.dropped_mass, tol, "chain_transition");
    return out;
}

PairPmf chain_transition_from(long long i, const JointLaw& joint, int n, long long j, std::size_t kmax,
                              std::size_t lmax, double tol) {
    if (i < 0) throw Error(ErrorKind::DomainError, "placeholder i must be >= 0");
    return chain_transition(joint, n, j, kmax, lmax, tol);
}

long long composition_violations() { return g_violations.load(); }

namespace {

PairPmf tilt(const PairPmf& p, const PgfContext& ctx, int n, long long j) {
    if (ctx.fprime_q == 0.0) throw Error(ErrorKind::InvalidRegime, "f'(q) = 0");
    PairPmf out = p;
    const double denom = static_cast<double>(j) * std::pow(ctx.fprime_q, n);
    for (std::size_t k = 0; k <= out.kmax; ++k) {
        for (std::size_t l = 0; l <= out.lmax; ++l) {
            double& v = out.at(k, l);
            if (v == 0.0) continue;
            const double e = static_cast<double>(l) - static_cast<double>(j);
            v *= static_cast<double>(l) * std::pow(ctx.q, e) / denom;
        }
    }
    out.dropped_mass = std::max(0.0, 1.0 - out.total());
    return out;
}

}  // namespace

PairPmf q_transition(const JointLaw& joint, int n, long long j, std::size_t kmax, std::size_t lmax,
                     double tol) {
    PgfContext ctx(joint);
    PairPmf p = chain_transition(joint, n, j, kmax, lmax, 1.0);
    PairPmf out = tilt(p, ctx, n, j);
    check_dropped(out.dropped_mass, tol, "q_transition");
    return out;
}

PairPmf spine_law(long long a, const JointLaw& joint, std::size_t kmax, std::size_t lmax, double tol) {
    PgfContext ctx(joint);
    if (!(ctx.m > 0.0)) throw Error(ErrorKind::InvalidRegime, "m = 0");
    PairPmf p = law_T0M1(a, joint, kmax, lmax, 1.0);
    PairPmf out = tilt(p, ctx, 1, a);
    check_dropped(out.dropped_mass, tol, "spine_law");
    return out;
}

PairPmf yaglom_pmf(const JointLaw& joint, int n, std::size_t kmax, std::size_t lmax, double tol) {
    if (!(joint.stored_mean_clones() < 1.0) || joint.plus().stored_mean() > 1.0 + 1e-12)
        throw Error(ErrorKind::InvalidRegime, "Yaglom law needs E xi_c < 1 and E xi+ <= 1");
    PgfContext ctx(joint);
    const double survive = 1.0 - ctx.f_iter(n, 0.0);
    PairPmf p = chain_transition(joint, n, 1, kmax, lmax, 1.0);
    for (std::size_t k = 0; k <= p.kmax; ++k) {
        p.at(k, 0) = 0.0;
        for (std::size_t l = 1; l <= p.lmax; ++l) p.at(k, l) /= survive;
    }
    p.dropped_mass = std::max(0.0, 1.0 - p.total());
    check_dropped(p.dropped_mass, tol, "yaglom_pmf");
    return p;
}

std::vector<double> immigration_pgf_coeffs(const std::vector<double>& f, std::size_t kmax) {
    double m = 0.0;
    for (std::size_t k = 1; k < f.size(); ++k) m += static_cast<double>(k) * f[k];
    if (!(m > 0.0)) throw Error(ErrorKind::DomainError, "immigration law needs f'(1) > 0");
    std::vector<double> out(kmax + 1, 0.0);
    for (std::size_t k = 0; k <= kmax && k + 1 < f.size(); ++k)
        out[k] = static_cast<double>(k + 1) * f[k + 1] / m;
    return out;
}

std::vector<double> mutant_offspring_pmf(const JointLaw& joint, std::size_t kmax, std::size_t lmax) {
    return law_T0M1(1, joint, kmax, lmax, 1.0).l_marginal();
}

}  // namespace gwmut
