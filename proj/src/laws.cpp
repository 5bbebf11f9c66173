#include "gwmut/laws.hpp"

#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <string>

#include "gwmut/error.hpp"
#include "gwmut/kernels.hpp"

namespace gwmut {

namespace {

double pareto_tail_mean(const ParetoTail& t, std::size_t stored) {
    // sum_{k > stored-1} k * scale * k^{-(1+alpha)}
    return t.scale * power_tail_sum(t.alpha, static_cast<double>(stored));
}

}  // namespace

double power_tail_sum(double s, double from) {
    // Direct summation up to a large index, then Euler-Maclaurin.
    double n = from;
    double direct = 0.0;
    const double switch_at = std::max(from, 1000.0);
    // sum from `from` to switch_at-1, smallest terms first
    for (double k = switch_at - 1.0; k >= n; k -= 1.0) direct += std::pow(k, -s);
    double N = switch_at;
    double em = std::pow(N, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(N, -s) +
                s * std::pow(N, -s - 1.0) / 12.0 -
                s * (s + 1.0) * (s + 2.0) * std::pow(N, -s - 3.0) / 720.0;
    return direct + em;
}

OffspringLaw OffspringLaw::from_probs(std::vector<double> probs, std::optional<ParetoTail> tail,
                                      double truncation_mass) {
    if (probs.empty()) throw Error(ErrorKind::InvalidLaw, "empty pmf");
    if (!(truncation_mass >= 0.0)) throw Error(ErrorKind::InvalidLaw, "negative truncation mass");
    // smallest masses first, compensated: long power tails would otherwise
    // lose more than the 1e-12 budget to rounding
    double total = 0.0, comp = 0.0;
    for (std::size_t k = probs.size(); k-- > 0;) {
        const double q = probs[k];
        if (!(q >= 0.0) || !std::isfinite(q)) throw Error(ErrorKind::InvalidLaw, "negative or non-finite mass");
        const double t = total + q;
        comp += std::fabs(total) >= q ? (total - t) + q : (q - t) + total;
        total = t;
    }
    total += comp + truncation_mass;
    if (std::fabs(total - 1.0) > 1e-12)
        throw Error(ErrorKind::InvalidLaw, "masses sum to " + std::to_string(total));
    if (tail && !(tail->alpha > 1.0 && tail->alpha < 2.0 && tail->scale > 0.0))
        throw Error(ErrorKind::InvalidLaw, "tail descriptor needs alpha in (1,2) and scale > 0");
    if (tail && truncation_mass <= 0.0)
        throw Error(ErrorKind::InvalidLaw, "tail descriptor without truncation mass");

    OffspringLaw law;
    law.probs_ = std::move(probs);
    law.tail_ = tail;
    law.truncation_mass_ = truncation_mass;
    double m = 0.0;
    for (std::size_t k = law.probs_.size(); k-- > 1;) m += static_cast<double>(k) * law.probs_[k];
    law.stored_mean_ = m;
    law.mean_ = m + (tail ? pareto_tail_mean(*tail, law.probs_.size()) : 0.0);
    return law;
}

double OffspringLaw::factorial_moment2() const {
    double s = 0.0;
    for (std::size_t k = probs_.size(); k-- > 2;)
        s += static_cast<double>(k) * static_cast<double>(k - 1) * probs_[k];
    return s;
}

double OffspringLaw::pgf(double s) const {
    double acc = 0.0;
    for (std::size_t k = probs_.size(); k-- > 0;) acc = acc * s + probs_[k];
    return acc;
}

double OffspringLaw::pgf_derivative(double s) const {
    double acc = 0.0;
    for (std::size_t k = probs_.size(); k-- > 1;) acc = acc * s + static_cast<double>(k) * probs_[k];
    return acc;
}

OffspringLaw build_critical_stable_law(double alpha, double tail_tol) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw Error(ErrorKind::InvalidLaw, "alpha must lie in (1,2)");
    if (!(tail_tol > 0.0 && tail_tol <= 1e-6)) throw Error(ErrorKind::InvalidLaw, "tail_tol must lie in (0,1e-6]");

    const double zeta_a = boost::math::zeta(alpha) - 1.0;           // sum_{k>=2} k^{-alpha}
    const double zeta_a1 = boost::math::zeta(alpha + 1.0) - 1.0;    // sum_{k>=2} k^{-(1+alpha)}
    const double c = 0.9 / zeta_a;
    const double p1 = 1.0 - c * zeta_a;  // = 0.1 up to rounding
    if (p1 < 0.0) throw Error(ErrorKind::InfeasibleLaw, "pi_1 < 0");
    const double p0 = 1.0 - p1 - c * zeta_a1;
    if (p0 < 0.0) throw Error(ErrorKind::InfeasibleLaw, "pi_0 < 0");

    // Smallest K with analytic mass beyond K below tail_tol.
    double K = std::floor(std::pow(c / (alpha * tail_tol), 1.0 / alpha));
    while (c * power_tail_sum(1.0 + alpha, K + 1.0) >= tail_tol) K += 1.0;
    while (K > 2.0 && c * power_tail_sum(1.0 + alpha, K) < tail_tol) K -= 1.0;
    const std::size_t kmax = static_cast<std::size_t>(K);

    std::vector<double> probs(kmax + 1);
    probs[0] = p0;
    probs[1] = p1;
    for (std::size_t k = 2; k <= kmax; ++k) probs[k] = c * std::pow(static_cast<double>(k), -(1.0 + alpha));
    const double trunc = c * power_tail_sum(1.0 + alpha, K + 1.0);
    return OffspringLaw::from_probs(std::move(probs), ParetoTail{alpha, c}, trunc);
}

JointLaw thin_offspring(const OffspringLaw& plus, double p, std::size_t max_rows) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidLaw, "mutation probability must lie in (0,1)");
    if (plus.size() == 0) throw Error(ErrorKind::InvalidLaw, "empty offspring law");
    JointLaw j;
    j.plus_ = std::make_shared<OffspringLaw>(plus);
    j.p_ = p;
    const std::size_t rows = std::min(plus.size(), max_rows);
    j.rows_.resize(rows);
    // Binomial rows by the weighted Pascal recurrence, indexed by l (mutants).
    std::vector<double> b{1.0}, next;
    for (std::size_t m = 0; m < rows; ++m) {
        if (m > 0) {
            next.assign(m + 1, 0.0);
            for (std::size_t l = 0; l < m; ++l) {
                next[l] += (1.0 - p) * b[l];
                next[l + 1] += p * b[l];
            }
            b.swap(next);
        }
        auto& r = j.rows_[m];
        r.resize(m + 1);
        for (std::size_t l = 0; l <= m; ++l) r[l] = plus[m] * b[l];
    }
    return j;
}

double JointLaw::prob(std::size_t k, std::size_t l) const {
    const std::size_t m = k + l;
    if (m < rows_.size()) return rows_[m][l];
    const double pm = (*plus_)[m];
    if (pm == 0.0) return 0.0;
    const double lg = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(l + 1.0);
    return pm * std::exp(lg + k * std::log1p(-p_) + l * std::log(p_));
}

double Grid2D::total() const { return kernels::sum(v.data(), v.size()); }

Grid2D joint_grid(const JointLaw& joint, std::size_t cap) {
    Grid2D g(cap + 1, cap + 1);
    double kept = 0.0;
    const std::size_t mmax = std::min(joint.max_total(), 2 * cap);
    for (std::size_t m = 0; m <= mmax; ++m) {
        for (std::size_t l = 0; l <= m; ++l) {
            std::size_t k = m - l;
            if (k > cap || l > cap) continue;
            double q = joint.prob(k, l);
            g.at(k, l) = q;
            kept += q;
        }
    }
    g.dropped_mass = std::max(0.0, 1.0 - kept);
    return g;
}

Grid2D convolve(const Grid2D& a, const Grid2D& b) {
    Grid2D out(a.nk, a.nl);
    for (std::size_t k1 = 0; k1 < a.nk; ++k1) {
        for (std::size_t l1 = 0; l1 < a.nl; ++l1) {
            const double w = a.at(k1, l1);
            if (w == 0.0) continue;
            for (std::size_t k2 = 0; k2 < b.nk && k1 + k2 < out.nk; ++k2) {
                const std::size_t len = std::min(b.nl, out.nl - l1);
                kernels::axpy(w, b.row(k2), out.row(k1 + k2) + l1, len);
            }
        }
    }
    out.dropped_mass = std::max(0.0, 1.0 - out.total());
    return out;
}

void multiply_by_joint(const Grid2D& in, const JointLaw& joint, Grid2D& out) {
    std::fill(out.v.begin(), out.v.end(), 0.0);
    const std::size_t mmax = std::min(joint.max_total(), in.nk + in.nl);
    for (std::size_t m = 0; m <= mmax; ++m) {
        for (std::size_t l2 = 0; l2 <= m; ++l2) {
            const std::size_t k2 = m - l2;
            if (k2 >= in.nk || l2 >= in.nl) continue;
            const double w = joint.prob(k2, l2);
            if (w == 0.0) continue;
            for (std::size_t k1 = 0; k1 + k2 < in.nk; ++k1)
                kernels::axpy(w, in.row(k1), out.row(k1 + k2) + l2, in.nl - l2);
        }
    }
}

Grid2D convolve_power(const JointLaw& joint, std::size_t k, std::size_t cap, double tol) {
    Grid2D cur(cap + 1, cap + 1);
    cur.at(0, 0) = 1.0;
    Grid2D next(cap + 1, cap + 1);
    for (std::size_t i = 0; i < k; ++i) {
        multiply_by_joint(cur, joint, next);
        std::swap(cur, next);
    }
    cur.dropped_mass = std::max(0.0, 1.0 - cur.total());
    if (cur.dropped_mass > tol)
        throw Error(ErrorKind::CapTooSmall, "convolve_power dropped mass " + std::to_string(cur.dropped_mass));
    return cur;
}

double plus_laplace(const OffspringLaw& plus, double t) { return plus.pgf(std::exp(-t)); }

double joint_laplace(const JointLaw& joint, double lambda, double theta) {
    const double ec = std::exp(-lambda), em = std::exp(-theta);
    double total = 0.0;
    const std::size_t rows = joint.materialized_rows();
    // Materialized rows: explicit double sum over (k, l).
    std::vector<double> pc(rows + 1, 1.0), pm(rows + 1, 1.0);
    for (std::size_t i = 1; i <= rows; ++i) {
        pc[i] = pc[i - 1] * ec;
        pm[i] = pm[i - 1] * em;
    }
    for (std::size_t m = rows; m-- > 0;) {
        const auto& r = joint.row(m);
        double s = 0.0;
        for (std::size_t l = 0; l <= m; ++l) s += r[l] * pc[m - l] * pm[l];
        total += s;
    }
    // Remaining rows collapse by the binomial theorem.
    const double z = (1.0 - joint.p()) * ec + joint.p() * em;
    const auto& probs = joint.plus().probs();
    double zm = std::pow(z, static_cast<double>(rows));
    double tail = 0.0;
    for (std::size_t m = rows; m < probs.size(); ++m) {
        tail += probs[m] * zm;
        zm *= z;
        if (zm == 0.0) break;
    }
    return total + tail;
}

}  // namespace gwmut
