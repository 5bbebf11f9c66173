#include "gwmut/sampling.hpp"

#include <cmath>
#include <random>

#include <boost/random/binomial_distribution.hpp>

#include "gwmut/error.hpp"

namespace gwmut {

AliasTable::AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0 || n > 0xffffffffu) throw Error(ErrorKind::InvalidLaw, "alias table size out of range");
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw Error(ErrorKind::InvalidLaw, "alias table needs positive total weight");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = weights[i] * static_cast<double>(n) / total;
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        std::uint32_t s = small.back(), l = large.back();
        small.pop_back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (std::uint32_t i : large) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
    for (std::uint32_t i : small) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
}

std::int64_t binomial(Rng& rng, std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(rng, n, 1.0 - p);
    const double np = static_cast<double>(n) * p;
    if (np < 16.0) {
        // Inversion from 0.
        const double r = p / (1.0 - p);
        double f = std::exp(static_cast<double>(n) * std::log1p(-p));
        double u = uniform01(rng);
        std::int64_t k = 0;
        while (u >= f && k < n) {
            u -= f;
            ++k;
            f *= r * static_cast<double>(n - k + 1) / static_cast<double>(k);
            if (f == 0.0) break;
        }
        return k;
    }
    // BTRD; the std version recomputes its setup on every call and is several times slower
    boost::random::binomial_distribution<std::int64_t> d(n, p);
    return d(rng);
}

CountSampler::CountSampler(const std::vector<double>& pmf) {
    double total = 0.0;
    for (double q : pmf) total += q;
    if (!(total > 0.0)) throw Error(ErrorKind::InvalidLaw, "count sampler needs positive mass");
    pmf_.resize(pmf.size());
    for (std::size_t k = 0; k < pmf.size(); ++k) pmf_[k] = pmf[k] / total;
    surv_.assign(pmf_.size() + 1, 0.0);
    for (std::size_t k = pmf_.size(); k-- > 0;) surv_[k] = surv_[k + 1] + pmf_[k];
    mean_ = 0.0;
    for (std::size_t k = pmf_.size(); k-- > 1;) mean_ += static_cast<double>(k) * pmf_[k];
    alias_ = AliasTable(pmf_);
}

std::int64_t CountSampler::draw_above(std::size_t k, Rng& rng) const {
    // X = j iff surv[j+1] <= v < surv[j], v uniform on [0, surv[k+1]).
    const double v = uniform01(rng) * surv_[k + 1];
    std::size_t lo = k + 1, hi = pmf_.size() - 1;  // surv[lo] > v; find largest j with surv[j] > v
    if (!(surv_[lo] > v)) return static_cast<std::int64_t>(lo);
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo + 1) / 2;
        if (surv_[mid] > v)
            lo = mid;
        else
            hi = mid - 1;
    }
    return static_cast<std::int64_t>(lo);
}

std::int64_t CountSampler::sum(std::int64_t S, Rng& rng) const {
    if (S <= 64) {
        std::int64_t t = 0;
        for (std::int64_t i = 0; i < S; ++i) t += draw(rng);
        return t;
    }
    std::int64_t remaining = S, total = 0;
    std::size_t k = 0;
    const std::size_t last = pmf_.size() - 1;
    for (; k < last && remaining > 0; ++k) {
        if (static_cast<double>(remaining) * 4.0 <= static_cast<double>(k) + 32.0) break;
        const double s = surv_[k];
        if (!(s > 0.0)) {
            remaining = 0;
            break;
        }
        const double pk = std::min(1.0, pmf_[k] / s);
        const std::int64_t c = binomial(rng, remaining, pk);
        total += static_cast<std::int64_t>(k) * c;
        remaining -= c;
    }
    if (remaining > 0) {
        if (k >= last) {
            total += static_cast<std::int64_t>(last) * remaining;
        } else {
            // The rest are conditioned on X >= k.
            for (std::int64_t i = 0; i < remaining; ++i) {
                if (k == 0)
                    total += draw(rng);
                else
                    total += draw_above(k - 1, rng);
            }
        }
    }
    return total;
}

OffspringModel::OffspringModel(const JointLaw& j) : joint(&j), p(j.p()) {
    const auto& probs = j.plus().probs();
    plus = CountSampler(probs);
    std::vector<double> sb(probs.size(), 0.0);
    for (std::size_t k = 1; k < probs.size(); ++k) sb[k] = static_cast<double>(k) * probs[k];
    bool any = false;
    for (double w : sb) any = any || w > 0.0;
    if (any) size_biased = CountSampler(sb);
    mean_clones = (1.0 - p) * plus.mean();
    mean_mutants = p * plus.mean();
}

}  // namespace gwmut
