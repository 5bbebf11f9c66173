#pragma once

#include <cstdint>
#include <vector>

#include "gwmut/laws.hpp"
#include "gwmut/rng.hpp"

namespace gwmut {

// Walker/Vose alias table over indices 0..n-1 (weights need not be normalized).
class AliasTable {
public:
    AliasTable() = default;
    explicit AliasTable(const std::vector<double>& weights);
    std::size_t size() const { return prob_.size(); }
    std::size_t sample(Rng& rng) const {
        const std::uint64_t r = rng();
        const std::size_t i = static_cast<std::size_t>((r >> 32) * prob_.size() >> 32);
        // tail cells carry probabilities near 1e-10, so the coin needs full precision
        return uniform01(rng) < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

// Binomial(n, p) draw; exact for all n, p.
std::int64_t binomial(Rng& rng, std::int64_t n, double p);

// Sampler for i.i.d. offspring counts from a (stored, renormalized) pmf,
// including the sum of S draws in O(~S^{1/(1+alpha)}) work for large S.
class CountSampler {
public:
    CountSampler() = default;
    explicit CountSampler(const std::vector<double>& pmf);
    std::int64_t draw(Rng& rng) const { return static_cast<std::int64_t>(alias_.sample(rng)); }
    // Sum of S i.i.d. draws.
    std::int64_t sum(std::int64_t S, Rng& rng) const;
    double mean() const { return mean_; }

private:
    std::int64_t draw_above(std::size_t k, Rng& rng) const;  // conditioned on > k

    std::vector<double> pmf_;
    std::vector<double> surv_;  // surv_[k] = P(X >= k)
    AliasTable alias_;
    double mean_ = 0.0;
};

// Everything a simulator needs about a joint law, built once per run.
struct OffspringModel {
    const JointLaw* joint = nullptr;
    double p = 0.0;
    CountSampler plus;        // law of xi+
    CountSampler size_biased; // k pi_k / mean
    double mean_clones = 0.0; // E xi_c over the sampled (stored) law
    double mean_mutants = 0.0;

    explicit OffspringModel(const JointLaw& j);
};

}  // namespace gwmut
