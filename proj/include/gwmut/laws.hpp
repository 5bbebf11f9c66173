#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

namespace gwmut {

// Analytic continuation probs[k] = scale * k^{-(1+alpha)} beyond the stored support.
struct ParetoTail {
    double alpha;
    double scale;
    bool operator==(const ParetoTail&) const = default;
};

// Law of the total offspring number xi+.
class OffspringLaw {
public:
    OffspringLaw() = default;

    // Validates masses; truncation_mass is the mass beyond the stored support.
    static OffspringLaw from_probs(std::vector<double> probs,
                                   std::optional<ParetoTail> tail = std::nullopt,
                                   double truncation_mass = 0.0);

    const std::vector<double>& probs() const { return probs_; }
    std::size_t size() const { return probs_.size(); }
    std::size_t max_value() const { return probs_.size() - 1; }
    double operator[](std::size_t k) const { return k < probs_.size() ? probs_[k] : 0.0; }
    const std::optional<ParetoTail>& tail() const { return tail_; }
    double truncation_mass() const { return truncation_mass_; }

    // Mean of the full law: stored part plus the analytic tail when present.
    double mean() const { return mean_; }
    double stored_mean() const { return stored_mean_; }
    // E[xi(xi-1)] over the stored support (infinite for a genuine heavy tail).
    double factorial_moment2() const;

    // pgf over the stored support.
    double pgf(double s) const;
    double pgf_derivative(double s) const;

    bool operator==(const OffspringLaw& o) const {
        return probs_ == o.probs_ && tail_ == o.tail_ && truncation_mass_ == o.truncation_mass_;
    }

private:
    std::vector<double> probs_;
    std::optional<ParetoTail> tail_;
    double truncation_mass_ = 0.0;
    double mean_ = 0.0;
    double stored_mean_ = 0.0;
};

// Sum_{k >= from} k^{-s}, s > 1.
double power_tail_sum(double s, double from);

// Critical law with pi_k = c k^{-(1+alpha)} for k >= 2, c = 0.9 / sum_{k>=2} k^{-alpha}.
OffspringLaw build_critical_stable_law(double alpha, double tail_tol = 1e-9);

// Law of (xi_c, xi_m) obtained by marking each child as a mutant with probability p.
// Rows grouped by total m = k + l are materialized up to a cap; beyond it
// prob() evaluates the thinning formula directly.
class JointLaw {
public:
    JointLaw() = default;

    const OffspringLaw& plus() const { return *plus_; }
    std::shared_ptr<const OffspringLaw> plus_ptr() const { return plus_; }
    double p() const { return p_; }
    double prob(std::size_t k, std::size_t l) const;
    // Row m holds probs for (k, l) = (m - l, l), indexed by l.
    const std::vector<double>& row(std::size_t m) const { return rows_[m]; }
    std::size_t materialized_rows() const { return rows_.size(); }
    std::size_t max_total() const { return plus_->max_value(); }
    double mean_clones() const { return (1.0 - p_) * plus_->mean(); }
    double mean_mutants() const { return p_ * plus_->mean(); }
    // Means over the stored (sampled) support.
    double stored_mean_clones() const { return (1.0 - p_) * plus_->stored_mean(); }
    double stored_mean_mutants() const { return p_ * plus_->stored_mean(); }

    // g(s, y) = E[s^xi_c y^xi_m] and its partials.
    double pgf(double s, double y) const { return plus_->pgf((1.0 - p_) * s + p_ * y); }
    double pgf_ds(double s, double y) const {
        return (1.0 - p_) * plus_->pgf_derivative((1.0 - p_) * s + p_ * y);
    }
    double pgf_dy(double s, double y) const {
        return p_ * plus_->pgf_derivative((1.0 - p_) * s + p_ * y);
    }

    friend JointLaw thin_offspring(const OffspringLaw& plus, double p, std::size_t max_rows);

private:
    std::shared_ptr<const OffspringLaw> plus_;
    double p_ = 0.0;
    std::vector<std::vector<double>> rows_;
};

JointLaw thin_offspring(const OffspringLaw& plus, double p, std::size_t max_rows = 1024);

// Dense pmf on (clones, mutants) with both axes capped.
struct Grid2D {
    std::size_t nk = 0, nl = 0;  // indices 0..nk-1, 0..nl-1
    std::vector<double> v;
    double dropped_mass = 0.0;

    Grid2D() = default;
    Grid2D(std::size_t nk_, std::size_t nl_) : nk(nk_), nl(nl_), v(nk_ * nl_, 0.0) {}
    double& at(std::size_t k, std::size_t l) { return v[k * nl + l]; }
    double at(std::size_t k, std::size_t l) const { return v[k * nl + l]; }
    double get(std::size_t k, std::size_t l) const { return k < nk && l < nl ? at(k, l) : 0.0; }
    double* row(std::size_t k) { return v.data() + k * nl; }
    const double* row(std::size_t k) const { return v.data() + k * nl; }
    double total() const;
};

// Joint law restricted to indices <= cap on each axis.
Grid2D joint_grid(const JointLaw& joint, std::size_t cap);

// out = in * pi, truncated to in's shape (out is overwritten).
void multiply_by_joint(const Grid2D& in, const JointLaw& joint, Grid2D& out);

// a * b, truncated to a's shape.
Grid2D convolve(const Grid2D& a, const Grid2D& b);

// pi^{*k} truncated to indices <= cap on each axis. Throws CapTooSmall if
// dropped mass exceeds tol.
Grid2D convolve_power(const JointLaw& joint, std::size_t k, std::size_t cap, double tol = 1e-6);

// E exp(-lambda xi_c - theta xi_m) over the stored support.
double joint_laplace(const JointLaw& joint, double lambda, double theta);

// E exp(-t xi+).
double plus_laplace(const OffspringLaw& plus, double t);

}  // namespace gwmut
