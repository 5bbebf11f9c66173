#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwmut/laws.hpp"
#include "gwmut/rng.hpp"
#include "gwmut/sampling.hpp"

namespace gwmut {

struct ForestCaps {
    std::int64_t max_nodes = 10'000'000;
    int max_types = 64;
};

// One individual. Children are stored in two contiguous runs: clones inside
// the node's own type block, mutants inside the next type block.
struct ForestNode {
    std::int64_t parent = -1;
    std::int32_t type = 0;
    std::int32_t ordinal = 0;  // 1-based position among the parent's children (clones first)
    std::int64_t clone_children = 0;
    std::int64_t mutant_children = 0;
    std::int64_t first_clone = -1;
    std::int64_t first_mutant = -1;
};

struct MarkedForest {
    std::int64_t ancestors = 0;
    std::vector<ForestNode> nodes;
    // Nodes of type k occupy [type_start[k], type_start[k+1]).
    std::vector<std::int64_t> type_start;
    // Mutants of the last stored type were not explored (max_types reached).
    bool truncated = false;

    int types() const { return static_cast<int>(type_start.size()) - 1; }
    std::int64_t type_count(int k) const { return type_start[k + 1] - type_start[k]; }
    // Ulam-Harris label; roots are 1..a.
    std::vector<std::int32_t> label(std::int64_t i) const;
};

// Each individual draws (xi_c, xi_m); types explored in increasing order,
// breadth-first inside a type.
MarkedForest simulate_marked_forest(std::int64_t a, const OffspringModel& model, const ForestCaps& caps,
                                    Rng& rng);

struct TypeChain {
    std::int64_t ancestors = 0;
    // (T_n, M_{n+1}) for n = 0..N
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    bool truncated = false;
};

// Throws IncompleteForest when strict and the forest hit max_types; otherwise
// the chain stops at the last complete type and is flagged truncated.
TypeChain extract_type_chain(const MarkedForest& forest, bool strict = false);

struct AlleleNode {
    std::int64_t size = 0;    // A_u
    std::int64_t degree = 0;  // d_u
    std::int64_t parent = -1;
    std::int64_t first_child = -1;  // children contiguous, ranked by size
    std::int32_t depth = 0;
    std::int32_t ordinal = 0;  // 1-based rank among siblings
    bool spine = false;        // distinguished family (immigration tree only)
};

struct AlleleTree {
    // Breadth-first: nodes of depth k are contiguous, root at 0.
    std::vector<AlleleNode> nodes;
    std::vector<std::int64_t> level_start;
    // Degrees of the deepest stored level are known, their children are not.
    int depth() const { return static_cast<int>(level_start.size()) - 2; }
    std::vector<std::int32_t> label(std::int64_t i) const;
    std::int64_t level_size_sum(int k) const;
    std::int64_t level_degree_sum(int k) const;
};

std::string format_label(const std::vector<std::int32_t>& label);

// Sizes ranked decreasingly, ties in uniformly random order. Returns the
// permutation: order[r] = index of the r-th largest.
std::vector<std::size_t> rank_sizes(const std::vector<std::int64_t>& sizes, Rng& rng);

AlleleTree build_allele_tree(const MarkedForest& forest, Rng& rng);

// (T0, M1) under P_a. censored means T0 crossed `censor` (when > 0) while M1
// exceeded m_censor, and the sampler stopped early; t0, m1 are then lower bounds.
struct PairSample {
    std::int64_t t0 = 0;
    std::int64_t m1 = 0;
    bool censored = false;
};

// Step-by-step first passage of S_k = a + sum (xi_c - 1) to 0.
PairSample sample_T0M1_by_walk(std::int64_t a, const OffspringModel& model, Rng& rng,
                               std::int64_t max_steps = 100'000'000);

// Same law, one clone generation at a time: the offspring total of a
// generation of size Z is drawn in one go, then split by a binomial.
PairSample sample_T0M1(std::int64_t a, const OffspringModel& model, Rng& rng, std::int64_t censor = 0,
                       std::int64_t max_nodes = 4'000'000'000'000'000'000LL, std::int64_t m_censor = -1);

// (T0, M1) under the size-biased law P^up_a (a - 1 ordinary ancestors and one
// ancestor carrying the spine to a uniformly chosen mutant child).
PairSample sample_spine_pair(std::int64_t a, const OffspringModel& model, Rng& rng, std::int64_t censor = 0);

// Unconditioned chain for `horizon` steps (stops early at absorption).
TypeChain simulate_type_chain(std::int64_t a, const OffspringModel& model, int horizon, Rng& rng);

// Q-process chain through the spine decomposition. Requires m <= 1.
TypeChain simulate_conditioned_chain(std::int64_t a, const OffspringModel& model, int horizon, Rng& rng);

// Allele tree drawn family by family (each mutant founds an independent
// P_1 family). With immigration, the spine family's distinguished child is
// chosen uniformly among its mutant children and regenerated from the
// spine law before ranking.
AlleleTree sample_allele_tree(std::int64_t a, const OffspringModel& model, int depth, Rng& rng,
                              bool immigration = false);

AlleleTree build_allele_tree_with_immigration(const OffspringModel& model, int depth, Rng& rng,
                                              std::int64_t a = 1);

}  // namespace gwmut
