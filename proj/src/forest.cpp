#include "gwmut/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gwmut/error.hpp"

namespace gwmut {

namespace {

// (clones, mutants) for one individual.
inline std::pair<std::int64_t, std::int64_t> draw_children(const OffspringModel& model, Rng& rng) {
    const std::int64_t k = model.plus.draw(rng);
    const std::int64_t c = binomial(rng, k, 1.0 - model.p);
    return {c, k - c};
}

double mutant_mean(const OffspringModel& model) {
    if (!(model.mean_clones < 1.0)) return INFINITY;
    return model.mean_mutants / (1.0 - model.mean_clones);
}

}  // namespace

std::vector<std::int32_t> MarkedForest::label(std::int64_t i) const {
    std::vector<std::int32_t> out;
    for (std::int64_t v = i; v >= 0; v = nodes[v].parent) out.push_back(nodes[v].ordinal);
    std::reverse(out.begin(), out.end());
    return out;
}

MarkedForest simulate_marked_forest(std::int64_t a, const OffspringModel& model, const ForestCaps& caps,
                                    Rng& rng) {
    if (a < 1) throw Error(ErrorKind::InvalidRegime, "need at least one ancestor");
    MarkedForest f;
    f.ancestors = a;
    if (a > caps.max_nodes)
        throw CapError(ErrorKind::PopulationCapExceeded, "ancestors exceed node cap", a, 0);
    f.nodes.resize(static_cast<std::size_t>(a));
    for (std::int64_t r = 0; r < a; ++r) f.nodes[r].ordinal = static_cast<std::int32_t>(r + 1);
    f.type_start.push_back(0);
    std::int32_t type = 0;
    while (true) {
        const std::int64_t begin = f.type_start.back();
        // breadth-first inside the type: the block grows while we walk it
        for (std::int64_t i = begin; i < static_cast<std::int64_t>(f.nodes.size()); ++i) {
            auto [c, m] = draw_children(model, rng);
            if (static_cast<std::int64_t>(f.nodes.size()) + c > caps.max_nodes)
                throw CapError(ErrorKind::PopulationCapExceeded, "node cap exceeded",
                               static_cast<long long>(f.nodes.size()), type + 1);
            f.nodes[i].clone_children = c;
            f.nodes[i].mutant_children = m;
            if (c > 0) f.nodes[i].first_clone = static_cast<std::int64_t>(f.nodes.size());
            for (std::int64_t j = 0; j < c; ++j) {
                ForestNode child;
                child.parent = i;
                child.type = type;
                child.ordinal = static_cast<std::int32_t>(j + 1);
                f.nodes.push_back(child);
            }
        }
        const std::int64_t end = static_cast<std::int64_t>(f.nodes.size());
        f.type_start.push_back(end);
        std::int64_t mutants = 0;
        for (std::int64_t i = begin; i < end; ++i) mutants += f.nodes[i].mutant_children;
        if (mutants == 0) break;
        if (type + 1 >= caps.max_types) {
            f.truncated = true;
            break;
        }
        if (end + mutants > caps.max_nodes)
            throw CapError(ErrorKind::PopulationCapExceeded, "node cap exceeded", static_cast<long long>(end),
                           type + 1);
        ++type;
        for (std::int64_t i = begin; i < end; ++i) {
            const auto& parent = f.nodes[i];
            const std::int64_t m = parent.mutant_children;
            if (m == 0) continue;
            f.nodes[i].first_mutant = static_cast<std::int64_t>(f.nodes.size());
            const std::int64_t c = parent.clone_children;
            for (std::int64_t j = 0; j < m; ++j) {
                ForestNode child;
                child.parent = i;
                child.type = type;
                child.ordinal = static_cast<std::int32_t>(c + j + 1);
                f.nodes.push_back(child);
            }
        }
    }
    return f;
}

TypeChain extract_type_chain(const MarkedForest& forest, bool strict) {
    if (strict && forest.truncated)
        throw Error(ErrorKind::IncompleteForest, "forest truncated at max_types");
    TypeChain chain;
    chain.ancestors = forest.ancestors;
    chain.truncated = forest.truncated;
    for (int k = 0; k < forest.types(); ++k) {
        std::int64_t m = 0;
        for (std::int64_t i = forest.type_start[k]; i < forest.type_start[k + 1]; ++i)
            m += forest.nodes[i].mutant_children;
        chain.pairs.emplace_back(forest.type_count(k), m);
    }
    // the last type's mutants were never explored, so its pair is still exact
    return chain;
}

std::string format_label(const std::vector<std::int32_t>& label) {
    std::string s;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(label[i]);
    }
    return s;
}

std::vector<std::size_t> rank_sizes(const std::vector<std::int64_t>& sizes, Rng& rng) {
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sizes[x] > sizes[y]; });
    return order;
}

std::vector<std::int32_t> AlleleTree::label(std::int64_t i) const {
    std::vector<std::int32_t> out;
    for (std::int64_t v = i; v > 0; v = nodes[v].parent) out.push_back(nodes[v].ordinal);
    std::reverse(out.begin(), out.end());
    return out;
}

std::int64_t AlleleTree::level_size_sum(int k) const {
    std::int64_t s = 0;
    for (std::int64_t i = level_start[k]; i < level_start[k + 1]; ++i) s += nodes[i].size;
    return s;
}

std::int64_t AlleleTree::level_degree_sum(int k) const {
    std::int64_t s = 0;
    for (std::int64_t i = level_start[k]; i < level_start[k + 1]; ++i) s += nodes[i].degree;
    return s;
}

namespace {

struct Family {
    std::int64_t size = 0;
    std::vector<std::int64_t> children;  // family ids
};

// Append the ranked children of every node in [begin, end) as the next level.
template <class ChildFn>
void grow_level(AlleleTree& t, std::int64_t begin, std::int64_t end, ChildFn&& children_of, Rng& rng) {
    for (std::int64_t i = begin; i < end; ++i) {
        std::vector<AlleleNode> kids = children_of(i);
        std::vector<std::int64_t> sizes(kids.size());
        for (std::size_t j = 0; j < kids.size(); ++j) sizes[j] = kids[j].size;
        auto order = rank_sizes(sizes, rng);
        t.nodes[i].first_child = kids.empty() ? -1 : static_cast<std::int64_t>(t.nodes.size());
        const std::int32_t depth = t.nodes[i].depth + 1;
        for (std::size_t r = 0; r < order.size(); ++r) {
            AlleleNode n = kids[order[r]];
            n.parent = i;
            n.depth = depth;
            n.ordinal = static_cast<std::int32_t>(r + 1);
            t.nodes.push_back(n);
        }
    }
    t.level_start.push_back(static_cast<std::int64_t>(t.nodes.size()));
}

}  // namespace

AlleleTree build_allele_tree(const MarkedForest& forest, Rng& rng) {
    if (forest.truncated) throw Error(ErrorKind::IncompleteForest, "forest truncated at max_types");
    const std::int64_t n = static_cast<std::int64_t>(forest.nodes.size());
    std::vector<std::int64_t> family(n, 0);
    std::vector<Family> fams(1);
    // parents precede children in storage order
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& v = forest.nodes[i];
        if (v.parent < 0) {
            family[i] = 0;
        } else if (forest.nodes[v.parent].type == v.type) {
            family[i] = family[v.parent];
        } else {
            family[i] = static_cast<std::int64_t>(fams.size());
            fams[family[v.parent]].children.push_back(family[i]);
            fams.emplace_back();
        }
        fams[family[i]].size += 1;
    }
    AlleleTree t;
    AlleleNode root;
    root.size = fams[0].size;
    root.degree = static_cast<std::int64_t>(fams[0].children.size());
    t.nodes.push_back(root);
    t.level_start = {0, 1};
    std::vector<std::int64_t> fam_of{0};  // tree node -> family
    while (true) {
        const std::int64_t begin = t.level_start[t.level_start.size() - 2];
        const std::int64_t end = t.level_start.back();
        std::int64_t total = 0;
        for (std::int64_t i = begin; i < end; ++i) total += t.nodes[i].degree;
        if (total == 0) break;
        // ranked children are appended in order, so track the family of each
        std::vector<std::int64_t> pending;
        auto children_of = [&](std::int64_t i) {
            std::vector<AlleleNode> kids;
            for (std::int64_t c : fams[fam_of[i]].children) {
                AlleleNode k;
                k.size = fams[c].size;
                k.degree = static_cast<std::int64_t>(fams[c].children.size());
                k.first_child = c;  // temporary: family id
                kids.push_back(k);
            }
            return kids;
        };
        grow_level(t, begin, end, children_of, rng);
        for (std::int64_t i = end; i < t.level_start.back(); ++i) {
            fam_of.push_back(t.nodes[i].first_child);
            t.nodes[i].first_child = -1;
        }
    }
    return t;
}

PairSample sample_T0M1_by_walk(std::int64_t a, const OffspringModel& model, Rng& rng, std::int64_t max_steps) {
    if (a < 1) throw Error(ErrorKind::InvalidRegime, "need at least one ancestor");
    std::int64_t s = a, steps = 0, m = 0;
    while (s > 0) {
        if (steps >= max_steps) throw CapError(ErrorKind::WalkCapExceeded, "walk did not hit 0", steps, 0);
        auto [c, k] = draw_children(model, rng);
        s += c - 1;
        m += k;
        ++steps;
    }
    return {steps, m, false};
}

PairSample sample_T0M1(std::int64_t a, const OffspringModel& model, Rng& rng, std::int64_t censor,
                       std::int64_t max_nodes, std::int64_t m_censor) {
    if (a < 0) throw Error(ErrorKind::InvalidRegime, "negative ancestor count");
    PairSample out;
    std::int64_t z = a;
    while (z > 0) {
        out.t0 += z;
        if (censor > 0 && out.t0 > censor && out.m1 > m_censor) {
            out.censored = true;
            return out;
        }
        if (out.t0 > max_nodes)
            throw CapError(ErrorKind::PopulationCapExceeded, "clonal family exceeds cap", out.t0, 1);
        const std::int64_t k = model.plus.sum(z, rng);
        const std::int64_t c = binomial(rng, k, 1.0 - model.p);
        out.m1 += k - c;
        z = c;
    }
    return out;
}

PairSample sample_spine_pair(std::int64_t a, const OffspringModel& model, Rng& rng, std::int64_t censor) {
    if (a < 1) throw Error(ErrorKind::InvalidRegime, "need at least one ancestor");
    const double rho = model.mean_clones;
    if (!(rho < 1.0)) throw Error(ErrorKind::InvalidRegime, "clone subtrees are not subcritical");
    // spine length: P(H = h) = rho^h (1 - rho)
    std::int64_t h = 0;
    if (rho > 0.0) {
        const double g = std::floor(std::log(uniform_open(rng)) / std::log(rho));
        h = g > 4e18 ? static_cast<std::int64_t>(4e18) : static_cast<std::int64_t>(g);
    }
    if (censor > 0 && h + 1 > censor) return {h + 1, 0, true};
    // h+1 spine individuals with size-biased offspring, one child each distinguished
    const std::int64_t total = model.size_biased.sum(h + 1, rng);
    const std::int64_t others = total - (h + 1);
    const std::int64_t kc = binomial(rng, others, 1.0 - model.p);
    const std::int64_t km = others - kc + 1;
    if (censor > 0 && h + 1 == censor && a - 1 + kc > 0) return {h + a + kc, km, true};
    PairSample rest = sample_T0M1(a - 1 + kc, model, rng, censor > 0 ? censor - (h + 1) : 0);
    return {h + 1 + rest.t0, km + rest.m1, rest.censored};
}

TypeChain simulate_type_chain(std::int64_t a, const OffspringModel& model, int horizon, Rng& rng) {
    TypeChain chain;
    chain.ancestors = a;
    std::int64_t j = a;
    for (int n = 0; n < horizon && j > 0; ++n) {
        PairSample s = sample_T0M1(j, model, rng);
        chain.pairs.emplace_back(s.t0, s.m1);
        j = s.m1;
    }
    return chain;
}

TypeChain simulate_conditioned_chain(std::int64_t a, const OffspringModel& model, int horizon, Rng& rng) {
    if (mutant_mean(model) > 1.0 + 1e-12)
        throw Error(ErrorKind::InvalidRegime, "mutant chain is supercritical");
    TypeChain chain;
    chain.ancestors = a;
    std::int64_t j = a;
    for (int n = 0; n < horizon; ++n) {
        PairSample s = sample_spine_pair(j, model, rng);
        chain.pairs.emplace_back(s.t0, s.m1);
        j = s.m1;
    }
    return chain;
}

AlleleTree sample_allele_tree(std::int64_t a, const OffspringModel& model, int depth, Rng& rng,
                              bool immigration) {
    if (immigration && mutant_mean(model) > 1.0 + 1e-12)
        throw Error(ErrorKind::InvalidRegime, "mutant chain is supercritical");
    AlleleTree t;
    PairSample r = immigration ? sample_spine_pair(a, model, rng) : sample_T0M1(a, model, rng);
    AlleleNode root;
    root.size = r.t0;
    root.degree = r.m1;
    root.spine = immigration;
    t.nodes.push_back(root);
    t.level_start = {0, 1};
    for (int k = 0; k < depth; ++k) {
        const std::int64_t begin = t.level_start[k], end = t.level_start[k + 1];
        auto children_of = [&](std::int64_t i) {
            const std::int64_t d = t.nodes[i].degree;
            std::int64_t chosen = -1;
            if (t.nodes[i].spine && d > 0) chosen = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(d));
            std::vector<AlleleNode> kids(static_cast<std::size_t>(d));
            for (std::int64_t j = 0; j < d; ++j) {
                PairSample s = j == chosen ? sample_spine_pair(1, model, rng) : sample_T0M1(1, model, rng);
                kids[j].size = s.t0;
                kids[j].degree = s.m1;
                kids[j].spine = j == chosen;
            }
            return kids;
        };
        grow_level(t, begin, end, children_of, rng);
    }
    return t;
}

AlleleTree build_allele_tree_with_immigration(const OffspringModel& model, int depth, Rng& rng, std::int64_t a) {
    return sample_allele_tree(a, model, depth, rng, true);
}

}  // namespace gwmut
