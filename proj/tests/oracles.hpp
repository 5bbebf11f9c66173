#pragma once

// Brute-force references used by the unit and acceptance tests. They share
// no code with the library's table builders.

#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

// Finite joint law as an explicit list of ((clones, mutants), prob).
struct Atom {
    int c, m;
    double p;
};

inline std::vector<Atom> thinned_atoms(const std::vector<double>& plus, double p) {
    std::vector<Atom> out;
    for (int n = 0; n < static_cast<int>(plus.size()); ++n) {
        if (plus[n] == 0.0) continue;
        for (int l = 0; l <= n; ++l) {
            double b = 1.0;
            for (int i = 0; i < l; ++i) b = b * (n - i) / (i + 1);
            out.push_back({n - l, l, plus[n] * b * std::pow(1 - p, n - l) * std::pow(p, l)});
        }
    }
    return out;
}

// P_a(T0 = k, M1 = l) for k <= kmax by enumerating every clonal family with
// at most kmax members: each member in depth-first order picks an atom,
// the family is complete when no clone is left to process.
inline std::map<std::pair<int, int>, double> enumerate_T0M1(const std::vector<Atom>& atoms, int a, int kmax) {
    std::map<std::pair<int, int>, double> out;
    struct Rec {
        const std::vector<Atom>& atoms;
        int kmax;
        std::map<std::pair<int, int>, double>& out;
        void go(int pending, int members, int mutants, double prob) {
            if (pending == 0) {
                out[{members, mutants}] += prob;
                return;
            }
            if (members + pending > kmax) return;
            for (const auto& at : atoms) go(pending - 1 + at.c, members + 1, mutants + at.m, prob * at.p);
        }
    } rec{atoms, kmax, out};
    rec.go(a, 0, 0, 1.0);
    return out;
}

}  // namespace oracle
