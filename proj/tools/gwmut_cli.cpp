// gwmut command line: exact tables, simulation streams, limit objects and
// validation reports.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "gwmut/error.hpp"
#include "gwmut/exact.hpp"
#include "gwmut/forest.hpp"
#include "gwmut/io.hpp"
#include "gwmut/scaling.hpp"
#include "gwmut/validate.hpp"

using namespace gwmut;
using nlohmann::json;

namespace {

struct Output {
    std::string path = "-";
    std::ofstream file;
    std::ostream* os = &std::cout;

    void open(const json& config, std::uint64_t seed) {
        if (path == "-" || path.empty()) return;
        const std::string full = output_path(path);
        file.open(full);
        if (!file) throw Error(ErrorKind::Usage, "cannot write " + full);
        os = &file;
        write_sidecar(full, config, seed);
    }
    std::ostream& operator*() { return *os; }
};

struct LawOpts {
    std::string law = "lstar";
    std::optional<double> p;
    OffspringLaw plus;
    JointLaw joint;

    void add(CLI::App* app) {
        app->add_option("--law", law, "lstar | subcritical | stable:<alpha> | law JSON file");
        app->add_option("--p", p, "mutation probability (overrides the law's)");
    }
    void load() {
        std::optional<double> lp;
        plus = parse_law_spec(law, &lp);
        if (!p) p = lp;
        if (!p) throw Error(ErrorKind::Usage, "--p is required for law " + law);
        joint = thin_offspring(plus, *p);
    }
    json describe() const { return {{"law", law}, {"p", p ? json(*p) : json(nullptr)}}; }
};

BranchingMechanism mechanism_from(double alpha, double c, double sigma2, bool fv) {
    return fv ? BranchingMechanism::finite_variance(c, sigma2) : BranchingMechanism::stable(alpha);
}

// ---- validate config ----

struct ValidateOpts {
    std::string config_path;
    std::uint64_t seed = 42;
    int workers = 1;
    std::string out = "-";
    std::string csv;
    // flag overrides
    std::optional<std::string> law;
    std::optional<std::vector<double>> n_grid;
    std::optional<std::int64_t> N;
    std::optional<double> x, c;
    std::optional<std::string> rule;
};

json load_config(const ValidateOpts& o) {
    json cfg = {{"law", "stable:1.5"}, {"x", 1.0}, {"c", 1.0}, {"n_grid", {100.0, 1000.0}}, {"N", 2000},
                {"rule", "calibrated"}, {"censor", 100.0}, {"steps", 3}, {"depth", 1}, {"eps", 1e-4},
                {"st", {{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}}}, {"threshold", 0.02},
                {"tails", {{"s", 1.0}, {"t", 1.0}, {"N", 100000}, {"min_hits", 1000}, {"threshold", 0.15}}},
                {"ranks", {{"b", 1.0}, {"threshold", 0.02}}},
                {"martingale", {{"a", 1}, {"n", 2}, {"N", 100000}}}};
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw Error(ErrorKind::Usage, "cannot read config " + o.config_path);
        json file;
        try {
            in >> file;
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Usage, std::string("config: ") + e.what());
        }
        cfg.merge_patch(file);
    }
    if (o.law) cfg["law"] = *o.law;
    if (o.n_grid) cfg["n_grid"] = *o.n_grid;
    if (o.N) cfg["N"] = *o.N;
    if (o.x) cfg["x"] = *o.x;
    if (o.c) cfg["c"] = *o.c;
    if (o.rule) cfg["rule"] = *o.rule;
    return cfg;
}

OffspringLaw config_law(const json& cfg) {
    if (cfg["law"].is_object()) return law_from_json(cfg["law"]);
    return parse_law_spec(cfg["law"].get<std::string>());
}

BranchingMechanism config_mechanism(const json& cfg, const OffspringLaw& plus) {
    if (cfg.contains("mechanism")) {
        const json& m = cfg["mechanism"];
        const std::string kind = m.value("kind", "stable");
        if (kind == "stable") return BranchingMechanism::stable(m.at("alpha").get<double>());
        if (kind == "finite_variance")
            return BranchingMechanism::finite_variance(m.at("c").get<double>(), m.at("sigma2").get<double>());
        throw Error(ErrorKind::Usage, "unknown mechanism kind " + kind);
    }
    if (plus.tail()) return BranchingMechanism::stable(plus.tail()->alpha);
    const double mean = plus.mean();
    return BranchingMechanism::finite_variance(cfg["c"].get<double>(), plus.factorial_moment2() + mean - mean * mean);
}

AncestorRule config_rule(const json& cfg) {
    const std::string r = cfg["rule"].get<std::string>();
    if (r == "calibrated") return AncestorRule::Calibrated;
    if (r == "literal") return AncestorRule::Literal;
    throw Error(ErrorKind::Usage, "rule must be calibrated or literal");
}

SweepConfig sweep_config(const json& cfg, int workers) {
    SweepConfig s;
    s.plus = config_law(cfg);
    s.mech = config_mechanism(cfg, s.plus);
    s.x = cfg["x"].get<double>();
    s.c = cfg["c"].get<double>();
    s.n_grid = cfg["n_grid"].get<std::vector<double>>();
    s.rule = config_rule(cfg);
    s.censor = cfg["censor"].get<double>();
    s.steps = cfg["steps"].get<int>();
    s.depth = cfg["depth"].get<int>();
    s.eps = cfg["eps"].get<double>();
    s.st.clear();
    for (const auto& p : cfg["st"]) s.st.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    s.threshold = cfg["threshold"].get<double>();
    s.workers = workers;
    return s;
}

int run_validate(const std::string& what, const ValidateOpts& o) {
    const json cfg = load_config(o);
    const std::int64_t N = cfg["N"].get<std::int64_t>();
    std::vector<std::string> kinds;
    if (what == "all")
        kinds = {"pair", "chain", "alleles", "conditioned", "tails", "ranks"};
    else
        kinds = {what};
    json reports = json::array();
    std::string csv = "n,distance,test\n";
    bool all_pass = true;
    const SweepConfig sc = sweep_config(cfg, o.workers);
    for (const auto& k : kinds) {
        json rep;
        if (k == "tails" || k == "ranks") {
            if (!sc.mech.is_stable()) {
                if (what == "all") continue;
                throw Error(ErrorKind::RegimeMismatch, k + " needs a stable regime");
            }
        }
        if (k == "pair" || k == "chain" || k == "alleles" || k == "conditioned") {
            const SweepKind kind = k == "pair" ? SweepKind::Pair
                                 : k == "chain" ? SweepKind::Chain
                                 : k == "alleles" ? SweepKind::AlleleTree
                                                  : SweepKind::Conditioned;
            SweepReport r = convergence_sweep(sc, kind, N, o.seed);
            all_pass = all_pass && r.pass;
            std::string body = r.to_csv();
            csv += body.substr(body.find('\n') + 1);
            rep = r.to_json();
        } else if (k == "tails") {
            TailConfig tc;
            tc.plus = sc.plus;
            tc.c = sc.c;
            tc.n_grid = sc.n_grid;
            tc.s = cfg["tails"]["s"].get<double>();
            tc.t = cfg["tails"]["t"].get<double>();
            tc.N = cfg["tails"]["N"].get<std::int64_t>();
            tc.min_hits = cfg["tails"]["min_hits"].get<std::int64_t>();
            tc.threshold = cfg["tails"]["threshold"].get<double>();
            tc.rule = sc.rule;
            tc.workers = o.workers;
            SweepReport r = tail_scaling_check(tc, o.seed);
            all_pass = all_pass && r.pass;
            std::string body = r.to_csv();
            csv += body.substr(body.find('\n') + 1);
            rep = r.to_json();
        } else if (k == "ranks") {
            RankConfig rc;
            rc.plus = sc.plus;
            rc.mech = sc.mech;
            rc.c = sc.c;
            rc.b = cfg["ranks"]["b"].get<double>();
            rc.threshold = cfg["ranks"]["threshold"].get<double>();
            rc.n_grid = sc.n_grid;
            rc.rule = sc.rule;
            rc.censor = sc.censor;
            rc.workers = o.workers;
            SweepReport r = ranked_jump_check(rc, N, o.seed);
            all_pass = all_pass && r.pass;
            std::string body = r.to_csv();
            csv += body.substr(body.find('\n') + 1);
            rep = r.to_json();
        } else {
            throw Error(ErrorKind::Usage, "unknown validation " + k);
        }
        reports.push_back(rep);
    }
    json doc = {{"command", "validate " + what}, {"config", cfg}, {"config_hash", config_hash(cfg)},
                {"seed", o.seed}, {"reports", reports}, {"pass", all_pass}};
    Output out;
    out.path = o.out;
    out.open(cfg, o.seed);
    *out << doc.dump(2) << '\n';
    if (!o.csv.empty()) {
        const std::string full = output_path(o.csv);
        std::ofstream f(full);
        if (!f) throw Error(ErrorKind::Usage, "cannot write " + full);
        f << csv;
        write_sidecar(full, cfg, o.seed);
    }
    return all_pass ? 0 : 1;
}

int exit_code(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::PopulationCapExceeded:
        case ErrorKind::IncompleteForest:
        case ErrorKind::WalkCapExceeded:
        case ErrorKind::CapTooSmall:
            return 3;
        default:
            return 2;
    }
}

void diagnostic(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Galton-Watson trees with neutral mutations"};
    app.require_subcommand(1);
    int code = 0;

    // ---- law ----
    LawOpts law_opts;
    std::string law_out = "-";
    auto* law_cmd = app.add_subcommand("law", "write a law as JSON");
    law_opts.add(law_cmd);
    law_cmd->add_option("--out", law_out);
    law_cmd->callback([&] {
        std::optional<double> lp;
        OffspringLaw plus = parse_law_spec(law_opts.law, &lp);
        if (law_opts.p) lp = law_opts.p;
        Output out;
        out.path = law_out;
        out.open(law_opts.describe(), 0);
        *out << law_to_json(plus, lp).dump() << '\n';
    });

    // ---- exact ----
    auto* exact = app.add_subcommand("exact", "exact tables");
    exact->require_subcommand(1);
    LawOpts ex_law;
    long long ex_a = 1, ex_j = 1;
    int ex_n = 1;
    std::size_t ex_kmax = 64, ex_lmax = 0;
    double ex_tol = 1e-6;
    std::string ex_out = "-";
    for (const char* name : {"t0m1", "qtrans", "yaglom", "spine"}) {
        auto* sub = exact->add_subcommand(name);
        ex_law.add(sub);
        sub->add_option("--ancestors", ex_a);
        sub->add_option("--n", ex_n, "steps");
        sub->add_option("--j", ex_j, "starting number of mutants");
        sub->add_option("--kmax", ex_kmax);
        sub->add_option("--lmax", ex_lmax);
        sub->add_option("--tol", ex_tol, "allowed dropped mass");
        sub->add_option("--out", ex_out);
        const std::string cmd = name;
        sub->callback([&, cmd] {
            ex_law.load();
            PairPmf pmf;
            if (cmd == "t0m1")
                pmf = law_T0M1(ex_a, ex_law.joint, ex_kmax, ex_lmax, ex_tol);
            else if (cmd == "qtrans")
                pmf = q_transition(ex_law.joint, ex_n, ex_j, ex_kmax, ex_lmax, ex_tol);
            else if (cmd == "yaglom")
                pmf = yaglom_pmf(ex_law.joint, ex_n, ex_kmax, ex_lmax, ex_tol);
            else
                pmf = spine_law(ex_a, ex_law.joint, ex_kmax, ex_lmax, ex_tol);
            json cfg = ex_law.describe();
            cfg.update({{"command", "exact " + cmd}, {"ancestors", ex_a}, {"n", ex_n}, {"j", ex_j},
                        {"kmax", ex_kmax}, {"lmax", ex_lmax}, {"dropped_mass", pmf.dropped_mass}});
            Output out;
            out.path = ex_out;
            out.open(cfg, 0);
            write_pair_pmf_csv(*out, pmf);
        });
    }

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "simulation streams");
    sim->require_subcommand(1);
    LawOpts sim_law;
    long long sim_a = 1, sim_reps = 1, sim_max_nodes = 10'000'000;
    int sim_steps = 5, sim_depth = 2, sim_max_types = 64;
    std::uint64_t sim_seed = 1;
    bool sim_immigration = false;
    std::string sim_out = "-";
    for (const char* name : {"forest", "chain", "alleles", "conditioned"}) {
        auto* sub = sim->add_subcommand(name);
        sim_law.add(sub);
        sub->add_option("--ancestors", sim_a);
        sub->add_option("--reps", sim_reps);
        sub->add_option("--steps", sim_steps);
        sub->add_option("--depth", sim_depth);
        sub->add_option("--seed", sim_seed);
        sub->add_option("--max-nodes", sim_max_nodes);
        sub->add_option("--max-types", sim_max_types);
        sub->add_flag("--immigration", sim_immigration, "alleles: tree with immigration (spine)");
        sub->add_option("--out", sim_out);
        const std::string cmd = name;
        sub->callback([&, cmd] {
            sim_law.load();
            const OffspringModel model(sim_law.joint);
            json cfg = sim_law.describe();
            cfg.update({{"command", "simulate " + cmd}, {"ancestors", sim_a}, {"reps", sim_reps},
                        {"steps", sim_steps}, {"depth", sim_depth}, {"max_nodes", sim_max_nodes},
                        {"max_types", sim_max_types}, {"immigration", sim_immigration}});
            Output out;
            out.path = sim_out;
            out.open(cfg, sim_seed);
            if (cmd == "alleles") {
                *out << "rep,label,size,degree\n";
                for (long long rep = 0; rep < sim_reps; ++rep) {
                    Rng rng = substream(sim_seed, static_cast<std::uint64_t>(rep), 21);
                    AlleleTree t = sample_allele_tree(sim_a, model, sim_depth, rng, sim_immigration);
                    for (std::size_t i = 0; i < t.nodes.size(); ++i)
                        *out << rep << ',' << format_label(t.label(static_cast<std::int64_t>(i))) << ','
                             << t.nodes[i].size << ',' << t.nodes[i].degree << '\n';
                }
                return;
            }
            *out << "rep,k,T_k,M_k1\n";
            for (long long rep = 0; rep < sim_reps; ++rep) {
                Rng rng = substream(sim_seed, static_cast<std::uint64_t>(rep), 20);
                TypeChain ch;
                if (cmd == "forest") {
                    MarkedForest f = simulate_marked_forest(sim_a, model, {sim_max_nodes, sim_max_types}, rng);
                    ch = extract_type_chain(f);
                } else if (cmd == "chain") {
                    ch = simulate_type_chain(sim_a, model, sim_steps, rng);
                } else {
                    ch = simulate_conditioned_chain(sim_a, model, sim_steps, rng);
                }
                for (std::size_t k = 0; k < ch.pairs.size(); ++k)
                    *out << rep << ',' << k << ',' << ch.pairs[k].first << ',' << ch.pairs[k].second << '\n';
            }
        });
    }

    // ---- limits ----
    auto* lim = app.add_subcommand("limits", "limit objects");
    lim->require_subcommand(1);
    double lim_alpha = 1.5, lim_c = 1.0, lim_sigma2 = 1.0, lim_x = 1.0, lim_eps = 1e-3, lim_n = 100.0;
    bool lim_fv = false, lim_no_imm = false;
    std::vector<double> lim_s{1.0}, lim_t{0.0};
    long long lim_reps = 1000;
    int lim_depth = 2;
    std::uint64_t lim_seed = 1;
    std::string lim_law = "stable:1.5", lim_out = "-";
    auto add_mech = [&](CLI::App* sub) {
        sub->add_option("--alpha", lim_alpha);
        sub->add_flag("--finite-variance", lim_fv);
        sub->add_option("--c", lim_c);
        sub->add_option("--sigma2", lim_sigma2);
    };
    auto mech_json = [&] {
        return json{{"alpha", lim_alpha}, {"finite_variance", lim_fv}, {"c", lim_c}, {"sigma2", lim_sigma2}};
    };
    {
        auto* sub = lim->add_subcommand("r", "normalizer r(n) of a law");
        sub->add_option("--law", lim_law);
        sub->add_option("--n", lim_n);
        sub->callback([&] {
            const OffspringLaw plus = parse_law_spec(lim_law);
            std::cout << format_double(compute_r(plus, lim_n)) << '\n';
        });
    }
    {
        auto* sub = lim->add_subcommand("subordinator", "samples of tau_x");
        add_mech(sub);
        sub->add_option("--x", lim_x);
        sub->add_option("--reps", lim_reps);
        sub->add_option("--seed", lim_seed);
        sub->add_option("--out", lim_out);
        sub->callback([&] {
            const auto mech = mechanism_from(lim_alpha, lim_c, lim_sigma2, lim_fv);
            json cfg = mech_json();
            cfg.update({{"command", "limits subordinator"}, {"x", lim_x}, {"reps", lim_reps}});
            Output out;
            out.path = lim_out;
            out.open(cfg, lim_seed);
            *out << "rep,value\n";
            for (long long i = 0; i < lim_reps; ++i) {
                Rng rng = substream(lim_seed, static_cast<std::uint64_t>(i), 30);
                *out << i << ',' << format_double(sample_subordinator(mech, lim_x, rng)) << '\n';
            }
        });
    }
    {
        auto* sub = lim->add_subcommand("csbp-tree", "tree-indexed CSBP");
        add_mech(sub);
        sub->add_option("--x", lim_x);
        sub->add_option("--depth", lim_depth);
        sub->add_option("--eps", lim_eps);
        sub->add_option("--seed", lim_seed);
        sub->add_option("--out", lim_out);
        sub->callback([&] {
            const auto mech = mechanism_from(lim_alpha, lim_c, lim_sigma2, lim_fv);
            json cfg = mech_json();
            cfg.update({{"command", "limits csbp-tree"}, {"x", lim_x}, {"depth", lim_depth}, {"eps", lim_eps}});
            Rng rng = substream(lim_seed, 0, 31);
            CsbpTree t = build_csbp_tree(lim_x, mech, lim_depth, lim_eps, rng);
            Output out;
            out.path = lim_out;
            out.open(cfg, lim_seed);
            *out << "label,mass\n";
            for (std::size_t i = 0; i < t.nodes.size(); ++i)
                *out << format_label(t.label(static_cast<std::int64_t>(i))) << ',' << format_double(t.nodes[i].mass)
                     << '\n';
            if (t.degenerate_level >= 0) std::cerr << "note: level " << t.degenerate_level << " fell below eps\n";
        });
    }
    {
        auto* sub = lim->add_subcommand("laplace", "finite-dimensional Laplace functional");
        add_mech(sub);
        sub->add_option("--x", lim_x);
        sub->add_option("--s", lim_s, "s_0,...,s_{k-1}")->delimiter(',');
        sub->add_option("--t", lim_t, "t_1,...,t_k")->delimiter(',');
        sub->add_flag("--no-immigration", lim_no_imm, "plain CSBP instead of CSBP with immigration");
        sub->callback([&] {
            const auto mech = mechanism_from(lim_alpha, lim_c, lim_sigma2, lim_fv);
            const double v = lim_no_imm ? fdd_laplace_csbp(mech, lim_x, lim_s, lim_t)
                                        : fdd_laplace_csbpi(mech, lim_x, lim_s, lim_t);
            std::cout << format_double(v) << '\n';
        });
    }

    // ---- validate ----
    auto* val = app.add_subcommand("validate", "statistical validation reports (JSON)");
    val->require_subcommand(1);
    ValidateOpts vo;
    for (const char* name : {"pair", "chain", "alleles", "conditioned", "tails", "ranks", "all"}) {
        auto* sub = val->add_subcommand(name);
        sub->add_option("--config", vo.config_path, "JSON config file");
        sub->add_option("--seed", vo.seed);
        sub->add_option("--workers", vo.workers, "threads; results do not depend on it")->check(CLI::PositiveNumber);
        sub->add_option("--out", vo.out, "report JSON (default stdout)");
        sub->add_option("--csv", vo.csv, "flat n,distance,test CSV");
        sub->add_option("--law", vo.law);
        sub->add_option("--n-grid", vo.n_grid)->delimiter(',');
        sub->add_option("--N", vo.N);
        sub->add_option("--x", vo.x);
        sub->add_option("--c", vo.c);
        sub->add_option("--rule", vo.rule, "calibrated | literal");
        const std::string cmd = name;
        sub->callback([&, cmd] { code = run_validate(cmd, vo); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        diagnostic("Usage", e.what());
        return 2;
    } catch (const Error& e) {
        diagnostic(error_kind_name(e.kind()), e.what());
        return exit_code(e);
    } catch (const json::exception& e) {
        diagnostic("Usage", e.what());
        return 2;
    }
    return code;
}
