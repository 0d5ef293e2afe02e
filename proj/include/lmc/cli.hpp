#pragma once

#include <iostream>
#include <set>

#include "lmc/config.hpp"
#include "lmc/diagnostics.hpp"
#include "lmc/io.hpp"
#include "lmc/profile.hpp"
#include "lmc/verify.hpp"

namespace lmc::cli {

inline const char* kUsage =
    "usage: lmct <command> [--config <file>] [--key value ...]\n"
    "commands:\n"
    "  solve           relax the Dirichlet problem for the angle equation\n"
    "  rotate          Lewy-Yuan pi/4 rotation of a convex potential\n"
    "  inverse-rotate  reconstruct the potential from a rotated one\n"
    "  profile         radial rotator profile f(s) with derivatives\n"
    "  singular        rotator profile + inverse rotation: vertex potential\n"
    "  diagnose        holder | vmo | rank | dual diagnostics on a potential\n"
    "  verify          run a named property suite (duality, rotation, solver,\n"
    "                  profile, diagnostics, all)\n"
    "exit codes: 0 ok, 1 validation error, 2 numerical failure, 3 non-convergence\n";

namespace detail {

struct Args {
    std::string command;
    Config cfg;
    std::vector<std::string> positional;
};

inline std::string alias_key(const std::string& command, const std::string& flag) {
    if (flag == "config") return "config";
    if (flag == "out") return "output";
    if (flag == "in") return "input";
    if (flag == "threads") return "threads";
    if (command == "profile" || command == "singular") {
        std::string prefix = command + ".";
        for (const char* f : {"n", "a", "smax", "steps", "m", "halfwidth"})
            if (flag == f) return prefix + flag;
    }
    if (command == "diagnose") {
        for (const char* f : {"mode", "point", "radii", "alpha", "beta", "eig_tol"})
            if (flag == f) return "diagnose." + flag;
    }
    if (command == "rotate" && flag == "shrink") return "rotate.shrink";
    if (command == "inverse-rotate" && flag == "floor") return "inverse.floor";
    return flag;  // dotted config keys pass through one-to-one
}

inline Args parse_args(const std::vector<std::string>& argv) {
    if (argv.empty()) throw validation_error("no command given");
    Args args;
    args.command = argv[0];

    // collect flags first so --config loads before overrides apply
    std::vector<std::pair<std::string, std::string>> flags;
    for (std::size_t i = 1; i < argv.size(); ++i) {
        const std::string& tok = argv[i];
        if (tok.rfind("--", 0) == 0) {
            if (i + 1 >= argv.size())
                throw validation_error("flag '" + tok + "' needs a value");
            flags.emplace_back(alias_key(args.command, tok.substr(2)), argv[++i]);
        } else {
            args.positional.push_back(tok);
        }
    }
    for (const auto& [k, v] : flags)
        if (k == "config") args.cfg = load_config(v);
    for (const auto& [k, v] : flags)
        if (k != "config") args.cfg.set(k, v);
    return args;
}

inline GridFunction boundary_data(const Config& cfg, const GridSpec& g) {
    std::string kind = cfg.get_or("boundary.kind", "zero");
    if (kind == "csv") {
        GridFunction u = load_grid_csv(cfg.get("boundary.csv"));
        if (u.spec.n != g.n || u.spec.m != g.m)
            throw validation_error("boundary.csv grid does not match grid block");
        return u;
    }
    if (kind == "quadratic") {
        std::vector<double> coeffs = cfg.get_reals("boundary.coeffs");
        if (int(coeffs.size()) != g.n * (g.n + 1) / 2)
            throw validation_error("boundary.coeffs needs n(n+1)/2 entries");
        SymmetricMatrix a(g.n);
        int t = 0;
        for (int i = 0; i < g.n; ++i)
            for (int j = i; j < g.n; ++j) a.set(i, j, coeffs[t++]);
        return sample(g, [&](const Vec& x) {
            double s = 0;
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j) s += x[i] * a.at(i, j) * x[j];
            return 0.5 * s;
        });
    }
    if (kind == "power") {
        double beta = cfg.get_real("boundary.beta");
        return sample(g, [&](const Vec& x) {
            return std::pow(norm(x, g.n), 1.0 + beta) / (1.0 + beta);
        });
    }
    if (kind == "zero") return GridFunction(g);
    throw validation_error("boundary.kind must be quadratic, power, zero or csv");
}

inline GridFunction initial_guess(const Config& cfg, const GridFunction& boundary) {
    std::string kind = cfg.get_or("initial.kind", "boundary_zero");
    if (kind == "exact") return boundary;
    if (kind == "csv") {
        GridFunction u = load_grid_csv(cfg.get("initial.csv"));
        if (u.spec.n != boundary.spec.n || u.spec.m != boundary.spec.m)
            throw validation_error("initial.csv grid does not match grid block");
        // boundary rows come from the boundary data
        for_each_node(u.spec, [&](std::size_t f, const MIdx& idx) {
            if (!u.spec.interior(idx, 1)) u.values[f] = boundary.values[f];
        });
        return u;
    }
    if (kind == "boundary_zero") {
        GridFunction u = boundary;
        for_each_interior(u.spec, 1, [&](std::size_t f, const MIdx&) { u.values[f] = 0.0; });
        return u;
    }
    throw validation_error("initial.kind must be boundary_zero, exact or csv");
}

inline int cmd_solve(const Args& args) {
    static const std::set<std::string> allowed = {
        "grid.n",        "grid.m",        "grid.h",       "grid.lo",      "phase.variant",
        "phase.c",       "phase.b",       "phase.a",      "phase.k",      "phase.l",
        "phase.beta",    "solve.dt",      "solve.max_iters", "solve.tol", "solve.stencil",
        "boundary.kind", "boundary.coeffs", "boundary.beta", "boundary.csv",
        "initial.kind",  "initial.csv",   "output",       "threads"};
    args.cfg.require_known(allowed);
    GridSpec g = grid_from_config(args.cfg);
    PhaseSpec phase = phase_from_config(args.cfg, g.n);
    SolveParams params = solve_from_config(args.cfg);
    GridFunction boundary = boundary_data(args.cfg, g);
    GridFunction init = initial_guess(args.cfg, boundary);
    auto [sol, rep] = solve_dirichlet(init, phase, params);
    save_grid_csv(args.cfg.get("output"), sol, solve_report_footer(rep));
    if (!rep.converged) {
        std::cerr << "solve: not converged after " << rep.iterations
                  << " iterations (final update " << g17(rep.final_update) << ")\n";
        return 3;
    }
    return 0;
}

inline int cmd_rotate(const Args& args) {
    static const std::set<std::string> allowed = {"input", "output", "rotate.shrink",
                                                  "rotate.m_out", "threads"};
    args.cfg.require_known(allowed);
    GridFunction u = load_grid_csv(args.cfg.get("input"));
    RotateOptions opt;
    opt.shrink = args.cfg.get_real_or("rotate.shrink", opt.shrink);
    opt.m_out = int(args.cfg.get_int_or("rotate.m_out", 0));
    opt.threads = int(args.cfg.get_int_or("threads", 1));
    RotatedPotential rp = lewy_yuan_rotate(u, opt);
    save_rotated_csv(args.cfg.get("output"), rp);
    return 0;
}

inline int cmd_inverse_rotate(const Args& args) {
    static const std::set<std::string> allowed = {
        "input", "output", "inverse.floor", "inverse.exclude_radius", "inverse.shrink",
        "inverse.m_out", "threads"};
    args.cfg.require_known(allowed);
    RotatedPotential rp = load_rotated_csv(args.cfg.get("input"));
    InverseOptions opt;
    opt.min_eig_floor = args.cfg.get_real_or("inverse.floor", -1.0);
    opt.exclude_radius = args.cfg.get_real_or("inverse.exclude_radius", 0.0);
    opt.shrink = args.cfg.get_real_or("inverse.shrink", opt.shrink);
    opt.m_out = int(args.cfg.get_int_or("inverse.m_out", 0));
    opt.threads = int(args.cfg.get_int_or("threads", 1));
    GridFunction u = inverse_rotate(rp, opt);
    save_grid_csv(args.cfg.get("output"), u);
    return 0;
}

inline int cmd_profile(const Args& args) {
    static const std::set<std::string> allowed = {"profile.n", "profile.a", "profile.smax",
                                                  "profile.steps", "output"};
    args.cfg.require_known(allowed);
    ProfileSolution p = rotator_profile(int(args.cfg.get_int("profile.n")),
                                        args.cfg.get_real("profile.a"),
                                        args.cfg.get_real_or("profile.smax", 0.125),
                                        int(args.cfg.get_int_or("profile.steps", 4000)));
    save_profile_csv(args.cfg.get("output"), p);
    return 0;
}

inline int cmd_singular(const Args& args) {
    static const std::set<std::string> allowed = {
        "singular.n",     "singular.a",     "singular.smax", "singular.steps",
        "singular.m",     "singular.halfwidth", "singular.out_rotated",
        "output",         "threads"};
    args.cfg.require_known(allowed);
    int n = int(args.cfg.get_int("singular.n"));
    double a = args.cfg.get_real("singular.a");
    double smax = args.cfg.get_real_or("singular.smax", 0.125);
    int steps = int(args.cfg.get_int_or("singular.steps", 4000));
    int m = int(args.cfg.get_int_or("singular.m", 201));
    double w = args.cfg.get_real_or("singular.halfwidth", 0.9 * std::sqrt(2.0 * smax / n));
    ProfileSolution p = rotator_profile(n, a, smax, steps);
    Vec lo{};
    for (int i = 0; i < n; ++i) lo[i] = -w;
    GridSpec g(n, m, 2.0 * w / (m - 1), lo);
    SingularRotator sr = build_singular_rotator(p, g, int(args.cfg.get_int_or("threads", 1)));
    save_grid_csv(args.cfg.get("output"), sr.u);
    if (args.cfg.has("singular.out_rotated"))
        save_grid_csv(args.cfg.get("singular.out_rotated"), sr.ubar);
    return 0;
}

inline int cmd_diagnose(const Args& args) {
    static const std::set<std::string> allowed = {
        "input",          "output",        "diagnose.mode", "diagnose.point",
        "diagnose.radii", "diagnose.alpha", "diagnose.beta", "diagnose.eig_tol",
        "threads"};
    args.cfg.require_known(allowed);
    GridFunction u = load_grid_csv(args.cfg.get("input"));
    std::string mode = args.cfg.get("diagnose.mode");
    std::string outpath = args.cfg.get("output");
    std::ofstream os(outpath);
    if (!os) throw validation_error("cannot open output file: " + outpath);

    if (mode == "holder") {
        std::vector<double> pt = args.cfg.get_reals("diagnose.point");
        if (int(pt.size()) != u.spec.n) throw validation_error("diagnose.point length mismatch");
        Vec point{};
        for (int i = 0; i < u.spec.n; ++i) point[i] = pt[i];
        std::vector<double> radii = args.cfg.get_reals("diagnose.radii");
        HolderFit fit = holder_exponent_fit(u, point, radii);
        os << "# diagnose.mode = holder\n";
        os << "# holder.gamma = " << g17(fit.gamma) << "\n";
        os << "# holder.constant = " << g17(fit.c) << "\n";
        os << "# holder.residual = " << g17(fit.residual) << "\n";
        for (std::size_t i = 0; i < fit.radii.size(); ++i)
            os << g17(fit.radii[i]) << "," << g17(fit.osc[i]) << "\n";
        return 0;
    }
    if (mode == "vmo") {
        std::vector<double> radii = args.cfg.get_reals("diagnose.radii");
        MatrixField f = hessian_field(u);
        std::vector<double> om = vmo_modulus(f, radii);
        os << "# diagnose.mode = vmo\n";
        for (std::size_t i = 0; i < radii.size(); ++i)
            os << g17(radii[i]) << "," << g17(om[i]) << "\n";
        return 0;
    }
    if (mode == "rank") {
        RankReport rep = rank_field(u, args.cfg.get_real_or("diagnose.eig_tol", -1.0));
        os << "# diagnose.mode = rank\n";
        os << "# rank.eig_tol = " << g17(rep.eig_tol) << "\n";
        os << "# rank.constant = " << (rep.constant ? 1 : 0) << "\n";
        if (rep.constant) os << "# rank.value = " << rep.rank_value << "\n";
        for_each_node(u.spec, [&](std::size_t f, const MIdx& idx) {
            Vec x = u.spec.point(idx);
            for (int i = 0; i < u.spec.n; ++i) os << g17(x[i]) << ",";
            os << rep.rank[f] << "\n";
        });
        return 0;
    }
    if (mode == "dual") {
        double alpha = args.cfg.get_real("diagnose.alpha");
        double beta = args.cfg.get_real("diagnose.beta");
        DualConvexityReport rep =
            dual_convexity_check(u, alpha, beta, int(args.cfg.get_int_or("threads", 1)));
        const char* cls = "";
        switch (rep.classification) {
            case DualConvexityClass::strongly_convex: cls = "strongly-convex"; break;
            case DualConvexityClass::borderline: cls = "borderline"; break;
            case DualConvexityClass::degenerate_consistent: cls = "degenerate-consistent"; break;
            case DualConvexityClass::inconsistent: cls = "inconsistent"; break;
        }
        os << "# diagnose.mode = dual\n";
        os << "# dual.min_lambda = " << g17(rep.min_lambda) << "\n";
        os << "# dual.flatness_exponent = " << g17(rep.flatness_exponent) << "\n";
        os << "# dual.classification = " << cls << "\n";
        os << "# dual.dichotomy_consistent = " << (rep.dichotomy_consistent ? 1 : 0) << "\n";
        write_grid_csv(os, rep.dual);
        return 0;
    }
    throw validation_error("diagnose.mode must be holder, vmo, rank or dual");
}

inline int cmd_verify(const Args& args) {
    if (args.positional.size() != 1)
        throw validation_error("verify needs exactly one suite name");
    return run_verify_suite(args.positional[0], std::cout) ? 0 : 1;
}

}  // namespace detail

/// Dispatch a command line (without the program name).  Maps validation
/// errors to exit 1, numerical failures to exit 2; solve returns 3 on
/// non-convergence.
inline int run(const std::vector<std::string>& argv) {
    try {
        detail::Args args = detail::parse_args(argv);
        if (args.command == "solve") return detail::cmd_solve(args);
        if (args.command == "rotate") return detail::cmd_rotate(args);
        if (args.command == "inverse-rotate") return detail::cmd_inverse_rotate(args);
        if (args.command == "profile") return detail::cmd_profile(args);
        if (args.command == "singular") return detail::cmd_singular(args);
        if (args.command == "diagnose") return detail::cmd_diagnose(args);
        if (args.command == "verify") return detail::cmd_verify(args);
        if (args.command == "help" || args.command == "--help") {
            std::cout << kUsage;
            return 0;
        }
        throw validation_error("unknown command '" + args.command + "'");
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace lmc::cli
