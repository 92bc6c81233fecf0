// Acceptance suite: one line per criterion, [PASS]/[FAIL], nonzero exit on
// any failure. Tolerances are pinned here, not configurable.

#include <chrono>
#include <cstdarg>
#include <filesystem>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "orblab/concentration.hpp"
#include "orblab/experiment.hpp"
#include "orblab/ground_state.hpp"
#include "orblab/nehari.hpp"
#include "orblab/presets.hpp"

using namespace orblab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

GoodOrbifold<2> make_preset2(const std::string& name, int res) {
    auto cfg = builtin_preset(name);
    cfg.grid_resolution = {res};
    return build_orbifold<2>(cfg);
}

ProblemConfig problem(double eps, double p = 4.0) {
    ProblemConfig cfg;
    cfg.eps = eps;
    cfg.p = p;
    return cfg;
}

template <int N>
OrbifoldFunction<N> random_invariant(const GoodOrbifold<N>& orb, unsigned seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> raw(orb.n_nodes());
    for (auto& v : raw) v = dist(rng);
    return symmetrize(orb, raw);
}

// ---- criterion 1: ground-state oracle ---------------------------------------------

Outcome criterion1() {
    const auto prof = solve_ground_state(1, 3.0, 25.0, 1e-14);
    double max_err = 0.0;
    for (std::size_t i = 0; i < prof.radii.size() && prof.radii[i] <= 20.0; ++i)
        max_err = std::max(max_err, std::abs(prof.values[i] - 1.5 / sq(std::cosh(0.5 * prof.radii[i]))));
    return {max_err < 1e-6, fmt("max |V - 1.5 sech^2(r/2)| = %.3e on [0,20] (tol 1e-6)", max_err)};
}

// ---- criterion 2: Nehari identity and energy identity ------------------------------

Outcome criterion2() {
    const auto orb = make_preset2("pillowcase2d", 64);
    const auto cfg = problem(0.1);
    double worst_defect = 0.0, worst_energy = 0.0;
    for (unsigned seed = 0; seed < 100; ++seed) {
        const auto u = random_invariant(orb, 1000 + seed, -0.5, 1.0);
        const double s = nehari_scale(u, cfg);
        const auto w = s * u;
        worst_defect = std::max(worst_defect, nehari_defect(w, cfg));
        const double J = energy(w, cfg);
        const double rhs = (cfg.p - 2.0) / (2.0 * cfg.p) * integrate_pos_pow(w, cfg.p) / sq(cfg.eps);
        worst_energy = std::max(worst_energy, std::abs(J - rhs) / std::abs(rhs));
    }
    const bool pass = worst_defect < 1e-10 && worst_energy < 1e-8;
    return {pass, fmt("100 seeds: max Nehari defect %.3e (tol 1e-10), max energy-identity error %.3e (tol 1e-8)",
                      worst_defect, worst_energy)};
}

// ---- criterion 3: gradient versus finite differences --------------------------------

Outcome criterion3() {
    const auto orb = make_preset2("pillowcase2d", 64);
    const auto cfg = problem(0.3);
    double worst_order = 10.0;
    for (unsigned trial = 0; trial < 20; ++trial) {
        const auto u = random_invariant(orb, 300 + trial, 0.2, 1.2);
        auto v = random_invariant(orb, 700 + trial, -1.0, 1.0);
        v = (1.0 / std::sqrt(integrate_sq(v))) * v;
        const double exact = inner_product(gradient(u, cfg), v) / sq(cfg.eps);
        auto fd = [&](double h) {
            return (energy(u + h * v, cfg) - energy(u - h * v, cfg)) / (2.0 * h);
        };
        const double e3 = std::abs(fd(1e-3) - exact);
        const double e4 = std::abs(fd(1e-4) - exact);
        worst_order = std::min(worst_order, std::log10(e3 / std::max(e4, 1e-300)));
    }
    return {worst_order >= 1.9, fmt("observed FD order >= %.3f over 20 directions (need >= 1.9)", worst_order)};
}

// ---- criterion 4: the constant solution on every preset -----------------------------

Outcome criterion4() {
    double worst_res = 0.0, worst_energy = 0.0;
    for (const std::string name : {"torus2d", "pillowcase2d", "torus3d", "mirrortorus3d"}) {
        auto cfg_orb = builtin_preset(name);
        const bool is3d = cfg_orb.dimension == 3;
        cfg_orb.grid_resolution = {is3d ? 24 : 64};
        const auto p = problem(0.1);
        double res = 0.0, erel = 0.0;
        if (is3d) {
            const auto orb = build_orbifold<3>(cfg_orb);
            const OrbifoldFunction<3> one(orb, 1.0);
            res = residual_norm(one, p);
            const double expected = (0.5 - 1.0 / p.p) * orb.measure() / std::pow(p.eps, 3);
            erel = std::abs(energy(one, p) - expected) / expected;
        } else {
            const auto orb = build_orbifold<2>(cfg_orb);
            const OrbifoldFunction<2> one(orb, 1.0);
            res = residual_norm(one, p);
            const double expected = (0.5 - 1.0 / p.p) * orb.measure() / sq(p.eps);
            erel = std::abs(energy(one, p) - expected) / expected;
        }
        worst_res = std::max(worst_res, res);
        worst_energy = std::max(worst_energy, erel);
    }
    const bool pass = worst_res < 1e-10 && worst_energy < 1e-13;
    return {pass, fmt("all presets: residual(1) <= %.3e (tol 1e-10), energy error <= %.3e (quadrature rounding)",
                      worst_res, worst_energy)};
}

// ---- criterion 5: energy limit of the injection -------------------------------------

Outcome criterion5() {
    const auto orb = make_preset2("pillowcase2d", 64);
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    const auto cone = orb.canonicalize(Vec<2>{0.0, 0.0});
    const double target = prof.m_e / orb.zeta();

    std::vector<double> energies;
    std::string detail;
    bool decreasing = true;
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto cfg = problem(eps);
        const double J = energy(inject(cone, prof, cfg, orb), cfg);
        if (!energies.empty()) decreasing = decreasing && J < energies.back();
        energies.push_back(J);
        detail += fmt("J(i_%.2g)=%.3f ", eps, J);
    }
    const double rel = std::abs(energies.back() - target) / target;
    // context: the constrained minimum itself does reach the limit
    auto cfg5 = problem(0.05);
    cfg5.descent.residual_tol = 1e-8;
    const auto ground = descend(inject(cone, prof, cfg5, orb), cfg5);
    detail += fmt("| target m(E)/zeta=%.3f, |J-target|/target=%.1f%% (tol 10%%), decreasing=%s",
                  target, 100.0 * rel, decreasing ? "yes" : "no");
    detail += fmt(" | context: descended m(J_eps)=%.3f (%.1f%% of target)", ground.energy,
                  100.0 * ground.energy / target);
    return {decreasing && rel < 0.10, detail};
}

// ---- criterion 6: center-of-mass oracle equivalence ---------------------------------

Outcome criterion6() {
    const auto orb = make_preset2("pillowcase2d", 64);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        // admissible concentrated field: positive lumps inside B(center, rho/2)
        const Vec<2> center = mat_vec(orb.torus().basis, Vec<2>{unif(rng), unif(rng)});
        std::vector<double> raw(orb.n_nodes(), 0.0);
        const int lumps = 1 + static_cast<int>(unif(rng) * 3);
        for (int l = 0; l < lumps; ++l) {
            const double ang = 2.0 * kPi * unif(rng);
            const double rad = 0.3 * orb.rho() * unif(rng);
            const Vec<2> c =
                orb.torus().reduce(center + Vec<2>{rad * std::cos(ang), rad * std::sin(ang)});
            const double w = orb.rho() * (0.05 + 0.2 * unif(rng));
            const double amp = 0.2 + unif(rng);
            for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
                const double d = orb.distance(c, orb.torus().node_coords(node));
                if (d < orb.rho() * 0.45) raw[node] += amp * std::exp(-d * d / (w * w));
            }
        }
        const auto u = symmetrize(orb, raw);

        const auto refined = center_of_mass(u);
        // independent oracle: exhaustive search over every grid node
        const double l1 = integrate_abs(u);
        const auto support = support_nodes(u);
        double best = kInf;
        std::size_t best_node = 0;
        for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
            const double val = p_functional_on_support(u, orb.torus().node_coords(node), support, l1);
            if (val < best) { best = val; best_node = node; }
        }
        worst = std::max(worst, orb.distance(refined, orb.node_point(best_node)));
    }
    const double two_cells = 2.0 / 64.0;
    return {worst <= two_cells,
            fmt("50 fields: max |refined cm - grid argmin| = %.4f (tol 2 cells = %.4f)", worst, two_cells)};
}

// ---- criterion 7: concentration and the photography round trip ----------------------

Outcome criterion7() {
    const auto orb = make_preset2("pillowcase2d", 64);
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    auto cfg = problem(0.05); // smallest swept eps
    cfg.descent.residual_tol = 1e-8;

    const auto rt = photography_roundtrip(orb, cfg, prof);
    bool pass = rt.entries.size() == 4 && !rt.escaped_tube && rt.all_concentrated;
    double worst_rt = 0.0, worst_dz = 0.0;
    for (const auto& e : rt.entries) {
        pass = pass && e.status == "ok" && e.in_tube;
        worst_rt = std::max(worst_rt, e.roundtrip_distance);
        worst_dz = std::max(worst_dz, e.dist_center_to_z);
    }
    const double two_cells = 2.0 / 64.0;
    pass = pass && worst_rt < two_cells && worst_dz < 3.0 * orb.rho();
    return {pass, fmt("4 cone seeds: max dist(Cm, Z)=%.4f (tol 3 rho=%.4f), max roundtrip=%.4f "
                      "(tol 2 cells=%.4f); tube escape would exit 2",
                      worst_dz, 3.0 * orb.rho(), worst_rt, two_cells)};
}

// ---- criterion 8: the multiplicity verdict ------------------------------------------

Outcome criterion8(int threads) {
    ExperimentConfig cfg;
    cfg.orbifold = builtin_preset("pillowcase2d");
    cfg.problem.p = 4.0;
    cfg.problem.descent.residual_tol = 1e-8;
    cfg.eps_list = {0.05};
    cfg.random_seeds = 3;
    cfg.threads = threads;
    cfg.out_dir = (std::filesystem::temp_directory_path() / "orblab_acceptance").string();
    const auto pillow = run_experiment<2>(cfg);
    const int pillow_count = pillow.sweeps[0].verdict.nonconstant_distinct;
    const bool pillow_ok = pillow_count >= pillow.sweeps[0].verdict.bound; // cat(Z)+1 = 5

    cfg.orbifold = builtin_preset("torus2d");
    const auto torus = run_experiment<2>(cfg);
    const int torus_count = torus.sweeps[0].verdict.nonconstant_distinct;
    const bool torus_ok = torus_count >= torus.sweeps[0].verdict.bound; // cat(T^2)+1 = 4

    return {pillow_ok && torus_ok,
            fmt("pillowcase: %d distinct nonconstant clusters (need >= 5); torus control: %d (need >= 4)",
                pillow_count, torus_count)};
}

// ---- criterion 9: geometry property suite -------------------------------------------

Outcome criterion9() {
    const auto orb = make_preset2("pillowcase2d", 64);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto rand_pt = [&]() {
        return mat_vec(orb.torus().basis, Vec<2>{unif(rng), unif(rng)});
    };

    // metric axioms on 1000 triples
    double tri_slack = 0.0;
    bool sym_exact = true;
    for (int t = 0; t < 1000; ++t) {
        const auto a = rand_pt(), b = rand_pt(), c = rand_pt();
        const double ab = orb.distance(a, b);
        sym_exact = sym_exact && ab == orb.distance(b, a);
        tri_slack = std::max(tri_slack, ab - orb.distance(a, c) - orb.distance(c, b));
    }

    // orbit-stabilizer on every node
    bool orbit_ok = true;
    for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
        std::vector<int32_t> orbit;
        for (std::size_t g = 0; g < orb.group_order(); ++g) {
            const int32_t img = orb.node_permutation(static_cast<int>(g))[node];
            bool dup = false;
            for (int32_t o : orbit) dup = dup || o == img;
            if (!dup) orbit.push_back(img);
        }
        orbit_ok = orbit_ok &&
                   orbit.size() * static_cast<std::size_t>(orb.local_order_of_node(node)) == orb.group_order();
    }

    // exact measure
    const bool measure_ok = integrate(OrbifoldFunction<2>(orb, 1.0)) == 0.5;

    // weak convexity of rho/3 balls, 200 sampled pairs
    bool convex_ok = true;
    const double r = orb.rho() / 3.0;
    const std::vector<Vec<2>> centers{{0.0, 0.0}, {0.5, 0.5}, {0.2, 0.3}, {0.26, 0.01}};
    for (int t = 0; t < 200; ++t) {
        const Vec<2>& c = centers[static_cast<std::size_t>(t) % centers.size()];
        const double a1 = 2.0 * kPi * unif(rng), r1 = 0.95 * r * std::sqrt(unif(rng));
        const double a2 = 2.0 * kPi * unif(rng), r2 = 0.95 * r * std::sqrt(unif(rng));
        const Vec<2> u = orb.torus().reduce(c + Vec<2>{r1 * std::cos(a1), r1 * std::sin(a1)});
        const Vec<2> v = orb.torus().reduce(c + Vec<2>{r2 * std::cos(a2), r2 * std::sin(a2)});
        // minimizing lift of v relative to u
        double best = kInf;
        Vec<2> lift{};
        for (const auto& e : orb.action().elements()) {
            const Vec<2> img = orb.torus().reduce(e.apply(v));
            for (int kx = -1; kx <= 1; ++kx)
                for (int ky = -1; ky <= 1; ++ky) {
                    const Vec<2> cand = img + mat_vec(orb.torus().basis, Vec<2>{double(kx), double(ky)});
                    if (norm(u - cand) < best) { best = norm(u - cand); lift = cand; }
                }
        }
        for (int s = 0; s <= 32; ++s) {
            const Vec<2> pt = u + (s / 32.0) * (lift - u);
            convex_ok = convex_ok && orb.distance(c, orb.torus().reduce(pt)) <= r + 1e-12;
        }
    }

    // radial geodesics minimize
    double radial_err = 0.0;
    const auto x0 = orb.canonicalize(Vec<2>{0.23, 0.31});
    for (int t = 0; t < 100; ++t) {
        const double ang = 2.0 * kPi * unif(rng);
        const double len = 0.95 * orb.rho() * unif(rng);
        const Vec<2> v{len * std::cos(ang), len * std::sin(ang)};
        for (double s : {0.25, 0.5, 1.0}) {
            const auto y = orb.exp_map(x0, s * v);
            radial_err = std::max(radial_err, std::abs(orb.distance(x0, y) - s * len));
        }
    }

    const bool pass = sym_exact && tri_slack <= 1e-12 && orbit_ok && measure_ok && convex_ok &&
                      radial_err <= 1e-12;
    return {pass, fmt("symmetry exact=%s, triangle slack %.1e (tol 1e-12), orbit-stabilizer=%s, "
                      "mu(O)=vol/|G| exact=%s, weak convexity=%s, radial error %.1e (tol 1e-12)",
                      sym_exact ? "yes" : "no", tri_slack, orbit_ok ? "yes" : "no",
                      measure_ok ? "yes" : "no", convex_ok ? "yes" : "no", radial_err)};
}

} // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : 8;
    std::vector<std::tuple<int, std::string, std::function<Outcome()>, double>> criteria = {
        {1, "ground-state oracle", criterion1, 1.0},
        {2, "Nehari and energy identities", criterion2, 10.0},
        {3, "gradient vs finite differences", criterion3, 30.0},
        {4, "constant solution on every preset", criterion4, 60.0},
        {5, "injection energy limit", criterion5, 120.0},
        {6, "center-of-mass oracle equivalence", criterion6, 60.0},
        {7, "concentration + roundtrip", criterion7, 300.0},
        {8, "multiplicity verdict", [threads]() { return criterion8(threads); }, 1200.0},
        {9, "geometry property suite", criterion9, 60.0},
    };

    int failures = 0;
    for (const auto& [id, name, fn, budget] : criteria) {
        const double t0 = now_s();
        Outcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double dt = now_s() - t0;
        const bool in_budget = dt < budget;
        const bool ok = out.pass && in_budget;
        if (!ok) ++failures;
        std::printf("[%s] criterion %d (%s, %.2fs%s): %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), dt,
                    in_budget ? "" : " OVER BUDGET", out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
