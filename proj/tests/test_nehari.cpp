#include <catch2/catch.hpp>

#include <random>

#include "orblab/nehari.hpp"
#include "test_helpers.hpp"

using namespace orblab;
using namespace orblab::testing;

namespace {

ProblemConfig config(double eps, double p = 4.0) {
    ProblemConfig cfg;
    cfg.eps = eps;
    cfg.p = p;
    return cfg;
}

// grid translation by whole cells; normalizes {+-id} so it acts on solutions
template <int N>
OrbifoldFunction<N> translate_field(const OrbifoldFunction<N>& u,
                                    const std::array<int, static_cast<std::size_t>(N)>& cells) {
    const auto& torus = u.orb->torus();
    OrbifoldFunction<N> out(*u.orb);
    for (std::size_t node = 0; node < u.size(); ++node) {
        auto m = torus.multi_index(node);
        for (int a = 0; a < N; ++a) m[a] -= cells[a];
        out.values[node] = u.values[torus.node_index(m)];
    }
    return out;
}

} // namespace

TEST_CASE("energy of simple fields") {
    const auto orb = pillowcase(16);
    const auto cfg = config(0.25);

    CHECK(energy(OrbifoldFunction<2>(orb, 0.0), cfg) == 0.0);

    const double mu = orb.measure(); // 1/2
    const double eps_n = sq(cfg.eps);
    CHECK(energy(OrbifoldFunction<2>(orb, 1.0), cfg) ==
          Approx((0.5 - 1.0 / cfg.p) * mu / eps_n).epsilon(1e-14));
    // u = -1 has no positive part: only the quadratic term remains
    CHECK(energy(OrbifoldFunction<2>(orb, -1.0), cfg) == Approx(0.5 * mu / eps_n).epsilon(1e-14));
}

TEST_CASE("gradient field of constants vanishes exactly") {
    const auto orb = pillowcase(16);
    const auto cfg = config(0.25);
    for (double c : {1.0, 0.0}) {
        const auto g = gradient(OrbifoldFunction<2>(orb, c), cfg);
        for (double v : g.values) CHECK(v == 0.0);
    }
    CHECK(residual_norm(OrbifoldFunction<2>(orb, 1.0), cfg) == 0.0);
}

TEST_CASE("gradient matches central finite differences of the energy") {
    const auto orb = pillowcase(16);
    const auto cfg = config(0.3);
    const double eps_n = sq(cfg.eps);

    double worst_order = 10.0;
    for (int trial = 0; trial < 5; ++trial) {
        auto u = random_invariant(orb, 100 + trial, 0.2, 1.2);
        auto v = random_invariant(orb, 200 + trial, -1.0, 1.0);
        const double vn = std::sqrt(integrate_sq(v));
        v = (1.0 / vn) * v;

        const auto g = gradient(u, cfg);
        const double exact = inner_product(g, v) / eps_n;
        auto fd = [&](double h) {
            return (energy(u + h * v, cfg) - energy(u - h * v, cfg)) / (2.0 * h);
        };
        const double e3 = std::abs(fd(1e-3) - exact);
        const double e4 = std::abs(fd(1e-4) - exact);
        worst_order = std::min(worst_order, std::log10(e3 / e4));
    }
    CHECK(worst_order >= 1.9);
}

TEST_CASE("nehari scale") {
    const auto orb = pillowcase(16);
    const auto cfg = config(0.3);

    SECTION("constants scale to the constant solution") {
        for (double c : {0.5, 2.0, 7.3}) {
            const double s = nehari_scale(OrbifoldFunction<2>(orb, c), cfg);
            CHECK(s == Approx(1.0 / c).epsilon(1e-12));
        }
    }
    SECTION("(-1)-homogeneity") {
        const auto u = random_invariant(orb, 8, 0.1, 1.0);
        const double s1 = nehari_scale(u, cfg);
        for (double t : {0.5, 3.0})
            CHECK(nehari_scale(t * u, cfg) == Approx(s1 / t).epsilon(1e-12));
    }
    SECTION("s = n_eps(u) is the stationary point of s -> J(s u)") {
        const auto u = random_invariant(orb, 9, 0.1, 1.0);
        const double s = nehari_scale(u, cfg);
        const double h = 1e-5;
        const double dJ = (energy((s + h) * u, cfg) - energy((s - h) * u, cfg)) / (2.0 * h);
        CHECK(std::abs(dJ) < 1e-6 * std::abs(energy(s * u, cfg)));
        CHECK(nehari_defect(s * u, cfg) < 1e-12);
    }
    SECTION("projection is idempotent on the manifold") {
        const auto u = random_invariant(orb, 10, 0.1, 1.0);
        const auto w = nehari_scale(u, cfg) * u;
        CHECK(nehari_scale(w, cfg) == Approx(1.0).margin(1e-10));
    }
    SECTION("nonpositive seeds are rejected") {
        CHECK_THROWS_AS(nehari_scale(OrbifoldFunction<2>(orb, -1.0), cfg), NoPositivePart);
    }
}

TEST_CASE("bump construction") {
    const auto orb = pillowcase(32);
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    const auto cfg = config(0.1);
    const auto cone = orb.canonicalize(Vec<2>{0.0, 0.0});

    const auto bump = make_bump(cone, prof, cfg, orb);

    SECTION("peak value is the profile height") {
        CHECK(bump.values[orb.torus().node_index({0, 0})] == prof.initial_height());
    }
    SECTION("vanishes at distance rho and beyond") {
        for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
            if (orb.distance(cone.representative, orb.torus().node_coords(node)) >= orb.rho())
                CHECK(bump.values[node] == 0.0);
        }
    }
    SECTION("exactly invariant by construction") {
        CHECK(is_invariant(bump, 0.0));
    }
    SECTION("bumps at distinct cone points are far apart in L2") {
        const auto other = make_bump(orb.canonicalize(Vec<2>{0.5, 0.5}), prof, cfg, orb);
        const double rel = std::sqrt(integrate_sq(bump - other)) / std::sqrt(integrate_sq(bump));
        CHECK(rel > 0.5);
    }
    SECTION("degenerate cutoff is rejected") {
        // shrink rho until the cutoff half-radius sits on the profile plateau
        const auto tight = pillowcase(32, 0.05);
        const auto tight_cone = tight.canonicalize(Vec<2>{0.0, 0.0});
        CHECK(bump_distortion(prof, 0.5, tight.rho()) > 1.0 - 1e-3);
        CHECK_THROWS_AS(make_bump(tight_cone, prof, config(0.5), tight), BumpTooWide);
    }
}

TEST_CASE("injection lands on the Nehari manifold; its energy decreases toward m(E)/zeta") {
    const auto orb = pillowcase(64);
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    const auto cone = orb.canonicalize(Vec<2>{0.0, 0.0});
    const double target = prof.m_e / orb.zeta();

    double prev_energy = kInf;
    double prev_gap = kInf;
    double prev_scale_gap = kInf;
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto cfg = config(eps);
        const auto v = make_bump(cone, prof, cfg, orb);
        const auto u = inject(cone, prof, cfg, orb);

        CHECK(nehari_defect(u, cfg) < 1e-10);

        const double J = energy(u, cfg);
        CHECK(J < prev_energy);
        CHECK(J - target > 0.0); // the cutoff can only raise the Nehari energy
        CHECK(J - target < prev_gap);
        prev_energy = J;
        prev_gap = J - target;

        const double scale_gap = std::abs(nehari_scale(v, cfg) - 1.0);
        CHECK(scale_gap < prev_scale_gap);
        prev_scale_gap = scale_gap;
    }
}

TEST_CASE("descent finds the constant solution above the symmetry-breaking threshold") {
    const auto orb = torus2(16);
    auto cfg = config(0.8);
    cfg.descent.residual_tol = 1e-10;

    SECTION("the constant seed is already critical") {
        const auto sol = descend(OrbifoldFunction<2>(orb, 1.0), cfg);
        CHECK(sol.converged);
        CHECK(sol.iterations == 0);
        CHECK(sol.residual == 0.0);
    }
    SECTION("perturbed constants flow back") {
        auto seed = OrbifoldFunction<2>(orb, 1.0) + 0.05 * random_invariant(orb, 31);
        const auto sol = descend(seed, cfg);
        REQUIRE(sol.converged);
        CHECK(sol.residual < 1e-10);
        const double j_const = (0.5 - 0.25) * orb.measure() / sq(cfg.eps);
        CHECK(sol.energy == Approx(j_const).epsilon(1e-8));
        CHECK(is_constant_like(sol.u, 0.01));
    }
}

TEST_CASE("descent from a cone-point injection") {
    const auto orb = pillowcase(32);
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    auto cfg = config(0.1);
    cfg.descent.residual_tol = 1e-9;

    const auto cone = orb.canonicalize(Vec<2>{0.0, 0.0});
    const auto seed = inject(cone, prof, cfg, orb);
    const double j_seed = energy(seed, cfg);

    const auto sol = descend(seed, cfg);
    REQUIRE(sol.converged);

    SECTION("energy bracket and certificates") {
        CHECK(sol.energy > 0.0);
        CHECK(sol.energy <= j_seed);
        // converged spike energy sits near m(E)/zeta (the cutoff penalty is gone)
        CHECK(sol.energy == Approx(prof.m_e / 2.0).epsilon(0.15));
        // residual certificate recomputes bitwise
        CHECK(residual_norm(sol.u, cfg) == sol.residual);
        // energy identity on the manifold
        const double rhs = integrate_pos_pow(sol.u, cfg.p) * (cfg.p - 2.0) / (2.0 * cfg.p) / sq(cfg.eps);
        CHECK(sol.energy == Approx(rhs).epsilon(1e-8));
    }
    SECTION("monotone descent (to rounding) and exact invariance") {
        for (std::size_t i = 1; i < sol.energy_trace.size(); ++i)
            CHECK(sol.energy_trace[i] <= sol.energy_trace[i - 1] + 1e-12 * std::abs(sol.energy_trace[i - 1]));
        CHECK(is_invariant(sol.u, 0.0));
    }
    SECTION("post-convergence positivity") {
        double min_v = kInf;
        for (double v : sol.u.values) min_v = std::min(min_v, v);
        CHECK(min_v > -1e-8);
    }
    SECTION("solution concentrates at the seeded cone point") {
        std::size_t argmax = 0;
        for (std::size_t i = 0; i < sol.u.size(); ++i)
            if (sol.u.values[i] > sol.u.values[argmax]) argmax = i;
        CHECK(orb.distance(cone.representative, orb.torus().node_coords(argmax)) < 2.0 / 32.0);
    }
}

TEST_CASE("descent is covariant under grid isometries normalizing G") {
    const auto orb = pillowcase(32);
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    auto cfg = config(0.12);
    cfg.descent.residual_tol = 1e-10;

    const auto sol_a = descend(inject(orb.canonicalize(Vec<2>{0.0, 0.0}), prof, cfg, orb), cfg);
    // sigma: translation by half a period in x maps cone (0,0) to (1/2,0)
    const auto sol_b = descend(inject(orb.canonicalize(Vec<2>{0.5, 0.0}), prof, cfg, orb), cfg);
    REQUIRE(sol_a.converged);
    REQUIRE(sol_b.converged);

    const auto moved = translate_field<2>(sol_a.u, {16, 0});
    double max_diff = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i)
        max_diff = std::max(max_diff, std::abs(moved.values[i] - sol_b.u.values[i]));
    CHECK(max_diff < 1e-8);
}

TEST_CASE("clustering of solutions") {
    const auto orb = pillowcase(32);
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    const auto cfg = config(0.1);

    auto as_solution = [&](OrbifoldFunction<2> u, const std::string& label) {
        NehariSolution<2> s;
        s.u = std::move(u);
        s.seed_label = label;
        s.converged = true;
        return s;
    };

    SECTION("duplicates merge, constants are excluded from the count") {
        const auto bump = inject(orb.canonicalize(Vec<2>{0.0, 0.0}), prof, cfg, orb);
        std::vector<NehariSolution<2>> sols;
        sols.push_back(as_solution(bump, "a"));
        sols.push_back(as_solution(bump, "b"));
        sols.push_back(as_solution(OrbifoldFunction<2>(orb, 1.0), "const"));
        const auto cl = cluster(sols, cfg);
        CHECK(cl.n_clusters == 2);
        CHECK(cl.cluster_of[0] == cl.cluster_of[1]);
        CHECK(cl.nonconstant_count == 1);
    }
    SECTION("bumps at the four cone points are four classes") {
        std::vector<NehariSolution<2>> sols;
        for (auto c : {Vec<2>{0, 0}, Vec<2>{0.5, 0}, Vec<2>{0, 0.5}, Vec<2>{0.5, 0.5}})
            sols.push_back(as_solution(inject(orb.canonicalize(c), prof, cfg, orb), "bump"));
        const auto cl = cluster(sols, cfg);
        CHECK(cl.n_clusters == 4);
        CHECK(cl.nonconstant_count == 4);
    }
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(config(1.5).validate(2), Error);
    CHECK_THROWS_AS(config(0.1, 2.0).validate(2), Error);
    CHECK_THROWS_AS(config(0.1, 6.0).validate(3), Error);
    CHECK_NOTHROW(config(0.1, 6.0).validate(2)); // any p > 2 in 2D (desk-scale variant)
}
