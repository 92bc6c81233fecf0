#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "orblab/cutoff.hpp"
#include "orblab/field.hpp"
#include "orblab/geometry.hpp"
#include "orblab/ground_state.hpp"

namespace orblab {

struct DescentSettings {
    int max_iters = 3000;
    double residual_tol = 1e-9;
    double armijo_c = 1e-4;
    int max_backtracks = 60;
};

struct ProblemConfig {
    double eps = 0.1;
    double p = 4.0;
    double eta = 0.6;          // concentration threshold in (1/2, 1)
    DescentSettings descent;
    double cluster_tol = 0.1;  // relative L2 distance for distinctness
    double delta_factor = 0.1; // delta = delta_factor * m(E)/zeta in the sublevel reports

    void validate(int n) const {
        if (!(eps > 0.0) || eps >= 1.0) throw Error("config: eps must lie in (0,1)");
        if (p <= 2.0) throw Error("config: p must exceed 2");
        if (n >= 3 && p >= 2.0 * n / (n - 2.0)) throw Error("config: p must be subcritical for n >= 3");
        if (eta <= 0.5 || eta >= 1.0) throw Error("config: eta must lie in (1/2, 1)");
        if (!(descent.residual_tol > 0.0)) throw Error("config: residual_tol must be positive");
    }
};

/// J_eps(u) = eps^{-n} * integral of eps^2|grad u|^2/2 + u^2/2 - (u^+)^p/p.
template <int N>
inline double energy(const OrbifoldFunction<N>& u, const ProblemConfig& cfg) {
    const DiscreteOperators<N> ops(*u.orb);
    const double gsq = ops.grad_sq(u);
    const double l2 = integrate_sq(u);
    const double pp = integrate_pos_pow(u, cfg.p);
    return (0.5 * cfg.eps * cfg.eps * gsq + 0.5 * l2 - pp / cfg.p) / std::pow(cfg.eps, N);
}

/// L2(mu) representative of the derivative of J_eps (up to the eps^{-n} factor):
/// -eps^2 lap(u) + u - (u^+)^{p-1}. Zero field certifies a weak solution.
template <int N>
inline OrbifoldFunction<N> gradient(const OrbifoldFunction<N>& u, const ProblemConfig& cfg) {
    const DiscreteOperators<N> ops(*u.orb);
    OrbifoldFunction<N> g = ops.laplacian(u);
    const double e2 = cfg.eps * cfg.eps;
    const double pm1 = cfg.p - 1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = u.values[i];
        const double nl = v > 0.0 ? std::pow(v, pm1) : 0.0;
        g.values[i] = -e2 * g.values[i] + v - nl;
    }
    return g;
}

/// eps^{-n}-normalized H1_eps norm of the gradient field; the convergence
/// certificate reported with every solution.
template <int N>
inline double residual_norm(const OrbifoldFunction<N>& u, const ProblemConfig& cfg) {
    const OrbifoldFunction<N> g = gradient(u, cfg);
    const DiscreteOperators<N> ops(*u.orb);
    const double h1 = cfg.eps * cfg.eps * ops.grad_sq(g) + integrate_sq(g);
    return std::sqrt(h1 / std::pow(cfg.eps, N));
}

/// The unique s > 0 with s*u on the Nehari manifold:
/// s^{p-2} = (eps^2 |grad u|^2 + |u|^2) / |(u^+)|_p^p.
template <int N>
inline double nehari_scale(const OrbifoldFunction<N>& u, const ProblemConfig& cfg) {
    const double den = integrate_pos_pow(u, cfg.p);
    if (!(den > 0.0)) throw NoPositivePart("nehari_scale: (u^+)^p integrates to zero");
    const DiscreteOperators<N> ops(*u.orb);
    const double num = cfg.eps * cfg.eps * ops.grad_sq(u) + integrate_sq(u);
    return std::pow(num / den, 1.0 / (cfg.p - 2.0));
}

/// Relative defect of the Nehari identity at u (zero on the manifold).
template <int N>
inline double nehari_defect(const OrbifoldFunction<N>& u, const ProblemConfig& cfg) {
    const DiscreteOperators<N> ops(*u.orb);
    const double lhs = cfg.eps * cfg.eps * ops.grad_sq(u) + integrate_sq(u);
    const double rhs = integrate_pos_pow(u, cfg.p);
    return std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
}

/// How badly the convenient-radius cutoff clips the rescaled profile:
/// V_eps(rho/2) / V(0). Near 1 means even the bump core is cut.
inline double bump_distortion(const GroundStateProfile& profile, double eps, double rho) {
    return profile.value_at(0.5 * rho / eps) / profile.initial_height();
}

/// V_{eps,x}(y) = V_eps(dist(x,y)) * chi_rho(dist(x,y)).
///
/// Built from the quotient distance, so the field is exactly G-invariant by
/// construction. Fails only when the cutoff lands on the undecayed plateau of
/// the profile and the construction degenerates to the cutoff itself.
template <int N>
inline OrbifoldFunction<N> make_bump(const OrbifoldPoint<N>& x, const GroundStateProfile& profile,
                                     const ProblemConfig& cfg, const GoodOrbifold<N>& orb) {
    const double rho = orb.rho();
    if (bump_distortion(profile, cfg.eps, rho) > 1.0 - 1e-3)
        throw BumpTooWide("make_bump: profile has not decayed at all at rho/2");
    const RescaledProfile resc = rescale(profile, cfg.eps);
    OrbifoldFunction<N> u(orb);
    for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
        const double d = orb.distance(x.representative, orb.torus().node_coords(node));
        if (d >= rho) continue;
        u.values[node] = resc(d) * cutoff(rho, d);
    }
    return u;
}

/// i_eps(x) = n_eps(V_{eps,x}) V_{eps,x}.
template <int N>
inline OrbifoldFunction<N> inject(const OrbifoldPoint<N>& x, const GroundStateProfile& profile,
                                  const ProblemConfig& cfg, const GoodOrbifold<N>& orb) {
    OrbifoldFunction<N> v = make_bump(x, profile, cfg, orb);
    return nehari_scale(v, cfg) * v;
}

template <int N>
struct NehariSolution {
    OrbifoldFunction<N> u;
    double energy = 0.0;
    double residual = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> energy_trace; // J at the projected seed and each accepted step
    std::string seed_label = "generic";
    std::optional<OrbifoldPoint<N>> seed_point;
    std::optional<OrbifoldPoint<N>> concentration_point; // filled by the concentration stage
    int cluster_id = -1;
};

/// Projected gradient descent on the Nehari manifold: Barzilai-Borwein steps
/// with Armijo backtracking, re-projecting u <- n_eps(u) u after every step.
/// Monotone in J_eps across accepted iterations.
template <int N>
inline NehariSolution<N> descend(const OrbifoldFunction<N>& seed, const ProblemConfig& cfg) {
    const auto& orb = *seed.orb;
    const DiscreteOperators<N> ops(orb);
    const double eps_n = std::pow(cfg.eps, N);
    auto res_of = [&](const OrbifoldFunction<N>& grad_field) {
        return std::sqrt((cfg.eps * cfg.eps * ops.grad_sq(grad_field) + integrate_sq(grad_field)) / eps_n);
    };

    NehariSolution<N> sol;
    double s0 = nehari_scale(seed, cfg); // throws NoPositivePart for seeds <= 0
    OrbifoldFunction<N> u = s0 * seed;
    double J = energy(u, cfg);
    if (!std::isfinite(J)) throw Diverged("descend: seed energy is not finite");
    sol.energy_trace.push_back(J);

    OrbifoldFunction<N> g = gradient(u, cfg);

    // safe initial step from the largest stencil eigenvalue
    double lap_max = 0.0;
    for (int a = 0; a < N; ++a)
        lap_max += 4.0 * orb.gram_inv()[a][a] * sq(static_cast<double>(orb.torus().res[a]));
    const double alpha0 = 1.0 / (1.0 + cfg.eps * cfg.eps * lap_max);
    double alpha_bb = alpha0;

    for (int k = 0; k < cfg.descent.max_iters; ++k) {
        sol.iterations = k;
        const double res = res_of(g);
        if (!std::isfinite(res)) throw Diverged("descend: residual is not finite");
        if (res < cfg.descent.residual_tol) {
            sol.converged = true;
            sol.residual = res;
            break;
        }

        const double g_l2sq = integrate_sq(g);
        double alpha = std::clamp(alpha_bb, 1e-6 * alpha0, 1e8 * alpha0);
        bool accepted = false;
        OrbifoldFunction<N> w;
        double Jw = 0.0;
        // sufficient decrease, slackened by the rounding floor of J itself so
        // the last decades of residual convergence are not starved
        const double fp_slack = 1e-13 * (1.0 + std::abs(J));
        for (int bt = 0; bt < cfg.descent.max_backtracks; ++bt) {
            OrbifoldFunction<N> v = u - alpha * g;
            double s;
            try {
                s = nehari_scale(v, cfg);
            } catch (const NoPositivePart&) {
                alpha *= 0.5;
                continue;
            }
            w = s * v;
            Jw = energy(w, cfg);
            if (std::isfinite(Jw) && Jw <= J - cfg.descent.armijo_c * alpha * g_l2sq / eps_n + fp_slack) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) { // stalled line search; report the current iterate
            sol.residual = res;
            break;
        }

        OrbifoldFunction<N> g_new = gradient(w, cfg);
        const OrbifoldFunction<N> s_vec = w - u;
        const OrbifoldFunction<N> y_vec = g_new - g;
        const double sy = inner_product(s_vec, y_vec);
        const double ss = inner_product(s_vec, s_vec);
        alpha_bb = sy > 1e-300 ? ss / sy : alpha0;

        u = std::move(w);
        g = std::move(g_new);
        J = Jw;
        sol.energy_trace.push_back(J);
    }

    if (!sol.converged) sol.residual = res_of(g);
    sol.u = std::move(u);
    sol.energy = energy(sol.u, cfg);
    return sol;
}

struct ClusterResult {
    std::vector<int> cluster_of;       // per input solution
    std::vector<char> cluster_constant;
    int n_clusters = 0;
    int nonconstant_count = 0;
};

/// Is u within cluster_tol (relative L2) of its best-fit constant?
template <int N>
inline bool is_constant_like(const OrbifoldFunction<N>& u, double cluster_tol) {
    const double mean = integrate(u) / u.orb->measure();
    const double nrm = std::sqrt(integrate_sq(u));
    if (nrm == 0.0) return true;
    OrbifoldFunction<N> c(*u.orb, mean);
    return std::sqrt(integrate_sq(u - c)) / nrm < cluster_tol;
}

/// Single-linkage clustering of solution fields under relative L2(mu)
/// distance. Constant-like clusters are labeled and left out of the
/// non-constant count.
template <int N>
inline ClusterResult cluster(const std::vector<NehariSolution<N>>& sols, const ProblemConfig& cfg) {
    const std::size_t n = sols.size();
    ClusterResult out;
    out.cluster_of.assign(n, -1);
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (relative_l2_distance(sols[i].u, sols[j].u) < cfg.cluster_tol)
                parent[find(i)] = find(j);

    std::vector<int> id_of_root(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (id_of_root[r] < 0) {
            id_of_root[r] = out.n_clusters++;
            out.cluster_constant.push_back(0);
        }
        out.cluster_of[i] = id_of_root[r];
        if (is_constant_like(sols[i].u, cfg.cluster_tol))
            out.cluster_constant[static_cast<std::size_t>(id_of_root[r])] = 1;
    }
    for (char c : out.cluster_constant)
        if (!c) ++out.nonconstant_count;
    return out;
}

} // namespace orblab
