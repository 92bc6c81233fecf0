#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "orblab/cutoff.hpp"
#include "orblab/field.hpp"
#include "orblab/geometry.hpp"
#include "orblab/nehari.hpp"

namespace orblab {

/// P_u(x) = |u|_1^{-1} * integral of dist(x,y)^2 |u(y)| dmu(y).
/// Sums only over the support of u; `support` is the node list with |u| above
/// the support threshold, precomputed by the caller when evaluating many x.
template <int N>
inline double p_functional_on_support(const OrbifoldFunction<N>& u, const std::type_identity_t<Vec<N>>& x,
                                      const std::vector<std::size_t>& support, double l1) {
    const auto& orb = *u.orb;
    double acc = 0.0;
    for (std::size_t node : support) {
        const double d = orb.distance(x, orb.torus().node_coords(node));
        acc += d * d * std::abs(u.values[node]);
    }
    return acc * orb.cell_volume() / (static_cast<double>(orb.group_order()) * l1);
}

template <int N>
inline std::vector<std::size_t> support_nodes(const OrbifoldFunction<N>& u, double threshold = 1e-14) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u.values[i]) > threshold) s.push_back(i);
    return s;
}

template <int N>
inline double p_functional(const OrbifoldFunction<N>& u, const OrbifoldPoint<N>& x) {
    const double l1 = integrate_abs(u);
    if (!(l1 > 0.0)) throw ZeroFunction("p_functional: u vanishes");
    return p_functional_on_support(u, x.representative, support_nodes(u), l1);
}

/// Riemannian center of mass of |u| dmu / |u|_1: the unique minimizer of P_u
/// when the support fits in a ball of the admissible radius.
///
/// Coarse grid search over the admissible ball followed by per-axis
/// golden-section refinement in the covering chart (tolerance 1e-6 * rho).
template <int N>
inline OrbifoldPoint<N> center_of_mass(const OrbifoldFunction<N>& u, double support_radius = -1.0) {
    const auto& orb = *u.orb;
    if (support_radius <= 0.0) support_radius = orb.rho();

    const double l1 = integrate_abs(u);
    if (!(l1 > 0.0)) throw ZeroFunction("center_of_mass: u vanishes");
    const std::vector<std::size_t> support = support_nodes(u);

    // admissible ball center: try the |u|-argmax node first, then any support node
    auto fits = [&](std::size_t c) {
        const Vec<N> pc = orb.torus().node_coords(c);
        for (std::size_t node : support)
            if (orb.distance(pc, orb.torus().node_coords(node)) > support_radius) return false;
        return true;
    };
    std::size_t center_node = support.front();
    double best_abs = 0.0;
    for (std::size_t node : support)
        if (std::abs(u.values[node]) > best_abs) { best_abs = std::abs(u.values[node]); center_node = node; }
    if (!fits(center_node)) {
        bool found = false;
        for (std::size_t node : support)
            if (fits(node)) { center_node = node; found = true; break; }
        if (!found) throw SupportTooWide("center_of_mass: support does not fit in an admissible ball");
    }
    const Vec<N> y = orb.torus().node_coords(center_node);

    // coarse search over nodes of the ball around y (the minimizer lies inside)
    double best = kInf;
    std::size_t best_node = center_node;
    orb.for_cube_nodes(y, support_radius, [&](std::size_t node) {
        const Vec<N> pn = orb.torus().node_coords(node);
        if (orb.distance(y, pn) > support_radius) return;
        const double val = p_functional_on_support(u, pn, support, l1);
        if (val < best) { best = val; best_node = node; }
    });

    // golden-section coordinate refinement in the covering chart around the best node
    Vec<N> x = orb.torus().node_coords(best_node);
    const double tol = 1e-6 * orb.rho();
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int sweep = 0; sweep < 6; ++sweep) {
        for (int a = 0; a < N; ++a) {
            Vec<N> dir{};
            for (int i = 0; i < N; ++i) dir[i] = orb.torus().basis[i][a] / orb.torus().res[a];
            double lo = -1.5, hi = 1.5; // in cells along axis a
            auto eval = [&](double t) {
                return p_functional_on_support(u, x + t * dir, support, l1);
            };
            double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
            double fc = eval(c), fd = eval(d);
            while ((hi - lo) * norm(dir) > tol) {
                if (fc < fd) {
                    hi = d; d = c; fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = eval(c);
                } else {
                    lo = c; c = d; fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = eval(d);
                }
            }
            x = x + (0.5 * (lo + hi)) * dir;
        }
    }
    return orb.canonicalize(x);
}

/// CF_u(x) = |u|_1^{-1} * integral over B(x, rho) of |u| dmu.
/// The ball indicator is evaluated on nodes (no partial cells).
template <int N>
inline double concentration_function(const OrbifoldFunction<N>& u, const std::type_identity_t<Vec<N>>& x, double l1 = -1.0) {
    const auto& orb = *u.orb;
    if (l1 <= 0.0) l1 = integrate_abs(u);
    if (!(l1 > 0.0)) throw ZeroFunction("concentration_function: u vanishes");
    const double rho = orb.rho();
    double acc = 0.0;
    // visit the cubes around every orbit image of x once, stamping nodes so
    // overlapping images near the singular locus are not double counted
    thread_local std::vector<uint32_t> stamp;
    thread_local uint32_t stamp_id = 0;
    if (stamp.size() != orb.n_nodes()) { stamp.assign(orb.n_nodes(), 0); stamp_id = 0; }
    ++stamp_id;
    for (const auto& e : orb.action().elements()) {
        const Vec<N> img = orb.torus().reduce(e.apply(x));
        orb.for_cube_nodes(img, rho, [&](std::size_t node) {
            if (stamp[node] == stamp_id) return;
            const Vec<N> pn = orb.torus().node_coords(node);
            if (orb.torus().torus_distance(img, pn) >= rho) return;
            stamp[node] = stamp_id;
            acc += std::abs(u.values[node]);
        });
    }
    return acc * orb.cell_volume() / (static_cast<double>(orb.group_order()) * l1);
}

template <int N>
inline double concentration_function(const OrbifoldFunction<N>& u, const OrbifoldPoint<N>& x) {
    return concentration_function(u, x.representative);
}

template <int N>
struct ConcentrationCoefficient {
    double cc = 0.0;
    std::size_t argmax_node = 0;
};

/// CC(u) = max over grid nodes of CF_u; ties broken by canonical node order.
template <int N>
inline ConcentrationCoefficient<N> concentration_coefficient(const OrbifoldFunction<N>& u) {
    const auto& orb = *u.orb;
    const double l1 = integrate_abs(u);
    if (!(l1 > 0.0)) throw ZeroFunction("concentration_coefficient: u vanishes");
    ConcentrationCoefficient<N> out;
    out.cc = -1.0;
    for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
        const double cf = concentration_function(u, orb.torus().node_coords(node), l1);
        if (cf > out.cc) { out.cc = cf; out.argmax_node = node; }
    }
    return out;
}

/// Psi_{eta,u}(x) = [1 - chi_eta(CF_u(x))] u(x). Keeps the strongly
/// concentrated region, kills everything with CF below eta/2.
template <int N>
inline OrbifoldFunction<N> truncate(const OrbifoldFunction<N>& u, double eta) {
    const auto& orb = *u.orb;
    const auto cc = concentration_coefficient(u);
    if (cc.cc <= eta) throw NotConcentrated("truncate: CC(u) <= eta");
    const double l1 = integrate_abs(u);
    OrbifoldFunction<N> out(orb);
    for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
        const double cf = concentration_function(u, orb.torus().node_coords(node), l1);
        out.values[node] = (1.0 - cutoff(eta, cf)) * u.values[node];
    }
    return out;
}

template <int N>
struct ConcentrationReport {
    double cc = 0.0;
    OrbifoldPoint<N> argmax;
    OrbifoldPoint<N> center;
    double eta = 0.0;
};

/// Cm_eta(u) = cm(Psi_{eta,u}); requires CC(u) > eta. The truncation is
/// supported in B(argmax, 2 rho), so the center of mass runs with that
/// admissible radius.
template <int N>
inline OrbifoldPoint<N> concentration_center(const OrbifoldFunction<N>& u, double eta) {
    const OrbifoldFunction<N> psi = truncate(u, eta);
    return center_of_mass(psi, 2.0 * u.orb->rho());
}

template <int N>
inline ConcentrationReport<N> concentration_report(const OrbifoldFunction<N>& u, double eta) {
    const auto& orb = *u.orb;
    ConcentrationReport<N> rep;
    rep.eta = eta;
    const auto cc = concentration_coefficient(u);
    rep.cc = cc.cc;
    rep.argmax = orb.node_point(cc.argmax_node);
    rep.center = concentration_center(u, eta);
    return rep;
}

/// c_eps(u) = Cm_eta((u^+)^p), the barycenter-style map from low sublevels
/// of J_eps into the 3 rho neighborhood of Z^O.
template <int N>
inline OrbifoldPoint<N> c_epsilon(const OrbifoldFunction<N>& u, const ProblemConfig& cfg) {
    OrbifoldFunction<N> up(*u.orb);
    for (std::size_t i = 0; i < u.size(); ++i)
        up.values[i] = u.values[i] > 0.0 ? std::pow(u.values[i], cfg.p) : 0.0;
    return concentration_center(up, cfg.eta);
}

template <int N>
struct RoundtripEntry {
    OrbifoldPoint<N> start;          // representative x in Z^O
    OrbifoldPoint<N> center;         // y = c_eps(solution-or-inject at x)
    OrbifoldPoint<N> endpoint;       // H(x, 1): normal retraction of y onto Z^O
    double dist_center_to_z = 0.0;
    double roundtrip_distance = 0.0; // dist(x, endpoint)
    bool in_tube = false;            // y in B(Z^O, 3 rho)
    std::string status;              // "ok" or failure reason
};

template <int N>
struct RoundtripReport {
    std::vector<RoundtripEntry<N>> entries;
    double max_roundtrip_distance = 0.0;
    bool escaped_tube = false;       // falsifies the concentration theorem at this discretization
    bool all_concentrated = true;
};

/// Deformation endpoint H(x,1) of the normal-bundle homotopy
/// H(x,t) = psi((1-t) psi^{-1}(y)): the base point of y in the tube over Z^O.
/// When O is a manifold Z^O = O and psi is the identity, so the endpoint is y.
template <int N>
inline OrbifoldPoint<N> roundtrip_endpoint(const GoodOrbifold<N>& orb, const OrbifoldPoint<N>& y) {
    if (orb.is_manifold()) return y;
    return orb.z_projection(y.representative);
}

/// The photography round trip: for each Z^O component representative, follow
/// inject -> (descend) -> concentration center -> normal retraction, and
/// measure how far the endpoint lands from the starting representative.
template <int N>
inline RoundtripReport<N> photography_roundtrip(const GoodOrbifold<N>& orb, const ProblemConfig& cfg,
                                                const GroundStateProfile& profile,
                                                const std::vector<NehariSolution<N>>* solutions = nullptr) {
    RoundtripReport<N> rep;
    const auto z = max_stratum(orb);
    for (std::size_t c = 0; c < z.representatives.size(); ++c) {
        RoundtripEntry<N> entry;
        entry.start = z.representatives[c];
        try {
            OrbifoldFunction<N> field;
            if (solutions && c < solutions->size()) {
                field = (*solutions)[c].u;
            } else {
                NehariSolution<N> sol = descend(inject(entry.start, profile, cfg, orb), cfg);
                field = std::move(sol.u);
            }
            entry.center = c_epsilon(field, cfg);
            entry.dist_center_to_z = orb.distance_to_z(entry.center.representative);
            entry.in_tube = entry.dist_center_to_z < 3.0 * orb.rho();
            entry.endpoint = roundtrip_endpoint(orb, entry.center);
            entry.roundtrip_distance = orb.distance(entry.start, entry.endpoint);
            entry.status = entry.in_tube ? "ok" : "escaped-tube";
            if (!entry.in_tube) rep.escaped_tube = true;
            rep.max_roundtrip_distance = std::max(rep.max_roundtrip_distance, entry.roundtrip_distance);
        } catch (const NotConcentrated& e) {
            entry.status = std::string("not-concentrated: ") + e.what();
            rep.all_concentrated = false;
        }
        rep.entries.push_back(std::move(entry));
    }
    return rep;
}

} // namespace orblab
