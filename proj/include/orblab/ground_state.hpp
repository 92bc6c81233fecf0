#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orblab/common.hpp"

namespace orblab {

/// Surface area of the unit sphere S^{n-1} in R^n.
inline double sphere_area(int n) {
    switch (n) {
        case 1: return 2.0;
        case 2: return 2.0 * kPi;
        case 3: return 4.0 * kPi;
        default: return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
    }
}

struct GroundStateNorms {
    double l2_sq = 0.0;   // ||V||_2^2 over R^n
    double lp_p = 0.0;    // ||V||_p^p
    double grad_sq = 0.0; // ||V'||_2^2
};

/// Radial ground state of -Delta u + u = u|u|^{p-2} on R^n.
/// Samples live on a uniform radius grid; beyond the last numerically
/// trustworthy node the exponential far field C r^{-(n-1)/2} e^{-r} is grafted.
struct GroundStateProfile {
    int n = 0;
    double p = 0.0;
    double r_max = 0.0;
    double tol = 0.0;
    std::vector<double> radii;
    std::vector<double> values;
    std::vector<double> derivs;
    double m_e = 0.0;
    GroundStateNorms norms;

    double initial_height() const { return values.front(); }

    /// Linear interpolation between samples; zero beyond r_max.
    double value_at(double r) const {
        if (r <= 0.0) return values.front();
        if (r >= r_max) return 0.0;
        const double dr = radii[1] - radii[0];
        const std::size_t i = std::min(values.size() - 2, static_cast<std::size_t>(r / dr));
        const double t = (r - radii[i]) / dr;
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }

    double deriv_at(double r) const {
        if (r <= 0.0) return 0.0;
        if (r >= r_max) return 0.0;
        const double dr = radii[1] - radii[0];
        const std::size_t i = std::min(derivs.size() - 2, static_cast<std::size_t>(r / dr));
        const double t = (r - radii[i]) / dr;
        return derivs[i] * (1.0 - t) + derivs[i + 1] * t;
    }
};

namespace detail {

struct RadialState {
    double v;
    double w; // dv/dr
};

/// Right-hand side of V'' + (n-1)/r V' - V + V|V|^{p-2} = 0 as a first-order system.
inline RadialState radial_rhs(int n, double p, double r, const RadialState& s) {
    const double f = s.v * std::pow(std::abs(s.v), p - 2.0);
    return {s.w, s.v - f - (n - 1) * s.w / r};
}

/// One adaptive Dormand-Prince 5(4) step; h is updated in place.
inline bool dopri_step(int n, double p, double& r, RadialState& s, double& h, double h_max) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    const RadialState k1 = radial_rhs(n, p, r, s);
    auto at = [&](double dt, double a1, double a2, double a3, double a4, double a5,
                  const RadialState& q2, const RadialState& q3, const RadialState& q4,
                  const RadialState& q5) {
        RadialState out;
        out.v = s.v + h * (a1 * k1.v + a2 * q2.v + a3 * q3.v + a4 * q4.v + a5 * q5.v);
        out.w = s.w + h * (a1 * k1.w + a2 * q2.w + a3 * q3.w + a4 * q4.w + a5 * q5.w);
        (void)dt;
        return out;
    };
    RadialState z{};
    const RadialState k2 = radial_rhs(n, p, r + c2 * h, at(c2, 1.0 / 5, 0, 0, 0, 0, z, z, z, z));
    const RadialState k3 = radial_rhs(n, p, r + c3 * h, at(c3, 3.0 / 40, 9.0 / 40, 0, 0, 0, k2, z, z, z));
    const RadialState k4 = radial_rhs(n, p, r + c4 * h, at(c4, 44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, k2, k3, z, z));
    const RadialState k5 = radial_rhs(n, p, r + c5 * h,
                                      at(c5, 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, k2, k3, k4, z));
    const RadialState k6 = radial_rhs(n, p, r + h,
                                      at(1, 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, k2, k3, k4, k5));
    RadialState y5;
    y5.v = s.v + h * (35.0 / 384 * k1.v + 500.0 / 1113 * k3.v + 125.0 / 192 * k4.v - 2187.0 / 6784 * k5.v + 11.0 / 84 * k6.v);
    y5.w = s.w + h * (35.0 / 384 * k1.w + 500.0 / 1113 * k3.w + 125.0 / 192 * k4.w - 2187.0 / 6784 * k5.w + 11.0 / 84 * k6.w);
    const RadialState k7 = radial_rhs(n, p, r + h, y5);
    // embedded 4th-order difference
    const double ev = h * ((35.0 / 384 - 5179.0 / 57600) * k1.v + (500.0 / 1113 - 7571.0 / 16695) * k3.v +
                           (125.0 / 192 - 393.0 / 640) * k4.v + (-2187.0 / 6784 + 92097.0 / 339200) * k5.v +
                           (11.0 / 84 - 187.0 / 2100) * k6.v - 1.0 / 40 * k7.v);
    const double ew = h * ((35.0 / 384 - 5179.0 / 57600) * k1.w + (500.0 / 1113 - 7571.0 / 16695) * k3.w +
                           (125.0 / 192 - 393.0 / 640) * k4.w + (-2187.0 / 6784 + 92097.0 / 339200) * k5.w +
                           (11.0 / 84 - 187.0 / 2100) * k6.w - 1.0 / 40 * k7.w);
    const double tol_v = 1e-12 + 1e-12 * std::abs(s.v);
    const double tol_w = 1e-12 + 1e-12 * std::abs(s.w);
    const double err = std::sqrt(0.5 * (sq(ev / tol_v) + sq(ew / tol_w)));
    if (err <= 1.0) {
        r += h;
        s = y5;
        h = std::min(h_max, h * std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        return true;
    }
    h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
    return false;
}

enum class Shot { Undershoot, Overshoot };

/// Integrate from the Taylor start and classify: turning back up while still
/// positive means the initial height was too low; crossing zero means too high.
inline Shot classify_shot(int n, double p, double a, double r_max) {
    const double r0 = 1e-4;
    const double vpp0 = (a - a * std::pow(a, p - 2.0)) / n;
    double r = r0;
    RadialState s{a + 0.5 * vpp0 * r0 * r0, vpp0 * r0};
    double h = 1e-3;
    while (r < r_max) {
        if (s.v <= 0.0) return Shot::Overshoot;
        if (s.w > 0.0) return Shot::Undershoot;
        const double h_cap = r_max - r;
        if (h > h_cap) h = h_cap;
        dopri_step(n, p, r, s, h, 0.25);
        if (h < 1e-14) break;
    }
    return s.v > 0.0 ? Shot::Undershoot : Shot::Overshoot;
}

} // namespace detail

/// Bisection shooting on the initial height V(0) in (1, 10).
///
/// The trajectory separating decay from zero-crossing is converged to `tol`,
/// sampled on a uniform grid, and finished with the analytic exponential tail
/// once the numeric solution drops below ~1e-7 of the peak (forward error
/// grows like e^{+r} past that point, the grafted tail does not).
inline GroundStateProfile solve_ground_state(int n, double p, double r_max = 25.0, double tol = 1e-10) {
    if (p <= 2.0) throw Error("solve_ground_state: need p > 2");
    if (n >= 3 && p >= 2.0 * n / (n - 2.0)) throw Error("solve_ground_state: p must be subcritical");
    if (r_max < 20.0) throw Error("solve_ground_state: need r_max >= 20");

    using detail::Shot;
    double lo = 1.0 + 1e-9;
    double hi = 10.0;
    if (detail::classify_shot(n, p, lo, r_max) != Shot::Undershoot ||
        detail::classify_shot(n, p, hi, r_max) != Shot::Overshoot)
        throw NoSignChange("solve_ground_state: bracket (1,10) does not separate trajectories");

    const double tol_eff = std::max(tol, 8.0 * std::numeric_limits<double>::epsilon());
    int iters = 0;
    while (hi - lo > tol_eff) {
        if (++iters > 200) throw ToleranceNotReached("solve_ground_state: bisection stalled");
        const double mid = 0.5 * (lo + hi);
        if (detail::classify_shot(n, p, mid, r_max) == Shot::Undershoot)
            lo = mid;
        else
            hi = mid;
    }
    const double a = 0.5 * (lo + hi);

    GroundStateProfile prof;
    prof.n = n;
    prof.p = p;
    prof.r_max = r_max;
    prof.tol = tol;
    const std::size_t m = 32768;
    const double dr = r_max / m;
    prof.radii.resize(m + 1);
    prof.values.resize(m + 1);
    prof.derivs.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) prof.radii[i] = i * dr;

    const double r0 = 1e-4;
    const double vpp0 = (a - a * std::pow(a, p - 2.0)) / n;
    prof.values[0] = a;
    prof.derivs[0] = 0.0;
    double r = r0;
    detail::RadialState s{a + 0.5 * vpp0 * r0 * r0, vpp0 * r0};
    double h = 1e-3;
    const double v_graft = 1e-7 * a;
    std::size_t graft_from = m + 1;
    for (std::size_t i = 1; i <= m; ++i) {
        const double target = prof.radii[i];
        bool bad = false;
        while (r < target) {
            if (h > target - r) h = target - r;
            detail::dopri_step(n, p, r, s, h, dr);
            if (h < 1e-15 || s.v <= 0.0 || s.w >= 0.0) { bad = true; break; }
        }
        if (bad || s.v <= v_graft) {
            graft_from = bad ? i : i + 1;
            if (!bad) {
                prof.values[i] = s.v;
                prof.derivs[i] = s.w;
            }
            break;
        }
        prof.values[i] = s.v;
        prof.derivs[i] = s.w;
    }
    if (graft_from <= m) {
        const std::size_t i0 = graft_from - 1;
        const double rs = prof.radii[i0] > 0.0 ? prof.radii[i0] : dr;
        const double vs = prof.values[i0];
        for (std::size_t i = graft_from; i <= m; ++i) {
            const double rr = prof.radii[i];
            const double val = vs * std::pow(rs / rr, 0.5 * (n - 1)) * std::exp(-(rr - rs));
            prof.values[i] = val;
            prof.derivs[i] = -val * (1.0 + 0.5 * (n - 1) / rr);
        }
    }

    // norms by composite Simpson with the r^{n-1} surface weight
    const double area = sphere_area(n);
    auto simpson = [&](auto f) {
        double acc = f(0) + f(m);
        for (std::size_t i = 1; i < m; i += 2) acc += 4.0 * f(i);
        for (std::size_t i = 2; i < m; i += 2) acc += 2.0 * f(i);
        return acc * dr / 3.0;
    };
    auto w = [&](std::size_t i) { return std::pow(prof.radii[i], n - 1); };
    prof.norms.l2_sq = area * simpson([&](std::size_t i) { return sq(prof.values[i]) * w(i); });
    prof.norms.lp_p = area * simpson([&](std::size_t i) { return std::pow(std::abs(prof.values[i]), p) * w(i); });
    prof.norms.grad_sq = area * simpson([&](std::size_t i) { return sq(prof.derivs[i]) * w(i); });
    prof.m_e = (p - 2.0) / (2.0 * p) * prof.norms.lp_p;
    return prof;
}

/// Evaluator for V_eps(r) = V(r / eps); zero beyond eps * r_max.
struct RescaledProfile {
    const GroundStateProfile* profile;
    double eps;
    double operator()(double r) const { return profile->value_at(r / eps); }
};

inline RescaledProfile rescale(const GroundStateProfile& profile, double eps) {
    if (!(eps > 0.0) || eps > 1.0) throw Error("rescale: eps must lie in (0,1]");
    return RescaledProfile{&profile, eps};
}

// ---- persistence -----------------------------------------------------------------

inline void save_profile(const GroundStateProfile& prof, const std::filesystem::path& path) {
    nlohmann::json j;
    j["n"] = prof.n;
    j["p"] = prof.p;
    j["r_max"] = prof.r_max;
    j["tol"] = prof.tol;
    j["radii"] = prof.radii;
    j["values"] = prof.values;
    j["derivs"] = prof.derivs;
    j["m_e"] = prof.m_e;
    j["norms"] = {{"l2_sq", prof.norms.l2_sq}, {"lp_p", prof.norms.lp_p}, {"grad_sq", prof.norms.grad_sq}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write profile cache: " + path.string());
    out << j.dump(1) << "\n";
}

inline GroundStateProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read profile cache: " + path.string());
    nlohmann::json j;
    in >> j;
    GroundStateProfile prof;
    prof.n = j.at("n").get<int>();
    prof.p = j.at("p").get<double>();
    prof.r_max = j.at("r_max").get<double>();
    prof.tol = j.at("tol").get<double>();
    prof.radii = j.at("radii").get<std::vector<double>>();
    prof.values = j.at("values").get<std::vector<double>>();
    prof.derivs = j.at("derivs").get<std::vector<double>>();
    prof.m_e = j.at("m_e").get<double>();
    prof.norms.l2_sq = j.at("norms").at("l2_sq").get<double>();
    prof.norms.lp_p = j.at("norms").at("lp_p").get<double>();
    prof.norms.grad_sq = j.at("norms").at("grad_sq").get<double>();
    return prof;
}

inline std::string profile_cache_name(int n, double p, double r_max, double tol) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "gs_n%d_p%.6g_rmax%.6g_tol%.3g.json", n, p, r_max, tol);
    return buf;
}

/// Solve with a disk cache keyed by (n, p, r_max, tol).
inline GroundStateProfile solve_ground_state_cached(int n, double p, double r_max, double tol,
                                                    const std::filesystem::path& cache_dir) {
    std::filesystem::create_directories(cache_dir);
    const auto path = cache_dir / profile_cache_name(n, p, r_max, tol);
    if (std::filesystem::exists(path)) return load_profile(path);
    GroundStateProfile prof = solve_ground_state(n, p, r_max, tol);
    save_profile(prof, path);
    return prof;
}

inline void export_profile_csv(const GroundStateProfile& prof, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write profile CSV: " + path.string());
    out << "r,V\n";
    char buf[64];
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", prof.radii[i], prof.values[i]);
        out << buf;
    }
}

} // namespace orblab
