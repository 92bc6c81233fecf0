#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "orblab/concentration.hpp"
#include "orblab/field.hpp"
#include "orblab/geometry.hpp"
#include "orblab/ground_state.hpp"
#include "orblab/nehari.hpp"
#include "orblab/presets.hpp"
#include "orblab/svg.hpp"

namespace orblab {

struct ExperimentConfig {
    OrbifoldConfig orbifold;
    ProblemConfig problem;          // eps field is ignored; the sweep drives it
    std::vector<double> eps_list;   // empty -> dimension default
    int random_seeds = 3;
    unsigned rng_seed = 12345;
    int threads = 0;                // 0 = hardware concurrency
    bool deterministic = false;     // force sequential descents
    double r_max = 25.0;
    double gs_tol = 1e-10;
    std::string out_dir = "out";

    std::vector<double> effective_eps(int dim) const {
        if (!eps_list.empty()) return eps_list;
        return dim == 2 ? std::vector<double>{0.2, 0.1, 0.05} : std::vector<double>{0.15, 0.1};
    }
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.orbifold = orbifold_config_from_json(j);
    if (j.contains("eps")) {
        const auto& e = j.at("eps");
        cfg.eps_list = e.is_array() ? e.get<std::vector<double>>() : std::vector<double>{e.get<double>()};
    }
    if (j.contains("p")) cfg.problem.p = j.at("p").get<double>();
    if (j.contains("eta")) cfg.problem.eta = j.at("eta").get<double>();
    if (j.contains("cluster_tol")) cfg.problem.cluster_tol = j.at("cluster_tol").get<double>();
    if (j.contains("residual_tol")) cfg.problem.descent.residual_tol = j.at("residual_tol").get<double>();
    if (j.contains("max_iters")) cfg.problem.descent.max_iters = j.at("max_iters").get<int>();
    if (j.contains("seeds")) cfg.random_seeds = j.at("seeds").get<int>();
    if (j.contains("rng_seed")) cfg.rng_seed = j.at("rng_seed").get<unsigned>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("deterministic")) cfg.deterministic = j.at("deterministic").get<bool>();
    if (j.contains("r_max")) cfg.r_max = j.at("r_max").get<double>();
    if (j.contains("gs_tol")) cfg.gs_tol = j.at("gs_tol").get<double>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    return cfg;
}

template <int N>
struct SweepVerdict {
    int nonconstant_distinct = 0;
    int bound = 0; // cat(Z) + 1
    bool satisfied = false;
    std::vector<int> counted_clusters;
    std::string note;
};

template <int N>
struct EpsReport {
    double eps = 0.0;
    double m_J = kInf;            // min energy over converged solutions
    double target = 0.0;          // m(E)/zeta
    double delta = 0.0;           // sublevel margin
    double distortion = 0.0;      // V_eps(rho/2)/V(0), cutoff diagnostics
    std::vector<NehariSolution<N>> solutions; // canonical seed-label order
    std::vector<std::string> errors;          // per-solution failure notes
    std::vector<double> conc_cc;              // CC((u^+)^p) per solution, -1 if n/a
    ClusterResult clusters;
    RoundtripReport<N> roundtrip;
    SweepVerdict<N> verdict;
};

template <int N>
struct ExperimentReport {
    std::string preset;
    int dimension = N;
    double p = 0.0;
    double eta = 0.0;
    double cluster_tol = 0.0;
    int zeta = 1;
    int cat_z = 1;
    std::size_t z_points = 0;
    std::size_t z_component_count = 0;
    double rho = 0.0;
    double m_e = 0.0;
    bool desk_scale_variant = false; // n = 2 runs outside the paper's n >= 3 range
    std::vector<int> grid_resolution;
    std::vector<EpsReport<N>> sweeps;
};

namespace detail {

template <int N>
OrbifoldFunction<N> smoothed_random_seed(const GoodOrbifold<N>& orb, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.3, 1.0);
    std::vector<double> raw(orb.n_nodes());
    for (auto& v : raw) v = dist(rng);
    OrbifoldFunction<N> u = symmetrize(orb, raw);
    const DiscreteOperators<N> ops(orb);
    double lap_max = 0.0;
    for (int a = 0; a < N; ++a)
        lap_max += 4.0 * orb.gram_inv()[a][a] * sq(static_cast<double>(orb.torus().res[a]));
    for (int it = 0; it < 10; ++it) {
        const auto lap = ops.laplacian(u);
        for (std::size_t i = 0; i < u.size(); ++i) u.values[i] += lap.values[i] / lap_max;
    }
    return u;
}

template <int N>
Vec<N> frac_offset(const GoodOrbifold<N>& orb, const std::type_identity_t<Vec<N>>& base, double f0,
                   double rest) {
    Vec<N> s{};
    s[0] = f0;
    for (int a = 1; a < N; ++a) s[a] = rest;
    return base + mat_vec(orb.torus().basis, s);
}

} // namespace detail

/// Deterministic seed list for one (orbifold, eps) run: an injection per Z
/// component, two-bump combinations probing higher critical levels, the
/// constant, and smoothed random fields.
template <int N>
inline std::vector<std::pair<std::string, OrbifoldFunction<N>>> build_seeds(
    const GoodOrbifold<N>& orb, const GroundStateProfile& profile, const ProblemConfig& cfg,
    int random_seeds, unsigned rng_seed) {
    std::vector<std::pair<std::string, OrbifoldFunction<N>>> seeds;
    const auto z = max_stratum(orb);
    const std::size_t nc = z.representatives.size();

    std::vector<OrbifoldFunction<N>> bumps;
    for (std::size_t c = 0; c < nc; ++c) {
        bumps.push_back(make_bump(z.representatives[c], profile, cfg, orb));
        seeds.emplace_back("inject:" + std::to_string(c), bumps.back());
    }
    int pairs = 0;
    for (std::size_t i = 0; i < nc && pairs < 6; ++i)
        for (std::size_t j = i + 1; j < nc && pairs < 6; ++j) {
            seeds.emplace_back("pair:" + std::to_string(i) + "-" + std::to_string(j), bumps[i] + bumps[j]);
            ++pairs;
        }
    if (nc == 1) {
        // single-component Z (manifold-like): probe translated and two-bump states
        const Vec<N> rep = z.representatives[0].representative;
        const auto quarter = orb.canonicalize(detail::frac_offset(orb, rep, 0.25, 0.25));
        seeds.emplace_back("offset:quarter", make_bump(quarter, profile, cfg, orb));
        const auto anti = orb.canonicalize(detail::frac_offset(orb, rep, 0.5, 0.5));
        seeds.emplace_back("pair:antipodal", bumps[0] + make_bump(anti, profile, cfg, orb));
        const auto halfx = orb.canonicalize(detail::frac_offset(orb, rep, 0.5, 0.0));
        seeds.emplace_back("pair:halfx", bumps[0] + make_bump(halfx, profile, cfg, orb));
    }
    seeds.emplace_back("constant", OrbifoldFunction<N>(orb, 1.0));
    for (int k = 0; k < random_seeds; ++k)
        seeds.emplace_back("random:" + std::to_string(k),
                           detail::smoothed_random_seed(orb, rng_seed + static_cast<unsigned>(k)));

    std::sort(seeds.begin(), seeds.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return seeds;
}

/// One eps of the sweep: seed, descend (parallel pool), cluster, concentrate,
/// round-trip, verdict.
template <int N>
inline EpsReport<N> run_sweep_point(const GoodOrbifold<N>& orb, const GroundStateProfile& profile,
                                    ProblemConfig cfg, double eps, const ExperimentConfig& xcfg) {
    cfg.eps = eps;
    cfg.validate(N);
    EpsReport<N> rep;
    rep.eps = eps;
    rep.target = profile.m_e / orb.zeta();
    rep.delta = cfg.delta_factor * rep.target;
    rep.distortion = bump_distortion(profile, eps, orb.rho());

    auto seeds = build_seeds(orb, profile, cfg, xcfg.random_seeds, xcfg.rng_seed);
    rep.solutions.assign(seeds.size(), {});
    rep.errors.assign(seeds.size(), "");

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= seeds.size()) break;
            try {
                rep.solutions[i] = descend(seeds[i].second, cfg);
            } catch (const Error& e) {
                rep.errors[i] = e.what();
            }
            rep.solutions[i].seed_label = seeds[i].first;
        }
    };
    unsigned pool = xcfg.deterministic ? 1u
                                       : (xcfg.threads > 0 ? static_cast<unsigned>(xcfg.threads)
                                                           : std::max(1u, std::thread::hardware_concurrency()));
    pool = std::min<unsigned>(pool, static_cast<unsigned>(seeds.size()));
    if (pool <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (unsigned t = 0; t < pool; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    // concentration analysis on converged solutions
    rep.conc_cc.assign(rep.solutions.size(), -1.0);
    for (std::size_t i = 0; i < rep.solutions.size(); ++i) {
        auto& sol = rep.solutions[i];
        if (!sol.converged) continue;
        rep.m_J = std::min(rep.m_J, sol.energy);
        try {
            OrbifoldFunction<N> up(orb);
            for (std::size_t k = 0; k < sol.u.size(); ++k)
                up.values[k] = sol.u.values[k] > 0.0 ? std::pow(sol.u.values[k], cfg.p) : 0.0;
            const auto cc = concentration_coefficient(up);
            rep.conc_cc[i] = cc.cc;
            if (cc.cc > cfg.eta) sol.concentration_point = center_of_mass(truncate(up, cfg.eta), 2.0 * orb.rho());
        } catch (const Error& e) {
            if (rep.errors[i].empty()) rep.errors[i] = e.what();
        }
    }

    // cluster converged solutions only
    std::vector<NehariSolution<N>> converged;
    std::vector<std::size_t> conv_idx;
    for (std::size_t i = 0; i < rep.solutions.size(); ++i)
        if (rep.solutions[i].converged) {
            converged.push_back(rep.solutions[i]);
            conv_idx.push_back(i);
        }
    rep.clusters = cluster(converged, cfg);
    for (std::size_t k = 0; k < conv_idx.size(); ++k)
        rep.solutions[conv_idx[k]].cluster_id = rep.clusters.cluster_of[k];

    // round trip reuses the cone-seeded converged solutions where available
    const auto z = max_stratum(orb);
    std::vector<NehariSolution<N>> cone_sols(z.representatives.size());
    bool have_all = true;
    for (std::size_t c = 0; c < z.representatives.size(); ++c) {
        const std::string want = "inject:" + std::to_string(c);
        bool found = false;
        for (const auto& sol : rep.solutions)
            if (sol.seed_label == want && sol.converged) {
                cone_sols[c] = sol;
                found = true;
                break;
            }
        have_all = have_all && found;
    }
    rep.roundtrip = photography_roundtrip(orb, cfg, profile, have_all ? &cone_sols : nullptr);

    // verdict
    rep.verdict.bound = orb.cat_z() + 1;
    for (int cid = 0; cid < rep.clusters.n_clusters; ++cid)
        if (!rep.clusters.cluster_constant[static_cast<std::size_t>(cid)])
            rep.verdict.counted_clusters.push_back(cid);
    rep.verdict.nonconstant_distinct = rep.clusters.nonconstant_count;
    rep.verdict.satisfied = rep.verdict.nonconstant_distinct >= rep.verdict.bound;
    if (rep.roundtrip.escaped_tube)
        rep.verdict.note = "concentration left the 3*rho tube at this eps";
    else if (!rep.roundtrip.all_concentrated)
        rep.verdict.note = "bound not expected at large eps (solutions not concentrated)";
    return rep;
}

template <int N>
inline ExperimentReport<N> run_experiment(const ExperimentConfig& xcfg) {
    ExperimentReport<N> report;
    GoodOrbifold<N> orb = [&]() {
        try {
            return build_orbifold<N>(xcfg.orbifold);
        } catch (const Error& e) {
            throw PipelineError("orbifold", e.what());
        }
    }();

    GroundStateProfile profile;
    try {
        profile = solve_ground_state_cached(N, xcfg.problem.p, xcfg.r_max, xcfg.gs_tol,
                                            std::filesystem::path(xcfg.out_dir) / "gs_cache");
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError("ground-state", e.what());
    }

    report.preset = xcfg.orbifold.name;
    report.p = xcfg.problem.p;
    report.eta = xcfg.problem.eta;
    report.cluster_tol = xcfg.problem.cluster_tol;
    report.zeta = orb.zeta();
    report.cat_z = orb.cat_z();
    report.z_points = orb.z_nodes().size();
    report.z_component_count = orb.z_components().size();
    report.rho = orb.rho();
    report.m_e = profile.m_e;
    report.desk_scale_variant = N == 2;
    for (int a = 0; a < N; ++a) report.grid_resolution.push_back(orb.torus().res[static_cast<std::size_t>(a)]);

    for (double eps : xcfg.effective_eps(N)) {
        try {
            report.sweeps.push_back(run_sweep_point(orb, profile, xcfg.problem, eps, xcfg));
        } catch (const PipelineError&) {
            throw;
        } catch (const Error& e) {
            throw PipelineError("sweep eps=" + std::to_string(eps), e.what());
        }
    }
    return report;
}

// ---- report rendering -------------------------------------------------------------

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string sanitize(std::string s) {
    for (auto& c : s)
        if (c == ':' || c == '/' || c == ' ') c = '-';
    return s;
}

template <int N>
nlohmann::json point_json(const OrbifoldPoint<N>& x) {
    nlohmann::json j = nlohmann::json::array();
    for (int a = 0; a < N; ++a) j.push_back(x.representative[static_cast<std::size_t>(a)]);
    return j;
}

} // namespace detail

template <int N>
inline nlohmann::json report_to_json(const ExperimentReport<N>& rep) {
    nlohmann::json j;
    j["preset"] = rep.preset;
    j["dimension"] = rep.dimension;
    j["p"] = rep.p;
    j["eta"] = rep.eta;
    j["cluster_tol"] = rep.cluster_tol;
    j["zeta"] = rep.zeta;
    j["cat_Z"] = rep.cat_z;
    j["z_points"] = rep.z_points;
    j["z_components"] = rep.z_component_count;
    j["rho"] = rep.rho;
    j["m_E"] = rep.m_e;
    j["m_E_over_zeta"] = rep.m_e / rep.zeta;
    j["desk_scale_variant"] = rep.desk_scale_variant;
    j["grid_resolution"] = rep.grid_resolution;
    j["sweeps"] = nlohmann::json::array();
    for (const auto& sw : rep.sweeps) {
        nlohmann::json s;
        s["eps"] = sw.eps;
        s["m_J"] = std::isfinite(sw.m_J) ? nlohmann::json(sw.m_J) : nlohmann::json(nullptr);
        s["target_mE_over_zeta"] = sw.target;
        s["delta"] = sw.delta;
        s["bump_distortion"] = sw.distortion;
        s["solutions"] = nlohmann::json::array();
        for (std::size_t i = 0; i < sw.solutions.size(); ++i) {
            const auto& sol = sw.solutions[i];
            nlohmann::json q;
            q["seed"] = sol.seed_label;
            q["energy"] = sol.energy;
            q["residual"] = sol.residual;
            q["converged"] = sol.converged;
            q["iterations"] = sol.iterations;
            q["cluster"] = sol.cluster_id;
            q["constant"] = sol.cluster_id >= 0 &&
                            sw.clusters.cluster_constant[static_cast<std::size_t>(sol.cluster_id)] != 0;
            q["in_lambda_mJ_delta"] = sol.converged && sol.energy < sw.m_J + sw.delta;
            q["in_lambda_mE_delta"] = sol.converged && sol.energy < sw.target + sw.delta;
            q["concentration_cc"] = sw.conc_cc[i];
            if (sol.concentration_point)
                q["concentration_point"] = detail::point_json<N>(*sol.concentration_point);
            if (!sw.errors[i].empty()) q["error"] = sw.errors[i];
            q["field_csv"] = "fields/eps" + detail::sanitize(detail::short_num(sw.eps)) + "/" +
                             detail::sanitize(sol.seed_label) + ".csv";
            s["solutions"].push_back(q);
        }
        s["clusters"] = {{"count", sw.clusters.n_clusters},
                         {"nonconstant", sw.clusters.nonconstant_count}};
        nlohmann::json rt;
        rt["escaped_tube"] = sw.roundtrip.escaped_tube;
        rt["all_concentrated"] = sw.roundtrip.all_concentrated;
        rt["max_roundtrip_distance"] = sw.roundtrip.max_roundtrip_distance;
        rt["entries"] = nlohmann::json::array();
        for (const auto& e : sw.roundtrip.entries) {
            nlohmann::json q;
            q["start"] = detail::point_json<N>(e.start);
            q["status"] = e.status;
            if (e.status == "ok" || e.status == "escaped-tube") {
                q["center"] = detail::point_json<N>(e.center);
                q["endpoint"] = detail::point_json<N>(e.endpoint);
                q["dist_center_to_Z"] = e.dist_center_to_z;
                q["roundtrip_distance"] = e.roundtrip_distance;
            }
            rt["entries"].push_back(q);
        }
        s["roundtrip"] = rt;
        s["verdict"] = {{"nonconstant_distinct", sw.verdict.nonconstant_distinct},
                        {"bound_cat_plus_1", sw.verdict.bound},
                        {"satisfied", sw.verdict.satisfied},
                        {"counted_clusters", sw.verdict.counted_clusters},
                        {"note", sw.verdict.note}};
        j["sweeps"].push_back(s);
    }
    return j;
}

/// Write the full artifact set: manifest, CSV tables, field dumps, SVG plots.
template <int N>
inline void report_render(const ExperimentReport<N>& rep, const GoodOrbifold<N>& orb,
                          const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream out(out_dir / "manifest.json");
        if (!out) throw Error("cannot write " + (out_dir / "manifest.json").string());
        out << report_to_json(rep).dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "energies.csv");
        out << "eps,seed,energy,residual,converged,iterations,cluster,constant\n";
        for (const auto& sw : rep.sweeps)
            for (const auto& sol : sw.solutions) {
                const bool cst = sol.cluster_id >= 0 &&
                                 sw.clusters.cluster_constant[static_cast<std::size_t>(sol.cluster_id)];
                out << detail::num(sw.eps) << "," << sol.seed_label << "," << detail::num(sol.energy) << ","
                    << detail::num(sol.residual) << "," << (sol.converged ? 1 : 0) << "," << sol.iterations
                    << "," << sol.cluster_id << "," << (cst ? 1 : 0) << "\n";
            }
    }
    {
        std::ofstream out(out_dir / "mj_vs_limit.csv");
        out << "eps,m_J,mE_over_zeta,ratio\n";
        for (const auto& sw : rep.sweeps) {
            if (!std::isfinite(sw.m_J)) continue; // nothing converged at this eps
            out << detail::num(sw.eps) << "," << detail::num(sw.m_J) << "," << detail::num(sw.target) << ","
                << detail::num(sw.m_J / sw.target) << "\n";
        }
    }

    // field dumps
    for (const auto& sw : rep.sweeps) {
        const fs::path dir = out_dir / ("fields/eps" + detail::sanitize(detail::short_num(sw.eps)));
        fs::create_directories(dir);
        for (const auto& sol : sw.solutions) {
            std::ofstream out(dir / (detail::sanitize(sol.seed_label) + ".csv"));
            for (int a = 0; a < N; ++a) out << "x" << a << ",";
            out << "value\n";
            if (sol.u.size() == orb.n_nodes()) {
                for (std::size_t node = 0; node < orb.n_nodes(); ++node) {
                    const auto x = orb.torus().node_coords(node);
                    for (int a = 0; a < N; ++a) out << detail::num(x[static_cast<std::size_t>(a)]) << ",";
                    out << detail::num(sol.u.values[node]) << "\n";
                }
            }
        }
    }

    // sweep plot: m(J_eps) against the limit m(E)/zeta
    {
        std::vector<double> xs;
        std::vector<double> mj;
        for (const auto& sw : rep.sweeps) {
            if (!std::isfinite(sw.m_J)) continue;
            xs.push_back(sw.eps);
            mj.push_back(sw.m_J);
        }
        std::ofstream out(out_dir / "energy_sweep.svg");
        out << svg_line_plot(xs, {{"m(J_eps)", mj}}, rep.m_e / rep.zeta, "m(E)/zeta",
                             rep.preset + ": ground level vs eps");
    }

    // heatmap slices (z = 0 plane in 3D) of the most concentrated converged solution per eps
    for (const auto& sw : rep.sweeps) {
        int best = -1;
        double best_cc = -1.0;
        for (std::size_t i = 0; i < sw.solutions.size(); ++i)
            if (sw.solutions[i].converged && sw.conc_cc[i] > best_cc) {
                best_cc = sw.conc_cc[i];
                best = static_cast<int>(i);
            }
        if (best < 0) continue;
        const auto& sol = sw.solutions[static_cast<std::size_t>(best)];
        const int r0 = orb.torus().res[0];
        const int r1 = N >= 2 ? orb.torus().res[1] : 1;
        std::vector<double> slice(static_cast<std::size_t>(r0) * r1);
        for (int jj = 0; jj < r1; ++jj)
            for (int ii = 0; ii < r0; ++ii) {
                std::array<int, N> m{};
                m[0] = ii;
                if (N >= 2) m[1] = jj;
                slice[static_cast<std::size_t>(jj) * r0 + ii] = sol.u.values[orb.torus().node_index(m)];
            }
        std::ofstream out(out_dir /
                          ("field_eps" + detail::sanitize(detail::short_num(sw.eps)) + "_" +
                           detail::sanitize(sol.seed_label) + ".svg"));
        out << svg_heatmap(slice, r0, r1,
                           rep.preset + " eps=" + detail::short_num(sw.eps) + " " + sol.seed_label);
    }
}

/// Exit code policy: 2 when the smallest swept eps escapes the concentration
/// tube (a falsified invariant), 0 otherwise.
template <int N>
inline int experiment_exit_code(const ExperimentReport<N>& rep) {
    if (rep.sweeps.empty()) return 0;
    std::size_t smallest = 0;
    for (std::size_t i = 1; i < rep.sweeps.size(); ++i)
        if (rep.sweeps[i].eps < rep.sweeps[smallest].eps) smallest = i;
    return rep.sweeps[smallest].roundtrip.escaped_tube ? 2 : 0;
}

} // namespace orblab
