// orblab: numerical laboratory for the singularly perturbed problem
// -eps^2 lap(u) + u = u^{p-1} on compact flat good orbifolds.
//
// Subcommands:
//   ground-state  solve/cache/export the radial limiting profile
//   solve         one (preset, eps) run with the full analysis pipeline
//   sweep         eps sweep with per-eps multiplicity verdicts
//   report        re-render CSV/SVG artifacts from an existing manifest
//
// Exit codes: 0 success, 1 error, 2 falsified concentration invariant
// (round trip escaped the 3*rho tube at the smallest swept eps).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "orblab/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log_line(const fs::path& out_dir, const std::string& msg) {
    fs::create_directories(out_dir);
    std::ofstream log(out_dir / "run.log", std::ios::app);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%F %T", std::gmtime(&now));
    log << stamp << " " << msg << "\n";
}

struct CommonOpts {
    std::string config_path;
    std::string preset = "pillowcase2d";
    std::vector<double> eps;
    double p = 4.0;
    std::vector<int> grid;
    int seeds = 3;
    double eta = 0.6;
    double rho_scale = 1.0;
    std::string out = "out";
    int threads = 0;
    bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file mirroring the flags");
    cmd->add_option("--preset", o.preset, "orbifold preset name");
    cmd->add_option("--eps", o.eps, "eps values to sweep");
    cmd->add_option("--p", o.p, "nonlinearity exponent");
    cmd->add_option("--grid", o.grid, "grid resolution (one value or per axis)");
    cmd->add_option("--seeds", o.seeds, "number of random seeds per run");
    cmd->add_option("--eta", o.eta, "concentration threshold in (1/2,1)");
    cmd->add_option("--rho-scale", o.rho_scale, "scale factor on the convenient radius");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--threads", o.threads, "descent worker threads (0 = hardware)");
    cmd->add_flag("--deterministic", o.deterministic, "run descents sequentially");
}

// config file first, explicitly passed flags override
orblab::ExperimentConfig to_experiment_config(const CommonOpts& o, const CLI::App* cmd) {
    orblab::ExperimentConfig cfg;
    const auto given = [&](const char* flag) { return cmd->count(flag) > 0; };
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw orblab::Error("cannot open config: " + o.config_path);
        json j;
        in >> j;
        cfg = orblab::experiment_config_from_json(j);
        if (given("--preset")) cfg.orbifold = orblab::builtin_preset(o.preset);
    } else {
        cfg.orbifold = orblab::builtin_preset(o.preset);
    }
    if (given("--eps")) cfg.eps_list = o.eps;
    if (given("--p")) cfg.problem.p = o.p;
    if (given("--eta")) cfg.problem.eta = o.eta;
    if (given("--grid")) cfg.orbifold.grid_resolution = o.grid;
    if (given("--rho-scale")) cfg.orbifold.rho_scale = o.rho_scale;
    if (given("--seeds")) cfg.random_seeds = o.seeds;
    if (given("--threads")) cfg.threads = o.threads;
    if (given("--deterministic")) cfg.deterministic = o.deterministic;
    if (given("--out") || o.config_path.empty()) cfg.out_dir = o.out;
    return cfg;
}

template <int N>
int run_and_render(const orblab::ExperimentConfig& cfg) {
    log_line(cfg.out_dir, "pipeline start: preset=" + cfg.orbifold.name);
    const auto orb = orblab::build_orbifold<N>(cfg.orbifold);
    const auto report = orblab::run_experiment<N>(cfg);
    orblab::report_render(report, orb, cfg.out_dir);
    log_line(cfg.out_dir, "pipeline done");

    for (const auto& sw : report.sweeps) {
        std::cout << "eps=" << sw.eps << ": m_J=" << sw.m_J << " target=" << sw.target
                  << " nonconstant_distinct=" << sw.verdict.nonconstant_distinct
                  << " bound=" << sw.verdict.bound << " verdict="
                  << (sw.verdict.satisfied ? "PASS" : "MISS");
        if (!sw.verdict.note.empty()) std::cout << " (" << sw.verdict.note << ")";
        std::cout << " clusters=[";
        for (std::size_t i = 0; i < sw.verdict.counted_clusters.size(); ++i)
            std::cout << (i ? "," : "") << sw.verdict.counted_clusters[i];
        std::cout << "]\n";
    }
    const int code = orblab::experiment_exit_code(report);
    if (code == 2) std::cerr << "round trip escaped the 3*rho tube at the smallest eps\n";
    return code;
}

int dispatch_config(const orblab::ExperimentConfig& cfg) {
    if (cfg.orbifold.dimension == 2) return run_and_render<2>(cfg);
    if (cfg.orbifold.dimension == 3) return run_and_render<3>(cfg);
    throw orblab::Error("supported dimensions are 2 and 3");
}

// re-render CSV tables and SVG plots from a saved manifest + field dumps
int rerender(const std::string& manifest_path, const std::string& out) {
    std::ifstream in(manifest_path);
    if (!in) throw orblab::Error("cannot open manifest: " + manifest_path);
    json j;
    in >> j;
    const fs::path src_dir = fs::path(manifest_path).parent_path();
    const fs::path dst = out;
    fs::create_directories(dst);

    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    auto short_num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };

    {
        std::ofstream csv(dst / "energies.csv");
        csv << "eps,seed,energy,residual,converged,iterations,cluster,constant\n";
        for (const auto& sw : j.at("sweeps"))
            for (const auto& sol : sw.at("solutions"))
                csv << num(sw.at("eps").get<double>()) << "," << sol.at("seed").get<std::string>() << ","
                    << num(sol.at("energy").get<double>()) << "," << num(sol.at("residual").get<double>())
                    << "," << (sol.at("converged").get<bool>() ? 1 : 0) << ","
                    << sol.at("iterations").get<int>() << "," << sol.at("cluster").get<int>() << ","
                    << (sol.at("constant").get<bool>() ? 1 : 0) << "\n";
    }
    std::vector<double> xs, mj;
    {
        std::ofstream csv(dst / "mj_vs_limit.csv");
        csv << "eps,m_J,mE_over_zeta,ratio\n";
        for (const auto& sw : j.at("sweeps")) {
            if (!sw.at("m_J").is_number()) continue; // nothing converged at this eps
            const double eps = sw.at("eps").get<double>();
            const double m = sw.at("m_J").get<double>();
            const double t = sw.at("target_mE_over_zeta").get<double>();
            csv << num(eps) << "," << num(m) << "," << num(t) << "," << num(m / t) << "\n";
            xs.push_back(eps);
            mj.push_back(m);
        }
    }
    {
        std::ofstream svg(dst / "energy_sweep.svg");
        svg << orblab::svg_line_plot(xs, {{"m(J_eps)", mj}}, j.at("m_E_over_zeta").get<double>(),
                                     "m(E)/zeta", j.at("preset").get<std::string>() + ": ground level vs eps");
    }

    // heatmaps from the stored field dumps (2D slice through the first two axes)
    const auto res = j.at("grid_resolution").get<std::vector<int>>();
    const int r0 = res[0];
    const int r1 = res.size() > 1 ? res[1] : 1;
    for (const auto& sw : j.at("sweeps")) {
        double best_cc = -1.0;
        std::string best_csv, best_seed;
        for (const auto& sol : sw.at("solutions")) {
            const double cc = sol.at("concentration_cc").get<double>();
            if (sol.at("converged").get<bool>() && cc > best_cc) {
                best_cc = cc;
                best_csv = sol.at("field_csv").get<std::string>();
                best_seed = sol.at("seed").get<std::string>();
            }
        }
        if (best_csv.empty()) continue;
        std::ifstream field(src_dir / best_csv);
        if (!field) continue;
        std::string line;
        std::getline(field, line); // header
        std::vector<double> values;
        while (std::getline(field, line)) {
            const auto comma = line.find_last_of(',');
            values.push_back(std::stod(line.substr(comma + 1)));
        }
        std::vector<double> slice(static_cast<std::size_t>(r0) * r1, 0.0);
        for (std::size_t i = 0; i < slice.size() && i < values.size(); ++i) slice[i] = values[i];
        const double eps = sw.at("eps").get<double>();
        std::string name = "field_eps" + short_num(eps) + "_" + best_seed;
        for (auto& c : name)
            if (c == ':' || c == '/' || c == ' ') c = '-';
        std::ofstream svg(dst / (name + ".svg"));
        svg << orblab::svg_heatmap(slice, r0, r1,
                                   j.at("preset").get<std::string>() + " eps=" + num(eps) + " " + best_seed);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"orblab: Nehari-manifold laboratory on flat good orbifolds"};
    app.require_subcommand(1);

    auto* gs = app.add_subcommand("ground-state", "solve and export the radial limiting profile");
    int gs_n = 2;
    double gs_p = 4.0, gs_rmax = 25.0, gs_tol = 1e-10;
    std::string gs_out = "out";
    gs->add_option("--n", gs_n, "space dimension");
    gs->add_option("--p", gs_p, "nonlinearity exponent");
    gs->add_option("--r-max", gs_rmax, "radial truncation");
    gs->add_option("--tol", gs_tol, "bisection tolerance on the initial height");
    gs->add_option("--out", gs_out, "output directory");

    CommonOpts solve_opts, sweep_opts;
    auto* solve = app.add_subcommand("solve", "single-eps run with the full pipeline");
    add_common(solve, solve_opts);
    auto* sweep = app.add_subcommand("sweep", "eps sweep with multiplicity verdicts");
    add_common(sweep, sweep_opts);

    auto* report = app.add_subcommand("report", "re-render artifacts from a manifest");
    std::string manifest = "out/manifest.json", report_out = "out";
    report->add_option("--manifest", manifest, "manifest.json produced by solve/sweep");
    report->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gs->parsed()) {
            const auto prof = orblab::solve_ground_state_cached(gs_n, gs_p, gs_rmax, gs_tol,
                                                                fs::path(gs_out) / "gs_cache");
            char name[64];
            std::snprintf(name, sizeof(name), "ground_state_n%d_p%g.csv", gs_n, gs_p);
            orblab::export_profile_csv(prof, fs::path(gs_out) / name);
            std::cout << "V(0)=" << prof.initial_height() << " m(E)=" << prof.m_e
                      << " |V|_2^2=" << prof.norms.l2_sq << " -> " << (fs::path(gs_out) / name).string()
                      << "\n";
            return 0;
        }
        if (solve->parsed()) {
            auto cfg = to_experiment_config(solve_opts, solve);
            if (cfg.eps_list.empty()) cfg.eps_list = {0.05};
            if (cfg.eps_list.size() != 1)
                throw orblab::Error("solve takes exactly one eps; use sweep for several");
            return dispatch_config(cfg);
        }
        if (sweep->parsed()) return dispatch_config(to_experiment_config(sweep_opts, sweep));
        if (report->parsed()) return rerender(manifest, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
