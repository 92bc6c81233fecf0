#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orblab/geometry.hpp"

namespace orblab {

/// Declarative description of an orbifold, loadable from JSON.
struct OrbifoldConfig {
    std::string name = "custom";
    int dimension = 2;
    std::vector<double> lattice_basis; // row-major n x n
    struct Element {
        std::vector<double> matrix; // row-major n x n
        std::vector<double> translation;
    };
    std::vector<Element> group;
    std::vector<int> grid_resolution; // one entry (uniform) or n entries
    int cat_z = 1;
    double rho_scale = 1.0;
};

inline OrbifoldConfig builtin_preset(const std::string& name) {
    OrbifoldConfig c;
    c.name = name;
    auto identity_rows = [](int n) {
        std::vector<double> b(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i) * n + i] = 1.0;
        return b;
    };
    auto neg_identity_rows = [](int n) {
        std::vector<double> b(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i) * n + i] = -1.0;
        return b;
    };
    if (name == "torus2d") {
        c.dimension = 2;
        c.lattice_basis = identity_rows(2);
        c.group = {{identity_rows(2), {0, 0}}};
        c.grid_resolution = {64};
        c.cat_z = 3; // cat of the 2-torus
    } else if (name == "pillowcase2d") {
        c.dimension = 2;
        c.lattice_basis = identity_rows(2);
        c.group = {{identity_rows(2), {0, 0}}, {neg_identity_rows(2), {0, 0}}};
        c.grid_resolution = {64};
        c.cat_z = 4; // four isolated cone points
    } else if (name == "torus3d") {
        c.dimension = 3;
        c.lattice_basis = identity_rows(3);
        c.group = {{identity_rows(3), {0, 0, 0}}};
        c.grid_resolution = {48};
        c.cat_z = 4; // cat of the 3-torus
    } else if (name == "mirrortorus3d") {
        c.dimension = 3;
        c.lattice_basis = identity_rows(3);
        c.group = {{identity_rows(3), {0, 0, 0}}, {neg_identity_rows(3), {0, 0, 0}}};
        c.grid_resolution = {48};
        c.cat_z = 8; // eight isolated cone points
    } else {
        throw Error("unknown preset: " + name);
    }
    return c;
}

inline OrbifoldConfig orbifold_config_from_json(const nlohmann::json& j) {
    OrbifoldConfig c;
    if (j.contains("preset")) c = builtin_preset(j.at("preset").get<std::string>());
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("dimension")) c.dimension = j.at("dimension").get<int>();
    if (j.contains("lattice_basis")) c.lattice_basis = j.at("lattice_basis").get<std::vector<double>>();
    if (j.contains("group")) {
        c.group.clear();
        for (const auto& e : j.at("group")) {
            OrbifoldConfig::Element el;
            el.matrix = e.at("matrix").get<std::vector<double>>();
            el.translation = e.at("translation").get<std::vector<double>>();
            c.group.push_back(std::move(el));
        }
    }
    if (j.contains("grid_resolution")) {
        const auto& g = j.at("grid_resolution");
        c.grid_resolution = g.is_array() ? g.get<std::vector<int>>() : std::vector<int>{g.get<int>()};
    }
    if (j.contains("cat_Z")) c.cat_z = j.at("cat_Z").get<int>();
    if (j.contains("rho_scale")) c.rho_scale = j.at("rho_scale").get<double>();
    return c;
}

inline OrbifoldConfig load_orbifold_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open orbifold config: " + path);
    nlohmann::json j;
    in >> j;
    return orbifold_config_from_json(j);
}

template <int N>
inline GoodOrbifold<N> build_orbifold(const OrbifoldConfig& cfg) {
    if (cfg.dimension != N) throw Error("orbifold config dimension mismatch");
    if (cfg.lattice_basis.size() != static_cast<std::size_t>(N) * N)
        throw Error("lattice basis must have n*n entries");
    Mat<N> basis{};
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) basis[i][j] = cfg.lattice_basis[static_cast<std::size_t>(i) * N + j];

    std::array<int, N> res{};
    if (cfg.grid_resolution.size() == 1)
        res.fill(cfg.grid_resolution[0]);
    else if (cfg.grid_resolution.size() == static_cast<std::size_t>(N))
        for (int a = 0; a < N; ++a) res[a] = cfg.grid_resolution[static_cast<std::size_t>(a)];
    else
        throw Error("grid_resolution must have 1 or n entries");

    const FlatTorus<N> torus = FlatTorus<N>::make(basis, res);
    std::vector<IsometryElement<N>> elems;
    for (const auto& e : cfg.group) {
        if (e.matrix.size() != static_cast<std::size_t>(N) * N || e.translation.size() != static_cast<std::size_t>(N))
            throw Error("group element has wrong shape");
        IsometryElement<N> el;
        for (int i = 0; i < N; ++i) {
            el.shift[i] = e.translation[static_cast<std::size_t>(i)];
            for (int j = 0; j < N; ++j) el.rot[i][j] = e.matrix[static_cast<std::size_t>(i) * N + j];
        }
        elems.push_back(el);
    }
    const IsometryAction<N> action = IsometryAction<N>::make(std::move(elems), torus);
    return GoodOrbifold<N>::make(torus, action, cfg.cat_z, cfg.rho_scale);
}

} // namespace orblab
