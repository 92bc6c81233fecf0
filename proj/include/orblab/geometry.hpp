#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <queue>
#include <vector>

#include "orblab/common.hpp"
#include "orblab/linalg.hpp"

namespace orblab {

/// Flat covering torus R^N / Lambda with a regular sampling grid.
/// Columns of `basis` are the lattice generators.
template <int N>
struct FlatTorus {
    Mat<N> basis;
    Mat<N> basis_inv;
    std::array<int, N> res;
    double volume = 0.0;

    static FlatTorus make(const Mat<N>& basis, const std::array<int, N>& res) {
        FlatTorus t;
        t.basis = basis;
        t.basis_inv = inverse(basis);
        t.res = res;
        t.volume = std::abs(det(basis));
        if (t.volume < 1e-14) throw Error("lattice basis is singular");
        for (int a = 0; a < N; ++a) {
            if (res[a] < 8 || res[a] % 2 != 0)
                throw Error("grid resolution must be even and >= 8");
        }
        return t;
    }

    std::size_t n_nodes() const {
        std::size_t n = 1;
        for (int a = 0; a < N; ++a) n *= static_cast<std::size_t>(res[a]);
        return n;
    }

    /// Cell volume of one grid cell (measure weight before the 1/|G| factor).
    double cell_volume() const {
        double v = volume;
        for (int a = 0; a < N; ++a) v /= res[a];
        return v;
    }

    std::array<int, N> multi_index(std::size_t node) const {
        std::array<int, N> m{};
        for (int a = 0; a < N; ++a) {
            m[a] = static_cast<int>(node % res[a]);
            node /= res[a];
        }
        return m;
    }

    std::size_t node_index(const std::array<int, N>& m) const {
        std::size_t idx = 0;
        for (int a = N - 1; a >= 0; --a) {
            int w = ((m[a] % res[a]) + res[a]) % res[a];
            idx = idx * res[a] + static_cast<std::size_t>(w);
        }
        return idx;
    }

    Vec<N> node_frac(std::size_t node) const {
        auto m = multi_index(node);
        Vec<N> s{};
        for (int a = 0; a < N; ++a) s[a] = static_cast<double>(m[a]) / res[a];
        return s;
    }

    Vec<N> node_coords(std::size_t node) const { return mat_vec(basis, node_frac(node)); }

    /// Reduce a covering point to the fundamental cell [0,1)^N in fractional coordinates.
    Vec<N> reduce(const Vec<N>& p) const {
        Vec<N> s = mat_vec(basis_inv, p);
        for (int a = 0; a < N; ++a) {
            s[a] -= std::floor(s[a]);
            if (s[a] >= 1.0) s[a] = 0.0; // floor artifact at the wrap
        }
        return mat_vec(basis, s);
    }

    /// Torus distance (no group quotient), searching the 3^N neighbor cells.
    double torus_distance(const Vec<N>& a, const Vec<N>& b) const {
        const Vec<N> d = a - b;
        double best = kInf;
        std::array<int, N> k{};
        k.fill(-1);
        while (true) {
            Vec<N> shift{};
            for (int i = 0; i < N; ++i) shift[i] = static_cast<double>(k[i]);
            const Vec<N> sh = mat_vec(basis, shift);
            best = std::min(best, dot(d - sh, d - sh));
            int a2 = 0;
            while (a2 < N && ++k[a2] > 1) {
                k[a2] = -1;
                ++a2;
            }
            if (a2 == N) break;
        }
        return std::sqrt(best);
    }

    /// Shortest nonzero lattice vector (search window +-2 per axis).
    double systole() const {
        double best = kInf;
        std::array<int, N> k{};
        k.fill(-2);
        while (true) {
            bool zero = true;
            for (int a = 0; a < N; ++a) zero = zero && k[a] == 0;
            if (!zero) {
                Vec<N> shift{};
                for (int a = 0; a < N; ++a) shift[a] = static_cast<double>(k[a]);
                best = std::min(best, norm(mat_vec(basis, shift)));
            }
            int a2 = 0;
            while (a2 < N && ++k[a2] > 2) {
                k[a2] = -2;
                ++a2;
            }
            if (a2 == N) break;
        }
        return best;
    }
};

template <int N>
struct IsometryElement {
    Mat<N> rot;   // orthogonal, maps the lattice to itself
    Vec<N> shift; // translation part, taken mod Lambda

    Vec<N> apply(const Vec<N>& p) const { return mat_vec(rot, p) + shift; }
};

/// Finite group of torus isometries x -> Ax + t mod Lambda.
template <int N>
class IsometryAction {
  public:
    static IsometryAction make(std::vector<IsometryElement<N>> elems, const FlatTorus<N>& torus) {
        IsometryAction g;
        g.elems_ = std::move(elems);
        const std::size_t n = g.elems_.size();
        if (n == 0 || n > 64) throw Error("group order must be in [1,64]");

        const double tol = 1e-9;
        for (const auto& e : g.elems_) {
            if (!mat_near(mat_mul(transpose(e.rot), e.rot), identity<N>(), 1e-10))
                throw Error("group element is not orthogonal");
            // lattice compatibility: B^-1 A B must be an integer matrix
            const Mat<N> m = mat_mul(torus.basis_inv, mat_mul(e.rot, torus.basis));
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    if (std::abs(m[i][j] - std::round(m[i][j])) > tol)
                        throw Error("group element does not preserve the lattice");
        }

        auto find = [&](const Mat<N>& rot, const Vec<N>& shift) -> int {
            for (std::size_t i = 0; i < n; ++i) {
                if (!mat_near(g.elems_[i].rot, rot, 1e-9)) continue;
                if (torus.torus_distance(torus.reduce(g.elems_[i].shift), torus.reduce(shift)) < tol)
                    return static_cast<int>(i);
            }
            return -1;
        };

        int id_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = g.elems_[i];
            const bool trivial = mat_near(e.rot, identity<N>(), 1e-9) &&
                                 torus.torus_distance(torus.reduce(e.shift), Vec<N>{}) < tol;
            if (trivial) {
                g.identity_index_ = static_cast<int>(i);
                ++id_count;
            }
        }
        if (id_count != 1) throw Error("group must contain the identity exactly once (effective action)");

        g.comp_table_.assign(n, std::vector<int>(n, -1));
        g.inverse_index_.assign(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const Mat<N> rot = mat_mul(g.elems_[i].rot, g.elems_[j].rot);
                const Vec<N> shift = mat_vec(g.elems_[i].rot, g.elems_[j].shift) + g.elems_[i].shift;
                const int k = find(rot, shift);
                if (k < 0) throw Error("group is not closed under composition");
                g.comp_table_[i][j] = k;
                if (k == g.identity_index_) g.inverse_index_[i] = static_cast<int>(j);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (g.inverse_index_[i] < 0) throw Error("group element has no inverse");
        return g;
    }

    std::size_t order() const { return elems_.size(); }
    const std::vector<IsometryElement<N>>& elements() const { return elems_; }
    const IsometryElement<N>& element(int i) const { return elems_[static_cast<std::size_t>(i)]; }
    int identity_index() const { return identity_index_; }
    int compose(int i, int j) const { return comp_table_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    int inverse(int i) const { return inverse_index_[static_cast<std::size_t>(i)]; }
    const std::vector<std::vector<int>>& composition_table() const { return comp_table_; }

  private:
    std::vector<IsometryElement<N>> elems_;
    std::vector<std::vector<int>> comp_table_;
    std::vector<int> inverse_index_;
    int identity_index_ = 0;
};

/// A point of the quotient O = M/G: canonical representative plus its full orbit.
template <int N>
struct OrbifoldPoint {
    Vec<N> representative{}; // lexicographically smallest orbit member, in the fundamental cell
    std::vector<Vec<N>> orbit;
};

struct LocalGroupInfo {
    int order = 1;
    int stratum_id = 0;
    bool is_singular = false;
};

/// Compact good Riemannian orbifold O = (R^N/Lambda)/G with flat metric.
///
/// All grid bookkeeping (node permutations per group element, local groups,
/// strata, the maximal stratum Z and the convenient radius rho) is computed
/// once at construction; every query afterwards is const.
template <int N>
class GoodOrbifold {
  public:
    static GoodOrbifold make(const FlatTorus<N>& torus, const IsometryAction<N>& action,
                             int cat_z, double rho_scale = 1.0, double rho_override = 0.0) {
        GoodOrbifold o;
        o.torus_ = torus;
        o.action_ = action;
        o.cat_z_ = cat_z;
        if (cat_z < 1) throw Error("cat(Z) must be at least 1");
        o.build_node_permutations();
        o.build_strata();
        o.build_neighbor_tables();
        o.rho_ = rho_override > 0.0 ? rho_override : rho_scale * o.convenient_radius_formula();
        if (o.rho_ <= 0.0) throw Error("convenient radius must be positive");
        return o;
    }

    const FlatTorus<N>& torus() const { return torus_; }
    const IsometryAction<N>& action() const { return action_; }
    double rho() const { return rho_; }
    double kappa() const { return 0.0; } // flat covering
    int cat_z() const { return cat_z_; }
    std::size_t n_nodes() const { return torus_.n_nodes(); }
    std::size_t group_order() const { return action_.order(); }

    double cell_volume() const { return torus_.cell_volume(); }
    /// Total measure mu(O) = vol(M)/|G|.
    double measure() const { return torus_.volume / static_cast<double>(action_.order()); }

    const std::vector<int32_t>& node_permutation(int g) const { return node_perm_[static_cast<std::size_t>(g)]; }
    const std::vector<int32_t>& neighbor_plus(int axis) const { return nb_plus_[static_cast<std::size_t>(axis)]; }
    const std::vector<int32_t>& neighbor_minus(int axis) const { return nb_minus_[static_cast<std::size_t>(axis)]; }
    /// Inverse Gram matrix (B^T B)^{-1} of the lattice basis; turns fractional-
    /// coordinate derivatives into the Euclidean metric of the covering space.
    const Mat<N>& gram_inv() const { return gram_inv_; }
    int local_order_of_node(std::size_t node) const { return stab_order_[node]; }
    int stratum_of_node(std::size_t node) const { return stratum_id_[node]; }
    const std::vector<std::size_t>& singular_nodes() const { return singular_nodes_; }
    int zeta() const { return zeta_; }
    const std::vector<std::vector<std::size_t>>& z_components() const { return z_components_; }

    /// Grid nodes attaining the maximal local-group order, component by component.
    std::vector<std::size_t> z_nodes() const {
        std::vector<std::size_t> all;
        for (const auto& c : z_components_) all.insert(all.end(), c.begin(), c.end());
        std::sort(all.begin(), all.end());
        return all;
    }

    bool is_manifold() const { return zeta_ == 1; }

    // ---- quotient-space operations -------------------------------------------------

    OrbifoldPoint<N> canonicalize(const Vec<N>& p) const {
        std::vector<Vec<N>> orbit;
        orbit.reserve(action_.order());
        for (const auto& e : action_.elements()) {
            const Vec<N> q = torus_.reduce(e.apply(p));
            bool dup = false;
            for (const auto& r : orbit)
                if (torus_.torus_distance(q, r) < 1e-9) { dup = true; break; }
            if (!dup) orbit.push_back(q);
        }
        std::sort(orbit.begin(), orbit.end(), [](const Vec<N>& a, const Vec<N>& b) {
            for (int i = 0; i < N; ++i) {
                if (a[i] < b[i] - 1e-12) return true;
                if (a[i] > b[i] + 1e-12) return false;
            }
            return false;
        });
        OrbifoldPoint<N> x;
        x.orbit = std::move(orbit);
        x.representative = x.orbit.front();
        return x;
    }

    OrbifoldPoint<N> node_point(std::size_t node) const { return canonicalize(torus_.node_coords(node)); }

    /// Stabilizer order of a lift of p (p need not be a grid node).
    int stabilizer_order(const Vec<N>& p) const {
        const Vec<N> q = torus_.reduce(p);
        int count = 0;
        for (const auto& e : action_.elements())
            if (torus_.torus_distance(torus_.reduce(e.apply(q)), q) < 1e-9) ++count;
        return count;
    }

    LocalGroupInfo local_group(const OrbifoldPoint<N>& x) const {
        LocalGroupInfo info;
        info.order = stabilizer_order(x.representative);
        info.is_singular = info.order > 1;
        info.stratum_id = stratum_of_point(x.representative, info.order);
        return info;
    }

    /// Quotient distance: min over deck transformations g in G and lattice
    /// shifts in the 3^N neighbor cells. Evaluated in both argument orders so
    /// symmetry holds exactly in floating point.
    double distance(const Vec<N>& a, const Vec<N>& b) const {
        return std::min(distance_oneway(a, b), distance_oneway(b, a));
    }

    double distance(const OrbifoldPoint<N>& x, const OrbifoldPoint<N>& y) const {
        return distance(x.representative, y.representative);
    }

    /// Lower bound on the cut distance at p: half the distance from a lift to
    /// the rest of its (G x Lambda)-orbit. For regular p this is <= dist(p, O^sing).
    double injectivity_radius(const Vec<N>& p) const {
        const Vec<N> q = torus_.reduce(p);
        double best = kInf;
        for (const auto& e : action_.elements()) {
            const Vec<N> img = e.apply(q);
            std::array<int, N> k{};
            k.fill(-2);
            while (true) {
                Vec<N> shift{};
                for (int a = 0; a < N; ++a) shift[a] = static_cast<double>(k[a]);
                const Vec<N> d = q - (img + mat_vec(torus_.basis, shift));
                const double dist2 = dot(d, d);
                if (dist2 > 1e-18) best = std::min(best, dist2);
                int a2 = 0;
                while (a2 < N && ++k[a2] > 2) {
                    k[a2] = -2;
                    ++a2;
                }
                if (a2 == N) break;
            }
        }
        return 0.5 * std::sqrt(best);
    }

    /// exp_x(v) = canonical form of x~ + v; valid while |v| stays below the
    /// injectivity radius, where the radial curve is a minimizing geodesic.
    OrbifoldPoint<N> exp_map(const OrbifoldPoint<N>& x, const Vec<N>& v) const {
        const double len = norm(v);
        if (len > 0.0 && len >= injectivity_radius(x.representative))
            throw RadiusExceeded("exp_map: |v| exceeds the injectivity radius at x");
        return canonicalize(x.representative + v);
    }

    double distance_to_singular(const Vec<N>& p) const {
        if (singular_nodes_.empty()) return kInf;
        double best = kInf;
        for (std::size_t node : singular_nodes_)
            best = std::min(best, distance(p, torus_.node_coords(node)));
        return best;
    }

    double distance_to_z(const Vec<N>& p) const {
        if (is_manifold()) return 0.0;
        double best = kInf;
        for (const auto& comp : z_components_)
            for (std::size_t node : comp) best = std::min(best, distance(p, torus_.node_coords(node)));
        return best;
    }

    /// Closest-point projection onto the singular locus, defined within the
    /// 3*rho tube where the nearest singular point is unique.
    OrbifoldPoint<N> singular_projection(const OrbifoldPoint<N>& x) const {
        if (singular_nodes_.empty())
            throw EmptySingularLocus("singular_projection: O is a manifold");
        double best = kInf;
        std::size_t best_node = 0;
        for (std::size_t node : singular_nodes_) {
            const double d = distance(x.representative, torus_.node_coords(node));
            if (d < best) { best = d; best_node = node; }
        }
        if (best >= 3.0 * rho_)
            throw TooFarFromSingularLocus("singular_projection: point is not within 3*rho of the singular locus");
        return node_point(best_node);
    }

    /// Nearest point of Z^O (node-level; Z components are grids of nodes).
    OrbifoldPoint<N> z_projection(const Vec<N>& p) const {
        double best = kInf;
        std::size_t best_node = 0;
        for (const auto& comp : z_components_)
            for (std::size_t node : comp) {
                const double d = distance(p, torus_.node_coords(node));
                if (d < best) { best = d; best_node = node; }
            }
        return node_point(best_node);
    }

    /// rho = min(systole/8, d_min/8) with d_min the minimal distance between
    /// distinct Z components (infinite when there are fewer than two).
    double convenient_radius_formula() const {
        const double s = torus_.systole();
        double d_min = kInf;
        for (std::size_t i = 0; i < z_components_.size(); ++i)
            for (std::size_t j = i + 1; j < z_components_.size(); ++j)
                for (std::size_t ni : z_components_[i])
                    for (std::size_t nj : z_components_[j])
                        d_min = std::min(d_min, distance(torus_.node_coords(ni), torus_.node_coords(nj)));
        return std::min(s / 8.0, d_min / 8.0);
    }

    /// Enumerate grid nodes in the fractional-coordinate cube of Cartesian
    /// radius `radius` around `center` (covering point, any representative).
    /// Visits each node at most once per call via an internal multi-index walk.
    template <typename F>
    void for_cube_nodes(const Vec<N>& center, double radius, F&& fn) const {
        const Vec<N> s = mat_vec(torus_.basis_inv, center);
        std::array<int, N> lo{}, hi{};
        for (int a = 0; a < N; ++a) {
            double row = 0.0;
            for (int b = 0; b < N; ++b) row += sq(torus_.basis_inv[a][b]);
            const double rfrac = radius * std::sqrt(row) + 1e-12;
            lo[a] = static_cast<int>(std::ceil((s[a] - rfrac) * torus_.res[a]));
            hi[a] = static_cast<int>(std::floor((s[a] + rfrac) * torus_.res[a]));
            if (hi[a] - lo[a] + 1 >= torus_.res[a]) { lo[a] = 0; hi[a] = torus_.res[a] - 1; }
        }
        std::array<int, N> it = lo;
        while (true) {
            fn(torus_.node_index(it));
            int a2 = 0;
            while (a2 < N && ++it[a2] > hi[a2]) {
                it[a2] = lo[a2];
                ++a2;
            }
            if (a2 == N) break;
        }
    }

  private:
    double distance_oneway(const Vec<N>& a, const Vec<N>& b) const {
        double best = kInf;
        for (const auto& e : action_.elements()) {
            const Vec<N> img = torus_.reduce(e.apply(b));
            const Vec<N> d = a - img;
            std::array<int, N> k{};
            k.fill(-1);
            while (true) {
                Vec<N> shift{};
                for (int i = 0; i < N; ++i) shift[i] = static_cast<double>(k[i]);
                const Vec<N> dd = d - mat_vec(torus_.basis, shift);
                best = std::min(best, dot(dd, dd));
                int a2 = 0;
                while (a2 < N && ++k[a2] > 1) {
                    k[a2] = -1;
                    ++a2;
                }
                if (a2 == N) break;
            }
        }
        return std::sqrt(best);
    }

    void build_node_permutations() {
        const std::size_t n = torus_.n_nodes();
        const std::size_t ng = action_.order();
        node_perm_.assign(ng, std::vector<int32_t>(n, -1));

        // integer form of each element on the node grid
        for (std::size_t g = 0; g < ng; ++g) {
            const auto& e = action_.element(static_cast<int>(g));
            const Mat<N> mf = mat_mul(torus_.basis_inv, mat_mul(e.rot, torus_.basis));
            std::array<std::array<long long, N>, N> m{};
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) m[i][j] = llround(mf[i][j]);
            const Vec<N> tf = mat_vec(torus_.basis_inv, e.shift);
            std::array<long long, N> tnode{};
            for (int a = 0; a < N; ++a) {
                const double tn = tf[a] * torus_.res[a];
                tnode[a] = llround(tn);
                if (std::abs(tn - static_cast<double>(tnode[a])) > 1e-7)
                    throw Error("group translation does not map the grid to itself");
            }
            for (std::size_t node = 0; node < n; ++node) {
                const auto mi = torus_.multi_index(node);
                std::array<int, N> out{};
                for (int a = 0; a < N; ++a) {
                    double acc = 0.0;
                    for (int b = 0; b < N; ++b)
                        acc += static_cast<double>(m[a][b]) * mi[b] * torus_.res[a] / torus_.res[b];
                    const double val = acc + static_cast<double>(tnode[a]);
                    const long long r = llround(val);
                    if (std::abs(val - static_cast<double>(r)) > 1e-7)
                        throw Error("group element does not map the grid to itself");
                    out[a] = static_cast<int>(((r % torus_.res[a]) + torus_.res[a]) % torus_.res[a]);
                }
                node_perm_[g][node] = static_cast<int32_t>(torus_.node_index(out));
            }
        }
    }

    void build_strata() {
        const std::size_t n = torus_.n_nodes();
        const std::size_t ng = action_.order();
        std::vector<uint64_t> mask(n, 0);
        stab_order_.assign(n, 1);
        for (std::size_t node = 0; node < n; ++node) {
            uint64_t m = 0;
            for (std::size_t g = 0; g < ng; ++g)
                if (node_perm_[g][node] == static_cast<int32_t>(node)) m |= (uint64_t{1} << g);
            mask[node] = m;
            stab_order_[node] = std::popcount(m);
        }

        // canonical conjugacy label of a stabilizer mask
        auto conjugate = [&](uint64_t m, int h) {
            uint64_t out = 0;
            const int hinv = action_.inverse(h);
            for (std::size_t g = 0; g < ng; ++g)
                if (m & (uint64_t{1} << g))
                    out |= uint64_t{1} << action_.compose(action_.compose(h, static_cast<int>(g)), hinv);
            return out;
        };
        std::vector<uint64_t> label(n, 0);
        for (std::size_t node = 0; node < n; ++node) {
            uint64_t best = mask[node];
            for (std::size_t h = 0; h < ng; ++h) best = std::min(best, conjugate(mask[node], static_cast<int>(h)));
            label[node] = best;
        }

        // flood fill same-label connected components (periodic von Neumann adjacency)
        stratum_id_.assign(n, -1);
        int next_id = 0;
        for (std::size_t start = 0; start < n; ++start) {
            if (stratum_id_[start] >= 0) continue;
            const int id = next_id++;
            std::queue<std::size_t> q;
            q.push(start);
            stratum_id_[start] = id;
            while (!q.empty()) {
                const std::size_t cur = q.front();
                q.pop();
                const auto mi = torus_.multi_index(cur);
                for (int a = 0; a < N; ++a)
                    for (int d : {-1, 1}) {
                        auto mj = mi;
                        mj[a] += d;
                        const std::size_t nb = torus_.node_index(mj);
                        if (stratum_id_[nb] < 0 && label[nb] == label[cur]) {
                            stratum_id_[nb] = id;
                            q.push(nb);
                        }
                    }
            }
        }

        singular_nodes_.clear();
        zeta_ = 1;
        for (std::size_t node = 0; node < n; ++node) {
            if (stab_order_[node] > 1) singular_nodes_.push_back(node);
            zeta_ = std::max(zeta_, stab_order_[node]);
        }

        // Z components: nodes attaining zeta, grouped by grid adjacency
        std::vector<char> in_z(n, 0);
        for (std::size_t node = 0; node < n; ++node) in_z[node] = stab_order_[node] == zeta_ ? 1 : 0;
        std::vector<char> seen(n, 0);
        z_components_.clear();
        for (std::size_t start = 0; start < n; ++start) {
            if (!in_z[start] || seen[start]) continue;
            std::vector<std::size_t> comp;
            std::queue<std::size_t> q;
            q.push(start);
            seen[start] = 1;
            while (!q.empty()) {
                const std::size_t cur = q.front();
                q.pop();
                comp.push_back(cur);
                const auto mi = torus_.multi_index(cur);
                for (int a = 0; a < N; ++a)
                    for (int d : {-1, 1}) {
                        auto mj = mi;
                        mj[a] += d;
                        const std::size_t nb = torus_.node_index(mj);
                        if (in_z[nb] && !seen[nb]) {
                            seen[nb] = 1;
                            q.push(nb);
                        }
                    }
            }
            std::sort(comp.begin(), comp.end());
            z_components_.push_back(std::move(comp));
        }
        std::sort(z_components_.begin(), z_components_.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
    }

    void build_neighbor_tables() {
        const std::size_t n = torus_.n_nodes();
        gram_inv_ = inverse(mat_mul(transpose(torus_.basis), torus_.basis));
        for (int a = 0; a < N; ++a) {
            nb_plus_[a].resize(n);
            nb_minus_[a].resize(n);
        }
        for (std::size_t node = 0; node < n; ++node) {
            const auto mi = torus_.multi_index(node);
            for (int a = 0; a < N; ++a) {
                auto mp = mi;
                mp[a] += 1;
                auto mm = mi;
                mm[a] -= 1;
                nb_plus_[a][node] = static_cast<int32_t>(torus_.node_index(mp));
                nb_minus_[a][node] = static_cast<int32_t>(torus_.node_index(mm));
            }
        }
    }

    int stratum_of_point(const Vec<N>& p, int order) const {
        // exact for points on the grid; otherwise the nearest node with the same order
        double best = kInf;
        int id = -1;
        for (std::size_t node = 0; node < torus_.n_nodes(); ++node) {
            if (stab_order_[node] != order) continue;
            const double d = torus_.torus_distance(p, torus_.node_coords(node));
            if (d < best) { best = d; id = stratum_id_[node]; }
        }
        return id;
    }

    FlatTorus<N> torus_;
    IsometryAction<N> action_;
    double rho_ = 0.0;
    int cat_z_ = 1;

    std::vector<std::vector<int32_t>> node_perm_;
    std::array<std::vector<int32_t>, N> nb_plus_;
    std::array<std::vector<int32_t>, N> nb_minus_;
    Mat<N> gram_inv_{};
    std::vector<int> stab_order_;
    std::vector<int> stratum_id_;
    std::vector<std::size_t> singular_nodes_;
    int zeta_ = 1;
    std::vector<std::vector<std::size_t>> z_components_;
};

/// Maximal-stratum summary: zeta, the attaining grid points merged into
/// connected components, and one representative point per component.
template <int N>
struct MaxStratum {
    int zeta = 1;
    std::vector<std::vector<std::size_t>> components;
    std::vector<OrbifoldPoint<N>> representatives;
};

template <int N>
MaxStratum<N> max_stratum(const GoodOrbifold<N>& orb) {
    MaxStratum<N> z;
    z.zeta = orb.zeta();
    z.components = orb.z_components();
    for (const auto& comp : z.components) z.representatives.push_back(orb.node_point(comp.front()));
    return z;
}

/// Convenient radius of Def-4.2 type for a torus/action pair, before the
/// orbifold itself is assembled.
template <int N>
double compute_convenient_radius(const FlatTorus<N>& torus, const IsometryAction<N>& action) {
    return GoodOrbifold<N>::make(torus, action, 1).convenient_radius_formula();
}

} // namespace orblab
