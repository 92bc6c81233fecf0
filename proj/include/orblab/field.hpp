#pragma once

#include <vector>

#include "orblab/common.hpp"
#include "orblab/geometry.hpp"

namespace orblab {

/// G-invariant scalar field sampled on the covering grid. The 1/|G| measure
/// weight is applied by the integration routines, not stored in the values.
template <int N>
struct OrbifoldFunction {
    const GoodOrbifold<N>* orb = nullptr;
    std::vector<double> values;

    OrbifoldFunction() = default;
    OrbifoldFunction(const GoodOrbifold<N>& o, std::vector<double> v) : orb(&o), values(std::move(v)) {}
    explicit OrbifoldFunction(const GoodOrbifold<N>& o, double fill = 0.0)
        : orb(&o), values(o.n_nodes(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// Project raw node values onto the G-invariant subspace by orbit averaging.
/// Idempotent and exactly invariant: every node of an orbit receives the same
/// double (an already-constant orbit is passed through untouched).
template <int N>
inline OrbifoldFunction<N> symmetrize(const GoodOrbifold<N>& orb, const std::vector<double>& raw) {
    if (raw.size() != orb.n_nodes())
        throw ShapeMismatch("symmetrize: value array does not match the grid");
    const std::size_t ng = orb.group_order();
    OrbifoldFunction<N> out(orb);
    std::vector<char> done(raw.size(), 0);
    std::vector<std::size_t> orbit;
    orbit.reserve(ng);
    for (std::size_t node = 0; node < raw.size(); ++node) {
        if (done[node]) continue;
        orbit.clear();
        for (std::size_t g = 0; g < ng; ++g) {
            const std::size_t img = static_cast<std::size_t>(orb.node_permutation(static_cast<int>(g))[node]);
            bool dup = false;
            for (std::size_t o : orbit) dup = dup || o == img;
            if (!dup) orbit.push_back(img);
        }
        std::sort(orbit.begin(), orbit.end());
        bool constant = true;
        for (std::size_t o : orbit) constant = constant && raw[o] == raw[orbit.front()];
        double avg;
        if (constant) {
            avg = raw[orbit.front()];
        } else {
            double s = 0.0;
            for (std::size_t o : orbit) s += raw[o];
            avg = s / static_cast<double>(orbit.size());
        }
        for (std::size_t o : orbit) {
            out.values[o] = avg;
            done[o] = 1;
        }
    }
    return out;
}

template <int N>
inline bool is_invariant(const OrbifoldFunction<N>& u, double tol = 0.0) {
    const auto& orb = *u.orb;
    for (std::size_t g = 0; g < orb.group_order(); ++g) {
        const auto& perm = orb.node_permutation(static_cast<int>(g));
        for (std::size_t node = 0; node < u.size(); ++node)
            if (std::abs(u.values[node] - u.values[static_cast<std::size_t>(perm[node])]) > tol) return false;
    }
    return true;
}

/// Integral against the quotient measure: (1/|G|) * sum * cell_volume.
template <int N>
inline double integrate(const OrbifoldFunction<N>& u) {
    return pairwise_sum(u.values) * u.orb->cell_volume() / static_cast<double>(u.orb->group_order());
}

/// Integral of a pointwise transform of u, same measure convention.
template <int N, typename F>
inline double integrate_pointwise(const OrbifoldFunction<N>& u, F&& f) {
    std::vector<double> tmp(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = f(u.values[i]);
    return pairwise_sum(tmp) * u.orb->cell_volume() / static_cast<double>(u.orb->group_order());
}

template <int N>
inline double integrate_sq(const OrbifoldFunction<N>& u) {
    return integrate_pointwise(u, [](double v) { return v * v; });
}

/// Integral of (u^+)^p.
template <int N>
inline double integrate_pos_pow(const OrbifoldFunction<N>& u, double p) {
    return integrate_pointwise(u, [p](double v) { return v > 0.0 ? std::pow(v, p) : 0.0; });
}

template <int N>
inline double integrate_abs_pow(const OrbifoldFunction<N>& u, double p) {
    return integrate_pointwise(u, [p](double v) { return std::pow(std::abs(v), p); });
}

template <int N>
inline double integrate_abs(const OrbifoldFunction<N>& u) {
    return integrate_pointwise(u, [](double v) { return std::abs(v); });
}

template <int N>
inline double inner_product(const OrbifoldFunction<N>& u, const OrbifoldFunction<N>& v) {
    std::vector<double> tmp(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u.values[i] * v.values[i];
    return pairwise_sum(tmp) * u.orb->cell_volume() / static_cast<double>(u.orb->group_order());
}

struct FieldNorms {
    double l2_sq = 0.0;
    double lp_p = 0.0;
    double grad_sq = 0.0;
    double h1_eps_sq = 0.0; // eps^2 * grad_sq + l2_sq
};

/// Difference stencils on the covering grid, metric-corrected through the
/// inverse Gram matrix of the lattice basis.
///
/// The gradient energy is the bilinear form of the ordinary second-order
/// Laplacian stencil (forward/backward difference pairs), so the discrete
/// divergence theorem <Lap u, v> = -<grad u, grad v> holds to rounding.
template <int N>
class DiscreteOperators {
  public:
    explicit DiscreteOperators(const GoodOrbifold<N>& orb) : orb_(&orb) {}

    /// integral of |grad u|^2 dmu.
    double grad_sq(const OrbifoldFunction<N>& u) const {
        const auto& orb = *orb_;
        const auto& minv = orb.gram_inv();
        const auto& res = orb.torus().res;
        std::vector<double> acc(u.size(), 0.0);
        for (int a = 0; a < N; ++a) {
            const auto& plus_a = orb.neighbor_plus(a);
            for (int b = a; b < N; ++b) {
                if (std::abs(minv[a][b]) < 1e-15) continue;
                const double coef = (a == b ? 1.0 : 2.0) * minv[a][b] * res[a] * res[b];
                if (a == b) {
                    for (std::size_t i = 0; i < u.size(); ++i) {
                        const double d = u.values[static_cast<std::size_t>(plus_a[i])] - u.values[i];
                        acc[i] += coef * d * d;
                    }
                } else {
                    const auto& plus_b = orb.neighbor_plus(b);
                    const auto& minus_a = orb.neighbor_minus(a);
                    const auto& minus_b = orb.neighbor_minus(b);
                    for (std::size_t i = 0; i < u.size(); ++i) {
                        const double dpa = u.values[static_cast<std::size_t>(plus_a[i])] - u.values[i];
                        const double dpb = u.values[static_cast<std::size_t>(plus_b[i])] - u.values[i];
                        const double dma = u.values[i] - u.values[static_cast<std::size_t>(minus_a[i])];
                        const double dmb = u.values[i] - u.values[static_cast<std::size_t>(minus_b[i])];
                        acc[i] += coef * 0.5 * (dpa * dpb + dma * dmb);
                    }
                }
            }
        }
        return pairwise_sum(acc) * orb.cell_volume() / static_cast<double>(orb.group_order());
    }

    /// Pointwise Laplacian field, re-symmetrized (a no-op up to rounding since
    /// the stencil commutes with the G-action on the aligned grid).
    OrbifoldFunction<N> laplacian(const OrbifoldFunction<N>& u) const {
        const auto& orb = *orb_;
        const auto& minv = orb.gram_inv();
        const auto& res = orb.torus().res;
        std::vector<double> out(u.size(), 0.0);
        for (int a = 0; a < N; ++a) {
            const auto& plus_a = orb.neighbor_plus(a);
            const auto& minus_a = orb.neighbor_minus(a);
            const double coef = minv[a][a] * static_cast<double>(res[a]) * res[a];
            for (std::size_t i = 0; i < u.size(); ++i) {
                out[i] += coef * (u.values[static_cast<std::size_t>(plus_a[i])] - 2.0 * u.values[i] +
                                  u.values[static_cast<std::size_t>(minus_a[i])]);
            }
            for (int b = a + 1; b < N; ++b) {
                if (std::abs(minv[a][b]) < 1e-15) continue;
                const double c2 = minv[a][b] * res[a] * res[b];
                const auto& plus_b = orb.neighbor_plus(b);
                const auto& minus_b = orb.neighbor_minus(b);
                for (std::size_t i = 0; i < u.size(); ++i) {
                    const std::size_t ipa = static_cast<std::size_t>(plus_a[i]);
                    const std::size_t ima = static_cast<std::size_t>(minus_a[i]);
                    const std::size_t ipb = static_cast<std::size_t>(plus_b[i]);
                    const std::size_t imb = static_cast<std::size_t>(minus_b[i]);
                    const std::size_t ipa_mb = static_cast<std::size_t>(minus_b[ipa]);
                    const std::size_t ima_pb = static_cast<std::size_t>(plus_b[ima]);
                    out[i] += c2 * (u.values[ipa] + u.values[ima] + u.values[ipb] + u.values[imb] -
                                    2.0 * u.values[i] - u.values[ipa_mb] - u.values[ima_pb]);
                }
            }
        }
        return symmetrize(orb, out);
    }

    FieldNorms norms(const OrbifoldFunction<N>& u, double eps, double p) const {
        FieldNorms n;
        n.l2_sq = integrate_sq(u);
        n.lp_p = integrate_abs_pow(u, p);
        n.grad_sq = grad_sq(u);
        n.h1_eps_sq = eps * eps * n.grad_sq + n.l2_sq;
        return n;
    }

  private:
    const GoodOrbifold<N>* orb_;
};

template <int N>
inline OrbifoldFunction<N> apply_laplacian(const OrbifoldFunction<N>& u) {
    return DiscreteOperators<N>(*u.orb).laplacian(u);
}

template <int N>
inline FieldNorms norms(const OrbifoldFunction<N>& u, double eps, double p) {
    return DiscreteOperators<N>(*u.orb).norms(u, eps, p);
}

// Arithmetic used by the descent loop; fields must share the same orbifold.

template <int N>
inline OrbifoldFunction<N> operator*(double s, const OrbifoldFunction<N>& u) {
    OrbifoldFunction<N> r = u;
    for (auto& v : r.values) v *= s;
    return r;
}

template <int N>
inline OrbifoldFunction<N> operator+(const OrbifoldFunction<N>& u, const OrbifoldFunction<N>& v) {
    OrbifoldFunction<N> r = u;
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] += v.values[i];
    return r;
}

template <int N>
inline OrbifoldFunction<N> operator-(const OrbifoldFunction<N>& u, const OrbifoldFunction<N>& v) {
    OrbifoldFunction<N> r = u;
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] -= v.values[i];
    return r;
}

/// Relative L2(mu) distance used for solution clustering.
template <int N>
inline double relative_l2_distance(const OrbifoldFunction<N>& u, const OrbifoldFunction<N>& v) {
    const double nu = std::sqrt(integrate_sq(u));
    const double nv = std::sqrt(integrate_sq(v));
    const double scale = std::max(nu, nv);
    if (scale == 0.0) return 0.0;
    return std::sqrt(integrate_sq(u - v)) / scale;
}

} // namespace orblab
