#include <catch2/catch.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "orblab/ground_state.hpp"

using namespace orblab;

namespace {

double sech2_profile(double r) { return 1.5 / sq(std::cosh(0.5 * r)); }

// quadrature oracle over the closed form, independent of the solver path
double simpson_oracle(double (*f)(double), double a, double b, int m) {
    const double h = (b - a) / m;
    double acc = f(a) + f(b);
    for (int i = 1; i < m; i += 2) acc += 4.0 * f(a + i * h);
    for (int i = 2; i < m; i += 2) acc += 2.0 * f(a + i * h);
    return acc * h / 3.0;
}

} // namespace

TEST_CASE("1D shooting matches the sech^2 closed form") {
    const auto prof = solve_ground_state(1, 3.0, 25.0, 1e-14);
    CHECK(prof.initial_height() == Approx(1.5).margin(1e-9));

    double max_err = 0.0;
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
        if (prof.radii[i] > 20.0) break;
        max_err = std::max(max_err, std::abs(prof.values[i] - sech2_profile(prof.radii[i])));
    }
    CHECK(max_err < 1e-6);

    // m(E) = (p-2)/(2p) ||V||_3^3 with the p-norm from the closed form
    const double lp_oracle = 2.0 * simpson_oracle(
        +[](double r) { return std::pow(sech2_profile(r), 3.0); }, 0.0, 25.0, 20000);
    const double me_oracle = (3.0 - 2.0) / (2.0 * 3.0) * lp_oracle;
    CHECK(prof.m_e == Approx(me_oracle).epsilon(1e-8));
    CHECK(prof.m_e == Approx(1.2).epsilon(1e-8)); // the quadrature oracle evaluates to 6/5
}

TEST_CASE("profile invariants") {
    for (auto [n, p] : {std::pair{1, 3.0}, std::pair{2, 4.0}, std::pair{3, 4.0}}) {
        CAPTURE(n, p);
        const auto prof = solve_ground_state(n, p, 25.0, 1e-12);

        // strictly positive, strictly decreasing, decayed at r_max
        bool positive = true, decreasing = true;
        for (std::size_t i = 0; i < prof.values.size(); ++i) {
            positive = positive && prof.values[i] > 0.0;
            if (i > 0) decreasing = decreasing && prof.values[i] < prof.values[i - 1];
        }
        CHECK(positive);
        CHECK(decreasing);
        CHECK(prof.values.back() < 1e-10);
        CHECK(prof.derivs.front() == 0.0);

        // Nehari identity and the energy formula
        const double defect = std::abs(prof.norms.grad_sq + prof.norms.l2_sq - prof.norms.lp_p) / prof.norms.lp_p;
        CHECK(defect < 1e-6);
        CHECK(prof.m_e == Approx((p - 2.0) / (2.0 * p) * prof.norms.lp_p).epsilon(1e-12));
    }
}

TEST_CASE("profile satisfies the radial ODE") {
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);
    const double dr = prof.radii[1] - prof.radii[0];
    double max_res = 0.0;
    for (std::size_t i = 1; i + 1 < prof.radii.size(); ++i) {
        const double r = prof.radii[i];
        if (r < 0.1 || r > 12.5) continue;
        const double v = prof.values[i];
        const double d2 = (prof.values[i + 1] - 2.0 * v + prof.values[i - 1]) / (dr * dr);
        const double d1 = (prof.values[i + 1] - prof.values[i - 1]) / (2.0 * dr);
        max_res = std::max(max_res, std::abs(d2 + (prof.n - 1) / r * d1 - v + std::pow(v, prof.p - 1.0)));
    }
    CHECK(max_res < 1e-5);
}

TEST_CASE("3D profile has the e^{-r}/r far field") {
    const auto prof = solve_ground_state(3, 4.0, 25.0, 1e-12);
    // log V + r + log r should flatten on [10, 15]
    std::vector<double> c;
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
        const double r = prof.radii[i];
        if (r < 10.0 || r > 15.0) continue;
        c.push_back(std::log(prof.values[i]) + r + std::log(r));
    }
    REQUIRE(c.size() > 100);
    const auto [mn, mx] = std::minmax_element(c.begin(), c.end());
    CHECK(*mx - *mn < 0.05);
}

TEST_CASE("solver rejects bad parameters") {
    CHECK_THROWS_AS(solve_ground_state(2, 2.0), Error);
    CHECK_THROWS_AS(solve_ground_state(3, 6.0), Error);
    CHECK_THROWS_AS(solve_ground_state(2, 4.0, 10.0), Error);
}

TEST_CASE("rescaled profile") {
    const auto prof = solve_ground_state(2, 4.0, 25.0, 1e-12);

    SECTION("eps = 1 is the identity") {
        const auto id = rescale(prof, 1.0);
        for (std::size_t i = 0; i < prof.radii.size(); i += 97)
            CHECK(id(prof.radii[i]) == Approx(prof.values[i]).margin(1e-12));
    }
    SECTION("evaluator halves radii for eps = 1/2") {
        const auto half = rescale(prof, 0.5);
        for (std::size_t i = 0; i < prof.radii.size(); i += 97)
            CHECK(half(0.5 * prof.radii[i]) == Approx(prof.values[i]).margin(1e-12));
    }
    SECTION("L2 mass scales like eps^n") {
        const double eps = 0.3;
        const auto resc = rescale(prof, eps);
        // radial quadrature of the rescaled evaluator over R^2
        const int m = 200000;
        const double rmax = eps * prof.r_max;
        const double h = rmax / m;
        double acc = 0.0;
        for (int i = 1; i <= m; ++i) {
            const double r = i * h;
            acc += sq(resc(r)) * r * h;
        }
        acc *= 2.0 * kPi;
        CHECK(acc == Approx(std::pow(eps, 2) * prof.norms.l2_sq).epsilon(1e-4));
    }
    SECTION("parameter range") {
        CHECK_THROWS_AS(rescale(prof, 0.0), Error);
        CHECK_THROWS_AS(rescale(prof, 1.5), Error);
    }
}

TEST_CASE("profile cache round-trips exactly") {
    const auto dir = std::filesystem::temp_directory_path() / "orblab_gs_cache_test";
    std::filesystem::remove_all(dir);

    const auto a = solve_ground_state_cached(2, 4.0, 25.0, 1e-10, dir);
    CHECK(std::filesystem::exists(dir / profile_cache_name(2, 4.0, 25.0, 1e-10)));
    const auto b = solve_ground_state_cached(2, 4.0, 25.0, 1e-10, dir); // served from disk

    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        CHECK(a.values[i] == b.values[i]); // bitwise
        CHECK(a.derivs[i] == b.derivs[i]);
    }
    CHECK(a.m_e == b.m_e);
    std::filesystem::remove_all(dir);
}

TEST_CASE("profile CSV export") {
    const auto prof = solve_ground_state(1, 3.0, 25.0, 1e-10);
    const auto path = std::filesystem::temp_directory_path() / "orblab_profile_test.csv";
    export_profile_csv(prof, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "r,V");
    std::string first;
    std::getline(in, first);
    CHECK(first.substr(0, 2) == "0,");
    std::filesystem::remove(path);
}
