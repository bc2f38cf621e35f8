#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dft/errors.hpp"
#include "dft/geodesic.hpp"
#include "dft/metric.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent oracle: scalar Jacobi equation j'' + K(gamma(t)) j = 0 along a
// geodesic, RK4 at one tenth of the geodesic's own step, seeded at t0 with
// j(t0) = 0, j'(t0) = 1. Returns the zero crossings of j after t0.
std::vector<double> brute_force_conjugate_times(const dft::MetricField& m,
                                                const dft::Geodesic& g, double t0) {
    const double h = g.step / 10.0;
    double t = t0, j = 0.0, dj = 1.0;
    std::vector<double> zeros;
    auto curv = [&](double tt) { return m.gauss_curvature(g.at(tt).x); };
    while (t + h <= g.exit_time) {
        const double j0 = j;
        // RK4 on (j, j') with K frozen at the stage times
        const double k1j = dj, k1d = -curv(t) * j;
        const double k2j = dj + 0.5 * h * k1d,
                     k2d = -curv(t + 0.5 * h) * (j + 0.5 * h * k1j);
        const double k3j = dj + 0.5 * h * k2d,
                     k3d = -curv(t + 0.5 * h) * (j + 0.5 * h * k2j);
        const double k4j = dj + h * k3d, k4d = -curv(t + h) * (j + h * k3j);
        j += h / 6.0 * (k1j + 2 * k2j + 2 * k3j + k4j);
        dj += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
        t += h;
        if (t - t0 > 10 * h && j0 * j < 0.0)
            zeros.push_back(t - h * j / (j - j0));  // linear interpolation
    }
    return zeros;
}

}  // namespace

TEST_CASE("preset derivatives match finite differences") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    for (const char* name : {"euclidean", "curvature1", "focusing(0.8,0.25)"}) {
        const auto m = dft::MetricField::preset(name);
        for (int i = 0; i < 20; ++i) {
            const dft::Vec2 x(u(rng), u(rng));
            CHECK(m.derivative_defect(x) < 1e-5);
        }
    }
}

TEST_CASE("curvature1 preset has Gauss curvature 1") {
    const auto m = dft::MetricField::curvature1();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const dft::Vec2 x(u(rng), u(rng));
        if (x.norm() > m.r_dom) continue;
        CHECK(m.gauss_curvature(x) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("euclidean geodesics are chords with exit time 2 r cos(alpha)") {
    const auto m = dft::MetricField::euclidean(1.0);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ub(0.0, 2 * kPi), ua(-1.2, 1.2);
    for (int i = 0; i < 20; ++i) {
        const double beta = ub(rng), alpha = ua(rng);
        const auto start = dft::boundary_start(m, beta, alpha);
        const auto g = dft::integrate_geodesic(m, start, 1e-3);
        const double chord = 2.0 * std::cos(alpha);
        CHECK(g.exit_time == doctest::Approx(chord).epsilon(1e-8));
        CHECK(g.back().x.norm() == doctest::Approx(1.0).epsilon(1e-8));
        // midpoint lies on the straight line
        const auto mid = g.at(0.5 * g.exit_time);
        const dft::Vec2 expect = start.x + 0.5 * chord * start.v;
        CHECK((mid.x - expect).norm() < 1e-8);
    }
}

TEST_CASE("step halving shows fourth-order convergence of the endpoint") {
    const auto m = dft::MetricField::focusing(0.4, 0.35);
    const auto start = dft::boundary_start(m, 0.3, 0.25);
    const auto fine = dft::integrate_geodesic(m, start, 1e-4);
    const auto g1 = dft::integrate_geodesic(m, start, 4e-3);
    const auto g2 = dft::integrate_geodesic(m, start, 2e-3);
    const double e1 = (g1.at(1.0).x - fine.at(1.0).x).norm();
    const double e2 = (g2.at(1.0).x - fine.at(1.0).x).norm();
    CHECK(e2 < e1 / 8.0);  // ~16x for RK4, allow slack
}

TEST_CASE("unit-speed and range validation") {
    const auto m = dft::MetricField::euclidean(1.0);
    dft::PhasePoint bad{dft::Vec2(0.0, 0.0), dft::Vec2(2.0, 0.0)};
    CHECK_THROWS_AS(dft::integrate_geodesic(m, bad, 1e-3), dft::NonUnitSpeedError);
    const auto g = dft::integrate_geodesic(
        m, dft::boundary_start(m, 0.0, 0.0), 1e-3);
    CHECK_THROWS_AS(dft::jacobi_fields(m, g, -0.5), dft::OutOfRangeError);
    CHECK_THROWS_AS(dft::jacobi_fields(m, g, g.exit_time + 1.0), dft::OutOfRangeError);
}

TEST_CASE("jacobi fields on constant curvature 1: j = sin(t - t0)") {
    const auto m = dft::MetricField::curvature1(1.2);
    const auto g = dft::integrate_geodesic(m, dft::boundary_start(m, 0.7, 0.2), 1e-3);
    const auto sol = dft::jacobi_fields(m, g, 0.1);
    for (double t = 0.15; t < g.exit_time; t += 0.2) {
        CHECK(sol.normal(t) == doctest::Approx(std::sin(t - 0.1)).epsilon(1e-6));
        const dft::Mat2 J = sol.J(t);
        CHECK(J(0, 0) == doctest::Approx(t - 0.1).epsilon(1e-6));  // tangential part
        CHECK(sol.det(t) ==
              doctest::Approx((t - 0.1) * std::sin(t - 0.1)).epsilon(1e-6));
    }
}

TEST_CASE("conjugate scan matches the brute-force oracle on focusing geodesics") {
    const auto m = dft::MetricField::focusing(0.8, 0.25);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> ub(0.0, 2 * kPi), ua(-1.0, 1.0);
    int checked = 0;
    while (checked < 10) {
        const double beta = ub(rng), alpha = ua(rng);
        dft::Geodesic g;
        try {
            g = dft::integrate_geodesic(m, dft::boundary_start(m, beta, alpha),
                                        1e-3 * m.r_dom);
        } catch (const dft::TrappedError&) {
            continue;
        }
        ++checked;
        const auto pairs = dft::conjugate_scan(m, g);
        // oracle at the family representatives: every reported (t0, t1) must be
        // a zero of the oracle solution from t0
        for (const auto& p : pairs) {
            const auto zeros = brute_force_conjugate_times(m, g, p.t0);
            REQUIRE(!zeros.empty());
            double best = 1e9;
            for (double z : zeros) best = std::min(best, std::abs(z - p.t1));
            CHECK(best <= 5 * g.step);
            CHECK(p.degree == 1);
        }
        // and the t0 = 0 ray agrees in count
        const auto zeros0 = brute_force_conjugate_times(m, g, 0.0);
        int found0 = 0;
        for (const auto& p : pairs)
            if (p.t0 < 5 * g.step) ++found0;
        // conjugate_scan groups families; the zero-based oracle count bounds it
        CHECK(found0 <= static_cast<int>(zeros0.size()));
    }
}

TEST_CASE("euclidean geodesics have no conjugate points") {
    const auto m = dft::MetricField::euclidean(1.0);
    const auto g = dft::integrate_geodesic(m, dft::boundary_start(m, 1.0, 0.4), 1e-3);
    CHECK(dft::conjugate_scan(m, g).empty());
}
