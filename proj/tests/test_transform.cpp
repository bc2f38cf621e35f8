#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dft/fibrations.hpp"
#include "dft/grid.hpp"
#include "dft/metric.hpp"
#include "dft/transform.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

// Exact Radon transform of a centered Gaussian exp(-|x - c|^2 / (2 sigma^2)):
// R f(theta, s) = sigma sqrt(2 pi) exp(-(s - c.omega)^2 / (2 sigma^2)).
double gaussian_radon(double theta, double s, const dft::Vec2& c, double sigma) {
    const double proj = c.x() * std::cos(theta) + c.y() * std::sin(theta);
    return sigma * std::sqrt(2.0 * kPi) * std::exp(-(s - proj) * (s - proj) /
                                                   (2.0 * sigma * sigma));
}

dft::GridFunction random_grid(int size, double extent, unsigned seed) {
    auto f = dft::GridFunction::zeros(size, extent);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) f.values(i, j) = u(rng);
    f.apply_mask();
    return f;
}

dft::SinogramFunction random_sinogram(dft::SinogramFunction layout, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < layout.count0(); ++i)
        for (int j = 0; j < layout.count1(); ++j) layout.values(i, j) = u(rng);
    return layout;
}

}  // namespace

TEST_CASE("forward matches the analytic Gaussian sinogram") {
    const auto spec = dft::lines_fibration();
    const dft::Vec2 c(0.15, -0.2);
    const double sigma = 0.12;
    const auto f = dft::phantom_gaussian(192, 1.0, c, sigma);
    dft::Quadrature q;
    const auto u = dft::forward(spec, f, q, dft::lines_sinogram(60, 121, 1.0));
    double worst = 0.0;
    for (int i = 0; i < u.count0(); ++i) {
        for (int j = 0; j < u.count1(); ++j) {
            const double s = u.node1(j);
            if (std::abs(s) > 0.75) continue;  // stay away from the mask edge
            worst = std::max(worst, std::abs(u.values(i, j) -
                                             gaussian_radon(u.node0(i), s, c, sigma)));
        }
    }
    CHECK(worst < 2e-3);
}

TEST_CASE("chord-length oracle for the disk phantom") {
    const auto spec = dft::lines_fibration();
    const double rho = 0.5;
    const auto f = dft::phantom_disk(256, 1.0, rho);
    dft::Quadrature q;
    const auto u = dft::forward(spec, f, q, dft::lines_sinogram(12, 81, 1.0));
    for (int i = 0; i < u.count0(); ++i) {
        for (int j = 0; j < u.count1(); ++j) {
            const double s = u.node1(j);
            if (std::abs(s) > 0.4) continue;  // away from the tangent rays
            const double chord = 2.0 * std::sqrt(rho * rho - s * s);
            CHECK(u.values(i, j) == doctest::Approx(chord).epsilon(0.05));
        }
    }
}

TEST_CASE("adjoint is the exact transpose of forward") {
    dft::Quadrature q;

    SUBCASE("lines instance") {
        const auto spec = dft::lines_fibration();
        for (unsigned seed = 1; seed <= 3; ++seed) {
            const auto f = random_grid(32, 1.0, seed);
            const auto u = random_sinogram(dft::lines_sinogram(40, 41, 1.0), 100 + seed);
            const auto Rf = dft::forward(spec, f, q, u);
            const auto Rtu = dft::adjoint(spec, u, q, 32, 1.0);
            const double lhs = Rf.inner(u);
            const double rhs = f.inner(Rtu);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * f.norm2() * std::sqrt(u.inner(u)));
        }
    }

    SUBCASE("X-ray instance") {
        const auto m = dft::MetricField::focusing(0.3, 0.4);
        const auto spec = dft::xray_fibration(m);
        for (unsigned seed = 1; seed <= 2; ++seed) {
            const auto f = random_grid(32, m.r_dom, seed);
            const auto u = random_sinogram(dft::xray_sinogram(24, 24), 200 + seed);
            const auto Rf = dft::forward(spec, f, q, u);
            const auto Rtu = dft::adjoint(spec, u, q, 32, m.r_dom);
            const double lhs = Rf.inner(u);
            const double rhs = f.inner(Rtu);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * f.norm2() * std::sqrt(u.inner(u)));
        }
    }
}

TEST_CASE("rotation equivariance of the line transform") {
    const auto spec = dft::lines_fibration();
    const int n_theta = 45;
    const double delta = kPi / n_theta;  // one angular step
    const double sigma = 0.1;
    const dft::Vec2 c(0.3, 0.1);
    const dft::Vec2 c_rot(c.x() * std::cos(delta) - c.y() * std::sin(delta),
                          c.x() * std::sin(delta) + c.y() * std::cos(delta));
    dft::Quadrature q;
    const auto u0 = dft::forward(spec, dft::phantom_gaussian(160, 1.0, c, sigma), q,
                                 dft::lines_sinogram(n_theta, 81, 1.0));
    const auto u1 = dft::forward(spec, dft::phantom_gaussian(160, 1.0, c_rot, sigma), q,
                                 dft::lines_sinogram(n_theta, 81, 1.0));
    double worst = 0.0;
    for (int i = 1; i < n_theta; ++i)
        for (int j = 0; j < u0.count1(); ++j)
            if (std::abs(u0.node1(j)) < 0.7)
                worst = std::max(worst, std::abs(u1.values(i, j) - u0.values(i - 1, j)));
    CHECK(worst < 2e-3);
}

TEST_CASE("Euclidean X-ray forward equals the line transform after reparametrization") {
    const auto m = dft::MetricField::euclidean(1.0);
    const auto spec = dft::xray_fibration(m);
    const dft::Vec2 c(0.1, -0.15);
    const double sigma = 0.15;
    const auto f = dft::phantom_gaussian(192, 1.0, c, sigma);
    dft::Quadrature q;
    const auto u = dft::forward(spec, f, q, dft::xray_sinogram(16, 15));
    for (int i = 0; i < u.count0(); ++i) {
        for (int j = 0; j < u.count1(); ++j) {
            const double beta = u.node0(i), alpha = u.node1(j);
            if (std::abs(alpha) > 1.1) continue;  // skip near-tangent chords
            const auto zl = dft::line_from_boundary(beta, alpha, 1.0);
            const double expect = gaussian_radon(zl(0), zl(1), c, sigma);
            CHECK(std::abs(u.values(i, j) - expect) <= 1e-3);
        }
    }
}

TEST_CASE("direct geodesic integrator cross-checks the chart forward") {
    const auto m = dft::MetricField::focusing(0.3, 0.4);
    const auto spec = dft::xray_fibration(m);
    const auto f = dft::phantom_gaussian(128, m.r_dom, dft::Vec2(0.1, 0.05), 0.15);
    dft::Quadrature q;
    const auto u1 = dft::forward(spec, f, q, dft::xray_sinogram(10, 9));
    const auto u2 = dft::xray_forward(
        m, [](const dft::Vec2&) { return 1.0; }, f, q, 10, 9);
    CHECK((u1.values - u2.values).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("quadrature step halving converges") {
    const auto spec = dft::lines_fibration();
    const auto f = dft::phantom_gaussian(160, 1.0, dft::Vec2(0.2, 0.0), 0.12);
    const auto layout = dft::lines_sinogram(20, 41, 1.0);
    dft::Quadrature q1{dft::QuadratureRule::trapezoid, 0.02};
    dft::Quadrature q2{dft::QuadratureRule::trapezoid, 0.01};
    dft::Quadrature qfine{dft::QuadratureRule::trapezoid, 0.0025};
    const auto ufine = dft::forward(spec, f, qfine, layout);
    const double e1 =
        (dft::forward(spec, f, q1, layout).values - ufine.values).cwiseAbs().maxCoeff();
    const double e2 =
        (dft::forward(spec, f, q2, layout).values - ufine.values).cwiseAbs().maxCoeff();
    CHECK(e2 <= e1);
    CHECK(e2 < 5e-3);
}

TEST_CASE("backprojection agrees with the adjoint on lines") {
    const auto spec = dft::lines_fibration();
    const auto f = dft::phantom_gaussian(64, 1.0, dft::Vec2(0.1, 0.2), 0.15);
    dft::Quadrature q;
    const auto u = dft::forward(spec, f, q, dft::lines_sinogram(90, 129, 1.0));
    const auto bp = dft::backproject_lines(u, 64, 1.0);
    const auto ad = dft::adjoint(spec, u, q, 64, 1.0);
    // two independent discretizations of the same H_x integral
    double worst = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j)
            if (bp.cell_center(i, j).norm() < 0.8)
                worst = std::max(worst, std::abs(bp.values(i, j) - ad.values(i, j)));
    CHECK(worst < 1e-2);
}
