#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "dft/errors.hpp"
#include "dft/fibration.hpp"
#include "dft/fibrations.hpp"
#include "dft/geodesic.hpp"
#include "dft/metric.hpp"

using dft::MatX;
using dft::VecX;

namespace {

constexpr double kPi = 3.14159265358979323846;

VecX vec2(double a, double b) {
    VecX v(2);
    v << a, b;
    return v;
}

// Synthetic chart family on N = 4, n = 3, n' = 1, n'' = 2:
// phi(z, t) = M(t) z with rows (1, 0, f(t), 0) and (0, 1, 0, g(t)), so
// rowspan M(x') and rowspan M(y') intersect once per matched scalar
// f(x') = f(y') or g(x') = g(y').
struct SynthChart : dft::PhiChart {
    std::function<double(double)> f, g, df, dg;

    SynthChart(std::function<double(double)> f_, std::function<double(double)> df_,
               std::function<double(double)> g_, std::function<double(double)> dg_)
        : f(std::move(f_)), g(std::move(g_)), df(std::move(df_)), dg(std::move(dg_)) {
        xp_idx = {0};
        xd_idx = {1, 2};
    }

    MatX m(double t) const {
        MatX out = MatX::Zero(2, 4);
        out(0, 0) = 1.0;
        out(0, 2) = f(t);
        out(1, 1) = 1.0;
        out(1, 3) = g(t);
        return out;
    }

    bool valid(const VecX&, const VecX&) const override { return true; }
    VecX phi(const VecX& z, const VecX& xp) const override { return m(xp(0)) * z; }
    MatX phi_z(const VecX&, const VecX& xp) const override { return m(xp(0)); }
    MatX phi_xp(const VecX& z, const VecX& xp) const override {
        MatX out(2, 1);
        out(0, 0) = df(xp(0)) * z(2);
        out(1, 0) = dg(xp(0)) * z(3);
        return out;
    }
    std::vector<MatX> phi_z_dxp(const VecX&, const VecX& xp) const override {
        MatX d = MatX::Zero(2, 4);
        d(0, 2) = df(xp(0));
        d(1, 3) = dg(xp(0));
        return {d};
    }
};

// Matching b-chart: with z' = (z3, z4) the incidence x'' = M(x') z solves to
// z'' = (z1, z2) = (x''_1 - f(x') z3, x''_2 - g(x') z4). Derivatives use the
// finite-difference defaults of the base class.
struct SynthBChart : dft::BChart {
    std::function<double(double)> f, g;

    SynthBChart(std::function<double(double)> f_, std::function<double(double)> g_)
        : f(std::move(f_)), g(std::move(g_)) {
        zp_idx = {2, 3};
        zd_idx = {0, 1};
    }

    bool valid(const VecX&, const VecX&) const override { return true; }
    VecX b(const VecX& x, const VecX& zp) const override {
        VecX out(2);
        out << x(1) - f(x(0)) * zp(0), x(2) - g(x(0)) * zp(1);
        return out;
    }
};

dft::FibrationSpec synth_spec(std::shared_ptr<const SynthChart> chart) {
    dft::FibrationSpec spec;
    spec.N = 4;
    spec.n = 3;
    spec.n_prime = 1;
    spec.n_dprime = 2;
    spec.b_charts = {std::make_shared<SynthBChart>(chart->f, chart->g)};
    spec.phi_charts = {std::move(chart)};
    spec.kappa = [](const VecX&, const VecX&) { return 1.0; };
    spec.name = "synthetic";
    spec.validate();
    return spec;
}

VecX synth_point(const dft::FibrationSpec& spec, const VecX& z, double t) {
    VecX xp(1);
    xp << t;
    const auto& c = *spec.phi_charts.front();
    return c.assemble(xp, c.phi(z, xp));
}

}  // namespace

TEST_CASE("lines a_map reproduces the explicit chart derivative") {
    const auto spec = dft::lines_fibration();
    // theta = pi/2, s = 0: the line x2 = 0.
    const VecX z = vec2(kPi / 2, 0.0);
    VecX eta_dd(1);
    eta_dd << 1.0;
    for (double x1 : {-0.6, -0.1, 0.4, 0.9}) {
        const VecX x = vec2(x1, 0.0);
        const auto zeta = dft::a_map(spec, z, x, eta_dd);
        CHECK(zeta.covector(0) == doctest::Approx(-x1).epsilon(1e-12));
        CHECK(zeta.covector(1) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    // linearity: eta'' = 0 -> zeta = 0
    VecX zero(1);
    zero << 0.0;
    CHECK(dft::a_map(spec, z, vec2(0.4, 0.0), zero).covector.norm() == 0.0);
}

TEST_CASE("lines b_map: eta = -omega(theta) for zeta'' = 1") {
    const auto spec = dft::lines_fibration();
    const VecX z = vec2(kPi / 2, 0.0);
    VecX zeta_dd(1);
    zeta_dd << 1.0;
    const auto eta = dft::b_map(spec, z, vec2(0.25, 0.0), zeta_dd);
    CHECK(eta.covector(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eta.covector(1) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("a_map rejects non-incident points") {
    const auto spec = dft::lines_fibration();
    VecX eta_dd(1);
    eta_dd << 1.0;
    CHECK_THROWS_AS(dft::a_map(spec, vec2(kPi / 2, 0.0), vec2(0.3, 0.5), eta_dd),
                    dft::NotIncidentError);
}

TEST_CASE("rank lemma and kernel identification on the built-in fibrations") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> ut(0.25, kPi - 0.25), us(-0.6, 0.6);
    const auto lines = dft::lines_fibration();
    for (int i = 0; i < 50; ++i) {
        const VecX z = vec2(ut(rng), us(rng));
        const VecX x = dft::line_candidates(z, 1.0, 9)[4];
        const auto& pc = lines.phi_at(z, x);
        const MatX pz = pc.phi_z(z, pc.x_prime(x));
        CHECK(pz.jacobiSvd().singularValues()(0) > 1e-8);  // rank 1 of a 1x2 row
        // tangent of H_x from the b-chart: w = (1, d b / d theta)
        const auto& bc = lines.b_at(z, x);
        const MatX bz = bc.b_zp(x, bc.z_prime(z));
        VecX w(2);
        w << 1.0, bz(0, 0);
        CHECK((pz * w).norm() <= 1e-6 * (1.0 + pz.norm() * w.norm()));
    }
}

TEST_CASE("v_space_dim: x = y gives 0, distinct points on a line give 1") {
    const auto spec = dft::lines_fibration();
    const VecX z = vec2(1.1, 0.2);
    const auto pts = dft::line_candidates(z, 1.0, 11);
    CHECK(dft::v_space_dim(spec, z, pts[3], pts[3]) == 0);
    CHECK(dft::v_space_dim(spec, z, pts[3], pts[7]) == 1);
    CHECK(dft::v_space_dim(spec, z, pts[7], pts[3]) == 1);  // symmetry
}

TEST_CASE("classify_triplet: Euclidean lines are never conjugate") {
    const auto spec = dft::lines_fibration();
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ut(0.2, kPi - 0.2), us(-0.5, 0.5);
    for (int i = 0; i < 30; ++i) {
        const VecX z = vec2(ut(rng), us(rng));
        const auto pts = dft::line_candidates(z, 1.0, 7);
        const auto rep = dft::classify_triplet(spec, z, pts[1], pts[5]);
        CHECK(!rep.degree.has_value());
        CHECK(rep.v_dim == 1);
    }
}

TEST_CASE("synthetic chart: identical rowspans give degree n''") {
    // f(t) = g(t) = t^2: at (x', y') = (-1, 1) the two row spans coincide.
    auto sq = [](double t) { return t * t; };
    auto dsq = [](double t) { return 2.0 * t; };
    const auto spec = synth_spec(std::make_shared<SynthChart>(sq, dsq, sq, dsq));
    VecX z(4);
    z << 0.3, -0.2, 0.7, 0.4;
    const VecX x = synth_point(spec, z, -1.0);
    const VecX y = synth_point(spec, z, 1.0);
    const auto rep = dft::classify_triplet(spec, z, x, y);
    REQUIRE(rep.degree.has_value());
    CHECK(*rep.degree == 2);
    CHECK(rep.v_dim == 0);
    // H vanishes for any independent Lambda
    MatX Lambda = MatX::Identity(2, 2);
    VecX xp(1), yp(1);
    xp << -1.0;
    yp << 1.0;
    const VecX H = dft::h_lambda(spec, z, xp, yp, Lambda);
    CHECK(H.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("synthetic chart: transversal rowspans give NotConjugate and H > 0") {
    auto lin = [](double t) { return t; };
    auto one = [](double) { return 1.0; };
    const auto spec = synth_spec(std::make_shared<SynthChart>(lin, one, lin, one));
    VecX z(4);
    z << 0.1, 0.5, -0.3, 0.8;
    const VecX x = synth_point(spec, z, 0.0);
    const VecX y = synth_point(spec, z, 1.0);
    const auto rep = dft::classify_triplet(spec, z, x, y);
    CHECK(!rep.degree.has_value());
    CHECK(rep.v_dim == 2);
    MatX Lambda = MatX::Identity(2, 2);
    VecX xp(1), yp(1);
    xp << 0.0;
    yp << 1.0;
    const VecX H = dft::h_lambda(spec, z, xp, yp, Lambda);
    CHECK(H.minCoeff() > 0.0);
    // dependent Lambda rows are rejected
    MatX bad(2, 2);
    bad << 1.0, 2.0, 2.0, 4.0;
    CHECK_THROWS_AS(dft::h_lambda(spec, z, xp, yp, bad), dft::DependentLambdaError);
}

TEST_CASE("synthetic chart with H identically zero: condition (H) rank 0") {
    auto zero = [](double) { return 0.0; };
    const auto spec = synth_spec(std::make_shared<SynthChart>(zero, zero, zero, zero));
    VecX z(4);
    z << 0.2, -0.6, 0.9, 0.3;
    const VecX x = synth_point(spec, z, -0.4);
    const VecX y = synth_point(spec, z, 0.5);
    const auto rep = dft::classify_triplet(spec, z, x, y);
    REQUIRE(rep.degree.has_value());
    CHECK(*rep.degree == 2);
    const auto ch = dft::condition_h_check(spec, z, x, y, 2, 8);
    CHECK(ch.max_rank == 0);
    CHECK(!ch.passes);
}

TEST_CASE("isolated degree-2 triplet fails the regularity probe") {
    // f(t) = t^2 matches on y = -x; g(t) = t^3 - t matches on the ellipse
    // x^2 + xy + y^2 = 1. They meet only at (1, -1): an isolated degree-2
    // triplet surrounded by degree-1 triplets.
    auto f = [](double t) { return t * t; };
    auto df = [](double t) { return 2.0 * t; };
    auto g = [](double t) { return t * t * t - t; };
    auto dg = [](double t) { return 3.0 * t * t - 1.0; };
    const auto spec = synth_spec(std::make_shared<SynthChart>(f, df, g, dg));
    VecX z(4);
    z << 0.4, 0.1, 0.6, -0.5;
    const VecX x = synth_point(spec, z, 1.0);
    const VecX y = synth_point(spec, z, -1.0);
    const auto rep = dft::classify_triplet(spec, z, x, y);
    REQUIRE(rep.degree.has_value());
    CHECK(*rep.degree == 2);
    // nearby conjugate triplets on y' = -x' have degree 1 only
    const VecX x1 = synth_point(spec, z, 0.7);
    const VecX y1 = synth_point(spec, z, -0.7);
    const auto rep1 = dft::classify_triplet(spec, z, x1, y1);
    REQUIRE(rep1.degree.has_value());
    CHECK(*rep1.degree == 1);
    CHECK(!dft::regularity_probe(spec, rep, 0.05, 0.15, 0.15, 60));
}

TEST_CASE("bolker rank on Euclidean lines: immersive and scale-invariant") {
    const auto spec = dft::lines_fibration();
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> ut(0.2, kPi - 0.2), us(-0.5, 0.5);
    for (int i = 0; i < 25; ++i) {
        const VecX z = vec2(ut(rng), us(rng));
        const VecX x = dft::line_candidates(z, 1.0, 5)[2];
        VecX eta_dd(1);
        eta_dd << 1.0;
        const auto r1 = dft::bolker_rank(spec, z, x, eta_dd);
        CHECK(r1.rank == 2);
        CHECK(r1.immersive);
        eta_dd << -3.7;
        const auto r2 = dft::bolker_rank(spec, z, x, eta_dd);
        CHECK(r2.immersive == r1.immersive);
    }
}

TEST_CASE("pi_L scan is empty on Euclidean lines") {
    const auto spec = dft::lines_fibration();
    const VecX z = vec2(0.9, 0.15);
    const auto pts = dft::line_candidates(z, 1.0, 101);
    const VecX x = pts[50];
    VecX eta_dd(1);
    eta_dd << 1.0;
    const auto zeta = dft::a_map(spec, z, x, eta_dd);
    const auto& pc = spec.phi_at(z, x);
    const VecX eta = pc.conormal(z, pc.x_prime(x), eta_dd);
    const auto hits = dft::pi_l_scan(spec, z, zeta.covector, x, eta, pts);
    CHECK(hits.empty());
}

TEST_CASE("focusing X-ray fibration: conjugate pair detected and classified") {
    const auto m = dft::MetricField::focusing(0.8, 0.25);
    const auto spec = dft::xray_fibration(m);
    // the diameter through the bump: beta = 0, alpha = 0
    const VecX z = vec2(0.0, 0.0);
    const auto g =
        dft::integrate_geodesic(m, dft::boundary_start(m, 0.0, 0.0), 1e-3 * m.r_dom);
    const auto pairs = dft::conjugate_scan(m, g);
    REQUIRE(!pairs.empty());
    // interior conjugate pair: seed the Jacobi field at t0 away from the
    // boundary and locate the partner as the zero of the normal solution
    const double t0 = 0.25;
    const auto sol = dft::jacobi_fields(m, g, t0);
    double t1 = -1.0;
    for (double t = t0 + 0.05; t < g.exit_time - 0.02; t += 1e-3) {
        if (sol.normal(t) * sol.normal(t + 1e-3) < 0.0) {
            t1 = t + 1e-3 * sol.normal(t) / (sol.normal(t) - sol.normal(t + 1e-3));
            break;
        }
    }
    REQUIRE(t1 > 0.0);
    const VecX x = dft::xray_point(m, z, t0);
    const VecX y = dft::xray_point(m, z, t1);
    CHECK(dft::v_space_dim(spec, z, x, y) == 0);
    const auto rep = dft::classify_triplet(spec, z, x, y);
    REQUIRE(rep.degree.has_value());
    CHECK(*rep.degree == 1);
    // a non-conjugate pair on the same geodesic is clean
    const VecX y2 = dft::xray_point(m, z, 0.5 * (t0 + t1));
    if ((y2 - x).norm() > 1e-3) {
        const auto rep2 = dft::classify_triplet(spec, z, x, y2);
        CHECK(!rep2.degree.has_value());
    }
    const auto ch = dft::condition_h_check(spec, z, x, y, 1, 4);
    CHECK(ch.max_rank == 1);
    CHECK(ch.passes);
}

TEST_CASE("geodesic fibration at lambda = 0 agrees with the Euclidean lines") {
    const auto m = dft::MetricField::euclidean(1.0);
    const auto xray = dft::xray_fibration(m);
    const auto lines = dft::lines_fibration();
    // the horizontal diameter: beta = 0, alpha = 0 maps to theta = 3 pi / 2, s = 0
    const VecX zx = vec2(0.0, 0.0);
    const VecX zl = dft::line_from_boundary(0.0, 0.0, 1.0);
    VecX eta_dd(1);
    eta_dd << 1.0;
    for (double x1 : {-0.5, 0.0, 0.45}) {
        const VecX x = vec2(x1, 0.0);
        REQUIRE(lines.is_incident(zl, x));
        const auto zeta_l = dft::a_map(lines, zl, x, eta_dd);
        const auto zeta_x = dft::a_map(xray, zx, x, eta_dd);
        // covector pullback along (theta, s) = (beta + alpha - pi/2, r sin alpha)
        Eigen::Matrix2d J;
        J << 1.0, 1.0, 0.0, std::cos(zx(1));
        const VecX expected = J.transpose() * zeta_l.covector;
        CHECK((zeta_x.covector - expected).norm() < 1e-8);
    }
}

TEST_CASE("conjugate report CSV serialization") {
    dft::ConjugateReport rep;
    rep.z = vec2(0.1, 0.2);
    rep.x = vec2(0.3, 0.4);
    rep.y = vec2(0.5, 0.6);
    rep.v_dim = 0;
    rep.degree = 1;
    rep.regular = true;
    rep.condition_h_rank = 1;
    const std::string csv = dft::conjugate_reports_csv({rep});
    CHECK(csv.find("degree") != std::string::npos);
    CHECK(csv.find("\n") != std::string::npos);
    CHECK(csv.find("1") != std::string::npos);
}
