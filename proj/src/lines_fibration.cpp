#include <cmath>

#include "dft/errors.hpp"
#include "dft/fibrations.hpp"

namespace dft {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec2 omega(double theta) { return {std::cos(theta), std::sin(theta)}; }
Vec2 omega_perp(double theta) { return {-std::sin(theta), std::cos(theta)}; }

/// Graph chart over x1: x2 = (s - x1 cos theta) / sin theta, |sin theta| > 0.1.
class LineChartX1 final : public PhiChart {
public:
    LineChartX1() {
        xp_idx = {0};
        xd_idx = {1};
    }

    bool valid(const VecX& z, const VecX&) const override {
        return std::abs(std::sin(z[0])) > 0.1;
    }

    VecX phi(const VecX& z, const VecX& xp) const override {
        const double st = std::sin(z[0]);
        if (std::abs(st) <= 0.1) throw ChartDomainError("line chart over x1: sin theta too small");
        VecX out(1);
        out[0] = (z[1] - xp[0] * std::cos(z[0])) / st;
        return out;
    }

    MatX phi_z(const VecX& z, const VecX& xp) const override {
        const double st = std::sin(z[0]), ct = std::cos(z[0]);
        const double f = (z[1] - xp[0] * ct) / st;
        MatX out(1, 2);
        out(0, 0) = xp[0] - f * ct / st;
        out(0, 1) = 1.0 / st;
        return out;
    }

    MatX phi_xp(const VecX& z, const VecX&) const override {
        MatX out(1, 1);
        out(0, 0) = -std::cos(z[0]) / std::sin(z[0]);
        return out;
    }

    std::vector<MatX> phi_z_dxp(const VecX& z, const VecX&) const override {
        const double st = std::sin(z[0]);
        MatX d(1, 2);
        d(0, 0) = 1.0 / (st * st);  // d/dx1 of (x1 - f cot) with df/dx1 = -cot
        d(0, 1) = 0.0;
        return {d};
    }
};

/// Graph chart over x2: x1 = (s - x2 sin theta) / cos theta, |cos theta| > 0.1.
class LineChartX2 final : public PhiChart {
public:
    LineChartX2() {
        xp_idx = {1};
        xd_idx = {0};
    }

    bool valid(const VecX& z, const VecX&) const override {
        return std::abs(std::cos(z[0])) > 0.1;
    }

    VecX phi(const VecX& z, const VecX& xp) const override {
        const double ct = std::cos(z[0]);
        if (std::abs(ct) <= 0.1) throw ChartDomainError("line chart over x2: cos theta too small");
        VecX out(1);
        out[0] = (z[1] - xp[0] * std::sin(z[0])) / ct;
        return out;
    }

    MatX phi_z(const VecX& z, const VecX& xp) const override {
        const double st = std::sin(z[0]), ct = std::cos(z[0]);
        const double f = (z[1] - xp[0] * st) / ct;
        MatX out(1, 2);
        out(0, 0) = -xp[0] + f * st / ct;
        out(0, 1) = 1.0 / ct;
        return out;
    }

    MatX phi_xp(const VecX& z, const VecX&) const override {
        MatX out(1, 1);
        out(0, 0) = -std::sin(z[0]) / std::cos(z[0]);
        return out;
    }

    std::vector<MatX> phi_z_dxp(const VecX& z, const VecX&) const override {
        const double ct = std::cos(z[0]);
        MatX d(1, 2);
        d(0, 0) = -1.0 / (ct * ct);
        d(0, 1) = 0.0;
        return {d};
    }
};

/// Global b-chart: s = b(x, theta) = x . w(theta).
class LineBChart final : public BChart {
public:
    LineBChart() {
        zp_idx = {0};
        zd_idx = {1};
    }

    bool valid(const VecX&, const VecX&) const override { return true; }

    VecX b(const VecX& x, const VecX& zp) const override {
        VecX out(1);
        out[0] = x.head<2>().dot(omega(zp[0]));
        return out;
    }

    MatX b_x(const VecX&, const VecX& zp) const override {
        return omega(zp[0]).transpose();
    }

    MatX b_zp(const VecX& x, const VecX& zp) const override {
        MatX out(1, 1);
        out(0, 0) = x.head<2>().dot(omega_perp(zp[0]));
        return out;
    }

    std::vector<MatX> b_x_dzp(const VecX&, const VecX& zp) const override {
        return {omega_perp(zp[0]).transpose().eval()};
    }
};

}  // namespace

FibrationSpec lines_fibration(double extent) {
    FibrationSpec spec;
    spec.N = 2;
    spec.n = 2;
    spec.n_prime = 1;
    spec.n_dprime = 1;
    spec.phi_charts = {std::make_shared<LineChartX1>(), std::make_shared<LineChartX2>()};
    spec.b_charts = {std::make_shared<LineBChart>()};
    spec.kappa = [](const VecX&, const VecX&) { return 1.0; };
    spec.incident = [](const VecX& z, const VecX& x) {
        return std::abs(x.head<2>().dot(omega(z[0])) - z[1]) <= 1e-9;
    };
    // chord of the line across the bounding circle |x| = sqrt(2) of the
    // unit square; integrands vanish outside the disk anyway
    spec.gz_points = [extent](const VecX& z, double step) {
        FibrationSpec::GzSampling out;
        const double reach = std::sqrt(2.0) * extent;
        if (std::abs(z[1]) >= reach) return out;
        const double half = std::sqrt(reach * reach - z[1] * z[1]);
        const Vec2 w = omega(z[0]);
        const Vec2 wp = omega_perp(z[0]);
        const int count = std::max(2, static_cast<int>(std::ceil(2.0 * half / step)) + 1);
        out.ds = 2.0 * half / (count - 1);
        out.points.reserve(count);
        for (int i = 0; i < count; ++i)
            out.points.push_back(z[1] * w + (-half + i * out.ds) * wp);
        return out;
    };
    spec.name = "lines";
    spec.validate();
    return spec;
}

std::vector<VecX> line_candidates(const VecX& z, double extent, int count) {
    const Vec2 w = omega(z[0]);
    const Vec2 wp = omega_perp(z[0]);
    std::vector<VecX> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double t = -extent + 2.0 * extent * i / (count - 1);
        VecX x(2);
        x = z[1] * w + t * wp;
        out.push_back(x);
    }
    return out;
}

VecX line_from_boundary(double beta, double alpha, double r) {
    double theta = beta + alpha - kPi / 2.0;
    theta = std::fmod(theta, 2.0 * kPi);
    if (theta < 0.0) theta += 2.0 * kPi;
    VecX z(2);
    z << theta, r * std::sin(alpha);
    return z;
}

}  // namespace dft
