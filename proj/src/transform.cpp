#include "dft/transform.hpp"

#include <cmath>

#include "dft/errors.hpp"
#include "dft/geodesic.hpp"

namespace dft {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAlphaMargin = 0.05;

/// Shared bilinear corner enumeration: gather and scatter walk exactly the
/// same (cell, weight) pairs, which makes the adjoint a true transpose.
template <class Body>
void bilinear_corners(int size, double extent, const Vec2& x, Body&& body) {
    const double h = 2.0 * extent / size;
    const double u = (x[0] + extent) / h - 0.5;
    const double v = (x[1] + extent) / h - 0.5;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const double fu = u - i0, fv = v - j0;
    for (int di = 0; di <= 1; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
            const int i = i0 + di, j = j0 + dj;
            if (i < 0 || j < 0 || i >= size || j >= size) continue;
            body(i, j, (di ? fu : 1.0 - fu) * (dj ? fv : 1.0 - fv));
        }
    }
}

double quad_weight(const Quadrature& q, double ds, std::size_t k, std::size_t count) {
    if (q.rule == QuadratureRule::trapezoid && (k == 0 || k + 1 == count)) return ds / 2.0;
    return ds;
}

void require_curve(const FibrationSpec& spec) {
    if (!spec.gz_points)
        throw UnsupportedSpecError("fibration '" + spec.name +
                                   "' has no G_z curve parametrization");
}

}  // namespace

SinogramFunction lines_sinogram(int n_theta, int n_offset, double extent) {
    if (n_theta < 2 || n_offset < 3) throw ValidationError("sinogram grid too small");
    SinogramFunction u;
    u.label0 = "theta";
    u.label1 = "s";
    u.origin0 = 0.0;
    u.step0 = kPi / n_theta;
    u.origin1 = -extent;
    u.step1 = 2.0 * extent / (n_offset - 1);
    u.values = Eigen::MatrixXd::Zero(n_theta, n_offset);
    return u;
}

SinogramFunction xray_sinogram(int n_beta, int n_alpha) {
    if (n_beta < 2 || n_alpha < 2) throw ValidationError("sinogram grid too small");
    const double reach = kPi / 2.0 - kAlphaMargin;
    SinogramFunction u;
    u.label0 = "beta";
    u.label1 = "alpha";
    u.origin0 = 0.0;
    u.step0 = 2.0 * kPi / n_beta;
    u.step1 = 2.0 * reach / n_alpha;
    u.origin1 = -reach + u.step1 / 2.0;  // midpoints avoid tangential entries
    u.values = Eigen::MatrixXd::Zero(n_beta, n_alpha);
    return u;
}

SinogramFunction forward(const FibrationSpec& spec, const GridFunction& f,
                         const Quadrature& q, const SinogramFunction& layout) {
    require_curve(spec);
    if (!f.all_finite()) throw ValidationError("forward: non-finite grid values");
    SinogramFunction out = layout;
    out.values.setZero();
    const double step = q.resolve_step(f.spacing());
    VecX z(2);
    for (int i = 0; i < out.count0(); ++i) {
        for (int j = 0; j < out.count1(); ++j) {
            z << out.node0(i), out.node1(j);
            const auto gz = spec.gz_points(z, step);
            double acc = 0.0;
            for (std::size_t k = 0; k < gz.points.size(); ++k) {
                const Vec2& x = gz.points[k];
                const double w =
                    spec.kappa(z, x) * quad_weight(q, gz.ds, k, gz.points.size());
                bilinear_corners(f.size, f.extent, x, [&](int ci, int cj, double bw) {
                    acc += w * bw * f.values(ci, cj);
                });
            }
            out.values(i, j) = acc;
        }
    }
    return out;
}

SinogramFunction forward(const FibrationSpec& spec, const GridFunction& f,
                         const Quadrature& q) {
    const bool xray = spec.name.rfind("xray", 0) == 0;
    const SinogramFunction layout =
        xray ? xray_sinogram(128, 128) : lines_sinogram(180, 2 * f.size + 1, f.extent);
    return forward(spec, f, q, layout);
}

GridFunction adjoint(const FibrationSpec& spec, const SinogramFunction& u,
                     const Quadrature& q, int grid_size, double extent) {
    require_curve(spec);
    if (!u.all_finite()) throw ValidationError("adjoint: non-finite sinogram values");
    GridFunction out = GridFunction::zeros(grid_size, extent);
    const double h = out.spacing();
    const double ratio = u.step0 * u.step1 / (h * h);
    const double step = q.resolve_step(h);
    VecX z(2);
    for (int i = 0; i < u.count0(); ++i) {
        for (int j = 0; j < u.count1(); ++j) {
            const double uz = u.values(i, j);
            if (uz == 0.0) continue;
            z << u.node0(i), u.node1(j);
            const auto gz = spec.gz_points(z, step);
            for (std::size_t k = 0; k < gz.points.size(); ++k) {
                const Vec2& x = gz.points[k];
                const double w =
                    spec.kappa(z, x) * quad_weight(q, gz.ds, k, gz.points.size());
                bilinear_corners(grid_size, extent, x, [&](int ci, int cj, double bw) {
                    out.values(ci, cj) += ratio * uz * w * bw;
                });
            }
        }
    }
    return out;
}

SinogramFunction xray_forward(const MetricField& metric,
                              const std::function<double(const Vec2&)>& w,
                              const GridFunction& f, const Quadrature& q,
                              int n_beta, int n_alpha) {
    if (!f.all_finite()) throw ValidationError("xray_forward: non-finite grid values");
    SinogramFunction out = xray_sinogram(n_beta, n_alpha);
    const double step = q.resolve_step(f.spacing());
    for (int i = 0; i < n_beta; ++i) {
        for (int j = 0; j < n_alpha; ++j) {
            const Geodesic g = integrate_geodesic(
                metric, boundary_start(metric, out.node0(i), out.node1(j)),
                1e-3 * metric.r_dom);
            const int count =
                std::max(2, static_cast<int>(std::ceil(g.exit_time / step)) + 1);
            const double ds = g.exit_time / (count - 1);
            double acc = 0.0;
            for (int k = 0; k < count; ++k) {
                const Vec2 x = g.at(k * ds).x;
                acc += w(x) * f.interpolate(x) * quad_weight(q, ds, k, count);
            }
            out.values(i, j) = acc;
        }
    }
    return out;
}

GridFunction backproject_lines(const SinogramFunction& u, int grid_size, double extent) {
    if (u.label0 != "theta") throw UnsupportedSpecError("backproject_lines needs a theta/s sinogram");
    GridFunction out = GridFunction::zeros(grid_size, extent);
    for (int ci = 0; ci < grid_size; ++ci) {
        for (int cj = 0; cj < grid_size; ++cj) {
            const Vec2 x = out.cell_center(ci, cj);
            double acc = 0.0;
            for (int i = 0; i < u.count0(); ++i) {
                const double theta = u.node0(i);
                const double s = x[0] * std::cos(theta) + x[1] * std::sin(theta);
                // linear interpolation along the offset axis, zero outside
                const double pos = (s - u.origin1) / u.step1;
                const int j0 = static_cast<int>(std::floor(pos));
                const double fj = pos - j0;
                double v = 0.0;
                if (j0 >= 0 && j0 < u.count1()) v += (1.0 - fj) * u.values(i, j0);
                if (j0 + 1 >= 0 && j0 + 1 < u.count1()) v += fj * u.values(i, j0 + 1);
                acc += v;
            }
            out.values(ci, cj) = acc * u.step0;
        }
    }
    return out;
}

}  // namespace dft
