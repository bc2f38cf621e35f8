#include "dft/normal.hpp"

#include <fftw3.h>

#include <cmath>

#include "dft/errors.hpp"
#include "dft/fibrations.hpp"
#include "dft/geodesic.hpp"

namespace dft {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_pm_pi(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a - kPi;
}

}  // namespace

// ---------------------------------------------------------------------------
// normal operator

GridFunction NormalOperator::apply(const GridFunction& f) const {
    const SinogramFunction u = forward(spec_, f, q_, layout_);
    return adjoint(spec_, u, q_, f.size, f.extent);
}

Eigen::MatrixXd NormalOperator::materialize(int grid_size, double extent) const {
    const int cells = grid_size * grid_size;
    Eigen::MatrixXd m(cells, cells);
    GridFunction e = GridFunction::zeros(grid_size, extent);
    for (int c = 0; c < cells; ++c) {
        e.values.setZero();
        e.values(c / grid_size, c % grid_size) = 1.0;
        const GridFunction col = apply(e);
        for (int i = 0; i < grid_size; ++i)
            for (int j = 0; j < grid_size; ++j) m(i * grid_size + j, c) = col.values(i, j);
    }
    return m;
}

GridFunction normal_apply(const FibrationSpec& spec, const GridFunction& f,
                          const Quadrature& q) {
    const SinogramFunction u = forward(spec, f, q);
    return adjoint(spec, u, q, f.size, f.extent);
}

// ---------------------------------------------------------------------------
// Fourier filters

double helgason_constant(int d, int n) {
    if (d < 1 || d >= n) throw DimensionError("helgason constant needs 1 <= d < n");
    return std::pow(4.0 * kPi, d) * std::tgamma(n / 2.0) / std::tgamma((n - 1) / 2.0);
}

GridFunction fractional_laplacian(const GridFunction& f, double d, int pad_factor) {
    if (pad_factor < 1) throw ValidationError("pad factor must be >= 1");
    if (!f.all_finite()) throw ValidationError("fractional_laplacian: non-finite values");
    const int n = f.size;
    const int big = n * pad_factor;
    const int off = (big - n) / 2;
    const double h = f.spacing();

    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(big) * big);
    for (long i = 0; i < static_cast<long>(big) * big; ++i) buf[i][0] = buf[i][1] = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) buf[(i + off) * static_cast<long>(big) + (j + off)][0] = f.values(i, j);

    fftw_plan fwd = fftw_plan_dft_2d(big, big, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_2d(big, big, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    const double dxi = 2.0 * kPi / (big * h);
    for (int i = 0; i < big; ++i) {
        const double xi_x = dxi * (i <= big / 2 ? i : i - big);
        for (int j = 0; j < big; ++j) {
            const double xi_y = dxi * (j <= big / 2 ? j : j - big);
            const double mult =
                (i == 0 && j == 0) ? 0.0 : std::pow(xi_x * xi_x + xi_y * xi_y, d / 2.0);
            const long idx = i * static_cast<long>(big) + j;
            buf[idx][0] *= mult;
            buf[idx][1] *= mult;
        }
    }
    fftw_execute(bwd);

    GridFunction out = GridFunction::zeros(n, f.extent);
    out.mask_radius = f.mask_radius;
    const double scale = 1.0 / (static_cast<double>(big) * big);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.values(i, j) = buf[(i + off) * static_cast<long>(big) + (j + off)][0] * scale;
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
    return out;
}

GridFunction helgason_filter(const GridFunction& f, int d, int n) {
    if (n != 2) throw DimensionError("grid filter implemented for n = 2");
    // f must arrive padded: its support may fill at most half the grid
    const double peak = f.values.cwiseAbs().maxCoeff();
    if (peak > 0.0) {
        int lo_i = f.size, hi_i = -1, lo_j = f.size, hi_j = -1;
        for (int i = 0; i < f.size; ++i) {
            for (int j = 0; j < f.size; ++j) {
                if (std::abs(f.values(i, j)) <= 1e-12 * peak) continue;
                lo_i = std::min(lo_i, i);
                hi_i = std::max(hi_i, i);
                lo_j = std::min(lo_j, j);
                hi_j = std::max(hi_j, j);
            }
        }
        if (hi_i - lo_i + 1 > f.size / 2 || hi_j - lo_j + 1 > f.size / 2)
            throw PaddingTooSmallError("support exceeds half of the padded grid");
    }
    return fractional_laplacian(f, static_cast<double>(d), 1);
}

GridFunction radon_invert(const SinogramFunction& u, int grid_size, double extent) {
    // backprojection on the 4x extended grid so the global Fourier multiplier
    // sees the slow 1/r backprojection tails instead of truncating them; the
    // truncation shows up as a constant offset that shrinks with the padding
    const GridFunction back = backproject_lines(u, 4 * grid_size, 4.0 * extent);
    const GridFunction filtered = fractional_laplacian(back, 1.0, 1);
    GridFunction out = GridFunction::zeros(grid_size, extent);
    const int off = 3 * grid_size / 2;
    for (int i = 0; i < grid_size; ++i)
        for (int j = 0; j < grid_size; ++j)
            out.values(i, j) = filtered.values(i + off, j + off) / (2.0 * kPi);
    return out;
}

// ---------------------------------------------------------------------------
// order probes

namespace {

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// (R*R probe)(x0) for the lines instance: the inner Gaussian line integrals
/// have the closed form sigma sqrt(2 pi) exp(-(lambda sigma c)^2/2) with
/// c = w_perp(theta) . xi0, leaving a single theta quadrature.
double lines_normal_probe_value(const Vec2& xi0, double lambda, double sigma) {
    const int nq = 4096;
    double acc = 0.0;
    for (int i = 0; i < nq; ++i) {
        const double theta = kPi * (i + 0.5) / nq;
        const double c = -std::sin(theta) * xi0[0] + std::cos(theta) * xi0[1];
        acc += std::exp(-0.5 * lambda * lambda * sigma * sigma * c * c);
    }
    return acc * (kPi / nq) * sigma * std::sqrt(2.0 * kPi);
}

GridFunction probe_grid(int size, double extent, const Vec2& x0, const Vec2& xi0,
                        double lambda, double sigma) {
    GridFunction f = GridFunction::zeros(size, extent);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            const Vec2 r = f.cell_center(i, j) - x0;
            f.values(i, j) =
                std::cos(lambda * r.dot(xi0)) * std::exp(-r.squaredNorm() / (2.0 * sigma * sigma));
        }
    }
    return f;
}

}  // namespace

OrderProbeResult order_probe(const FibrationSpec& spec, const Vec2& x0, const Vec2& xi0,
                             const std::vector<double>& freqs, ProbeOperator op,
                             double window_sigma, int grid_size) {
    if (freqs.size() < 2) throw ValidationError("order probe needs at least two frequencies");
    if (xi0.norm() == 0.0) throw ValidationError("order probe: zero direction");
    const Vec2 xin = xi0.normalized();
    if (op != ProbeOperator::identity && spec.name != "lines")
        throw UnsupportedSpecError("order probe implemented for the lines instance");

    if (spec.name == "lines") {
        // contamination pre-check: pi_L must be injective at the conormal data
        const double theta = std::atan2(xin[1], xin[0]);
        VecX z(2);
        z << (theta < 0.0 ? theta + kPi : theta), 0.0;
        z[1] = x0.dot(Vec2(std::cos(z[0]), std::sin(z[0])));
        const PhiChart& c = spec.phi_at(z, VecX(x0));
        VecX eta_dd(1);
        eta_dd[0] = xin[c.xd_idx[0]];
        const CotangentPoint zeta = a_map(spec, z, VecX(x0), eta_dd);
        const VecX eta = c.conormal(z, c.x_prime(VecX(x0)), eta_dd);
        const auto hits = pi_l_scan(spec, z, zeta.covector, VecX(x0), eta,
                                    line_candidates(z, std::sqrt(2.0), 801));
        if (!hits.empty())
            throw ConjugateContaminationError(
                "conjugate covector meets the probe data (x0, xi0)");
    }

    OrderProbeResult out;
    out.freqs = freqs;
    std::vector<double> lx, ly;
    for (const double lambda : freqs) {
        double value = 0.0;
        switch (op) {
            case ProbeOperator::identity:
                value = 1.0;  // the windowed probe evaluated at its own center
                break;
            case ProbeOperator::normal:
                value = lines_normal_probe_value(xin, lambda, window_sigma);
                break;
            case ProbeOperator::inverted: {
                const GridFunction f =
                    probe_grid(grid_size, 1.0, x0, xin, lambda, window_sigma);
                const SinogramFunction u = forward(spec, f, Quadrature{});
                const GridFunction rec = radon_invert(u, grid_size, 1.0);
                value = std::abs(rec.interpolate(x0));
                break;
            }
        }
        out.amplitudes.push_back(value);
        lx.push_back(std::log(lambda));
        ly.push_back(std::log(std::max(value, 1e-300)));
    }
    out.slope = fit_slope(lx, ly);
    return out;
}

// ---------------------------------------------------------------------------
// artifacts

ArtifactPrediction artifact_predict(const MetricField& metric, const Vec2& x0,
                                    const Vec2& eta0) {
    if (eta0.norm() == 0.0) throw ValidationError("artifact_predict: eta0 must be nonzero");
    ArtifactPrediction pred;
    pred.x0 = x0;
    pred.eta0 = eta0;
    pred.degree = 1;
    pred.label = "A_1";

    // the geodesic through x0 conormal to eta0 (gammadot is the Euclidean
    // perp of eta0 in the conformal chart)
    const Vec2 dir = Vec2(-eta0[1], eta0[0]).normalized();
    const double h = 1e-3 * metric.r_dom;
    const double el = std::exp(-metric.lambda(x0));
    const Geodesic backward = integrate_geodesic(metric, {x0, -el * dir}, h);

    // re-anchor at the boundary to get the (beta, alpha) parametrization
    const Vec2 xb = backward.back().x;
    const Vec2 vb = -backward.back().v.normalized();
    const double beta = std::atan2(xb[1], xb[0]);
    const double alpha = wrap_pm_pi(std::atan2(-vb[1], -vb[0]) - beta);
    const Geodesic g = integrate_geodesic(metric, boundary_start(metric, beta, alpha), h);
    // arclength from the boundary to x0, refined against the re-anchored ray
    double t0 = backward.exit_time;
    for (int it = 0; it < 60; ++it) {
        const double d = 0.5 * h * (it < 30 ? 1.0 : 0.01);
        const double f0 = (g.at(std::max(0.0, t0 - d)).x - x0).squaredNorm();
        const double f1 = (g.at(t0).x - x0).squaredNorm();
        const double f2 = (g.at(std::min(g.exit_time, t0 + d)).x - x0).squaredNorm();
        if (f0 < f1 && f0 <= f2) t0 = std::max(0.0, t0 - d);
        else if (f2 < f1) t0 = std::min(g.exit_time, t0 + d);
    }

    const JacobiSolution js = jacobi_fields(metric, g, t0);
    std::vector<double> partners;
    double prev = js.normal(g.samples[1].t);
    for (std::size_t i = 2; i < g.samples.size(); ++i) {
        const double t = g.samples[i].t;
        const double cur = js.normal(t);
        if (prev * cur < 0.0 && std::abs(t - t0) > 10.0 * h) {
            double lo = g.samples[i - 1].t, hi = t;
            for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
                const double mid = (lo + hi) / 2.0;
                if (js.normal(mid) * prev > 0.0) lo = mid;
                else hi = mid;
            }
            partners.push_back((lo + hi) / 2.0);
        }
        prev = cur;
    }
    if (partners.empty()) return pred;

    // honest covector transport through the fibration's B maps
    const FibrationSpec spec = xray_fibration(metric);
    VecX z(2);
    z << beta, alpha;
    VecX x0v(2);
    x0v = x0;
    const PhiChart& cx = spec.phi_at(z, x0v);
    VecX eta_dd(1);
    eta_dd[0] = eta0[cx.xd_idx[0]];
    const CotangentPoint zeta = a_map(spec, z, x0v, eta_dd);
    for (const double t1 : partners) {
        VecX y(2);
        y = g.at(t1).x;
        const BChart& bc = spec.b_at(z, y);
        VecX zeta_dd(1);
        zeta_dd[0] = zeta.covector[bc.zd_idx[0]];
        const CotangentPoint eta_t = b_map(spec, z, y, zeta_dd);
        bool dup = false;
        for (const auto& p : pred.predicted)
            if ((p.first - Vec2(y[0], y[1])).norm() < 1e-6) dup = true;
        if (!dup)
            pred.predicted.emplace_back(Vec2(y[0], y[1]),
                                        Vec2(eta_t.covector[0], eta_t.covector[1]));
    }
    return pred;
}

ArtifactMeasurement artifact_measure(const MetricField& metric, const Vec2& x0,
                                     const ArtifactPrediction& prediction,
                                     int grid_size, int n_beta, int n_alpha) {
    const double extent = metric.r_dom;
    const GridFunction phantom = phantom_point(grid_size, extent, x0);
    const Quadrature q;
    const SinogramFunction layout = xray_sinogram(n_beta, n_alpha);
    const NormalOperator op_metric(xray_fibration(metric), q, layout);
    const NormalOperator op_flat(xray_fibration(MetricField::euclidean(extent)), q, layout);
    const GridFunction g = op_metric.apply(phantom);
    const GridFunction ref = op_flat.apply(phantom);

    // match the flat reference at the source response
    const double gref = ref.interpolate(x0);
    const double scale = gref != 0.0 ? g.interpolate(x0) / gref : 1.0;
    Eigen::MatrixXd residual = g.values - scale * ref.values;

    const double h = g.spacing();
    double min_pred = std::numeric_limits<double>::infinity();
    for (const auto& p : prediction.predicted)
        min_pred = std::min(min_pred, (p.first - x0).norm());
    const double excl =
        std::max(8.0 * h, std::isfinite(min_pred) ? 0.4 * min_pred : 0.0);

    double peak = 0.0, bg_sum = 0.0;
    long bg_count = 0;
    int pi = -1, pj = -1;
    for (int i = 0; i < grid_size; ++i) {
        for (int j = 0; j < grid_size; ++j) {
            const Vec2 x = g.cell_center(i, j);
            if (x.norm() > 0.92 * extent || (x - x0).norm() < excl) continue;
            const double r = std::abs(residual(i, j));
            bg_sum += r;
            ++bg_count;
            if (r > peak) {
                peak = r;
                pi = i;
                pj = j;
            }
        }
    }
    const double background = bg_count > 0 ? bg_sum / bg_count : 0.0;
    if (pi < 0 || peak < 3.0 * background)
        throw NoArtifactFound("residual peak below 3x the background level");

    // intensity-weighted centroid over a 5x5 window around the peak
    Vec2 centroid = Vec2::Zero();
    double mass = 0.0;
    for (int di = -2; di <= 2; ++di) {
        for (int dj = -2; dj <= 2; ++dj) {
            const int i = pi + di, j = pj + dj;
            if (i < 0 || j < 0 || i >= grid_size || j >= grid_size) continue;
            const double w = std::abs(residual(i, j));
            centroid += w * g.cell_center(i, j);
            mass += w;
        }
    }
    centroid /= mass;

    ArtifactMeasurement out;
    out.centroid = centroid;
    out.peak = peak;
    out.background = background;
    out.distance_to_prediction = std::numeric_limits<double>::infinity();
    for (const auto& p : prediction.predicted)
        out.distance_to_prediction =
            std::min(out.distance_to_prediction, (p.first - centroid).norm());
    return out;
}

}  // namespace dft
