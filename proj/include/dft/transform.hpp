#pragma once

#include <functional>

#include "dft/fibration.hpp"
#include "dft/grid.hpp"
#include "dft/metric.hpp"

namespace dft {

/// Empty sinogram on the default lines grid: n_theta angles theta_i = i pi /
/// n_theta and n_offset offsets spanning [-extent, extent].
SinogramFunction lines_sinogram(int n_theta, int n_offset, double extent);

/// Empty sinogram on the default X-ray grid: n_beta boundary angles over
/// [0, 2 pi) and n_alpha midpoint directions inside (-pi/2, pi/2) with a
/// 0.05 tangential margin.
SinogramFunction xray_sinogram(int n_beta, int n_alpha);

/// Rf(z) = sum_i kappa(z, x_i) f(x_i) w_i over the dG_z quadrature nodes.
/// The result reuses the grid of `layout`. Throws UnsupportedSpecError if
/// the spec carries no G_z curve parametrization.
SinogramFunction forward(const FibrationSpec& spec, const GridFunction& f,
                         const Quadrature& q, const SinogramFunction& layout);

/// Default layouts: lines get 180 x (2 size + 1), X-ray 128 x 128.
SinogramFunction forward(const FibrationSpec& spec, const GridFunction& f,
                         const Quadrature& q);

/// Exact matrix transpose of `forward` under the step0*step1 and spacing^2
/// inner products: the same ray enumeration scatters with the measure ratio.
GridFunction adjoint(const FibrationSpec& spec, const SinogramFunction& u,
                     const Quadrature& q, int grid_size, double extent);

/// Direct geodesic ray integrator with a point weight w; cross-checks
/// forward() on the X-ray fibration. Throws TrappedError via the integrator.
SinogramFunction xray_forward(const MetricField& metric,
                              const std::function<double(const Vec2&)>& w,
                              const GridFunction& f, const Quadrature& q,
                              int n_beta, int n_alpha);

/// Independent discretization of the H_x integral for the lines instance
/// (angle sum of interpolated sinogram values); cross-checks `adjoint` at
/// 1e-3 and is the backprojection used by the inversion pipeline.
GridFunction backproject_lines(const SinogramFunction& u, int grid_size, double extent);

}  // namespace dft
