#pragma once

#include <vector>

#include "dft/fibration.hpp"
#include "dft/geodesic.hpp"
#include "dft/metric.hpp"

namespace dft {

/// Euclidean lines on the plane: z = (theta, s) with the line x.w(theta) = s,
/// w(theta) = (cos theta, sin theta). N = n = 2, n' = n'' = 1. Two phi-charts
/// (graph over x1 when |sin theta| > 0.1, graph over x2 when |cos theta| > 0.1)
/// and the global b-chart s = x.w(theta). kappa = 1. `extent` sets the
/// half-width of the square the G_z chords have to cross.
FibrationSpec lines_fibration(double extent = 1.0);

/// Geodesic X-ray fibration of a conformal disk metric: z = (beta, alpha)
/// parametrizes the inward unit sphere bundle over the boundary circle
/// (boundary angle beta, entry direction alpha against the inward normal),
/// G_z is the maximal unit-speed geodesic. Charts are graph charts over the
/// monotone branches of a coordinate axis along the geodesic; the b-chart
/// recovers alpha by Newton shooting. kappa = 1.
FibrationSpec xray_fibration(const MetricField& metric);

/// Equally spaced sample points along the line z = (theta, s), signed arc
/// parameter in [-extent, extent].
std::vector<VecX> line_candidates(const VecX& z, double extent, int count);

/// Sample points along the geodesic of z = (beta, alpha), equally spaced in t
/// over (0, exit_time), endpoints excluded.
std::vector<VecX> xray_candidates(const MetricField& metric, const VecX& z, int count);

/// For the Euclidean metric the geodesic of (beta, alpha) is the straight
/// line (theta, s) = (beta + alpha - pi/2, r sin alpha); theta is wrapped
/// to [0, 2 pi).
VecX line_from_boundary(double beta, double alpha, double r);

/// Point gamma_z(t) on the geodesic of z = (beta, alpha).
VecX xray_point(const MetricField& metric, const VecX& z, double t);

}  // namespace dft
