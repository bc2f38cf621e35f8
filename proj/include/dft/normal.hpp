#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dft/fibration.hpp"
#include "dft/grid.hpp"
#include "dft/metric.hpp"
#include "dft/transform.hpp"

namespace dft {

/// The normal operator R*R of a discretized fibration transform: the
/// composition adjoint(forward(.)) on a fixed sinogram layout, with an
/// optional dense materialization for the symmetry/PSD diagnostics.
class NormalOperator {
public:
    NormalOperator(FibrationSpec spec, Quadrature q, SinogramFunction layout)
        : spec_(std::move(spec)), q_(q), layout_(std::move(layout)) {}

    GridFunction apply(const GridFunction& f) const;

    /// Dense (cells x cells) matrix of the operator on a grid of the given
    /// geometry; columns are normal_apply of the unit cell functions.
    Eigen::MatrixXd materialize(int grid_size, double extent) const;

    const FibrationSpec& spec() const { return spec_; }
    const SinogramFunction& layout() const { return layout_; }

private:
    FibrationSpec spec_;
    Quadrature q_;
    SinogramFunction layout_;
};

/// adjoint(forward(f)) with the default layout of the spec.
GridFunction normal_apply(const FibrationSpec& spec, const GridFunction& f,
                          const Quadrature& q);

/// C(d, n) = (4 pi)^d Gamma(n/2) / Gamma((n-1)/2); evaluates to 4 sqrt(pi)
/// at d = 1, n = 2.
double helgason_constant(int d, int n);

/// Fourier multiplier |xi|^d (the fractional Laplacian (-Delta)^{d/2}) on the
/// pad_factor-times zero-extended grid, cropped back. pad_factor = 1 applies
/// the multiplier on the grid as-is (periodic convention).
GridFunction fractional_laplacian(const GridFunction& f, double d, int pad_factor = 2);

/// (-Delta)^{d/2} with the 2x padding contract of the inversion theorem;
/// throws PaddingTooSmallError if the support of f occupies more than half
/// of the padded grid.
GridFunction helgason_filter(const GridFunction& f, int d, int n);

/// Filtered backprojection realizing f = (1/(2 pi)) (-Delta)^{1/2} B u for a
/// lines sinogram u = Rf: backprojection on the 2x extended grid, the |xi|
/// multiplier there, then the central crop.
GridFunction radon_invert(const SinogramFunction& u, int grid_size, double extent);

enum class ProbeOperator {
    normal,    // R*R of the lines instance (or grid pipeline for others)
    identity,  // order-0 control
    inverted,  // (1/(2 pi)) (-Delta)^{1/2} B R, order 0 by the inversion theorem
};

struct OrderProbeResult {
    double slope = 0.0;
    std::vector<double> freqs;
    std::vector<double> amplitudes;
};

/// Applies the chosen operator to windowed probes cos(lambda (x-x0).xi0)
/// exp(-|x-x0|^2 / 2 sigma^2) and fits log-amplitude at x0 against
/// log(lambda). Throws ConjugateContaminationError if pi_l_scan reports a
/// collision for the conormal data of (x0, xi0).
OrderProbeResult order_probe(const FibrationSpec& spec, const Vec2& x0, const Vec2& xi0,
                             const std::vector<double>& freqs,
                             ProbeOperator op = ProbeOperator::normal,
                             double window_sigma = 0.125, int grid_size = 128);

struct ArtifactPrediction {
    Vec2 x0 = Vec2::Zero();
    Vec2 eta0 = Vec2::Zero();
    std::vector<std::pair<Vec2, Vec2>> predicted;  // (y, eta-tilde)
    int degree = 0;
    std::string label;
};

/// Scans the geodesic through x0 conormal to eta0 for Jacobi-conjugate
/// partners and maps the covectors through the canonical relation
/// eta = B(z,x) zeta, eta-tilde = B(z,y) zeta of the fibration.
ArtifactPrediction artifact_predict(const MetricField& metric, const Vec2& x0,
                                    const Vec2& eta0);

struct ArtifactMeasurement {
    Vec2 centroid = Vec2::Zero();
    double distance_to_prediction = 0.0;
    double peak = 0.0;
    double background = 0.0;
};

/// Applies R*R to the point phantom at x0, subtracts the rescaled response
/// of the flat (lambda = 0) metric, and locates the strongest residual peak
/// away from x0. Throws NoArtifactFound below 3x the background level.
ArtifactMeasurement artifact_measure(const MetricField& metric, const Vec2& x0,
                                     const ArtifactPrediction& prediction,
                                     int grid_size, int n_beta, int n_alpha);

}  // namespace dft
