#pragma once

#include <vector>

#include "dft/metric.hpp"

namespace dft {

/// Point of the unit sphere bundle: position and velocity. For unit-speed
/// use the g-norm of v must be 1.
struct PhasePoint {
    Vec2 x;
    Vec2 v;
};

struct GeodesicSample {
    double t;
    Vec2 x;
    Vec2 v;  // velocity (g-unit speed)
};

/// Unit-speed geodesic integrated until it exits the disk.
struct Geodesic {
    std::vector<GeodesicSample> samples;
    double step = 0.0;
    double exit_time = 0.0;

    /// Cubic Hermite interpolation of position/velocity at time t in [0, exit_time].
    GeodesicSample at(double t) const;
    const GeodesicSample& back() const { return samples.back(); }
};

/// Hamiltonian right-hand side for the geodesic flow of a conformal metric,
/// on (x, p) with p the momentum. Shared with the variational integrators.
void geodesic_rhs(const MetricField& m, const Vec2& x, const Vec2& p, Vec2& dx, Vec2& dp);

/// Fixed-step RK4 integration of the unit-speed geodesic from `start` until
/// the trajectory leaves the disk; the crossing step is bisected to 1e-10 in t.
/// Throws NonUnitSpeedError, StepTooLargeError, TrappedError.
Geodesic integrate_geodesic(const MetricField& m, const PhasePoint& start, double h);

/// Convenience: inward boundary start from boundary angle beta and direction
/// angle alpha in (-pi/2, pi/2) measured against the inward normal.
PhasePoint boundary_start(const MetricField& m, double beta, double alpha);

/// Scalar Jacobi basis along a geodesic in the parallel frame {tangent, normal}:
/// two normal solutions of j'' + K(gamma(t)) j = 0 with
/// u(0)=1, u'(0)=0 and w(0)=0, w'(0)=1 (unit Wronskian).
struct JacobiBasis {
    std::vector<double> t, u, du, w, dw;
    std::vector<double> curvature;  // K at the samples

    /// j_{t0}(t): the normal Jacobi solution with j(t0)=0, j'(t0)=1.
    double normal_solution(double t0, double t) const;
    void eval(double t, double& uu, double& duu, double& ww, double& dww) const;
};

JacobiBasis jacobi_basis(const MetricField& m, const Geodesic& g);

/// Fundamental 2x2 Jacobi matrix J along g with J(t0)=0, J'(t0)=I in the
/// parallel frame (first axis tangential, second normal).
struct JacobiSolution {
    double t0 = 0.0;
    JacobiBasis basis;

    Mat2 J(double t) const;
    Mat2 dJ(double t) const;
    double det(double t) const { return (t - t0) * normal(t); }
    double normal(double t) const { return basis.normal_solution(t0, t); }
};

/// Throws OutOfRangeError if t0 is outside [0, exit_time].
JacobiSolution jacobi_fields(const MetricField& m, const Geodesic& g, double t0);

struct ConjugatePair {
    double t0 = 0.0;
    double t1 = 0.0;
    int degree = 0;
};

/// Scans all base times on the sample grid for zeros of det J_{t0}(t1),
/// groups the resulting continuous families and reports one representative
/// pair (the one with the smallest t0) per family. The degree is the
/// numerical kernel dimension of J_{t0}(t1) at relative singular-value
/// threshold tol (always 1 in 2d).
std::vector<ConjugatePair> conjugate_scan(const MetricField& m, const Geodesic& g,
                                          double tol = 1e-6);

}  // namespace dft
