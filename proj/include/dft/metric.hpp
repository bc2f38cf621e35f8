#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace dft {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Conformal Riemannian metric g = e^{2 lambda(x)} (dx1^2 + dx2^2) on the
/// closed disk of radius r_dom. lambda and its first two derivatives are
/// supplied analytically for the presets.
struct MetricField {
    std::function<double(const Vec2&)> lambda;
    std::function<Vec2(const Vec2&)> grad_lambda;
    std::function<Mat2(const Vec2&)> hess_lambda;
    double r_dom = 1.0;
    std::string name = "custom";

    double conformal_factor(const Vec2& x) const { return std::exp(2.0 * lambda(x)); }

    /// Gauss curvature K = -e^{-2 lambda} (lambda_11 + lambda_22).
    double gauss_curvature(const Vec2& x) const {
        return -std::exp(-2.0 * lambda(x)) * hess_lambda(x).trace();
    }

    /// g-norm of a tangent vector at x.
    double norm(const Vec2& x, const Vec2& v) const { return std::exp(lambda(x)) * v.norm(); }

    bool inside(const Vec2& x) const { return x.norm() <= r_dom; }

    /// Checks that grad_lambda / hess_lambda agree with central finite
    /// differences of lambda at x. Returns the worst relative error.
    double derivative_defect(const Vec2& x, double step = 1e-4) const;

    // presets
    static MetricField euclidean(double r_dom = 1.0);
    /// lambda = log(2 / (1 + |x|^2)): Gauss curvature identically 1.
    static MetricField curvature1(double r_dom = 1.2);
    /// lambda = a exp(-|x|^2 / (2 sigma^2)): a focusing bump at the origin.
    static MetricField focusing(double a = 0.8, double sigma = 0.25, double r_dom = 1.0);

    /// Preset lookup by name: "euclidean", "curvature1", "focusing(a,sigma)".
    static MetricField preset(const std::string& name, double r_dom = 1.0);
};

}  // namespace dft
