#include "dft/metric.hpp"

#include <cmath>
#include <regex>

#include "dft/errors.hpp"

namespace dft {

double MetricField::derivative_defect(const Vec2& x, double step) const {
    double worst = 0.0;
    const Vec2 g = grad_lambda(x);
    const Mat2 H = hess_lambda(x);
    const double scale = std::max(1.0, std::abs(lambda(x)));
    for (int i = 0; i < 2; ++i) {
        Vec2 e = Vec2::Zero();
        e[i] = step;
        const double fd = (lambda(x + e) - lambda(x - e)) / (2.0 * step);
        worst = std::max(worst, std::abs(fd - g[i]) / scale);
        for (int j = 0; j < 2; ++j) {
            Vec2 ej = Vec2::Zero();
            ej[j] = step;
            const double fdh =
                (lambda(x + e + ej) - lambda(x + e - ej) - lambda(x - e + ej) + lambda(x - e - ej)) /
                (4.0 * step * step);
            worst = std::max(worst, std::abs(fdh - H(i, j)) / scale);
        }
    }
    return worst;
}

MetricField MetricField::euclidean(double r_dom) {
    MetricField m;
    m.lambda = [](const Vec2&) { return 0.0; };
    m.grad_lambda = [](const Vec2&) { return Vec2::Zero().eval(); };
    m.hess_lambda = [](const Vec2&) { return Mat2::Zero().eval(); };
    m.r_dom = r_dom;
    m.name = "euclidean";
    return m;
}

MetricField MetricField::curvature1(double r_dom) {
    MetricField m;
    m.lambda = [](const Vec2& x) { return std::log(2.0 / (1.0 + x.squaredNorm())); };
    m.grad_lambda = [](const Vec2& x) { return (-2.0 / (1.0 + x.squaredNorm()) * x).eval(); };
    m.hess_lambda = [](const Vec2& x) {
        const double q = 1.0 + x.squaredNorm();
        return ((4.0 / (q * q)) * x * x.transpose() - (2.0 / q) * Mat2::Identity()).eval();
    };
    m.r_dom = r_dom;
    m.name = "curvature1";
    return m;
}

MetricField MetricField::focusing(double a, double sigma, double r_dom) {
    const double s2 = sigma * sigma;
    MetricField m;
    m.lambda = [a, s2](const Vec2& x) { return a * std::exp(-x.squaredNorm() / (2.0 * s2)); };
    m.grad_lambda = [a, s2](const Vec2& x) {
        return (-a * std::exp(-x.squaredNorm() / (2.0 * s2)) / s2 * x).eval();
    };
    m.hess_lambda = [a, s2](const Vec2& x) {
        const double l = a * std::exp(-x.squaredNorm() / (2.0 * s2));
        return (l * (x * x.transpose() / (s2 * s2) - Mat2::Identity() / s2)).eval();
    };
    m.r_dom = r_dom;
    m.name = "focusing";
    return m;
}

MetricField MetricField::preset(const std::string& name, double r_dom) {
    if (name == "euclidean") return euclidean(r_dom);
    if (name == "curvature1") return curvature1(r_dom);
    static const std::regex foc(R"(focusing\(([-0-9.eE+]+),\s*([-0-9.eE+]+)\))");
    std::smatch mm;
    if (std::regex_match(name, mm, foc))
        return focusing(std::stod(mm[1]), std::stod(mm[2]), r_dom);
    if (name == "focusing") return focusing(0.8, 0.25, r_dom);
    throw ValidationError("unknown metric preset: " + name);
}

}  // namespace dft
