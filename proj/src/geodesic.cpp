#include "dft/geodesic.hpp"

#include <algorithm>
#include <cmath>

#include "dft/errors.hpp"

namespace dft {

namespace {

// Hermite interpolation of a scalar with values f0,f1 and slopes d0,d1 on [0,1].
double hermite(double f0, double d0, double f1, double d1, double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * f1 +
           (s3 - s2) * d1;
}

struct Rk4State {
    Vec2 x, p;
    // scalar Jacobi basis, integrated alongside when enabled
    double u = 1, du = 0, w = 0, dw = 1;
};

Rk4State rhs(const MetricField& m, const Rk4State& s, bool jacobi) {
    Rk4State d;
    geodesic_rhs(m, s.x, s.p, d.x, d.p);
    if (jacobi) {
        const double K = m.gauss_curvature(s.x);
        d.u = s.du;
        d.du = -K * s.u;
        d.w = s.dw;
        d.dw = -K * s.w;
    } else {
        d.u = d.du = d.w = d.dw = 0;
    }
    return d;
}

Rk4State axpy(const Rk4State& a, double c, const Rk4State& b) {
    Rk4State r;
    r.x = a.x + c * b.x;
    r.p = a.p + c * b.p;
    r.u = a.u + c * b.u;
    r.du = a.du + c * b.du;
    r.w = a.w + c * b.w;
    r.dw = a.dw + c * b.dw;
    return r;
}

Rk4State rk4_step(const MetricField& m, const Rk4State& s, double h, bool jacobi) {
    const Rk4State k1 = rhs(m, s, jacobi);
    const Rk4State k2 = rhs(m, axpy(s, h / 2, k1), jacobi);
    const Rk4State k3 = rhs(m, axpy(s, h / 2, k2), jacobi);
    const Rk4State k4 = rhs(m, axpy(s, h, k3), jacobi);
    Rk4State out = s;
    out = axpy(out, h / 6, k1);
    out = axpy(out, h / 3, k2);
    out = axpy(out, h / 3, k3);
    out = axpy(out, h / 6, k4);
    return out;
}

Vec2 velocity(const MetricField& m, const Rk4State& s) {
    return std::exp(-2.0 * m.lambda(s.x)) * s.p;
}

// Integrates the geodesic (optionally with the scalar Jacobi basis) and
// returns per-step states including the interpolated boundary-exit state.
struct Trace {
    std::vector<double> t;
    std::vector<Rk4State> s;
    double exit_time = 0.0;
};

Trace trace_geodesic(const MetricField& m, const PhasePoint& start, double h, bool jacobi) {
    const double speed = m.norm(start.x, start.v);
    if (std::abs(speed - 1.0) > 1e-6)
        throw NonUnitSpeedError("start velocity has g-norm " + std::to_string(speed));
    if (start.x.norm() > m.r_dom * (1.0 + 1e-12))
        throw ValidationError("start position outside the closed disk");
    if (h <= 0) throw ValidationError("step must be positive");

    Rk4State s;
    s.x = start.x;
    s.p = std::exp(2.0 * m.lambda(start.x)) * start.v;

    Trace tr;
    tr.t.push_back(0.0);
    tr.s.push_back(s);

    const double t_max = 100.0 * m.r_dom;
    double t = 0.0;
    while (true) {
        const Rk4State next = rk4_step(m, s, h, jacobi);
        const double drift = std::abs(std::exp(-m.lambda(next.x)) * next.p.norm() - 1.0);
        if (drift > 1e-4) throw StepTooLargeError("unit-speed drift " + std::to_string(drift));
        if (next.x.norm() > m.r_dom) {
            // bisect the crossing step to 1e-10 in t
            double lo = 0.0, hi = h;
            Rk4State hi_state = next;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                const Rk4State ms = rk4_step(m, s, mid, jacobi);
                if (ms.x.norm() > m.r_dom) {
                    hi = mid;
                    hi_state = ms;
                } else {
                    lo = mid;
                }
            }
            tr.t.push_back(t + hi);
            tr.s.push_back(hi_state);
            tr.exit_time = t + hi;
            return tr;
        }
        s = next;
        t += h;
        tr.t.push_back(t);
        tr.s.push_back(s);
        if (t > t_max) throw TrappedError("geodesic exceeded t_max = 100 r_dom");
    }
}

}  // namespace

void geodesic_rhs(const MetricField& m, const Vec2& x, const Vec2& p, Vec2& dx, Vec2& dp) {
    const double e = std::exp(-2.0 * m.lambda(x));
    dx = e * p;
    dp = e * p.squaredNorm() * m.grad_lambda(x);
}

PhasePoint boundary_start(const MetricField& m, double beta, double alpha) {
    PhasePoint pp;
    pp.x = m.r_dom * Vec2(std::cos(beta), std::sin(beta));
    const Vec2 dir = -Vec2(std::cos(beta + alpha), std::sin(beta + alpha));
    pp.v = std::exp(-m.lambda(pp.x)) * dir;
    return pp;
}

GeodesicSample Geodesic::at(double t) const {
    if (samples.empty()) throw OutOfRangeError("empty geodesic");
    t = std::clamp(t, 0.0, exit_time);
    // locate the bracketing interval (uniform except for the final partial step)
    size_t i = std::min<size_t>(static_cast<size_t>(std::max(0.0, t / step)), samples.size() - 2);
    while (i + 2 < samples.size() && samples[i + 1].t <= t) ++i;
    while (i > 0 && samples[i].t > t) --i;
    const GeodesicSample& a = samples[i];
    const GeodesicSample& b = samples[i + 1];
    const double dt = b.t - a.t;
    const double s = dt > 0 ? (t - a.t) / dt : 0.0;
    GeodesicSample out;
    out.t = t;
    // derivative of v needs the metric; linear in v is enough at RK4 sample density
    for (int c = 0; c < 2; ++c) {
        out.x[c] = hermite(a.x[c], dt * a.v[c], b.x[c], dt * b.v[c], s);
        out.v[c] = (1 - s) * a.v[c] + s * b.v[c];
    }
    return out;
}

Geodesic integrate_geodesic(const MetricField& m, const PhasePoint& start, double h) {
    const Trace tr = trace_geodesic(m, start, h, /*jacobi=*/false);
    Geodesic g;
    g.step = h;
    g.exit_time = tr.exit_time;
    g.samples.reserve(tr.t.size());
    for (size_t i = 0; i < tr.t.size(); ++i)
        g.samples.push_back({tr.t[i], tr.s[i].x, velocity(m, tr.s[i])});
    return g;
}

void JacobiBasis::eval(double t, double& uu, double& duu, double& ww, double& dww) const {
    const size_t n = this->t.size();
    size_t i = 0;
    if (n >= 2) {
        const double h = this->t[1] - this->t[0];
        i = std::min<size_t>(static_cast<size_t>(std::max(0.0, t / h)), n - 2);
        while (i + 2 < n && this->t[i + 1] <= t) ++i;
        while (i > 0 && this->t[i] > t) --i;
    }
    const double dt = this->t[i + 1] - this->t[i];
    const double s = dt > 0 ? (t - this->t[i]) / dt : 0.0;
    // second derivatives from the ODE give cubic Hermite data
    uu = hermite(u[i], dt * du[i], u[i + 1], dt * du[i + 1], s);
    ww = hermite(w[i], dt * dw[i], w[i + 1], dt * dw[i + 1], s);
    const double k0 = -curvature[i] * u[i], k1 = -curvature[i + 1] * u[i + 1];
    duu = hermite(du[i], dt * k0, du[i + 1], dt * k1, s);
    const double l0 = -curvature[i] * w[i], l1 = -curvature[i + 1] * w[i + 1];
    dww = hermite(dw[i], dt * l0, dw[i + 1], dt * l1, s);
}

double JacobiBasis::normal_solution(double t0, double t) const {
    double u0, du0, w0, dw0, u1, du1, w1, dw1;
    eval(t0, u0, du0, w0, dw0);
    eval(t, u1, du1, w1, dw1);
    const double wronskian = u0 * dw0 - w0 * du0;
    return (u0 * w1 - w0 * u1) / wronskian;
}

JacobiBasis jacobi_basis(const MetricField& m, const Geodesic& g) {
    if (g.samples.empty()) throw OutOfRangeError("empty geodesic");
    PhasePoint start{g.samples.front().x, g.samples.front().v};
    const Trace tr = trace_geodesic(m, start, g.step, /*jacobi=*/true);
    JacobiBasis b;
    b.t = tr.t;
    b.u.reserve(tr.t.size());
    for (size_t i = 0; i < tr.t.size(); ++i) {
        b.u.push_back(tr.s[i].u);
        b.du.push_back(tr.s[i].du);
        b.w.push_back(tr.s[i].w);
        b.dw.push_back(tr.s[i].dw);
        b.curvature.push_back(m.gauss_curvature(tr.s[i].x));
    }
    return b;
}

Mat2 JacobiSolution::J(double t) const {
    Mat2 out = Mat2::Zero();
    out(0, 0) = t - t0;
    out(1, 1) = normal(t);
    return out;
}

Mat2 JacobiSolution::dJ(double t) const {
    double u1, du1, w1, dw1, u0, du0, w0, dw0;
    basis.eval(t0, u0, du0, w0, dw0);
    basis.eval(t, u1, du1, w1, dw1);
    const double wronskian = u0 * dw0 - w0 * du0;
    Mat2 out = Mat2::Zero();
    out(0, 0) = 1.0;
    out(1, 1) = (u0 * dw1 - w0 * du1) / wronskian;
    return out;
}

JacobiSolution jacobi_fields(const MetricField& m, const Geodesic& g, double t0) {
    if (t0 < -1e-12 || t0 > g.exit_time + 1e-12)
        throw OutOfRangeError("base time outside [0, exit_time]");
    JacobiSolution sol;
    sol.t0 = t0;
    sol.basis = jacobi_basis(m, g);
    return sol;
}

namespace {

struct Family {
    size_t last_i0;
    double last_t1;
    ConjugatePair rep;
};

}  // namespace

std::vector<ConjugatePair> conjugate_scan(const MetricField& m, const Geodesic& g, double tol) {
    if (tol <= 0) throw ValidationError("tolerance must be positive");
    const JacobiBasis b = jacobi_basis(m, g);
    const size_t n = b.t.size();
    const double tau = g.exit_time;
    const double band = std::max(0.05 * tau, 50.0 * g.step);

    std::vector<Family> families;
    std::vector<ConjugatePair> out;
    for (size_t i0 = 0; i0 + 1 < n; ++i0) {
        const double u0 = b.u[i0], w0 = b.w[i0];
        double prev = 0.0;
        bool have_prev = false;
        for (size_t j = i0 + 1; j < n; ++j) {
            const double rho = u0 * b.w[j] - w0 * b.u[j];
            if (have_prev && prev * rho < 0.0) {
                // linear refinement of the crossing
                const double ta = b.t[j - 1], tb = b.t[j];
                const double t1 = ta + (tb - ta) * prev / (prev - rho);
                // degree = numerical kernel dimension of J(t1) = diag(t1-t0, j(t1))
                double u1, du1, w1, dw1;
                b.eval(t1, u1, du1, w1, dw1);
                const double wronskian = u0 * b.dw[i0] - w0 * b.du[i0];
                const double sig_nor = std::abs((u0 * w1 - w0 * u1) / wronskian);
                const double sig_tan = std::abs(t1 - b.t[i0]);
                const double smax = std::max(sig_tan, sig_nor);
                int degree = 0;
                if (sig_nor <= tol * smax) ++degree;
                if (sig_tan <= tol * smax) ++degree;
                ConjugatePair pair{b.t[i0], t1, degree};
                bool merged = false;
                for (auto& f : families) {
                    if (i0 - f.last_i0 <= 3 && std::abs(t1 - f.last_t1) <= band) {
                        f.last_i0 = i0;
                        f.last_t1 = t1;
                        merged = true;
                        break;
                    }
                }
                if (!merged) {
                    families.push_back({i0, t1, pair});
                    out.push_back(pair);
                }
            }
            prev = rho;
            have_prev = true;
        }
    }
    return out;
}

}  // namespace dft
