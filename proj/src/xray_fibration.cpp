#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "dft/errors.hpp"
#include "dft/fibrations.hpp"

namespace dft {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAlphaMargin = 0.02;  // keep away from tangential entries

// ---------------------------------------------------------------------------
// variational geodesic flow: (x, p) plus the two variation fields
// Y_beta = d(x,p)/d beta and Y_alpha = d(x,p)/d alpha, integrated together.

struct VarState {
    Vec2 x, p;       // base geodesic (Hamiltonian coordinates)
    Vec2 ybx, ybp;   // Y_beta
    Vec2 yax, yap;   // Y_alpha
};

struct VarSample {
    double t;
    VarState s;
};

void var_rhs(const MetricField& m, const VarState& s, VarState& d) {
    const double e2i = std::exp(-2.0 * m.lambda(s.x));
    const Vec2 gl = m.grad_lambda(s.x);
    const Mat2 hl = m.hess_lambda(s.x);
    const double p2 = s.p.squaredNorm();

    d.x = e2i * s.p;
    d.p = e2i * p2 * gl;

    const auto lin = [&](const Vec2& dx, const Vec2& dp, Vec2& ox, Vec2& op) {
        const double dconf = -2.0 * gl.dot(dx);  // variation of e^{-2 lambda} / e^{-2 lambda}
        ox = e2i * dp + dconf * e2i * s.p;
        op = e2i * (2.0 * s.p.dot(dp) * gl + p2 * hl * dx) + dconf * e2i * p2 * gl;
    };
    lin(s.ybx, s.ybp, d.ybx, d.ybp);
    lin(s.yax, s.yap, d.yax, d.yap);
}

VarState axpy(const VarState& a, double c, const VarState& b) {
    return {a.x + c * b.x,     a.p + c * b.p,   a.ybx + c * b.ybx,
            a.ybp + c * b.ybp, a.yax + c * b.yax, a.yap + c * b.yap};
}

VarState rk4(const MetricField& m, const VarState& s, double h) {
    VarState k1, k2, k3, k4;
    var_rhs(m, s, k1);
    var_rhs(m, axpy(s, h / 2.0, k1), k2);
    var_rhs(m, axpy(s, h / 2.0, k2), k3);
    var_rhs(m, axpy(s, h, k3), k4);
    VarState out = s;
    out = axpy(out, h / 6.0, k1);
    out = axpy(out, h / 3.0, k2);
    out = axpy(out, h / 3.0, k3);
    out = axpy(out, h / 6.0, k4);
    return out;
}

struct VarFlow {
    std::vector<VarSample> samples;
    double step = 0.0;
    double exit_time = 0.0;

    /// Cubic Hermite interpolation, slopes from the ODE right-hand side.
    VarState at(const MetricField& m, double t) const {
        t = std::clamp(t, 0.0, exit_time);
        std::size_t i = std::min<std::size_t>(
            samples.size() - 2, static_cast<std::size_t>(std::max(0.0, t / step)));
        while (i + 2 < samples.size() && samples[i + 1].t < t) ++i;
        while (i > 0 && samples[i].t > t) --i;
        const VarSample& a = samples[i];
        const VarSample& b = samples[i + 1];
        const double dt = b.t - a.t;
        if (dt <= 0.0) return a.s;
        const double u = (t - a.t) / dt;
        VarState da, db;
        var_rhs(m, a.s, da);
        var_rhs(m, b.s, db);
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
        const auto blend = [&](const Vec2& va, const Vec2& sa, const Vec2& vb, const Vec2& sb) {
            return (h00 * va + h10 * dt * sa + h01 * vb + h11 * dt * sb).eval();
        };
        VarState out;
        out.x = blend(a.s.x, da.x, b.s.x, db.x);
        out.p = blend(a.s.p, da.p, b.s.p, db.p);
        out.ybx = blend(a.s.ybx, da.ybx, b.s.ybx, db.ybx);
        out.ybp = blend(a.s.ybp, da.ybp, b.s.ybp, db.ybp);
        out.yax = blend(a.s.yax, da.yax, b.s.yax, db.yax);
        out.yap = blend(a.s.yap, da.yap, b.s.yap, db.yap);
        return out;
    }

    Vec2 velocity(const MetricField& m, double t) const {
        const VarState s = at(m, t);
        return std::exp(-2.0 * m.lambda(s.x)) * s.p;
    }
};

VarState initial_state(const MetricField& m, double beta, double alpha) {
    const double r = m.r_dom;
    const Vec2 x0(r * std::cos(beta), r * std::sin(beta));
    const Vec2 u(-std::cos(beta + alpha), -std::sin(beta + alpha));
    const Vec2 du_dba(std::sin(beta + alpha), -std::cos(beta + alpha));
    const double el = std::exp(m.lambda(x0));
    const Vec2 gl = m.grad_lambda(x0);
    const Vec2 dx0_dbeta(-r * std::sin(beta), r * std::cos(beta));

    VarState s;
    s.x = x0;
    s.p = el * u;  // p = e^{2 lambda} xdot with xdot = e^{-lambda} u
    s.ybx = dx0_dbeta;
    s.ybp = el * (gl.dot(dx0_dbeta) * u + du_dba);
    s.yax = Vec2::Zero();
    s.yap = el * du_dba;
    return s;
}

VarFlow integrate_var_flow(const MetricField& m, double beta, double alpha) {
    if (std::abs(alpha) >= kPi / 2.0 - kAlphaMargin)
        throw ChartDomainError("xray fibration: entry direction too tangential");
    const double h = 1e-3 * m.r_dom;
    VarFlow flow;
    flow.step = h;
    VarState s = initial_state(m, beta, alpha);
    double t = 0.0;
    flow.samples.push_back({t, s});
    while (true) {
        VarState next = rk4(m, s, h);
        if (next.x.norm() > m.r_dom && t > 0.0) {
            // bisect the crossing step
            double lo = 0.0, hi = h;
            for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
                const double mid = (lo + hi) / 2.0;
                if (rk4(m, s, mid).x.norm() > m.r_dom) hi = mid;
                else lo = mid;
            }
            const double dt = (lo + hi) / 2.0;
            flow.samples.push_back({t + dt, rk4(m, s, dt)});
            flow.exit_time = t + dt;
            return flow;
        }
        s = next;
        t += h;
        flow.samples.push_back({t, s});
        if (t > 100.0 * m.r_dom) throw TrappedError("xray fibration: geodesic appears trapped");
    }
}

/// Per-metric cache of integrated flows keyed by exact (beta, alpha) values:
/// rank and scan operations revisit the same z many times.
class FlowCache {
public:
    explicit FlowCache(const MetricField& m) : metric_(m) {}

    std::shared_ptr<const VarFlow> get(double beta, double alpha) const {
        const std::pair<double, double> key{beta, alpha};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        auto flow = std::make_shared<VarFlow>(integrate_var_flow(metric_, beta, alpha));
        std::lock_guard<std::mutex> lock(mutex_);
        if (cache_.size() > 512) cache_.clear();
        return cache_.emplace(key, std::move(flow)).first->second;
    }

    const MetricField& metric() const { return metric_; }

private:
    const MetricField& metric_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<double, double>, std::shared_ptr<const VarFlow>> cache_;
};

/// Closest point of the flow to x: coarse scan plus Newton on the
/// orthogonality condition (gamma(t) - x) . gammadot(t) = 0.
double project_time(const MetricField& m, const VarFlow& flow, const Vec2& x) {
    double best_t = 0.0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& smp : flow.samples) {
        const double d = (smp.s.x - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best_t = smp.t;
        }
    }
    double t = best_t;
    for (int it = 0; it < 40; ++it) {
        const VarState s = flow.at(m, t);
        VarState d;
        var_rhs(m, s, d);
        const Vec2 r = s.x - x;
        const double g = r.dot(d.x);
        VarState dd;  // second derivative of the distance functional
        var_rhs(m, axpy(s, 1e-7, d), dd);
        const Vec2 xdd = (dd.x - d.x) / 1e-7;
        const double gp = d.x.squaredNorm() + r.dot(xdd);
        if (gp == 0.0) break;
        double tn = t - g / gp;
        tn = std::clamp(tn, 0.0, flow.exit_time);
        if (std::abs(tn - t) < 1e-14) { t = tn; break; }
        t = tn;
    }
    return t;
}

// ---------------------------------------------------------------------------
// phi-charts: graph over a coordinate axis on one monotone branch

struct Segment {
    double t_lo, t_hi;
};

/// Maximal t-intervals on which coordinate `axis` of the flow is monotone.
std::vector<Segment> monotone_segments(const MetricField& m, const VarFlow& flow, int axis) {
    std::vector<Segment> segs;
    double t_lo = flow.samples.front().t;
    double prev_sign = 0.0;
    for (std::size_t i = 0; i < flow.samples.size(); ++i) {
        VarState d;
        var_rhs(m, flow.samples[i].s, d);
        const double sign = d.x[axis] > 0.0 ? 1.0 : (d.x[axis] < 0.0 ? -1.0 : 0.0);
        if (prev_sign != 0.0 && sign != 0.0 && sign != prev_sign) {
            // locate the turning point between the two samples
            double lo = flow.samples[i - 1].t, hi = flow.samples[i].t;
            for (int it = 0; it < 50 && hi - lo > 1e-12; ++it) {
                const double mid = (lo + hi) / 2.0;
                VarState dm;
                var_rhs(m, flow.at(m, mid), dm);
                if ((dm.x[axis] > 0.0 ? 1.0 : -1.0) == prev_sign) lo = mid;
                else hi = mid;
            }
            segs.push_back({t_lo, (lo + hi) / 2.0});
            t_lo = (lo + hi) / 2.0;
        }
        if (sign != 0.0) prev_sign = sign;
    }
    segs.push_back({t_lo, flow.exit_time});
    return segs;
}

class XrayPhiChart final : public PhiChart {
public:
    XrayPhiChart(std::shared_ptr<const FlowCache> cache, int axis, int branch)
        : cache_(std::move(cache)), axis_(axis), branch_(branch) {
        xp_idx = {axis};
        xd_idx = {1 - axis};
    }

    bool valid(const VecX& z, const VecX& x) const override {
        try {
            const double t = solve(z, x[axis_]);
            const MetricField& m = cache_->metric();
            const auto flow = cache_->get(z[0], z[1]);
            const VarState s = flow->at(m, t);
            return std::abs(s.x[1 - axis_] - x[1 - axis_]) <= 0.25 * m.r_dom;
        } catch (const Error&) {
            return false;
        }
    }

    VecX phi(const VecX& z, const VecX& xp) const override {
        const double t = solve(z, xp[0]);
        VecX out(1);
        out[0] = cache_->get(z[0], z[1])->at(cache_->metric(), t).x[1 - axis_];
        return out;
    }

    MatX phi_z(const VecX& z, const VecX& xp) const override {
        const double t = solve(z, xp[0]);
        const MetricField& m = cache_->metric();
        const VarState s = cache_->get(z[0], z[1])->at(m, t);
        VarState d;
        var_rhs(m, s, d);
        const int a = axis_, b = 1 - axis_;
        const double ratio = d.x[b] / d.x[a];
        MatX out(1, 2);
        out(0, 0) = s.ybx[b] - ratio * s.ybx[a];
        out(0, 1) = s.yax[b] - ratio * s.yax[a];
        return out;
    }

    MatX phi_xp(const VecX& z, const VecX& xp) const override {
        const double t = solve(z, xp[0]);
        const MetricField& m = cache_->metric();
        VarState d;
        var_rhs(m, cache_->get(z[0], z[1])->at(m, t), d);
        MatX out(1, 1);
        out(0, 0) = d.x[1 - axis_] / d.x[axis_];
        return out;
    }

    std::vector<MatX> phi_z_dxp(const VecX& z, const VecX& xp) const override {
        const double t = solve(z, xp[0]);
        const MetricField& m = cache_->metric();
        const VarState s = cache_->get(z[0], z[1])->at(m, t);
        VarState d, d2s;
        var_rhs(m, s, d);
        // second time derivative of the state by differentiating the RHS
        const double eps = 1e-7;
        var_rhs(m, axpy(s, eps, d), d2s);
        const VarState dd = axpy(d2s, -1.0, d);  // (rhs(s+eps d) - rhs(s))
        const int a = axis_, b = 1 - axis_;
        const double va = d.x[a], vb = d.x[b];
        const double aa = dd.x[a] / eps, ab = dd.x[b] / eps;  // acceleration
        const double ratio = vb / va;
        const double dratio = (ab * va - vb * aa) / (va * va);
        // Y time-derivatives come straight from the RHS evaluation
        const auto dcol = [&](const Vec2& y, const Vec2& ydot) {
            const double g_dot = ydot[b] - dratio * y[a] - ratio * ydot[a];
            return g_dot / va;
        };
        MatX out(1, 2);
        out(0, 0) = dcol(s.ybx, d.ybx);
        out(0, 1) = dcol(s.yax, d.yax);
        return {out};
    }

private:
    /// Solves gamma_axis(t) = xp on branch `branch_` (monotone bisection
    /// followed by Newton polish). Throws ChartDomainError off the branch.
    double solve(const VecX& z, double xp) const {
        const MetricField& m = cache_->metric();
        const auto flow = cache_->get(z[0], z[1]);
        const auto segs = monotone_segments(m, *flow, axis_);
        if (branch_ >= static_cast<int>(segs.size()))
            throw ChartDomainError("xray phi-chart: branch does not exist");
        const Segment seg = segs[branch_];
        double lo = seg.t_lo, hi = seg.t_hi;
        double flo = flow->at(m, lo).x[axis_] - xp;
        double fhi = flow->at(m, hi).x[axis_] - xp;
        if (flo == 0.0) return lo;
        if (fhi == 0.0) return hi;
        if (flo * fhi > 0.0)
            throw ChartDomainError("xray phi-chart: x' outside the branch range");
        for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
            const double mid = (lo + hi) / 2.0;
            const double fm = flow->at(m, mid).x[axis_] - xp;
            if ((fm > 0.0) == (flo > 0.0)) { lo = mid; flo = fm; }
            else hi = mid;
        }
        double t = (lo + hi) / 2.0;
        for (int it = 0; it < 8; ++it) {
            const VarState s = flow->at(m, t);
            VarState d;
            var_rhs(m, s, d);
            if (d.x[axis_] == 0.0) break;
            const double step = (s.x[axis_] - xp) / d.x[axis_];
            t = std::clamp(t - step, seg.t_lo, seg.t_hi);
            if (std::abs(step) < 1e-14) break;
        }
        // graph-chart slope safeguard
        VarState d;
        var_rhs(m, flow->at(m, t), d);
        if (std::abs(d.x[axis_]) < 0.2 * d.x.norm())
            throw ChartDomainError("xray phi-chart: branch too steep for the graph axis");
        return t;
    }

    std::shared_ptr<const FlowCache> cache_;
    int axis_;
    int branch_;
};

// ---------------------------------------------------------------------------
// b-chart: alpha = b(x, beta) by Newton shooting inside an alpha window

class XrayBChart final : public BChart {
public:
    XrayBChart(std::shared_ptr<const FlowCache> cache, double center, double halfwidth,
               double core)
        : cache_(std::move(cache)), center_(center), halfwidth_(halfwidth), core_(core) {
        zp_idx = {0};
        zd_idx = {1};
    }

    bool valid(const VecX& x, const VecX& z) const override {
        const MetricField& m = cache_->metric();
        if (x.head<2>().norm() > m.r_dom) return false;
        if (std::abs(z[1] - center_) > core_) return false;
        return std::abs(z[1]) < kPi / 2.0 - kAlphaMargin;
    }

    VecX b(const VecX& x, const VecX& zp) const override {
        VecX out(1);
        out[0] = shoot(x.head<2>(), zp[0]);
        return out;
    }

    MatX b_x(const VecX& x, const VecX& zp) const override {
        double t;
        VarState s;
        shoot_state(x.head<2>(), zp[0], t, s);
        const MetricField& m = cache_->metric();
        VarState d;
        var_rhs(m, s, d);
        const Vec2 nrm(-d.x[1], d.x[0]);
        const double denom = nrm.dot(s.yax);
        if (std::abs(denom) < 1e-12)
            throw RankDeficientError("xray b-chart: shooting Jacobian singular");
        return (nrm / denom).transpose();
    }

    MatX b_zp(const VecX& x, const VecX& zp) const override {
        double t;
        VarState s;
        shoot_state(x.head<2>(), zp[0], t, s);
        const MetricField& m = cache_->metric();
        VarState d;
        var_rhs(m, s, d);
        const Vec2 nrm(-d.x[1], d.x[0]);
        const double denom = nrm.dot(s.yax);
        if (std::abs(denom) < 1e-12)
            throw RankDeficientError("xray b-chart: shooting Jacobian singular");
        MatX out(1, 1);
        out(0, 0) = -nrm.dot(s.ybx) / denom;
        return out;
    }

private:
    double shoot(const Vec2& x, double beta) const {
        double t;
        VarState s;
        return shoot_state(x, beta, t, s);
    }

    /// Newton over (alpha, t) for gamma_{beta,alpha}(t) = x, multi-start
    /// across the window; a unique in-window root is required.
    double shoot_state(const Vec2& x, double beta, double& t_out, VarState& s_out) const {
        const MetricField& m = cache_->metric();
        std::vector<double> roots;
        std::vector<double> root_ts;
        std::vector<VarState> root_states;
        for (int k = -4; k <= 4; ++k) {
            const double a0 = center_ + 0.22 * halfwidth_ * k;
            if (std::abs(a0) >= kPi / 2.0 - kAlphaMargin) continue;
            double alpha = a0;
            bool converged = false;
            double t = 0.0;
            VarState s;
            for (int it = 0; it < 40; ++it) {
                std::shared_ptr<const VarFlow> flow;
                try {
                    flow = cache_->get(beta, alpha);
                } catch (const Error&) {
                    break;
                }
                t = project_time(m, *flow, x);
                s = flow->at(m, t);
                const Vec2 r = x - s.x;
                if (r.norm() < 1e-12) { converged = true; break; }
                VarState d;
                var_rhs(m, *&s, d);
                Mat2 jac;
                jac.col(0) = d.x;
                jac.col(1) = s.yax;
                if (std::abs(jac.determinant()) < 1e-14) break;
                const Vec2 delta = jac.inverse() * r;
                double next = alpha + delta[1];
                next = std::clamp(next, -kPi / 2.0 + kAlphaMargin, kPi / 2.0 - kAlphaMargin);
                if (std::abs(next - alpha) < 1e-15) { alpha = next; converged = r.norm() < 1e-9; break; }
                alpha = next;
            }
            if (!converged || std::abs(alpha - center_) > halfwidth_) continue;
            bool dup = false;
            for (double rt : roots)
                if (std::abs(rt - alpha) < 1e-8) dup = true;
            if (!dup) {
                roots.push_back(alpha);
                root_ts.push_back(t);
                root_states.push_back(s);
            }
        }
        if (roots.empty())
            throw ChartDomainError("xray b-chart: shooting found no geodesic through x");
        if (roots.size() > 1)
            throw ChartDomainError("xray b-chart: branch ambiguous inside the alpha window");
        t_out = root_ts[0];
        s_out = root_states[0];
        return roots[0];
    }

    std::shared_ptr<const FlowCache> cache_;
    double center_, halfwidth_, core_;
};

}  // namespace

FibrationSpec xray_fibration(const MetricField& metric) {
    auto metric_copy = std::make_shared<MetricField>(metric);
    // the cache keeps a reference to the metric, so tie their lifetimes
    struct Bundle : FlowCache {
        std::shared_ptr<MetricField> owned;
        explicit Bundle(std::shared_ptr<MetricField> m) : FlowCache(*m), owned(std::move(m)) {}
    };
    auto cache = std::make_shared<const Bundle>(metric_copy);

    FibrationSpec spec;
    spec.N = 2;
    spec.n = 2;
    spec.n_prime = 1;
    spec.n_dprime = 1;
    for (int axis = 0; axis < 2; ++axis)
        for (int branch = 0; branch < 4; ++branch)
            spec.phi_charts.push_back(std::make_shared<XrayPhiChart>(cache, axis, branch));
    for (const double c : {-1.05, -0.525, 0.0, 0.525, 1.05})
        spec.b_charts.push_back(std::make_shared<XrayBChart>(cache, c, 0.55, 0.45));
    spec.kappa = [](const VecX&, const VecX&) { return 1.0; };
    // quadrature nodes only need the base geodesic, not the variation fields
    spec.gz_points = [metric_copy](const VecX& z, double step) {
        const MetricField& m = *metric_copy;
        const Geodesic g =
            integrate_geodesic(m, boundary_start(m, z[0], z[1]), 1e-3 * m.r_dom);
        const int count =
            std::max(2, static_cast<int>(std::ceil(g.exit_time / step)) + 1);
        FibrationSpec::GzSampling out;
        out.ds = g.exit_time / (count - 1);  // g-arclength: the flow is unit speed
        out.points.reserve(count);
        for (int i = 0; i < count; ++i) out.points.push_back(g.at(i * out.ds).x);
        return out;
    };
    spec.incident = [cache](const VecX& z, const VecX& x) {
        try {
            const MetricField& m = cache->metric();
            const auto flow = cache->get(z[0], z[1]);
            const double t = project_time(m, *flow, x.head<2>());
            return (flow->at(m, t).x - x.head<2>()).norm() <= 1e-9;
        } catch (const Error&) {
            return false;
        }
    };
    spec.name = "xray(" + metric.name + ")";
    spec.validate();
    return spec;
}

VecX xray_point(const MetricField& metric, const VecX& z, double t) {
    const VarFlow flow = integrate_var_flow(metric, z[0], z[1]);
    VecX out(2);
    out = flow.at(metric, t).x;
    return out;
}

std::vector<VecX> xray_candidates(const MetricField& metric, const VecX& z, int count) {
    const VarFlow flow = integrate_var_flow(metric, z[0], z[1]);
    std::vector<VecX> out;
    out.reserve(count);
    for (int i = 1; i <= count; ++i) {
        const double t = flow.exit_time * i / (count + 1);
        VecX x(2);
        x = flow.at(metric, t).x;
        out.push_back(x);
    }
    return out;
}

}  // namespace dft
