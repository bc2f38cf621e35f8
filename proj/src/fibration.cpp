#include "dft/fibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dft/errors.hpp"

namespace dft {

namespace {

VecX gather(const VecX& v, const std::vector<int>& idx) {
    VecX out(static_cast<int>(idx.size()));
    for (int i = 0; i < out.size(); ++i) out[i] = v[idx[i]];
    return out;
}

void scatter(VecX& v, const std::vector<int>& idx, const VecX& part) {
    for (int i = 0; i < part.size(); ++i) v[idx[i]] = part[i];
}

/// Richardson-extrapolated central difference of a vector-valued function.
VecX central_diff(const std::function<VecX(double)>& f, double h) {
    const VecX d1 = (f(h) - f(-h)) / (2.0 * h);
    const VecX d2 = (f(h / 2.0) - f(-h / 2.0)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

int numerical_rank(const MatX& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<MatX> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s[i] > rel_tol * s[0]) ++r;
    return r;
}

/// Orthonormal basis of the row span, returned as rows. Throws if the input
/// is rank-deficient (all built-in charts promise full row rank n'').
MatX orthonormal_rows(const MatX& m, double rel_tol, const char* what) {
    Eigen::ColPivHouseholderQR<MatX> qr(m.transpose());
    const MatX r = qr.matrixR();
    const double top = std::abs(r(0, 0));
    for (int i = 0; i < m.rows(); ++i)
        if (std::abs(r(i, i)) <= rel_tol * top)
            throw OrthonormalizationFailure(std::string(what) + ": rank-deficient row block");
    MatX q = qr.householderQ() * MatX::Identity(m.cols(), m.rows());
    return q.transpose();
}

/// Simple Nelder-Mead for the tiny chart-coordinate searches (dim <= 4).
VecX nelder_mead(const std::function<double(const VecX&)>& f, const VecX& x0,
                 double scale, int max_iter = 600, double tol = 1e-15) {
    const int d = static_cast<int>(x0.size());
    std::vector<VecX> pts(d + 1, x0);
    std::vector<double> val(d + 1);
    for (int i = 0; i < d; ++i) pts[i + 1][i] += scale;
    for (int i = 0; i <= d; ++i) val[i] = f(pts[i]);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<int> ord(d + 1);
        for (int i = 0; i <= d; ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return val[a] < val[b]; });
        if (val[ord[d]] - val[ord[0]] < tol * (1.0 + std::abs(val[ord[0]]))) break;
        VecX centroid = VecX::Zero(d);
        for (int i = 0; i < d; ++i) centroid += pts[ord[i]];
        centroid /= d;
        const int worst = ord[d];
        const VecX refl = centroid + (centroid - pts[worst]);
        const double fr = f(refl);
        if (fr < val[ord[0]]) {
            const VecX exp_pt = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(exp_pt);
            if (fe < fr) { pts[worst] = exp_pt; val[worst] = fe; }
            else { pts[worst] = refl; val[worst] = fr; }
        } else if (fr < val[ord[d - 1]]) {
            pts[worst] = refl; val[worst] = fr;
        } else {
            const VecX con = centroid + 0.5 * (pts[worst] - centroid);
            const double fc = f(con);
            if (fc < val[worst]) { pts[worst] = con; val[worst] = fc; }
            else {
                for (int i = 1; i <= d; ++i) {
                    pts[ord[i]] = pts[ord[0]] + 0.5 * (pts[ord[i]] - pts[ord[0]]);
                    val[ord[i]] = f(pts[ord[i]]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= d; ++i)
        if (val[i] < val[best]) best = i;
    return pts[best];
}

MatX random_independent_lambda(int k, int n_dprime, std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        MatX L(k, n_dprime);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n_dprime; ++j) L(i, j) = gauss(rng);
        Eigen::JacobiSVD<MatX> svd(L);
        const auto& s = svd.singularValues();
        if (s[s.size() - 1] > 1e-6 * s[0]) return L;
    }
    throw DependentLambdaError("could not draw independent Lambda rows");
}

}  // namespace

// ---------------------------------------------------------------------------
// chart plumbing

VecX PhiChart::x_prime(const VecX& x) const { return gather(x, xp_idx); }
VecX PhiChart::x_dprime(const VecX& x) const { return gather(x, xd_idx); }

VecX PhiChart::assemble(const VecX& xp, const VecX& xd) const {
    VecX x(static_cast<int>(xp_idx.size() + xd_idx.size()));
    scatter(x, xp_idx, xp);
    scatter(x, xd_idx, xd);
    return x;
}

VecX PhiChart::conormal(const VecX& z, const VecX& xp, const VecX& eta_dd) const {
    VecX eta = VecX::Zero(static_cast<int>(xp_idx.size() + xd_idx.size()));
    scatter(eta, xd_idx, eta_dd);
    scatter(eta, xp_idx, (-phi_xp(z, xp).transpose() * eta_dd).eval());
    return eta;
}

MatX PhiChart::phi_z(const VecX& z, const VecX& xp) const {
    MatX out(phi(z, xp).size(), z.size());
    for (int j = 0; j < z.size(); ++j) {
        out.col(j) = central_diff(
            [&](double t) { VecX zt = z; zt[j] += t; return phi(zt, xp); }, fd_step);
    }
    return out;
}

MatX PhiChart::phi_xp(const VecX& z, const VecX& xp) const {
    MatX out(phi(z, xp).size(), xp.size());
    for (int j = 0; j < xp.size(); ++j) {
        out.col(j) = central_diff(
            [&](double t) { VecX xt = xp; xt[j] += t; return phi(z, xt); }, fd_step);
    }
    return out;
}

std::vector<MatX> PhiChart::phi_z_dxp(const VecX& z, const VecX& xp) const {
    std::vector<MatX> out;
    out.reserve(xp.size());
    for (int j = 0; j < xp.size(); ++j) {
        const double h = fd_step;
        VecX xa = xp, xb = xp;
        xa[j] += h;
        xb[j] -= h;
        out.push_back(((phi_z(z, xa) - phi_z(z, xb)) / (2.0 * h)).eval());
    }
    return out;
}

VecX BChart::z_prime(const VecX& z) const { return gather(z, zp_idx); }
VecX BChart::z_dprime(const VecX& z) const { return gather(z, zd_idx); }

VecX BChart::assemble(const VecX& zp, const VecX& zd) const {
    VecX z(static_cast<int>(zp_idx.size() + zd_idx.size()));
    scatter(z, zp_idx, zp);
    scatter(z, zd_idx, zd);
    return z;
}

MatX BChart::b_x(const VecX& x, const VecX& zp) const {
    MatX out(b(x, zp).size(), x.size());
    for (int j = 0; j < x.size(); ++j) {
        out.col(j) = central_diff(
            [&](double t) { VecX xt = x; xt[j] += t; return b(xt, zp); }, fd_step);
    }
    return out;
}

MatX BChart::b_zp(const VecX& x, const VecX& zp) const {
    MatX out(b(x, zp).size(), zp.size());
    for (int j = 0; j < zp.size(); ++j) {
        out.col(j) = central_diff(
            [&](double t) { VecX zt = zp; zt[j] += t; return b(x, zt); }, fd_step);
    }
    return out;
}

std::vector<MatX> BChart::b_x_dzp(const VecX& x, const VecX& zp) const {
    std::vector<MatX> out;
    out.reserve(zp.size());
    for (int j = 0; j < zp.size(); ++j) {
        const double h = fd_step;
        VecX za = zp, zb = zp;
        za[j] += h;
        zb[j] -= h;
        out.push_back(((b_x(x, za) - b_x(x, zb)) / (2.0 * h)).eval());
    }
    return out;
}

// ---------------------------------------------------------------------------
// spec

void FibrationSpec::validate() const {
    if (n != n_prime + n_dprime) throw DimensionError("n != n' + n''");
    if (n < 2 || n_prime < 1 || n_dprime < 1)
        throw DimensionError("need n >= 2 and 1 <= n' <= n-1");
    if (!(N >= n)) throw DimensionError("need N >= n");
    if (phi_charts.empty() || b_charts.empty())
        throw DimensionError("fibration needs at least one phi- and one b-chart");
}

const PhiChart& FibrationSpec::phi_at(const VecX& z, const VecX& x) const {
    for (const auto& c : phi_charts)
        if (c->valid(z, x)) return *c;
    throw ChartDomainError("no phi-chart valid at the given (z, x)");
}

const BChart& FibrationSpec::b_at(const VecX& z, const VecX& x) const {
    for (const auto& c : b_charts)
        if (c->valid(x, z)) return *c;
    throw ChartDomainError("no b-chart valid at the given (z, x)");
}

VecX FibrationSpec::point_from_xp(const VecX& z, const VecX& xp) const {
    for (const auto& c : phi_charts) {
        try {
            const VecX x = c->assemble(xp, c->phi(z, xp));
            if (c->valid(z, x)) return x;
        } catch (const ChartDomainError&) {
        }
    }
    throw ChartDomainError("no phi-chart reconstructs a valid point from x'");
}

bool FibrationSpec::is_incident(const VecX& z, const VecX& x) const {
    if (incident) return incident(z, x);
    for (const auto& c : phi_charts) {
        if (!c->valid(z, x)) continue;
        if ((c->x_dprime(x) - c->phi(z, c->x_prime(x))).norm() <= 1e-9) return true;
        return false;
    }
    return false;
}

// ---------------------------------------------------------------------------
// A and B maps

CotangentPoint a_map(const FibrationSpec& spec, const VecX& z, const VecX& x,
                     const VecX& eta_dd) {
    if (!spec.is_incident(z, x)) throw NotIncidentError("a_map: x not on G_z");
    const PhiChart& c = spec.phi_at(z, x);
    const MatX pz = c.phi_z(z, c.x_prime(x));
    if (numerical_rank(pz, spec.rank_tol) < spec.n_dprime)
        throw RankDeficientError("a_map: rank(phi_z) < n''");
    return {z, (-pz.transpose() * eta_dd).eval()};
}

CotangentPoint b_map(const FibrationSpec& spec, const VecX& z, const VecX& x,
                     const VecX& zeta_dd) {
    if (!spec.is_incident(z, x)) throw NotIncidentError("b_map: x not on G_z");
    const BChart& c = spec.b_at(z, x);
    const MatX bx = c.b_x(x, c.z_prime(z));
    if (numerical_rank(bx, spec.rank_tol) < spec.n_dprime)
        throw RankDeficientError("b_map: rank(b_x) < n''");
    return {x, (-bx.transpose() * zeta_dd).eval()};
}

// ---------------------------------------------------------------------------
// conjugacy

namespace {

struct SpanPair {
    MatX phi;  // n'' x N at (z, x')
    MatX psi;  // n'' x N at (z, y')
};

SpanPair span_pair(const FibrationSpec& spec, const VecX& z, const VecX& x, const VecX& y) {
    if (!spec.is_incident(z, x)) throw NotIncidentError("x not on G_z");
    if (!spec.is_incident(z, y)) throw NotIncidentError("y not on G_z");
    const PhiChart& cx = spec.phi_at(z, x);
    const PhiChart& cy = spec.phi_at(z, y);
    SpanPair sp{cx.phi_z(z, cx.x_prime(x)), cy.phi_z(z, cy.x_prime(y))};
    if (numerical_rank(sp.phi, spec.rank_tol) < spec.n_dprime ||
        numerical_rank(sp.psi, spec.rank_tol) < spec.n_dprime)
        throw RankDeficientError("phi_z / psi_z rank below n'' at the sample");
    return sp;
}

/// Number of singular values of the stacked orthonormalized row bases that
/// sit within tol of sqrt(2): the dimension of the row-span intersection.
int intersection_dim_sqrt2(const SpanPair& sp, double tol, double rank_tol) {
    const MatX u = orthonormal_rows(sp.phi, rank_tol, "phi_z");
    const MatX v = orthonormal_rows(sp.psi, rank_tol, "psi_z");
    MatX stack(u.rows() + v.rows(), u.cols());
    stack << u, v;
    Eigen::JacobiSVD<MatX> svd(stack);
    const auto& s = svd.singularValues();
    int k = 0;
    const double root2 = std::sqrt(2.0);
    for (int i = 0; i < s.size(); ++i)
        if (std::abs(s[i] - root2) <= tol) ++k;
    return k;
}

}  // namespace

int v_space_dim(const FibrationSpec& spec, const VecX& z, const VecX& x, const VecX& y) {
    const SpanPair sp = span_pair(spec, z, x, y);
    return spec.n_dprime - intersection_dim_sqrt2(sp, spec.intersect_tol, spec.rank_tol);
}

ConjugateReport classify_triplet(const FibrationSpec& spec, const VecX& z,
                                 const VecX& x, const VecX& y) {
    const SpanPair sp = span_pair(spec, z, x, y);
    const int k_band = intersection_dim_sqrt2(sp, spec.intersect_tol, spec.rank_tol);

    // Independent route 1: rank defect of the raw stacked matrix.
    MatX stack(sp.phi.rows() + sp.psi.rows(), sp.phi.cols());
    stack << sp.phi, sp.psi;
    const int k_stack = 2 * spec.n_dprime - numerical_rank(stack, spec.intersect_tol);

    // Singular values of a projected chart derivative, thresholded against
    // the scale of the unprojected matrix so that a vanishing residual (full
    // row-span intersection) reads as rank 0.
    auto projected_rank = [&](const MatX& a, const MatX& onto) {
        const MatX q = orthonormal_rows(onto, spec.rank_tol, "psi_z");
        const MatX resid =
            a * (MatX::Identity(a.cols(), a.cols()) - q.transpose() * q);
        Eigen::JacobiSVD<MatX> svd(resid);
        const double scale = a.jacobiSvd().singularValues()(0);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > spec.intersect_tol * scale) ++rank;
        return rank;
    };

    // Independent route 2: dim V_z(x, y) directly as the rank of phi_z
    // restricted to Ker(psi_z): k = n'' - rank(phi_z (I - psit^T psit)).
    const int k_proj = spec.n_dprime - projected_rank(sp.phi, sp.psi);

    // Independent route 3: the composed map A(z,y)* (A(z,x)*|_{N_z H_x})^{-1}
    // of N_x G_z into N_y G_z / psi_z(Ker phi_z) has rank n'' - dim psi_z(Ker
    // phi_z) -- the mirrored projector defect.
    const int k_comp = spec.n_dprime - projected_rank(sp.psi, sp.phi);

    if (k_band != k_stack || k_band != k_proj || k_band != k_comp) {
        std::ostringstream os;
        os << "conjugacy degree criteria disagree: band=" << k_band
           << " stack=" << k_stack << " projector=" << k_proj
           << " composition=" << k_comp;
        throw ConsistencyFailure(os.str());
    }

    ConjugateReport rep;
    rep.z = z;
    rep.x = x;
    rep.y = y;
    rep.v_dim = spec.n_dprime - k_band;
    if (k_band >= 1) rep.degree = k_band;
    return rep;
}

// ---------------------------------------------------------------------------
// H^lambda and Condition (H)

namespace {

VecX h_lambda_charts(const FibrationSpec& spec, const PhiChart& cx, const PhiChart& cy,
                     const VecX& z, const VecX& xp, const VecX& yp, const MatX& Lambda) {
    if (Lambda.cols() != spec.n_dprime)
        throw DimensionError("Lambda must have n'' columns");
    {
        Eigen::JacobiSVD<MatX> svd(Lambda);
        const auto& s = svd.singularValues();
        if (s[s.size() - 1] <= 1e-10 * s[0])
            throw DependentLambdaError("Lambda rows are linearly dependent");
    }
    const MatX phi = cx.phi_z(z, xp);
    const MatX psi = cy.phi_z(z, yp);
    const MatX q = orthonormal_rows(psi, spec.rank_tol, "psi_z").transpose();  // N x n''
    VecX h(Lambda.rows());
    for (int l = 0; l < Lambda.rows(); ++l) {
        const VecX p = phi.transpose() * Lambda.row(l).transpose();
        const VecX r = p - q * (q.transpose() * p);
        h[l] = r.squaredNorm();
    }
    return h;
}

}  // namespace

VecX h_lambda(const FibrationSpec& spec, const VecX& z, const VecX& x_prime,
              const VecX& y_prime, const MatX& Lambda) {
    const VecX x = spec.point_from_xp(z, x_prime);
    const VecX y = spec.point_from_xp(z, y_prime);
    return h_lambda_charts(spec, spec.phi_at(z, x), spec.phi_at(z, y), z, x_prime,
                           y_prime, Lambda);
}

ConditionHResult condition_h_check(const FibrationSpec& spec, const VecX& z,
                                   const VecX& x, const VecX& y, int k, int trials,
                                   unsigned seed) {
    const PhiChart& cx = spec.phi_at(z, x);
    const PhiChart& cy = spec.phi_at(z, y);
    const VecX xp0 = cx.x_prime(x);
    const VecX yp0 = cy.x_prime(y);
    const int nz = static_cast<int>(z.size());
    const int nx = static_cast<int>(xp0.size());
    const int ny = static_cast<int>(yp0.size());

    std::mt19937 rng(seed);
    ConditionHResult out;
    out.passes = true;
    for (int trial = 0; trial < trials; ++trial) {
        const MatX Lambda = random_independent_lambda(k, spec.n_dprime, rng);
        const auto eval = [&](const VecX& u) {
            return h_lambda_charts(spec, cx, cy, u.head(nz),
                                   u.segment(nz, nx), u.tail(ny), Lambda);
        };
        VecX u0(nz + nx + ny);
        u0 << z, xp0, yp0;
        MatX jac(k, nz + nx + ny);
        for (int j = 0; j < u0.size(); ++j) {
            jac.col(j) = central_diff(
                [&](double t) { VecX u = u0; u[j] += t; return eval(u); }, 1e-5);
        }
        // rank at the absolute-scaled threshold 1e-6 * sigma_max
        Eigen::JacobiSVD<MatX> svd(jac);
        const auto& s = svd.singularValues();
        int rank = 0;
        for (int i = 0; i < s.size(); ++i)
            if (s[i] > 1e-6 * s[0]) ++rank;
        if (s[0] == 0.0) rank = 0;
        out.max_rank = std::max(out.max_rank, rank);
        if (rank != 1) out.passes = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// regularity probe

bool regularity_probe(const FibrationSpec& spec, const ConjugateReport& report,
                      double r_z, double r_x, double r_y, int samples, unsigned seed) {
    if (!report.degree) return true;  // nothing to probe
    const int k = *report.degree;
    const PhiChart& cx = spec.phi_at(report.z, report.x);
    const PhiChart& cy = spec.phi_at(report.z, report.y);
    const VecX xp0 = cx.x_prime(report.x);
    const VecX yp0 = cy.x_prime(report.y);

    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto ball = [&](int d, double r) {
        VecX v(d);
        for (int i = 0; i < d; ++i) v[i] = gauss(rng);
        const double nrm = v.norm();
        if (nrm == 0.0) return VecX(VecX::Zero(d));
        return (v * (r * std::pow(unif(rng), 1.0 / d) / nrm)).eval();
    };

    for (int s = 0; s < samples; ++s) {
        const VecX zt = report.z + ball(static_cast<int>(report.z.size()), r_z);
        const VecX xpt = xp0 + ball(static_cast<int>(xp0.size()), r_x);
        // hunt for a conjugate partner near y': conjugacy of any degree is
        // the vanishing of the smallest eigenvalue of the H quadratic form,
        // i.e. of the smallest singular value of phi_z (I - psit^T psit)
        double scale2 = 1.0;
        const auto target = [&](const VecX& yp) {
            if ((yp - yp0).norm() > r_y) return 1e6 + (yp - yp0).squaredNorm();
            try {
                const MatX phi = cx.phi_z(zt, xpt);
                const MatX psi = cy.phi_z(zt, yp);
                const MatX q = orthonormal_rows(psi, spec.rank_tol, "psi_z");
                const MatX resid =
                    phi * (MatX::Identity(phi.cols(), phi.cols()) -
                           q.transpose() * q);
                Eigen::JacobiSVD<MatX> svd(resid);
                const auto& s = svd.singularValues();
                scale2 = phi.squaredNorm();
                return s[s.size() - 1] * s[s.size() - 1];
            } catch (const Error&) {
                return 1e6;
            }
        };
        const VecX yp = nelder_mead(target, yp0 + ball(static_cast<int>(yp0.size()), 0.3 * r_y),
                                    0.2 * r_y);
        if (target(yp) > 1e-10 * scale2) continue;  // no conjugate partner found
        try {
            const VecX xt = cx.assemble(xpt, cx.phi(zt, xpt));
            const VecX yt = cy.assemble(yp, cy.phi(zt, yp));
            const ConjugateReport rep = classify_triplet(spec, zt, xt, yt);
            if (rep.degree && *rep.degree != k) return false;
        } catch (const Error&) {
            continue;  // sample fell off the chart; it carries no verdict
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Bolker diagnostics

BolkerResult bolker_rank(const FibrationSpec& spec, const VecX& z, const VecX& x,
                         const VecX& eta_dd) {
    if (eta_dd.norm() == 0.0) throw ValidationError("bolker_rank: eta'' must be nonzero");
    if (!spec.is_incident(z, x)) throw NotIncidentError("bolker_rank: x not on G_z");
    const PhiChart& c = spec.phi_at(z, x);
    const VecX xp = c.x_prime(x);

    // criterion (c): rank [phi_z^T, d_{x'}(phi_z^T eta'')] over the x-chart
    const MatX pz = c.phi_z(z, xp);
    const auto d2 = c.phi_z_dxp(z, xp);
    MatX mc(spec.N, spec.n_dprime + static_cast<int>(xp.size()));
    mc.leftCols(spec.n_dprime) = pz.transpose();
    for (int j = 0; j < static_cast<int>(d2.size()); ++j)
        mc.col(spec.n_dprime + j) = d2[j].transpose() * eta_dd;
    const int rank_c = numerical_rank(mc, spec.rank_tol);

    // dual criterion (d): rank [b_x^T, d_{z'}(b_x^T zeta'')] over the b-chart
    const VecX zeta = (-pz.transpose() * eta_dd).eval();
    const BChart& bc = spec.b_at(z, x);
    const VecX zp = bc.z_prime(z);
    const VecX zeta_dd = gather(zeta, bc.zd_idx);
    const MatX bx = bc.b_x(x, zp);
    const auto bd2 = bc.b_x_dzp(x, zp);
    MatX md(spec.n, spec.n_dprime + static_cast<int>(zp.size()));
    md.leftCols(spec.n_dprime) = bx.transpose();
    for (int j = 0; j < static_cast<int>(bd2.size()); ++j)
        md.col(spec.n_dprime + j) = bd2[j].transpose() * zeta_dd;
    const int rank_d = numerical_rank(md, spec.rank_tol);

    const bool imm_c = rank_c == spec.n;
    const bool imm_d = rank_d == spec.n;
    if (imm_c != imm_d) {
        std::ostringstream os;
        os << "Bolker rank criteria disagree: (c) rank=" << rank_c
           << " (d) rank=" << rank_d << " with n=" << spec.n;
        throw ConsistencyFailure(os.str());
    }
    return {rank_c, imm_c};
}

std::vector<CotangentPoint> pi_l_scan(const FibrationSpec& spec, const VecX& z,
                                      const VecX& zeta, const VecX& x, const VecX& /*eta*/,
                                      const std::vector<VecX>& candidates) {
    // eta(V_z(x,y)) = {0}  <=>  phi_z^T eta'' = -zeta lies in rowspan psi_z(z,y')
    const VecX v = (-zeta).eval();
    if (v.norm() == 0.0) throw ValidationError("pi_l_scan: zero covector");

    const auto residual_at = [&](const PhiChart& cy, const VecX& yp) {
        const MatX psi = cy.phi_z(z, yp);
        const MatX q = orthonormal_rows(psi, spec.rank_tol, "psi_z").transpose();
        return (v - q * (q.transpose() * v)).norm() / v.norm();
    };

    std::vector<double> res(candidates.size(),
                            std::numeric_limits<double>::infinity());
    std::vector<const PhiChart*> chart(candidates.size(), nullptr);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const VecX& y = candidates[i];
        if ((y - x).norm() <= 1e-7) continue;
        if (!spec.is_incident(z, y)) continue;
        try {
            const PhiChart& cy = spec.phi_at(z, y);
            chart[i] = &cy;
            res[i] = residual_at(cy, cy.x_prime(y));
        } catch (const Error&) {
        }
    }

    std::vector<CotangentPoint> hits;
    const auto record = [&](const PhiChart& cy, const VecX& yp) {
        const VecX y = cy.assemble(yp, cy.phi(z, yp));
        if ((y - x).norm() < 1e-4) return;  // the trivial zero at y = x
        for (const auto& h : hits)
            if ((h.base - y).norm() < 1e-4) return;
        // matching covector at y with the same zeta: eta'' solves psi^T eta'' = -zeta
        const MatX psi = cy.phi_z(z, yp);
        const VecX eta_dd = (psi * psi.transpose()).ldlt().solve(psi * v);
        hits.push_back({y, cy.conormal(z, yp, eta_dd)});
    };

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!chart[i]) continue;
        const bool local_min =
            (i == 0 || res[i] <= res[i - 1]) &&
            (i + 1 == candidates.size() || res[i] <= res[i + 1]);
        // The gate only has to catch the basin: a zero between two candidates
        // reads O(spacing) at the nearest sample. The 1e-8 acceptance after
        // refinement rejects non-zero local minima.
        if (!local_min || res[i] > 5e-2) continue;
        const PhiChart& cy = *chart[i];
        const VecX yp0 = cy.x_prime(candidates[i]);
        // local spacing sets the refinement scale
        double spacing = 1e-2;
        if (i + 1 < candidates.size())
            spacing = std::max(1e-6, (candidates[i + 1] - candidates[i]).norm());
        const VecX yp = nelder_mead(
            [&](const VecX& p) {
                try { return residual_at(cy, p); }
                catch (const Error&) { return 1e6; }
            },
            yp0, spacing);
        if (residual_at(cy, yp) <= 1e-8) record(cy, yp);
    }
    return hits;
}

// ---------------------------------------------------------------------------
// serialization

std::string conjugate_reports_csv(const std::vector<ConjugateReport>& reports) {
    std::ostringstream os;
    os.precision(17);
    if (reports.empty()) return "v_dim,degree,regular,h_rank\n";
    const auto& first = reports.front();
    for (int i = 0; i < first.z.size(); ++i) os << "z" << i << ",";
    for (int i = 0; i < first.x.size(); ++i) os << "x" << i << ",";
    for (int i = 0; i < first.y.size(); ++i) os << "y" << i << ",";
    os << "v_dim,degree,regular,h_rank\n";
    for (const auto& r : reports) {
        for (int i = 0; i < r.z.size(); ++i) os << r.z[i] << ",";
        for (int i = 0; i < r.x.size(); ++i) os << r.x[i] << ",";
        for (int i = 0; i < r.y.size(); ++i) os << r.y[i] << ",";
        os << r.v_dim << ",";
        if (r.degree) os << *r.degree;
        else os << "none";
        os << "," << (r.regular ? "true" : "false") << ",";
        if (r.condition_h_rank) os << *r.condition_h_rank;
        os << "\n";
    }
    return os.str();
}

}  // namespace dft
