#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dft {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Local graph chart of the incidence relation over the X side:
/// x'' = phi(z, x') with x split by coordinate indices into (x', x'').
/// Derivatives default to central finite differences (step 1e-5 with a
/// Richardson consistency check); built-in fibrations override them.
class PhiChart {
public:
    virtual ~PhiChart() = default;

    std::vector<int> xp_idx;  // indices of the x' block in x
    std::vector<int> xd_idx;  // indices of the x'' block in x

    VecX x_prime(const VecX& x) const;
    VecX x_dprime(const VecX& x) const;
    VecX assemble(const VecX& xp, const VecX& xd) const;
    /// Embeds a conormal of G_z at x into ambient coordinates:
    /// eta' = -phi_{x'}^T eta'', eta'' as given.
    VecX conormal(const VecX& z, const VecX& xp, const VecX& eta_dd) const;

    virtual bool valid(const VecX& z, const VecX& x) const = 0;
    virtual VecX phi(const VecX& z, const VecX& xp) const = 0;

    virtual MatX phi_z(const VecX& z, const VecX& xp) const;          // n'' x N
    virtual MatX phi_xp(const VecX& z, const VecX& xp) const;         // n'' x n'
    /// d/dx'_j of phi_z, one n'' x N matrix per x' component.
    virtual std::vector<MatX> phi_z_dxp(const VecX& z, const VecX& xp) const;

    double fd_step = 1e-5;
};

/// Local graph chart over the G side: z'' = b(x, z') with z split into
/// (z', z'') by coordinate indices. Same differentiation contract as PhiChart.
class BChart {
public:
    virtual ~BChart() = default;

    std::vector<int> zp_idx;  // indices of z' in z (size N - n'')
    std::vector<int> zd_idx;  // indices of z'' in z (size n'')

    VecX z_prime(const VecX& z) const;
    VecX z_dprime(const VecX& z) const;
    VecX assemble(const VecX& zp, const VecX& zd) const;

    virtual bool valid(const VecX& x, const VecX& z) const = 0;
    virtual VecX b(const VecX& x, const VecX& zp) const = 0;

    virtual MatX b_x(const VecX& x, const VecX& zp) const;             // n'' x n
    virtual MatX b_zp(const VecX& x, const VecX& zp) const;            // n'' x (N-n'')
    /// d/dz'_j of b_x, one n'' x n matrix per z' component.
    virtual std::vector<MatX> b_x_dzp(const VecX& x, const VecX& zp) const;

    double fd_step = 1e-5;
};

/// A double fibration in local charts: finitely many overlapping phi- and
/// b-charts with validity predicates, a nowhere-vanishing weight kappa and
/// the structural dimensions. Immutable after construction; all operations
/// below are pure functions of the spec.
struct FibrationSpec {
    int N = 0;         // dim G
    int n = 0;         // dim X
    int n_prime = 0;   // dim of the x' block
    int n_dprime = 0;  // codimension of G_z in X

    std::vector<std::shared_ptr<const PhiChart>> phi_charts;
    std::vector<std::shared_ptr<const BChart>> b_charts;
    std::function<double(const VecX&, const VecX&)> kappa;     // kappa(z, x) > 0
    std::function<bool(const VecX&, const VecX&)> incident;    // (z, x) in Z

    /// Equispaced arclength sampling of the curve G_z (with respect to the
    /// fibration's dG_z measure), endpoints included; ds is the actual node
    /// spacing. Empty points when G_z misses the domain.
    struct GzSampling {
        std::vector<Eigen::Vector2d> points;
        double ds = 0.0;
    };
    /// Unset std::function when the spec has no curve parametrization (the
    /// transform module then refuses the spec).
    std::function<GzSampling(const VecX&, double)> gz_points;

    double rank_tol = 1e-6;       // relative singular-value threshold
    double intersect_tol = 1e-8;  // sqrt(2) band for row-span intersections
    std::string name = "custom";

    /// Throws DimensionError unless n = n' + n'' and N + n > N + n' > N >= n >= 2.
    void validate() const;

    /// First chart valid at (z, x); throws ChartDomainError if none.
    const PhiChart& phi_at(const VecX& z, const VecX& x) const;
    const BChart& b_at(const VecX& z, const VecX& x) const;

    /// Reconstructs x on G_z from chart coordinates x' (first chart whose
    /// assembled point it deems valid). Throws ChartDomainError.
    VecX point_from_xp(const VecX& z, const VecX& xp) const;

    /// Incidence test: the predicate if supplied, otherwise chart residual
    /// |x'' - phi(z, x')| <= 1e-9 in some valid chart.
    bool is_incident(const VecX& z, const VecX& x) const;
};

/// Covector at a base point of X or G.
struct CotangentPoint {
    VecX base;
    VecX covector;
};

struct ConjugateReport {
    VecX z, x, y;
    int v_dim = -1;
    std::optional<int> degree;  // empty means not Z-conjugate
    bool regular = false;
    std::optional<int> condition_h_rank;
};

/// CSV serialization of classification results (header + one row each).
std::string conjugate_reports_csv(const std::vector<ConjugateReport>& reports);

/// zeta = -phi_z(z, x')^T eta''; the G-side leg of the conormal of Z.
/// Throws ChartDomainError / RankDeficientError / NotIncidentError.
CotangentPoint a_map(const FibrationSpec& spec, const VecX& z, const VecX& x,
                     const VecX& eta_dd);

/// eta = -b_x(x, z')^T zeta''; the X-side leg. Same error contract.
CotangentPoint b_map(const FibrationSpec& spec, const VecX& z, const VecX& x,
                     const VecX& zeta_dd);

/// dim V_z(x, y) = n'' - dim(rowspan phi_z(z,x') \cap rowspan psi_z(z,y')).
/// The intersection dimension is the number of singular values of the
/// stacked orthonormalized row blocks within intersect_tol of sqrt(2).
int v_space_dim(const FibrationSpec& spec, const VecX& z, const VecX& x, const VecX& y);

/// Classifies the triplet (z; x, y) by degree with independent routes that
/// must agree: the sqrt(2)-band count, the rank defect of the raw stacked
/// matrix, dim V_z via the projector onto Ker(psi_z), and the composed-map
/// rank n'' - dim(psi_z Ker(phi_z)). Disagreement raises ConsistencyFailure.
ConjugateReport classify_triplet(const FibrationSpec& spec, const VecX& z,
                                 const VecX& x, const VecX& y);

/// Samples perturbed triplets in balls of the given radii around the
/// report's (z, x, y); every sample that is still conjugate must have the
/// same degree. Conjugate partners are located by minimizing H over y'.
bool regularity_probe(const FibrationSpec& spec, const ConjugateReport& report,
                      double r_z, double r_x, double r_y, int samples,
                      unsigned seed = 12345);

/// H^{lambda_l} = |(I - psitilde^T psitilde) phi_z^T lambda_l^T|^2 for each
/// row lambda_l of Lambda (k x n''); entries are >= 0 by construction.
/// Throws DependentLambdaError / OrthonormalizationFailure.
VecX h_lambda(const FibrationSpec& spec, const VecX& z, const VecX& x_prime,
              const VecX& y_prime, const MatX& Lambda);

struct ConditionHResult {
    int max_rank = 0;
    bool passes = false;
};

/// Condition (H): rank D_{z,x',y'} H^lambda = 1 for `trials` random
/// independent Lambda draws (central differences, step 1e-5,
/// Richardson-checked; rank threshold 1e-6 * sigma_max).
ConditionHResult condition_h_check(const FibrationSpec& spec, const VecX& z,
                                   const VecX& x, const VecX& y, int k, int trials,
                                   unsigned seed = 12345);

struct BolkerResult {
    int rank = 0;
    bool immersive = false;
};

/// rank [phi_z^T, d_{x'}(phi_z^T eta'')]; immersive iff rank = n. The dual
/// b-chart criterion is evaluated as well and must agree (ConsistencyFailure).
BolkerResult bolker_rank(const FibrationSpec& spec, const VecX& z, const VecX& x,
                         const VecX& eta_dd);

/// All sampled y != x on G_z where eta(V_z(x, y)) = {0}, i.e. where pi_L
/// fails to be injective. Candidates near a collision are refined by local
/// minimization of the row-span residual over y'.
std::vector<CotangentPoint> pi_l_scan(const FibrationSpec& spec, const VecX& z,
                                      const VecX& zeta, const VecX& x, const VecX& eta,
                                      const std::vector<VecX>& candidates);

}  // namespace dft
