#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dft/errors.hpp"

namespace dft {

/// Exact rational number. All the dimension/excess/order bookkeeping is
/// integer arithmetic; keeping it rational makes the identities equalities
/// instead of approximations.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n);  // NOLINT(google-explicit-constructor)
    Rational(std::int64_t n, std::int64_t d);

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;
};

/// Dimensional data of a double fibration (N = dim of the ray space,
/// n = dim of the base, n = n' + n''), optionally with a conjugacy degree k,
/// plus everything derived from them.
struct StructureNumbers {
    int N = 0;
    int n = 0;
    int n_prime = 0;
    int n_dprime = 0;
    std::optional<int> k;

    int dim_Z = 0;               // N + n'
    Rational order_R;            // order of the transform and of its adjoint
    Rational order_normal;       // order of the normal operator (no conjugate points)
    int excess_clean = 0;        // N - n
    std::optional<int> excess_conjugate;   // N - 2n'' - 1 + k
    std::optional<Rational> order_artifact;  // -(n + 1 - k)/2
    std::optional<int> dim_E;    // N + 2n' - 1 + k
    int dim_CRk = 0;             // N + 2n' - 1
};

/// Order of R and R* as Fourier integral operators: -(N + 2n' - n)/4.
Rational fio_order(int N, int n, int n_prime);

/// Clean-composition excess without conjugate points (e = N - n) and the
/// resulting normal-operator order -n'. Asserts the identity
/// 2*fio_order + e/2 == -n'.
struct CleanExcess {
    int excess;
    Rational normal_order;
};
CleanExcess clean_excess_no_conjugates(int N, int n, int n_prime = 1);

/// Excess and artifact-operator order at conjugacy degree k, plus the
/// dimensions of the intersection set E_{k,a} and of the regular conjugate
/// set C_{R,k}.
struct ConjugateExcess {
    int excess;          // N - 2n'' - 1 + k, always >= 0 under the preconditions
    Rational a_order;    // -(n + 1 - k)/2
    int dim_E;           // N + 2n' - 1 + k
    int dim_CRk;         // N + 2n' - 1
};
ConjugateExcess conjugate_excess(int N, int n, int n_dprime, int k);

/// Full derived table for a dimension tuple; throws DimensionError if the
/// standing assumptions (n = n' + n'', N + n > N + n' > N >= n >= 2, and
/// when k is given N >= 2n'' and 1 <= k <= n'') fail.
StructureNumbers structure_numbers(int N, int n, int n_prime, std::optional<int> k = {});

/// dim G(d, n) = (d+1)(n-d) for the affine Grassmannian presets.
int affine_grassmannian_dim(int d, int n);

}  // namespace dft
