#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dft/calculus.hpp"
#include "dft/errors.hpp"

using dft::Rational;

TEST_CASE("rational arithmetic reduces and compares") {
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK((Rational(1, 2) + Rational(1, 3)) == Rational(5, 6));
    CHECK((Rational(3, 4) - Rational(1, 4)) == Rational(1, 2));
    CHECK((Rational(2, 3) * Rational(3, 2)) == Rational(1));
    CHECK((Rational(1, 2) / Rational(1, 4)) == Rational(2));
    CHECK(Rational(-1, 2) < Rational(0));
    CHECK(Rational(-3, -6) == Rational(1, 2));
    CHECK(Rational(-1, 2).str() == "-1/2");
    CHECK(Rational(4, 2).str() == "2");
}

TEST_CASE("fio order examples") {
    // Radon in the plane: N = 2, n = 2, n' = 1 -> order -1/2.
    CHECK(dft::fio_order(2, 2, 1) == Rational(-1, 2));
    // d-plane transform in R^3 over lines: N = 4, n = 3, n' = 1.
    CHECK(dft::fio_order(4, 3, 1) == Rational(-3, 4));
}

TEST_CASE("clean excess identity 2m + e/2 = -n' over small tuples") {
    for (int n = 2; n <= 12; ++n) {
        for (int N = n; N <= 12; ++N) {
            for (int np = 1; np < n; ++np) {
                const auto ce = dft::clean_excess_no_conjugates(N, n, np);
                CHECK(ce.excess == N - n);
                const Rational lhs = dft::fio_order(N, n, np) * Rational(2)
                                     + Rational(ce.excess, 2);
                CHECK(lhs == ce.normal_order);
                CHECK(ce.normal_order == Rational(-np));
            }
        }
    }
}

TEST_CASE("conjugate excess and artifact order table") {
    // Theorem-2 exponents -(n + 1 - k)/2 for n = 2..5, k = 1..n-1,
    // with the smallest admissible N = 2 n''.
    for (int n = 2; n <= 5; ++n) {
        for (int k = 1; k <= n - 1; ++k) {
            const int ndp = n - 1;  // n' = 1
            if (k > ndp) continue;
            const int N = 2 * ndp;
            if (N < n) continue;
            const auto ex = dft::conjugate_excess(N, n, ndp, k);
            CHECK(ex.a_order == Rational(-(n + 1 - k), 2));
            CHECK(ex.excess == N - 2 * ndp - 1 + k);
            CHECK(ex.excess >= 0);
            CHECK(ex.dim_E == N + 2 * (n - ndp) - 1 + k);
            CHECK(ex.dim_CRk == N + 2 * (n - ndp) - 1);
        }
    }
}

TEST_CASE("structure numbers: geodesic X-ray on a surface") {
    const auto s = dft::structure_numbers(2, 2, 1, 1);
    CHECK(s.n_dprime == 1);
    CHECK(s.dim_Z == 3);
    CHECK(s.order_R == Rational(-1, 2));
    CHECK(s.order_normal == Rational(-1));
    CHECK(s.excess_clean == 0);
    REQUIRE(s.excess_conjugate.has_value());
    CHECK(*s.excess_conjugate == 0);  // N - 2n'' - 1 + k = 2 - 2 - 1 + 1
    REQUIRE(s.order_artifact.has_value());
    CHECK(*s.order_artifact == Rational(-1));  // -(2 + 1 - 1)/2
    REQUIRE(s.dim_E.has_value());
    CHECK(*s.dim_E == 4);
    CHECK(s.dim_CRk == 3);
}

TEST_CASE("structure numbers reject bad dimension tuples") {
    CHECK_THROWS_AS(dft::structure_numbers(2, 1, 0), dft::DimensionError);
    CHECK_THROWS_AS(dft::structure_numbers(2, 2, 2), dft::DimensionError);   // n'' = 0
    CHECK_THROWS_AS(dft::structure_numbers(2, 3, 1), dft::DimensionError);   // N < n
    CHECK_THROWS_AS(dft::structure_numbers(2, 2, 1, 2), dft::DimensionError);  // k > n''
    CHECK_THROWS_AS(dft::structure_numbers(3, 3, 1, 1), dft::DimensionError);  // N < 2n''
    CHECK_THROWS_AS(dft::structure_numbers(2, 2, 1, 0), dft::DimensionError);  // k < 1
}

TEST_CASE("affine grassmannian dimensions") {
    CHECK(dft::affine_grassmannian_dim(1, 2) == 2);   // lines in the plane
    CHECK(dft::affine_grassmannian_dim(1, 3) == 4);   // lines in space
    CHECK(dft::affine_grassmannian_dim(2, 3) == 3);   // planes in space
}
