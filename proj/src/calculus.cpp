#include "dft/calculus.hpp"

#include <numeric>
#include <sstream>

namespace dft {

Rational::Rational(std::int64_t n) : num(n), den(1) {}

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d == 0) throw DimensionError("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    num = g ? n / g : n;
    den = g ? d / g : d;
}

Rational Rational::operator+(const Rational& o) const { return {num * o.den + o.num * den, den * o.den}; }
Rational Rational::operator-(const Rational& o) const { return {num * o.den - o.num * den, den * o.den}; }
Rational Rational::operator*(const Rational& o) const { return {num * o.num, den * o.den}; }
Rational Rational::operator/(const Rational& o) const {
    if (o.num == 0) throw DimensionError("rational division by zero");
    return {num * o.den, den * o.num};
}
bool Rational::operator<(const Rational& o) const { return num * o.den < o.num * den; }

std::string Rational::str() const {
    std::ostringstream os;
    os << num;
    if (den != 1) os << '/' << den;
    return os.str();
}

namespace {

void check_dims(int N, int n, int n_prime) {
    const int n_dprime = n - n_prime;
    if (n < 2 || n_prime < 1 || n_dprime < 1)
        throw DimensionError("need n >= 2 and 1 <= n' <= n-1");
    if (!(N + n > N + n_prime && N + n_prime > N && N >= n))
        throw DimensionError("dimensional assumptions N+n > dim Z > N >= n violated");
}

}  // namespace

Rational fio_order(int N, int n, int n_prime) {
    check_dims(N, n, n_prime);
    return {-(N + 2 * n_prime - n), 4};
}

CleanExcess clean_excess_no_conjugates(int N, int n, int n_prime) {
    check_dims(N, n, n_prime);
    const int e = N - n;
    const Rational order = fio_order(N, n, n_prime) * Rational{2} + Rational{e, 2};
    if (!(order == Rational{-n_prime})) throw ConsistencyFailure("clean excess identity violated");
    return {e, order};
}

ConjugateExcess conjugate_excess(int N, int n, int n_dprime, int k) {
    const int n_prime = n - n_dprime;
    check_dims(N, n, n_prime);
    if (N < 2 * n_dprime) throw DimensionError("conjugate degrees need N >= 2n''");
    if (k < 1 || k > n_dprime) throw DimensionError("degree k out of range 1..n''");
    ConjugateExcess out;
    out.excess = N - 2 * n_dprime - 1 + k;
    if (out.excess < 0) throw ConsistencyFailure("conjugate excess negative");
    out.a_order = Rational{-(n + 1 - k), 2};
    out.dim_E = N + 2 * n_prime - 1 + k;
    out.dim_CRk = N + 2 * n_prime - 1;
    // order = 2*fio_order + e/2, same composition arithmetic as the clean case
    const Rational check = fio_order(N, n, n_prime) * Rational{2} + Rational{out.excess, 2};
    if (!(check == out.a_order)) throw ConsistencyFailure("conjugate order identity violated");
    return out;
}

StructureNumbers structure_numbers(int N, int n, int n_prime, std::optional<int> k) {
    check_dims(N, n, n_prime);
    StructureNumbers s;
    s.N = N;
    s.n = n;
    s.n_prime = n_prime;
    s.n_dprime = n - n_prime;
    s.dim_Z = N + n_prime;
    s.order_R = fio_order(N, n, n_prime);
    const auto clean = clean_excess_no_conjugates(N, n, n_prime);
    s.excess_clean = clean.excess;
    s.order_normal = Rational{-n_prime};
    s.dim_CRk = N + 2 * n_prime - 1;
    if (k) {
        s.k = k;
        const auto ce = conjugate_excess(N, n, s.n_dprime, *k);
        s.excess_conjugate = ce.excess;
        s.order_artifact = ce.a_order;
        s.dim_E = ce.dim_E;
    }
    return s;
}

int affine_grassmannian_dim(int d, int n) {
    if (d < 1 || d >= n) throw DimensionError("need 1 <= d < n");
    return (d + 1) * (n - d);
}

}  // namespace dft
