#include "qmv/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace qmv {

namespace {
constexpr double kTrailingCutoff = 0.0; // exact zeros only; callers trim noise themselves
}

ComplexPolynomial::ComplexPolynomial(std::vector<cplx> coefficients)
    : coeffs_(std::move(coefficients)) {
    while (!coeffs_.empty() && std::abs(coeffs_.back()) <= kTrailingCutoff) coeffs_.pop_back();
}

ComplexPolynomial ComplexPolynomial::constant(cplx c) {
    return ComplexPolynomial(std::vector<cplx>{c});
}

cplx ComplexPolynomial::evaluate(cplx x) const {
    cplx acc(0.0, 0.0);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

ComplexPolynomial ComplexPolynomial::operator*(const ComplexPolynomial& rhs) const {
    if (is_zero() || rhs.is_zero()) return zero();
    std::vector<cplx> out(coeffs_.size() + rhs.coeffs_.size() - 1, cplx(0));
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j)
            out[i + j] += coeffs_[i] * rhs.coeffs_[j];
    return ComplexPolynomial(std::move(out));
}

ComplexPolynomial ComplexPolynomial::operator+(const ComplexPolynomial& rhs) const {
    std::vector<cplx> out(std::max(coeffs_.size(), rhs.coeffs_.size()), cplx(0));
    for (std::size_t i = 0; i < coeffs_.size(); ++i) out[i] += coeffs_[i];
    for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) out[i] += rhs.coeffs_[i];
    return ComplexPolynomial(std::move(out));
}

double ComplexPolynomial::one_norm() const {
    double s = 0.0;
    for (const cplx& c : coeffs_) s += std::abs(c);
    return s;
}

namespace {

// Parlett-Reinsch balancing: scale row/column pairs by powers of two until
// their 1-norms are comparable. Improves companion eigenvalue accuracy.
void balance(Eigen::MatrixXcd& m) {
    const int n = static_cast<int>(m.rows());
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (int i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                r += std::abs(m(i, j));
                c += std::abs(m(j, i));
            }
            if (r == 0.0 || c == 0.0) continue;
            const double s = c + r;
            double g = r / radix;
            double f = 1.0;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                m.row(i) *= 1.0 / f;
                m.col(i) *= f;
            }
        }
    }
}

cplx horner(const std::vector<cplx>& c, cplx x) {
    cplx acc(0, 0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

cplx horner_derivative(const std::vector<cplx>& c, cplx x) {
    cplx acc(0, 0);
    for (std::size_t k = c.size(); k-- > 1;)
        acc = acc * x + static_cast<double>(k) * c[k];
    return acc;
}

} // namespace

std::vector<cplx> poly_roots(const ComplexPolynomial& p) {
    if (p.is_zero()) throw precondition_error("poly_roots: zero polynomial");
    std::vector<cplx> c = p.coefficients();
    if (c.size() < 2) throw precondition_error("poly_roots: degree must be >= 1");

    std::vector<cplx> roots;
    // Factor out roots at the origin.
    std::size_t first_nonzero = 0;
    while (first_nonzero < c.size() && std::abs(c[first_nonzero]) == 0.0) ++first_nonzero;
    for (std::size_t i = 0; i < first_nonzero; ++i) roots.emplace_back(0.0, 0.0);
    c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(first_nonzero));

    const int deg = static_cast<int>(c.size()) - 1;
    if (deg >= 1) {
        Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
        for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
        for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
        balance(companion);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
        for (int i = 0; i < deg; ++i) {
            cplx r = solver.eigenvalues()(i);
            cplx d = horner_derivative(c, r);
            if (std::abs(d) > 0.0) {
                cplx step = horner(c, r) / d;
                if (std::isfinite(step.real()) && std::isfinite(step.imag())) r -= step;
            }
            roots.push_back(r);
        }
    }
    return roots;
}

std::vector<cplx> log_taylor_from_poly(const std::vector<cplx>& f_coefficients, int p) {
    if (p < 0) throw precondition_error("log_taylor_from_poly: order must be >= 0");
    if (f_coefficients.empty() || std::abs(f_coefficients[0]) == 0.0)
        throw precondition_error("log_taylor_from_poly: f(0) = 0");

    // Derivatives f^(k) = k! c_k of the normalized input (f(0) -> 1).
    std::vector<cplx> fder(static_cast<std::size_t>(p) + 1, cplx(0));
    fder[0] = cplx(1.0, 0.0);
    double factorial = 1.0;
    for (int k = 1; k <= p; ++k) {
        factorial *= k;
        if (static_cast<std::size_t>(k) < f_coefficients.size())
            fder[k] = f_coefficients[k] / f_coefficients[0] * factorial;
    }

    std::vector<cplx> g(static_cast<std::size_t>(p) + 1, cplx(0));
    // Forward solve of f^(m) = sum_{j=0}^{m-1} C(m-1,j) f^(j) g^(m-j); the j=0
    // term isolates g^(m) because f^(0) = 1.
    std::vector<double> binom(static_cast<std::size_t>(p) + 1, 0.0);
    for (int m = 1; m <= p; ++m) {
        binom[0] = 1.0;
        for (int j = m - 1; j >= 1; --j) binom[j] = binom[j] + binom[j - 1];
        cplx acc = fder[m];
        for (int j = 1; j <= m - 1; ++j) acc -= binom[j] * fder[j] * g[m - j];
        g[m] = acc;
    }
    return std::vector<cplx>(g.begin() + 1, g.end());
}

} // namespace qmv
