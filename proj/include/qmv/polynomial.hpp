#pragma once

#include <vector>

#include "qmv/types.hpp"

namespace qmv {

// Dense univariate polynomial over C, coefficients[k] multiplying eps^k.
// Canonical form has a nonzero trailing coefficient unless the polynomial is 0.
class ComplexPolynomial {
  public:
    ComplexPolynomial() = default;
    explicit ComplexPolynomial(std::vector<cplx> coefficients);

    static ComplexPolynomial zero() { return ComplexPolynomial(); }
    static ComplexPolynomial constant(cplx c);

    const std::vector<cplx>& coefficients() const { return coeffs_; }
    cplx coefficient(std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : cplx(0); }
    bool is_zero() const { return coeffs_.empty(); }
    int degree() const { return coeffs_.empty() ? -1 : static_cast<int>(coeffs_.size()) - 1; }

    cplx evaluate(cplx x) const;
    ComplexPolynomial operator*(const ComplexPolynomial& rhs) const;
    ComplexPolynomial operator+(const ComplexPolynomial& rhs) const;

    double one_norm() const;

  private:
    std::vector<cplx> coeffs_; // trailing entry nonzero (canonical form)
};

// All roots with multiplicity, as eigenvalues of the balanced companion matrix
// followed by one Newton polish per root. Requires degree >= 1.
// Postcondition: |p(root)| / ||p||_1 <= tol::root_residual for each root.
std::vector<cplx> poly_roots(const ComplexPolynomial& p);

// Derivatives at 0 of ln f, orders 1..p, from the derivatives of f via the
// triangular system f^(m) = sum_{j=0}^{m-1} C(m-1,j) f^(j) g^(m-j).
// Input is the coefficient sequence of f; f(0) must be nonzero (the sequence is
// normalized by f(0) first, so the returned values are derivatives of
// ln(f/f(0)), which equal those of ln f when f(0) = 1).
std::vector<cplx> log_taylor_from_poly(const std::vector<cplx>& f_coefficients, int p);

} // namespace qmv
