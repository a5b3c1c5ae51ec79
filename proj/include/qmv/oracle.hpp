#pragma once

#include <optional>
#include <set>

#include "qmv/circuit.hpp"
#include "qmv/polynomial.hpp"
#include "qmv/statevector.hpp"

namespace qmv {

// Exact dense statevector reference. Everything here is ground truth for the
// approximation algorithms; the qubit cap keeps runs desk-scale.
inline constexpr int default_oracle_cap = 22;

StateVector run_circuit(const Circuit& circuit, int cap = default_oracle_cap);

// <0^n| U^dag (prod_{j in S} O_j) U |0^n>; S defaults to all qubits.
cplx mean_value_exact(const Circuit& circuit, const ProductObservable& observable,
                      const std::optional<std::set<int>>& subset = std::nullopt,
                      int cap = default_oracle_cap);

// Coefficients of f(eps) = <0^n| U^dag O(eps) U |0^n> with
// O_j(eps) = I + eps (O_j - I), extracted by evaluating f at the (n+1)-st
// roots of unity and inverse DFT. Degree n; c_0 = 1 within tol::coeff_identity.
ComplexPolynomial f_eps_coefficients(const Circuit& circuit,
                                     const ProductObservable& observable,
                                     int cap = default_oracle_cap);

// <0^n| H^r |0^n> for H = sum_j U |1><1|_j U^dag, by dense application.
double h_moment_exact(const Circuit& circuit, int r, int cap = default_oracle_cap);

} // namespace qmv
