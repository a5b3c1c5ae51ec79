#include "qmv/oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace qmv {

namespace {

void check_cap(int n, int cap, const char* who) {
    if (n > cap) {
        std::ostringstream msg;
        msg << who << ": n = " << n << " exceeds the dense oracle cap " << cap;
        throw resource_error(msg.str());
    }
}

} // namespace

StateVector run_circuit(const Circuit& circuit, int cap) {
    check_cap(circuit.n, cap, "run_circuit");
    StateVector state(circuit.n);
    state.apply_circuit(circuit);
    return state;
}

cplx mean_value_exact(const Circuit& circuit, const ProductObservable& observable,
                      const std::optional<std::set<int>>& subset, int cap) {
    check_cap(circuit.n, cap, "mean_value_exact");
    if (observable.n() != circuit.n)
        throw precondition_error("mean_value_exact: observable size mismatch");
    StateVector psi = run_circuit(circuit, cap);
    StateVector phi = psi;
    if (subset) {
        for (int j : *subset) phi.apply_one_qubit_operator(j, observable.op(j));
    } else {
        for (int j = 0; j < circuit.n; ++j) phi.apply_one_qubit_operator(j, observable.op(j));
    }
    return psi.inner_product(phi);
}

ComplexPolynomial f_eps_coefficients(const Circuit& circuit,
                                     const ProductObservable& observable, int cap) {
    check_cap(circuit.n, cap, "f_eps_coefficients");
    if (observable.n() != circuit.n)
        throw precondition_error("f_eps_coefficients: observable size mismatch");
    const int n = circuit.n;
    const int points = n + 1;
    StateVector psi = run_circuit(circuit, cap);

    // f at the (n+1)-st roots of unity, then a unitary inverse DFT.
    std::vector<cplx> values(static_cast<std::size_t>(points));
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    for (int m = 0; m < points; ++m) {
        const double angle = 2.0 * std::numbers::pi * m / points;
        const cplx eps = std::polar(1.0, angle);
        StateVector phi = psi;
        for (int j = 0; j < n; ++j) {
            Eigen::Matrix2cd shifted = id + eps * (observable.op(j) - id);
            phi.apply_one_qubit_operator(j, shifted);
        }
        values[static_cast<std::size_t>(m)] = psi.inner_product(phi);
    }
    std::vector<cplx> coeffs(static_cast<std::size_t>(points), cplx(0));
    for (int k = 0; k < points; ++k) {
        cplx acc(0, 0);
        for (int m = 0; m < points; ++m) {
            const double angle = -2.0 * std::numbers::pi * k * m / points;
            acc += values[static_cast<std::size_t>(m)] * std::polar(1.0, angle);
        }
        coeffs[static_cast<std::size_t>(k)] = acc / static_cast<double>(points);
    }
    if (std::abs(coeffs[0] - cplx(1.0, 0.0)) > tol::coeff_identity)
        throw internal_error("f_eps_coefficients: c_0 deviates from 1");
    return ComplexPolynomial(std::move(coeffs));
}

double h_moment_exact(const Circuit& circuit, int r, int cap) {
    check_cap(circuit.n, cap, "h_moment_exact");
    if (r < 0) throw precondition_error("h_moment_exact: order must be >= 0");
    if (r == 0) return 1.0;
    StateVector zero(circuit.n);
    StateVector phi = zero;
    for (int step = 0; step < r; ++step) {
        phi.apply_circuit_adjoint(circuit);
        phi.scale_by_hamming_weight();
        phi.apply_circuit(circuit);
    }
    const cplx value = zero.inner_product(phi);
    if (std::abs(value.imag()) > 1e-10)
        throw internal_error("h_moment_exact: moment has non-real part");
    return value.real();
}

} // namespace qmv
