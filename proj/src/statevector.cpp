#include "qmv/statevector.hpp"

#include <bit>
#include <cmath>

namespace qmv {

StateVector::StateVector(int n) : n_(n), amps_(std::size_t(1) << n, cplx(0)) {
    amps_[0] = cplx(1.0, 0.0);
}

StateVector::StateVector(int n, std::vector<cplx> amplitudes)
    : n_(n), amps_(std::move(amplitudes)) {
    if (amps_.size() != (std::size_t(1) << n))
        throw precondition_error("StateVector: amplitude count must be 2^n");
}

void StateVector::apply_one_qubit_operator(int qubit, const Eigen::Matrix2cd& op) {
    const std::uint64_t stride = std::uint64_t(1) << bit_position(qubit);
    const std::uint64_t dim = amps_.size();
    const cplx m00 = op(0, 0), m01 = op(0, 1), m10 = op(1, 0), m11 = op(1, 1);
    for (std::uint64_t base = 0; base < dim; base += 2 * stride) {
        for (std::uint64_t off = 0; off < stride; ++off) {
            const std::uint64_t i0 = base + off;
            const std::uint64_t i1 = i0 + stride;
            const cplx a0 = amps_[i0];
            const cplx a1 = amps_[i1];
            amps_[i0] = m00 * a0 + m01 * a1;
            amps_[i1] = m10 * a0 + m11 * a1;
        }
    }
}

void StateVector::apply_gate(const Gate& gate) {
    if (gate.qubits.size() == 1) {
        apply_one_qubit_operator(gate.qubits[0], Eigen::Matrix2cd(gate.matrix));
        return;
    }
    // Basis of the 4x4 matrix is |q_first q_second>.
    const std::uint64_t s1 = std::uint64_t(1) << bit_position(gate.qubits[0]);
    const std::uint64_t s2 = std::uint64_t(1) << bit_position(gate.qubits[1]);
    const std::uint64_t dim = amps_.size();
    const std::uint64_t mask = s1 | s2;
    const Eigen::Matrix4cd m(gate.matrix);
    for (std::uint64_t b = 0; b < dim; ++b) {
        if (b & mask) continue; // visit each 4-tuple once, at its 00 member
        const std::uint64_t idx[4] = {b, b + s2, b + s1, b + s1 + s2};
        cplx in[4];
        for (int k = 0; k < 4; ++k) in[k] = amps_[idx[k]];
        for (int r = 0; r < 4; ++r) {
            cplx acc(0, 0);
            for (int ccol = 0; ccol < 4; ++ccol) acc += m(r, ccol) * in[ccol];
            amps_[idx[r]] = acc;
        }
    }
}

void StateVector::apply_circuit(const Circuit& circuit) {
    if (circuit.n != n_) throw precondition_error("apply_circuit: qubit count mismatch");
    for (const auto& layer : circuit.layers)
        for (const Gate& g : layer) apply_gate(g);
}

void StateVector::apply_circuit_adjoint(const Circuit& circuit) {
    if (circuit.n != n_) throw precondition_error("apply_circuit_adjoint: qubit count mismatch");
    for (auto layer = circuit.layers.rbegin(); layer != circuit.layers.rend(); ++layer)
        for (const Gate& g : *layer) apply_gate(g.adjoint());
}

void StateVector::scale_by_hamming_weight() {
    for (std::uint64_t b = 0; b < amps_.size(); ++b)
        amps_[b] *= static_cast<double>(std::popcount(b));
}

cplx StateVector::inner_product(const StateVector& other) const {
    cplx acc(0, 0);
    for (std::size_t i = 0; i < amps_.size(); ++i) acc += std::conj(amps_[i]) * other.amps_[i];
    return acc;
}

double StateVector::norm() const {
    double acc = 0.0;
    for (const cplx& a : amps_) acc += std::norm(a);
    return std::sqrt(acc);
}

void StateVector::scale(cplx factor) {
    for (cplx& a : amps_) a *= factor;
}

} // namespace qmv
