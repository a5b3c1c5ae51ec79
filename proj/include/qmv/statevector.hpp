#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qmv/circuit.hpp"

namespace qmv {

// Dense amplitude vector on n qubits. Qubit 0 is the most significant bit of
// the basis index: bit of qubit q in index b is (b >> (n-1-q)) & 1.
class StateVector {
  public:
    explicit StateVector(int n); // |0...0>
    StateVector(int n, std::vector<cplx> amplitudes);

    int n() const { return n_; }
    std::size_t dim() const { return amps_.size(); }
    const std::vector<cplx>& amplitudes() const { return amps_; }
    std::vector<cplx>& amplitudes() { return amps_; }
    cplx amplitude(std::uint64_t basis_index) const { return amps_[basis_index]; }

    int bit_position(int qubit) const { return n_ - 1 - qubit; }

    void apply_gate(const Gate& gate);
    void apply_circuit(const Circuit& circuit);
    void apply_circuit_adjoint(const Circuit& circuit);

    // General (possibly non-unitary) 2x2 operator on one qubit.
    void apply_one_qubit_operator(int qubit, const Eigen::Matrix2cd& op);

    // Multiplies each amplitude by weight(popcount of its basis index); the
    // diagonal action of sum_j |1><1|_j in the computational basis.
    void scale_by_hamming_weight();

    cplx inner_product(const StateVector& other) const; // <this|other>
    double norm() const;
    void scale(cplx factor);

  private:
    int n_;
    std::vector<cplx> amps_;
};

} // namespace qmv
