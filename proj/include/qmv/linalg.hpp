#pragma once

#include <utility>

#include <Eigen/Dense>

#include "qmv/types.hpp"

namespace qmv {

// Largest absolute entry; the norm used by the unitarity / Hermiticity checks.
double max_abs(const Eigen::MatrixXcd& m);

// Largest singular value.
double spectral_norm(const Eigen::MatrixXcd& m);

bool is_unitary(const Eigen::MatrixXcd& m, double tolerance = tol::unitarity);
bool is_hermitian(const Eigen::MatrixXcd& m, double tolerance = tol::hermiticity);

// Square root of a PSD Hermitian matrix (tiny negative eigenvalues clamped to 0).
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m);

// Polar decomposition A = U' M with U' unitary and M = (A^dag A)^{1/2} PSD.
// Singular A: A = V S W^dag gives U' = V W^dag, M = W S W^dag (any unitary
// completion satisfies the defining identities, which is all that is promised).
struct PolarDecomposition {
    Eigen::MatrixXcd unitary;
    Eigen::MatrixXcd psd;
};
PolarDecomposition polar_unitary(const Eigen::MatrixXcd& a);

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// One-extra-qubit block encoding of a norm-<=1 single-qubit operator:
//   B = (U' x I)(M x Z + (I - M^2)^{1/2} x X)
// with A = U'M the polar decomposition of the encoded operator. B is a 4x4
// unitary on (system qubit, ancilla) with (I x <0|) B (I x |0>) = A.
//
// block_encode(o) encodes o directly and requires ||o|| <= 1 (+unitarity slack).
// block_encode(o, eps) encodes O(eps)/||O(eps)|| for O(eps) = I + eps(o - I);
// the off-block then obeys ||(I x <1|) B (I x |0>)|| <= 2 sqrt(gamma |eps|).
Eigen::Matrix4cd block_encode(const Eigen::Matrix2cd& o);
Eigen::Matrix4cd block_encode(const Eigen::Matrix2cd& o, cplx eps);

// Pauli matrices and friends used all over the tests and builders.
Eigen::Matrix2cd pauli_x();
Eigen::Matrix2cd pauli_y();
Eigen::Matrix2cd pauli_z();
Eigen::Matrix2cd hadamard();
Eigen::Matrix4cd cnot();

} // namespace qmv
