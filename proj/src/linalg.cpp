#include "qmv/linalg.hpp"

#include <cmath>

namespace qmv {

double max_abs(const Eigen::MatrixXcd& m) {
    return m.cwiseAbs().maxCoeff();
}

double spectral_norm(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}

bool is_unitary(const Eigen::MatrixXcd& m, double tolerance) {
    if (m.rows() != m.cols()) return false;
    Eigen::MatrixXcd delta = m.adjoint() * m;
    delta -= Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    return max_abs(delta) <= tolerance;
}

bool is_hermitian(const Eigen::MatrixXcd& m, double tolerance) {
    if (m.rows() != m.cols()) return false;
    return max_abs(Eigen::MatrixXcd(m - m.adjoint())) <= tolerance;
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd evals = es.eigenvalues();
    for (int i = 0; i < evals.size(); ++i) evals(i) = std::sqrt(std::max(0.0, evals(i)));
    return es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().adjoint();
}

PolarDecomposition polar_unitary(const Eigen::MatrixXcd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXcd u = svd.matrixU() * svd.matrixV().adjoint();
    Eigen::MatrixXcd m =
        svd.matrixV() * svd.singularValues().asDiagonal().toDenseMatrix().cast<cplx>() *
        svd.matrixV().adjoint();
    return {u, m};
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {

Eigen::Matrix4cd block_encode_normalized(const Eigen::Matrix2cd& a) {
    PolarDecomposition polar = polar_unitary(a);
    Eigen::MatrixXcd m = polar.psd;
    Eigen::MatrixXcd k = psd_sqrt(Eigen::MatrixXcd::Identity(2, 2) - m * m);
    Eigen::MatrixXcd core = kron(m, pauli_z()) + kron(k, pauli_x());
    Eigen::MatrixXcd b = kron(polar.unitary, Eigen::MatrixXcd::Identity(2, 2)) * core;
    return Eigen::Matrix4cd(b);
}

} // namespace

Eigen::Matrix4cd block_encode(const Eigen::Matrix2cd& o) {
    double norm = spectral_norm(o);
    if (norm > 1.0 + tol::unitarity)
        throw precondition_error("block_encode: operator norm " + std::to_string(norm) +
                                 " exceeds 1");
    return block_encode_normalized(o);
}

Eigen::Matrix4cd block_encode(const Eigen::Matrix2cd& o, cplx eps) {
    Eigen::Matrix2cd shifted =
        Eigen::Matrix2cd::Identity() + eps * (o - Eigen::Matrix2cd::Identity());
    double norm = spectral_norm(shifted);
    if (norm <= 0.0)
        throw precondition_error("block_encode: O(eps) vanishes, cannot normalize");
    return block_encode_normalized(Eigen::Matrix2cd(shifted / norm));
}

Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}

Eigen::Matrix2cd pauli_y() {
    Eigen::Matrix2cd m;
    m << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
    return m;
}

Eigen::Matrix2cd pauli_z() {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return m;
}

Eigen::Matrix2cd hadamard() {
    Eigen::Matrix2cd m;
    double s = 1.0 / std::sqrt(2.0);
    m << s, s, s, -s;
    return m;
}

Eigen::Matrix4cd cnot() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = 1;
    m(1, 1) = 1;
    m(2, 3) = 1;
    m(3, 2) = 1;
    return m;
}

} // namespace qmv
