#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmv/types.hpp"

namespace qmv {

// One- or two-qubit unitary gate. The matrix is stored in the computational
// basis ordered |q_first q_second> for two-qubit gates (first listed qubit is
// the more significant bit).
struct Gate {
    std::vector<int> qubits;  // one or two distinct indices
    Eigen::MatrixXcd matrix;  // 2x2 or 4x4, unitary within tol::unitarity

    bool is_two_qubit() const { return qubits.size() == 2; }
    Gate adjoint() const { return Gate{qubits, matrix.adjoint()}; }
};

Gate one_qubit_gate(int qubit, const Eigen::Matrix2cd& m);
Gate two_qubit_gate(int q_first, int q_second, const Eigen::Matrix4cd& m);

// Row-major grid of qubits; qubit index = row * cols + col.
struct GridLayout {
    int rows = 0;
    int cols = 0;

    int index(int row, int col) const { return row * cols + col; }
    int row_of(int qubit) const { return qubit / cols; }
    int col_of(int qubit) const { return qubit % cols; }
    bool adjacent(int a, int b) const {
        return std::abs(row_of(a) - row_of(b)) + std::abs(col_of(a) - col_of(b)) == 1;
    }
};

// Layered circuit. layers[0] is applied to the state first; a layer of any
// gates (including single-qubit-only layers) counts as depth 1.
struct Circuit {
    int n = 0;
    std::vector<std::vector<Gate>> layers;
    std::optional<GridLayout> layout;

    int depth() const { return static_cast<int>(layers.size()); }

    // Checks all structural invariants (gate arity, unitarity, per-layer
    // disjoint supports, layout adjacency); throws parse_error on violation.
    void validate() const;
};

Circuit identity_circuit(int n);

// Tensor-product observable: one 2x2 operator per qubit, with cached norms and
// structure flags computed at construction.
class ProductObservable {
  public:
    explicit ProductObservable(std::vector<Eigen::Matrix2cd> ops);

    int n() const { return static_cast<int>(ops_.size()); }
    const Eigen::Matrix2cd& op(int j) const { return ops_[static_cast<std::size_t>(j)]; }
    const std::vector<Eigen::Matrix2cd>& ops() const { return ops_; }

    double site_norm(int j) const { return site_norms_[static_cast<std::size_t>(j)]; }
    const std::vector<double>& site_norms() const { return site_norms_; }
    double max_site_norm() const;

    // gamma = max_j ||O_j - I||; the closeness-to-identity scale.
    double gamma() const { return gamma_; }
    bool hermitian() const { return hermitian_; }
    bool psd() const { return psd_; }

    static ProductObservable identity(int n);

  private:
    std::vector<Eigen::Matrix2cd> ops_;
    std::vector<double> site_norms_;
    double gamma_ = 0.0;
    bool hermitian_ = false;
    bool psd_ = false;
};

// O_j = I + (1-2p)Z for every qubit; the observable for which
// mu_p = 2^{-n} mu under per-qubit bit-flip noise at rate p.
ProductObservable noisy_z_observable(double p, int n);

// Circuit file (JSON) front end; schema documented in the README.
Circuit parse_circuit(const std::string& text);
std::string serialize_circuit(const Circuit& circuit);

ProductObservable parse_observable(const std::string& text);
std::string serialize_observable(const ProductObservable& observable);

} // namespace qmv
