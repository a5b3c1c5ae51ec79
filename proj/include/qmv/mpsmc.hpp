#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qmv/estimate.hpp"
#include "qmv/oracle.hpp"

namespace qmv {

// Coarse-grained lattice of supersites: blocks of 2d x 2d qubits (smaller at
// the boundary when the grid side is not a multiple of 2d).
struct SupersiteLattice {
    int grid_rows = 0, grid_cols = 0; // qubit grid
    int block = 0;                    // 2d
    int rows = 0, cols = 0;           // lattice dimensions
    int depth = 0;                    // d used for the blocking
    std::vector<std::vector<int>> site_qubits; // flat index I*cols+J -> qubits, row-major
    int max_phys_dim = 0;                      // D = 2^{largest block area}

    int flat(int i, int j) const { return i * cols + j; }
    int phys_dim(int site) const {
        return 1 << static_cast<int>(site_qubits[static_cast<std::size_t>(site)].size());
    }
    // Plaquette grid: 2x2 cells of supersites, degenerating to a single
    // row/column when the lattice is 1-wide in that direction.
    int plaq_rows() const { return std::max(rows - 1, 1); }
    int plaq_cols() const { return std::max(cols - 1, 1); }
    std::vector<int> plaquette_sites(int pi, int pj) const;
};

SupersiteLattice coarse_grain(const Circuit& circuit, int d);

// Q_s = U^dag (O_s x I) U as a dense operator on the back-to-front lightcone
// of s (sorted qubit list; first listed qubit is the most significant bit).
struct ConjugatedOp {
    int source_qubit = 0;
    std::vector<int> qubits;
    Eigen::MatrixXcd matrix;
};

ConjugatedOp conjugated_observable(const Circuit& circuit, const ProductObservable& observable,
                                   int s);

// Deterministic duplication rule: each qubit goes to the lexicographically
// smallest plaquette covering the support of its Q_s.
struct PlaquetteAssignment {
    std::vector<std::vector<int>> qubits; // flat plaquette index pi*plaq_cols+pj -> qubits
};
PlaquetteAssignment assign_plaquettes(const SupersiteLattice& lattice,
                                      const std::vector<std::vector<int>>& qubit_supersites);

// Product of the conjugated operators assigned to one plaquette, kept in
// factored form (a literal dense matrix over a full 2x2 supersite cell is
// astronomically large); dense() materializes it for small cells.
struct PlaquetteOperator {
    int pi = 0, pj = 0;
    std::vector<int> supersites;       // flat lattice indices of the cell
    std::vector<ConjugatedOp> factors; // pairwise commuting
    bool hermitian = true;

    // Dense matrix over the cell's qubits (sorted ascending), capped.
    Eigen::MatrixXcd dense(int max_qubits = 12) const;
    std::vector<int> cell_qubits(const SupersiteLattice& lattice) const;
};

std::vector<PlaquetteOperator> build_plaquette_operators(const SupersiteLattice& lattice,
                                                         const Circuit& circuit,
                                                         const ProductObservable& observable);

// MPS over the snake-ordered supersites of one parity's strip partition.
struct MpsSite {
    int phys = 1;
    std::vector<Eigen::MatrixXcd> a; // a[x]: left x right
    int left() const { return a.empty() ? 1 : static_cast<int>(a[0].rows()); }
    int right() const { return a.empty() ? 1 : static_cast<int>(a[0].cols()); }
};

struct SampleDraw {
    std::vector<int> values; // one local value per chain site
    cplx amplitude;          // amplitude of the normalized state at `values`
    double probability;      // pi(x) = |amplitude|^2
};

struct SnakeOrderedMPS {
    std::vector<MpsSite> sites;
    std::vector<int> site_supersite; // chain position -> lattice flat index
    std::vector<int> chain_qubits;   // qubit-level order: position -> physical qubit
    double gamma = 1.0;              // ||Psi|| (stored norm)

    int max_bond() const;
    int n_qubits() const { return static_cast<int>(chain_qubits.size()); }

    // Amplitude <x|Psi> by chain contraction (unnormalized state).
    cplx amplitude(const std::vector<int>& values) const;
    // Dense |Psi> in the chain qubit order (first chain qubit most significant).
    std::vector<cplx> densify(int max_qubits) const;
    // Exact sequential conditional sampling from pi(x) = |<x|Psi/gamma>|^2.
    SampleDraw sample(std::mt19937_64& rng) const;
};

struct MpsOptions {
    std::uint64_t max_window_elements = std::uint64_t(1) << 24;
    double svd_threshold = tol::svd_truncation;
};

SnakeOrderedMPS build_parity_state(const SupersiteLattice& lattice,
                                   const std::vector<PlaquetteOperator>& plaquettes, int b,
                                   const MpsOptions& options = {});

// Qubit-level permutation between the two snake orders.
struct OrderMap {
    std::vector<int> chain0_to_chain1; // position in Psi0's order -> position in Psi1's
};
OrderMap make_order_map(const SnakeOrderedMPS& psi0, const SnakeOrderedMPS& psi1);

// <Psi0| W |Psi1> by densifying both states (desk-scale cross-check).
cplx exact_overlap(const SnakeOrderedMPS& psi0, const SnakeOrderedMPS& psi1,
                   const OrderMap& order, int max_qubits = 24);

struct MpsPipeline {
    SupersiteLattice lattice;
    std::vector<PlaquetteOperator> plaquettes;
    SnakeOrderedMPS psi0, psi1;
    OrderMap order;
};
MpsPipeline build_pipeline(const Circuit& circuit, const ProductObservable& observable,
                           int d = -1, const MpsOptions& options = {});

// Theorem-5 Monte-Carlo estimator: mu_tilde = S^{-1} sum F(x_i) with
// S = ceil(3 delta^-2), |mu_tilde - mu| <= delta with probability >= 2/3.
MeanEstimate mc_estimate(const Circuit& circuit, const ProductObservable& observable,
                         double delta, std::uint64_t seed, std::int64_t samples_override = -1,
                         const MpsOptions& options = {});

} // namespace qmv
