#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "qmv/estimate.hpp"
#include "qmv/lightcone.hpp"
#include "qmv/oracle.hpp"
#include "qmv/polynomial.hpp"

namespace qmv {

// Overlap graph of restriction cones: i ~ j iff the cones of the two qubits
// intersect. Taylor monomials of ln f vanish on subsets that are disconnected
// here, so only connected subsets enter the interpolation sum.
struct OverlapGraph {
    int n = 0;
    std::vector<std::vector<int>> adjacency; // sorted neighbor lists
    int max_degree = 0;
};

OverlapGraph build_overlap_graph(const Circuit& circuit);

// All connected vertex subsets of size 1..p, each exactly once, as bitmasks
// (requires n <= 64). Deterministic order.
std::vector<std::uint64_t> enumerate_connected_subsets(const OverlapGraph& graph, int p);

// Upper bound (3n/2)(3 ell2)^{p-1} on the connected-subset family size.
double subset_count_ceiling(int n, int ell2, int p);

struct InterpConfig {
    double beta = 2.0;  // a-priori zero-free radius used to pick p
    double delta = 1e-3;
    int p_cap = 24;
    int oracle_cap = default_oracle_cap;

    // Smallest p with n beta^{-p} / ((p+1)(beta-1)) <= delta/2; the remaining
    // delta/2 is headroom for floating-point accumulation.
    int derive_p(int n) const;
    double gamma_bound(int ell1, int ell4) const { return 1.0 / (60.0 * beta * ell1 * ell4); }
};

// Coefficients of mu_S(eps) = <0^n| U^dag prod_{j in S} O_j(eps) U |0^n>,
// computed on the circuit restricted to the cone of S. Degree |S|, constant
// term 1, coefficient of eps^k = sum over k-subsets T of S of
// <0^n| U^dag prod_{j in T} (O_j - I) U |0^n>.
ComplexPolynomial mu_subset_coefficients(const Circuit& circuit,
                                         const ProductObservable& observable,
                                         const std::set<int>& subset);

// Per-subset pieces of the truncated log-Taylor assembly (exposed for the
// inclusion-exclusion consistency checks).
struct SubsetFamily {
    std::vector<std::uint64_t> masks;           // connected subsets, |S| <= p
    std::vector<std::vector<cplx>> h;           // h_S coefficients, degrees 0..p
    std::vector<std::vector<cplx>> g;           // g_S coefficients, degrees 0..p
    std::size_t family_size() const { return masks.size(); }
};

struct TaylorAssembly {
    std::vector<cplx> coefficients; // T_p, degrees 0..p (constant term 0)
    SubsetFamily family;
    int p = 0;
    int ell1 = 0, ell2 = 0, ell4 = 0;
    double gamma = 0.0;
    double gamma_bound = 0.0;
};

TaylorAssembly assemble_taylor(const Circuit& circuit, const ProductObservable& observable,
                               const InterpConfig& config);

// Theorem-1 estimator: mu_tilde = exp(T_p(1)) with |log mu - log mu_tilde| <= delta
// whenever gamma <= 1/(60 beta ell1 ell4).
MeanEstimate estimate_mean_interp(const Circuit& circuit, const ProductObservable& observable,
                                  double delta, InterpConfig config = {});

} // namespace qmv
