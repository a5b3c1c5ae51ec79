#pragma once

#include <cstdint>
#include <vector>

#include "qmv/estimate.hpp"
#include "qmv/oracle.hpp"

namespace qmv {

// Univariate damping polynomial with g(0) = 1 and |g(c)| <= delta on the
// integers 1..n: the Chebyshev ratio g(x) = T_L(t(x)) / T_L(t(0)) where t maps
// [1, n] onto [-1, 1], with L minimal such that |T_L(t(0))| >= 1/delta.
// n = 1 degenerates to g(x) = 1 - x.
class DampingPolynomial {
  public:
    DampingPolynomial(int n, double delta);

    int n() const { return n_; }
    double delta() const { return delta_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    // Monomial coefficients g_0..g_L, g_0 = 1 exactly.
    const std::vector<double>& coefficients() const { return coeffs_; }

    // Stable evaluation through the defining Chebyshev ratio (the monomial
    // form is ill-conditioned at large n).
    double evaluate(double x) const;

    // max_{c in 1..n} |g(c)| by evaluation at every integer.
    double max_abs_on_integers() const;

  private:
    int n_;
    double delta_;
    std::vector<double> coeffs_;
    double t_scale_ = 0.0, t_offset_ = 0.0; // t(x) = t_scale x + t_offset
    double denom_ = 1.0;                    // T_L(t(0))
};

// Number of surjections [r] -> [k], computed exactly in 128-bit arithmetic
// and returned as a double (exact for every size this project enumerates).
double surjection_count(int r, int k);

struct MomentOptions {
    std::uint64_t subset_budget = 10'000'000; // enumerated support subsets
    int max_subset_size = -1;                 // -1: up to r
};

// <0^n| H^r |0^n> with H = sum_j U |1><1|_j U^dag, evaluated as
// sum_k Surj(r,k) sum_{|S|=k} Pr[S all read 1 in U^dag|0^n>], each probability
// computed on the circuit restricted to the (front-to-back) lightcone of S.
double h_moment_lightcone(const Circuit& circuit, int r, const MomentOptions& options = {});

// All moments 1..r_max in one pass (the per-size subset sums are shared).
std::vector<double> h_moments_lightcone(const Circuit& circuit, int r_max,
                                        const MomentOptions& options = {});

// Lemma-5 style output-probability estimate: q = sum_r g_r <0|H^r|0> with
// |q - |<0^n|U|0^n>|^2| <= delta.
struct OutputProbEstimate {
    double q = 0.0;
    int degree = 0;
    double max_abs_damping = 0.0; // verified max_{c in 1..n} |g(c)|
    std::uint64_t term_count = 0; // enumerated subsets
};
OutputProbEstimate estimate_output_prob(const Circuit& circuit, double delta,
                                        const MomentOptions& options = {});

// 2n-qubit dilation V = (U^dag x I) B (U x I) with B = tensor of block
// encodings B_j acting on pairs (j, n+j); <0^{2n}|V|0^{2n}> equals the mean
// value of the unit-normalized observable.
struct DilatedCircuit {
    Circuit circuit;        // 2n qubits, depth 2d+1
    double norm_factor = 1; // product of the original ||O_j||
};
DilatedCircuit dilate(const Circuit& circuit, const ProductObservable& observable);

// Theorem-4 estimator of |<0^n|U^dag O U|0^n>| within additive delta
// (equals the mean value itself when every O_j is PSD).
MeanEstimate estimate_abs_mean(const Circuit& circuit, const ProductObservable& observable,
                               double delta, const MomentOptions& options = {});

} // namespace qmv
