#include "qmv/orpoly.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "qmv/lightcone.hpp"
#include "qmv/linalg.hpp"

namespace qmv {

DampingPolynomial::DampingPolynomial(int n, double delta) : n_(n), delta_(delta) {
    if (n < 1) throw precondition_error("DampingPolynomial: n must be >= 1");
    if (delta <= 0.0 || delta >= 0.5)
        throw precondition_error("DampingPolynomial: delta must lie in (0, 1/2)");

    if (n == 1) {
        coeffs_ = {1.0, -1.0};
        t_scale_ = 0.0;
        return;
    }
    t_scale_ = 2.0 / (n - 1.0);
    t_offset_ = -(n + 1.0) / (n - 1.0);
    const double t0 = std::abs(t_offset_); // |t(0)| > 1
    const double target = 1.0 / delta;
    int degree = std::max(1, static_cast<int>(std::ceil(std::acosh(target) / std::acosh(t0))));
    while (std::cosh(degree * std::acosh(t0)) < target) ++degree;

    // Monomial coefficients of T_L(t(x)) via the three-term recurrence in x.
    std::vector<double> prev = {1.0};
    std::vector<double> cur = {t_offset_, t_scale_};
    for (int k = 2; k <= degree; ++k) {
        std::vector<double> next(static_cast<std::size_t>(k) + 1, 0.0);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            next[i] += 2.0 * t_offset_ * cur[i];
            next[i + 1] += 2.0 * t_scale_ * cur[i];
        }
        for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
        prev = std::move(cur);
        cur = std::move(next);
    }
    if (degree == 1) prev = {1.0}; // unused
    denom_ = cur[0]; // T_L(t(0))
    coeffs_ = std::move(cur);
    for (double& c : coeffs_) c /= denom_;
    coeffs_[0] = 1.0; // exact by construction (x/x == 1 in IEEE), made explicit
}

double DampingPolynomial::evaluate(double x) const {
    if (n_ == 1) return 1.0 - x;
    const double t = t_scale_ * x + t_offset_;
    const int degree = this->degree();
    // Chebyshev value at t: recurrence inside [-1,1], cosh form outside.
    double value;
    if (std::abs(t) <= 1.0) {
        double a = 1.0, b = t;
        for (int k = 2; k <= degree; ++k) {
            const double c = 2.0 * t * b - a;
            a = b;
            b = c;
        }
        value = (degree == 0) ? a : b;
    } else {
        const double s = (t < 0.0 && (degree % 2 == 1)) ? -1.0 : 1.0;
        value = s * std::cosh(degree * std::acosh(std::abs(t)));
    }
    return value / denom_;
}

double DampingPolynomial::max_abs_on_integers() const {
    double worst = 0.0;
    for (int c = 1; c <= n_; ++c) worst = std::max(worst, std::abs(evaluate(c)));
    return worst;
}

double surjection_count(int r, int k) {
    if (k < 0 || r < 0 || k > r) return 0.0;
    if (k == 0) return r == 0 ? 1.0 : 0.0;
    // Guard the 128-bit powers: k^r < 2^126 for everything enumerable here.
    if (r * std::log2(std::max(2, k)) > 120.0)
        throw resource_error("surjection_count: arguments exceed exact range");
    __int128 total = 0;
    __int128 binom = 1; // C(k, i)
    for (int i = 0; i <= k; ++i) {
        __int128 power = 1;
        for (int j = 0; j < r; ++j) power *= (k - i);
        total += (i % 2 == 0 ? 1 : -1) * binom * power;
        binom = binom * (k - i) / (i + 1);
    }
    return static_cast<double>(total);
}

namespace {

// Per-size subset sums A_k = sum_{|S|=k} Pr[S all ones in U^dag|0^n>], each
// term on the lightcone-restricted circuit. Restricted output probabilities
// are memoized per cone mask.
struct MomentAccumulator {
    const Circuit& circuit;
    std::vector<std::uint64_t> cone_masks; // per-qubit front-to-back cone
    std::unordered_map<std::uint64_t, std::vector<double>> cone_probs;
    std::uint64_t terms = 0;

    explicit MomentAccumulator(const Circuit& c) : circuit(c) {
        if (c.n > 64)
            throw resource_error("h_moment_lightcone: n > 64 unsupported by subset masks");
        cone_masks.resize(static_cast<std::size_t>(c.n));
        for (int j = 0; j < c.n; ++j) {
            std::uint64_t mask = 0;
            for (int q : forward_lightcone(c, {j})) mask |= std::uint64_t(1) << q;
            cone_masks[static_cast<std::size_t>(j)] = mask;
        }
    }

    const std::vector<double>& probabilities(std::uint64_t cone) {
        auto it = cone_probs.find(cone);
        if (it != cone_probs.end()) return it->second;
        std::set<int> kept;
        for (int q = 0; q < circuit.n; ++q)
            if (cone & (std::uint64_t(1) << q)) kept.insert(q);
        const RestrictedCircuit restricted = restrict_circuit(circuit, kept);
        StateVector state(restricted.circuit.n);
        state.apply_circuit_adjoint(restricted.circuit);
        std::vector<double> probs(state.dim());
        for (std::size_t b = 0; b < state.dim(); ++b) probs[b] = std::norm(state.amplitude(b));
        return cone_probs.emplace(cone, std::move(probs)).first->second;
    }

    // Pr[all qubits of `subset` read 1], on the restricted register.
    double term(std::uint64_t subset) {
        std::uint64_t cone = 0;
        std::uint64_t s = subset;
        while (s != 0) {
            cone |= cone_masks[static_cast<std::size_t>(std::countr_zero(s))];
            s &= s - 1;
        }
        const std::vector<double>& probs = probabilities(cone);
        const int m = std::popcount(cone);

        // Bit positions of the subset inside the restricted register
        // (restricted qubits are the cone's members in ascending order;
        // qubit 0 of the register is the most significant amplitude bit).
        std::uint64_t ones_mask = 0;
        int local = 0;
        for (int q = 0; q < circuit.n; ++q) {
            const std::uint64_t bit = std::uint64_t(1) << q;
            if (!(cone & bit)) continue;
            if (subset & bit) ones_mask |= std::uint64_t(1) << (m - 1 - local);
            ++local;
        }
        const std::uint64_t free_mask = ((m == 64) ? ~std::uint64_t(0)
                                                   : ((std::uint64_t(1) << m) - 1)) &
                                        ~ones_mask;
        // Sum over assignments of the free bits.
        double acc = 0.0;
        std::uint64_t sub = free_mask;
        while (true) {
            acc += probs[sub | ones_mask];
            if (sub == 0) break;
            sub = (sub - 1) & free_mask;
        }
        return acc;
    }

    std::vector<double> subset_sums(int k_max, const MomentOptions& options) {
        std::vector<double> sums(static_cast<std::size_t>(k_max) + 1, 0.0);
        // Enumerate subsets in colex order per size via Gosper's hack.
        for (int k = 1; k <= std::min(k_max, circuit.n); ++k) {
            const std::uint64_t limit = (circuit.n == 64)
                                            ? ~std::uint64_t(0)
                                            : (std::uint64_t(1) << circuit.n);
            std::uint64_t subset = (std::uint64_t(1) << k) - 1;
            while (subset < limit) {
                if (++terms > options.subset_budget) {
                    std::ostringstream msg;
                    msg << "h_moment_lightcone: subset enumeration exceeded the budget of "
                        << options.subset_budget << " terms";
                    throw resource_error(msg.str());
                }
                sums[static_cast<std::size_t>(k)] += term(subset);
                const std::uint64_t c = subset & (~subset + 1);
                const std::uint64_t r = subset + c;
                if (r >= limit || r < subset) break;
                subset = (((r ^ subset) >> 2) / c) | r;
            }
        }
        return sums;
    }
};

} // namespace

std::vector<double> h_moments_lightcone(const Circuit& circuit, int r_max,
                                        const MomentOptions& options) {
    if (r_max < 0) throw precondition_error("h_moment_lightcone: order must be >= 0");
    MomentAccumulator acc(circuit);
    const int k_max = (options.max_subset_size >= 0)
                          ? std::min(options.max_subset_size, r_max)
                          : r_max;
    const std::vector<double> sums = acc.subset_sums(std::min(k_max, circuit.n), options);
    std::vector<double> moments(static_cast<std::size_t>(r_max) + 1, 0.0);
    moments[0] = 1.0;
    for (int r = 1; r <= r_max; ++r) {
        double m = 0.0;
        for (int k = 1; k <= std::min(r, static_cast<int>(sums.size()) - 1); ++k)
            m += surjection_count(r, k) * sums[static_cast<std::size_t>(k)];
        moments[static_cast<std::size_t>(r)] = m;
    }
    return moments;
}

double h_moment_lightcone(const Circuit& circuit, int r, const MomentOptions& options) {
    return h_moments_lightcone(circuit, r, options)[static_cast<std::size_t>(r)];
}

OutputProbEstimate estimate_output_prob(const Circuit& circuit, double delta,
                                        const MomentOptions& options) {
    if (delta <= 0.0 || delta >= 0.5)
        throw precondition_error("estimate_output_prob: delta must lie in (0, 1/2)");
    DampingPolynomial damping(std::max(1, circuit.n), delta);
    MomentAccumulator acc(circuit);
    MomentOptions opts = options;
    const int k_max = std::min(damping.degree(), circuit.n);
    const std::vector<double> sums = acc.subset_sums(k_max, opts);

    const std::vector<double>& g = damping.coefficients();
    double q = g[0]; // r = 0 moment is 1
    for (int r = 1; r <= damping.degree(); ++r) {
        double moment = 0.0;
        for (int k = 1; k <= std::min(r, k_max); ++k)
            moment += surjection_count(r, k) * sums[static_cast<std::size_t>(k)];
        q += g[static_cast<std::size_t>(r)] * moment;
    }
    OutputProbEstimate out;
    out.q = q;
    out.degree = damping.degree();
    out.max_abs_damping = damping.max_abs_on_integers();
    out.term_count = acc.terms;
    return out;
}

DilatedCircuit dilate(const Circuit& circuit, const ProductObservable& observable) {
    if (observable.n() != circuit.n)
        throw precondition_error("dilate: observable size mismatch");
    DilatedCircuit out;
    const int n = circuit.n;
    out.circuit.n = 2 * n;
    double factor = 1.0;
    std::vector<Eigen::Matrix2cd> normalized;
    normalized.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double norm = observable.site_norm(j);
        if (norm <= 0.0)
            throw precondition_error("dilate: observable with vanishing norm at qubit " +
                                     std::to_string(j) + " cannot be rescaled");
        if (norm > 1.0 + tol::unitarity)
            throw precondition_error("dilate: ||O_j|| > 1 at qubit " + std::to_string(j));
        factor *= norm;
        normalized.push_back(observable.op(j) / norm);
    }
    out.norm_factor = factor;

    for (const auto& layer : circuit.layers) {
        std::vector<Gate> copy = layer;
        out.circuit.layers.push_back(std::move(copy));
    }
    std::vector<Gate> block_layer;
    block_layer.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        block_layer.push_back(two_qubit_gate(j, n + j, block_encode(normalized[static_cast<std::size_t>(j)])));
    out.circuit.layers.push_back(std::move(block_layer));
    for (auto layer = circuit.layers.rbegin(); layer != circuit.layers.rend(); ++layer) {
        std::vector<Gate> adj;
        adj.reserve(layer->size());
        for (const Gate& gate : *layer) adj.push_back(gate.adjoint());
        out.circuit.layers.push_back(std::move(adj));
    }
    out.circuit.validate();
    return out;
}

MeanEstimate estimate_abs_mean(const Circuit& circuit, const ProductObservable& observable,
                               double delta, const MomentOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (delta <= 0.0 || delta >= 0.5)
        throw precondition_error("estimate_abs_mean: delta must lie in (0, 1/2)");

    DilatedCircuit dilated = dilate(circuit, observable);
    const double delta_prime = 0.5 * delta * delta;
    OutputProbEstimate prob = estimate_output_prob(dilated.circuit, delta_prime, options);

    MeanEstimate estimate;
    const double e = (prob.q < delta_prime) ? 0.0 : std::sqrt(std::max(0.0, prob.q));
    estimate.value = cplx(e * dilated.norm_factor, 0.0);
    estimate.kind = ErrorKind::additive;
    estimate.delta = delta;
    estimate.confidence = 1.0; // deterministic
    estimate.diagnostics["q"] = prob.q;
    estimate.diagnostics["delta_prime"] = delta_prime;
    estimate.diagnostics["L"] = prob.degree;
    estimate.diagnostics["term_count"] = static_cast<double>(prob.term_count);
    estimate.diagnostics["max_abs_damping"] = prob.max_abs_damping;
    estimate.diagnostics["norm_factor"] = dilated.norm_factor;
    estimate.diagnostics["thresholded"] = (prob.q < delta_prime) ? 1.0 : 0.0;
    estimate.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return estimate;
}

} // namespace qmv
