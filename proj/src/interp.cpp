#include "qmv/interp.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace qmv {

namespace {

// Restriction cone of one qubit: the support of U^dag A_j U, i.e. the cone
// that makes <0|U^dag O_S U|0> computable on the restricted circuit.
std::vector<std::set<int>> restriction_cones(const Circuit& circuit) {
    std::vector<std::set<int>> cones(static_cast<std::size_t>(circuit.n));
    for (int j = 0; j < circuit.n; ++j)
        cones[static_cast<std::size_t>(j)] = backward_lightcone(circuit, {j});
    return cones;
}

std::uint64_t require_mask_width(int n, const char* who) {
    if (n > 64) {
        std::ostringstream msg;
        msg << who << ": subset machinery uses 64-bit masks, n = " << n << " unsupported";
        throw resource_error(msg.str());
    }
    return n == 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << n) - 1);
}

} // namespace

OverlapGraph build_overlap_graph(const Circuit& circuit) {
    OverlapGraph graph;
    graph.n = circuit.n;
    graph.adjacency.assign(static_cast<std::size_t>(circuit.n), {});
    const auto cones = restriction_cones(circuit);
    for (int i = 0; i < circuit.n; ++i) {
        for (int j = i + 1; j < circuit.n; ++j) {
            const auto& a = cones[static_cast<std::size_t>(i)];
            const auto& b = cones[static_cast<std::size_t>(j)];
            const bool overlap = std::any_of(a.begin(), a.end(),
                                             [&](int q) { return b.count(q) > 0; });
            if (overlap) {
                graph.adjacency[static_cast<std::size_t>(i)].push_back(j);
                graph.adjacency[static_cast<std::size_t>(j)].push_back(i);
            }
        }
    }
    for (const auto& nbrs : graph.adjacency)
        graph.max_degree = std::max(graph.max_degree, static_cast<int>(nbrs.size()));
    return graph;
}

namespace {

struct EsuWalker {
    const std::vector<std::uint64_t>& nbr_masks;
    std::vector<std::uint64_t> out;

    void extend(std::uint64_t sub, std::uint64_t sub_nbrs, std::uint64_t ext,
                std::uint64_t ge_root_mask, int p) {
        out.push_back(sub);
        if (std::popcount(sub) == p) return;
        while (ext != 0) {
            const int w = std::countr_zero(ext);
            ext &= ext - 1; // w is removed for all subsequent siblings
            const std::uint64_t w_bit = std::uint64_t(1) << w;
            const std::uint64_t w_nbrs = nbr_masks[static_cast<std::size_t>(w)];
            // Exclusive neighbors of w only: not in sub, not already adjacent
            // to sub, and above the root. This is what makes each connected
            // set appear exactly once.
            const std::uint64_t fresh = w_nbrs & ~sub & ~sub_nbrs & ge_root_mask & ~w_bit;
            extend(sub | w_bit, sub_nbrs | w_nbrs, ext | fresh, ge_root_mask, p);
        }
    }
};

} // namespace

std::vector<std::uint64_t> enumerate_connected_subsets(const OverlapGraph& graph, int p) {
    if (p < 1) throw precondition_error("enumerate_connected_subsets: p must be >= 1");
    require_mask_width(graph.n, "enumerate_connected_subsets");
    std::vector<std::uint64_t> nbr_masks(static_cast<std::size_t>(graph.n), 0);
    for (int v = 0; v < graph.n; ++v)
        for (int u : graph.adjacency[static_cast<std::size_t>(v)])
            nbr_masks[static_cast<std::size_t>(v)] |= std::uint64_t(1) << u;

    EsuWalker walker{nbr_masks, {}};
    for (int v = 0; v < graph.n; ++v) {
        const std::uint64_t v_bit = std::uint64_t(1) << v;
        const std::uint64_t ge_root =
            (v + 1 >= 64) ? 0 : ~((std::uint64_t(1) << (v + 1)) - 1);
        const std::uint64_t ext = nbr_masks[static_cast<std::size_t>(v)] & ge_root;
        walker.extend(v_bit, nbr_masks[static_cast<std::size_t>(v)], ext, ge_root, p);
    }
    return walker.out;
}

double subset_count_ceiling(int n, int ell2, int p) {
    return 1.5 * n * std::pow(3.0 * std::max(1, ell2), p - 1);
}

int InterpConfig::derive_p(int n) const {
    if (beta <= 1.0) throw precondition_error("InterpConfig: beta must exceed 1");
    for (int p = 1; p <= p_cap; ++p) {
        const double trunc = n * std::pow(beta, -p) / ((p + 1) * (beta - 1.0));
        if (trunc <= delta / 2.0) return p;
    }
    std::ostringstream msg;
    msg << "interp: truncation order for delta = " << delta << " exceeds the cap p = " << p_cap;
    throw resource_error(msg.str());
}

ComplexPolynomial mu_subset_coefficients(const Circuit& circuit,
                                         const ProductObservable& observable,
                                         const std::set<int>& subset) {
    std::vector<cplx> coeffs(subset.size() + 1, cplx(0));
    coeffs[0] = cplx(1.0, 0.0);
    if (subset.empty()) return ComplexPolynomial(std::move(coeffs));

    const std::set<int> cone = backward_lightcone(circuit, subset);
    const RestrictedCircuit restricted = restrict_circuit(circuit, cone);
    StateVector psi(restricted.circuit.n);
    psi.apply_circuit(restricted.circuit);

    const std::vector<int> members(subset.begin(), subset.end());
    const std::size_t count = std::size_t(1) << members.size();
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    for (std::size_t t = 1; t < count; ++t) {
        StateVector phi = psi;
        int size = 0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (!(t & (std::size_t(1) << i))) continue;
            ++size;
            const int local =
                restricted.original_to_new[static_cast<std::size_t>(members[i])];
            phi.apply_one_qubit_operator(
                local, Eigen::Matrix2cd(observable.op(members[i]) - id));
        }
        coeffs[static_cast<std::size_t>(size)] += psi.inner_product(phi);
    }
    return ComplexPolynomial(std::move(coeffs));
}

namespace {

// Shared state of one Taylor assembly run.
struct Assembly {
    const Circuit& circuit;
    const ProductObservable& observable;
    int p;
    std::vector<std::uint64_t> nbr_masks;
    std::unordered_map<std::uint64_t, cplx> nu;                  // subset expectations
    std::unordered_map<std::uint64_t, std::vector<cplx>> h_conn; // connected only
    std::unordered_map<std::uint64_t, std::vector<cplx>> h_any;

    std::vector<std::uint64_t> components(std::uint64_t mask) const {
        std::vector<std::uint64_t> comps;
        std::uint64_t rest = mask;
        while (rest != 0) {
            std::uint64_t comp = 0;
            std::uint64_t frontier = rest & (~rest + 1); // lowest bit
            while (frontier != 0) {
                comp |= frontier;
                std::uint64_t grow = 0;
                std::uint64_t f = frontier;
                while (f != 0) {
                    const int v = std::countr_zero(f);
                    f &= f - 1;
                    grow |= nbr_masks[static_cast<std::size_t>(v)];
                }
                frontier = grow & rest & ~comp;
            }
            comps.push_back(comp);
            rest &= ~comp;
        }
        return comps;
    }

    cplx nu_of(std::uint64_t mask) {
        if (mask == 0) return cplx(1.0, 0.0);
        auto it = nu.find(mask);
        if (it != nu.end()) return it->second;
        // Disconnected subsets factorize over overlap-graph components
        // (disjoint cones make the expectation of a product a product).
        cplx prod(1.0, 0.0);
        for (std::uint64_t comp : components(mask)) prod *= nu.at(comp);
        nu.emplace(mask, prod);
        return prod;
    }

    std::vector<cplx> mu_coefficients(std::uint64_t mask) {
        const int size = std::popcount(mask);
        std::vector<cplx> coeffs(static_cast<std::size_t>(size) + 1, cplx(0));
        coeffs[0] = cplx(1.0, 0.0);
        // Iterate proper nonempty submasks plus the mask itself.
        std::uint64_t sub = mask;
        while (sub != 0) {
            coeffs[static_cast<std::size_t>(std::popcount(sub))] += nu_of(sub);
            sub = (sub - 1) & mask;
        }
        return coeffs;
    }

    const std::vector<cplx>& h_of(std::uint64_t mask) {
        auto it = h_any.find(mask);
        if (it != h_any.end()) return it->second;
        auto connected = h_conn.find(mask);
        if (connected != h_conn.end())
            return h_any.emplace(mask, connected->second).first->second;
        std::vector<cplx> sum(static_cast<std::size_t>(p) + 1, cplx(0));
        for (std::uint64_t comp : components(mask)) {
            const std::vector<cplx>& hc = h_conn.at(comp);
            for (std::size_t k = 0; k <= static_cast<std::size_t>(p); ++k) sum[k] += hc[k];
        }
        return h_any.emplace(mask, std::move(sum)).first->second;
    }

    // Truncated log-Taylor coefficients (not derivatives) of a polynomial
    // with constant term 1.
    std::vector<cplx> log_coefficients(const std::vector<cplx>& poly) const {
        std::vector<cplx> ders = log_taylor_from_poly(poly, p);
        std::vector<cplx> coeffs(static_cast<std::size_t>(p) + 1, cplx(0));
        double factorial = 1.0;
        for (int k = 1; k <= p; ++k) {
            factorial *= k;
            coeffs[static_cast<std::size_t>(k)] = ders[static_cast<std::size_t>(k - 1)] / factorial;
        }
        return coeffs;
    }
};

} // namespace

TaylorAssembly assemble_taylor(const Circuit& circuit, const ProductObservable& observable,
                               const InterpConfig& config) {
    if (observable.n() != circuit.n)
        throw precondition_error("assemble_taylor: observable size mismatch");
    require_mask_width(circuit.n, "assemble_taylor");

    TaylorAssembly result;
    const LightconeTable table = iterated_lightcones(circuit, 4);
    result.ell1 = table.ell_at(1);
    result.ell2 = table.ell_at(2);
    result.ell4 = table.ell_at(4);
    result.gamma = observable.gamma();
    result.gamma_bound = config.gamma_bound(result.ell1, result.ell4);
    if (result.gamma > result.gamma_bound) {
        std::ostringstream msg;
        msg << "interp: gamma = " << result.gamma
            << " exceeds the closeness-to-identity bound 1/(60 beta ell1 ell4) = "
            << result.gamma_bound;
        throw precondition_error(msg.str());
    }
    result.p = config.derive_p(std::max(1, circuit.n));
    const int p = result.p;

    const OverlapGraph graph = build_overlap_graph(circuit);
    Assembly assembly{circuit, observable, p, {}, {}, {}, {}};
    assembly.nbr_masks.assign(static_cast<std::size_t>(circuit.n), 0);
    for (int v = 0; v < circuit.n; ++v)
        for (int u : graph.adjacency[static_cast<std::size_t>(v)])
            assembly.nbr_masks[static_cast<std::size_t>(v)] |= std::uint64_t(1) << u;

    result.family.masks = enumerate_connected_subsets(graph, p);
    const double ceiling = subset_count_ceiling(circuit.n, result.ell2, p);
    if (static_cast<double>(result.family.masks.size()) > ceiling)
        throw internal_error("interp: connected-subset family exceeds the degree bound");

    // Subset expectations nu_S = <0|U^dag prod_{j in S}(O_j - I) U|0> for every
    // connected S, computed incrementally along the enumeration's DFS order
    // (each subset extends its parent by one qubit).
    const double dfs_bytes = static_cast<double>(p + 2) *
                             std::pow(2.0, circuit.n) * sizeof(cplx);
    const bool dense_path =
        circuit.n <= config.oracle_cap && dfs_bytes <= 1.0 * (1ull << 30);
    if (dense_path) {
        StateVector psi(circuit.n);
        psi.apply_circuit(circuit);
        // The enumeration is in DFS preorder and each subset extends its
        // parent by exactly one qubit, so phi_S = prod_{j in S}(O_j - I) psi
        // is maintained with one operator application per subset.
        std::vector<std::uint64_t> mask_stack;
        std::vector<StateVector> phi_stack;
        for (std::uint64_t mask : result.family.masks) {
            const int depth = std::popcount(mask);
            mask_stack.resize(static_cast<std::size_t>(depth));
            phi_stack.resize(static_cast<std::size_t>(depth), StateVector(circuit.n));
            const std::uint64_t parent =
                (depth == 1) ? 0 : mask_stack[static_cast<std::size_t>(depth - 2)];
            const std::uint64_t added_bit = mask & ~parent;
            const int added_qubit = std::countr_zero(added_bit);
            StateVector phi = (depth == 1) ? psi : phi_stack[static_cast<std::size_t>(depth - 2)];
            phi.apply_one_qubit_operator(
                added_qubit,
                Eigen::Matrix2cd(observable.op(added_qubit) - Eigen::Matrix2cd::Identity()));
            assembly.nu.emplace(mask, psi.inner_product(phi));
            mask_stack[static_cast<std::size_t>(depth - 1)] = mask;
            phi_stack[static_cast<std::size_t>(depth - 1)] = std::move(phi);
        }
    }

    // h_S for connected S (truncated log of mu_S), then g_S by
    // inclusion-exclusion over all submasks, summed into T_p.
    result.coefficients.assign(static_cast<std::size_t>(p) + 1, cplx(0));
    result.family.h.reserve(result.family.masks.size());
    result.family.g.reserve(result.family.masks.size());
    for (std::uint64_t mask : result.family.masks) {
        std::vector<cplx> mu;
        if (dense_path) {
            mu = assembly.mu_coefficients(mask);
        } else {
            std::set<int> subset;
            std::uint64_t m = mask;
            while (m != 0) {
                subset.insert(std::countr_zero(m));
                m &= m - 1;
            }
            mu = mu_subset_coefficients(circuit, observable, subset).coefficients();
            mu.resize(static_cast<std::size_t>(std::popcount(mask)) + 1, cplx(0));
        }
        assembly.h_conn.emplace(mask, assembly.log_coefficients(mu));
    }
    for (std::uint64_t mask : result.family.masks) {
        const int size = std::popcount(mask);
        std::vector<cplx> g(static_cast<std::size_t>(p) + 1, cplx(0));
        std::uint64_t sub = mask;
        while (true) {
            if (sub != 0) {
                const std::vector<cplx>& h = assembly.h_of(sub);
                const double sign = ((size - std::popcount(sub)) % 2 == 0) ? 1.0 : -1.0;
                for (std::size_t k = 1; k <= static_cast<std::size_t>(p); ++k)
                    g[k] += sign * h[k];
            }
            if (sub == 0) break;
            sub = (sub - 1) & mask;
        }
        for (std::size_t k = 1; k <= static_cast<std::size_t>(p); ++k)
            result.coefficients[k] += g[k];
        result.family.h.push_back(assembly.h_conn.at(mask));
        result.family.g.push_back(std::move(g));
    }
    return result;
}

MeanEstimate estimate_mean_interp(const Circuit& circuit, const ProductObservable& observable,
                                  double delta, InterpConfig config) {
    const auto start = std::chrono::steady_clock::now();
    config.delta = delta;
    TaylorAssembly assembly = assemble_taylor(circuit, observable, config);

    cplx taylor_at_one(0, 0);
    for (const cplx& c : assembly.coefficients) taylor_at_one += c;

    MeanEstimate estimate;
    estimate.value = std::exp(taylor_at_one);
    estimate.kind = ErrorKind::relative;
    estimate.delta = delta;
    estimate.confidence = 1.0; // deterministic
    estimate.diagnostics["p"] = assembly.p;
    estimate.diagnostics["subset_count"] = static_cast<double>(assembly.family.family_size());
    estimate.diagnostics["subset_count_ceiling"] =
        subset_count_ceiling(circuit.n, assembly.ell2, assembly.p);
    estimate.diagnostics["ell1"] = assembly.ell1;
    estimate.diagnostics["ell2"] = assembly.ell2;
    estimate.diagnostics["ell4"] = assembly.ell4;
    estimate.diagnostics["gamma"] = assembly.gamma;
    estimate.diagnostics["gamma_bound"] = assembly.gamma_bound;
    estimate.diagnostics["beta"] = config.beta;
    const double trunc_config = circuit.n * std::pow(config.beta, -assembly.p) /
                                ((assembly.p + 1) * (config.beta - 1.0));
    estimate.diagnostics["truncation_envelope"] = trunc_config;
    if (assembly.gamma > 0.0) {
        // Envelope at the measured zero-free radius beta_eff = eps0 / gamma.
        const double beta_eff = 1.0 / (60.0 * assembly.gamma * assembly.ell1 * assembly.ell4);
        estimate.diagnostics["beta_effective"] = beta_eff;
        estimate.diagnostics["truncation_envelope_effective"] =
            circuit.n * std::pow(beta_eff, -assembly.p) /
            ((assembly.p + 1) * (beta_eff - 1.0));
    }
    estimate.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return estimate;
}

} // namespace qmv
