#include "qmv/mpsmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qmv/lightcone.hpp"
#include "qmv/linalg.hpp"
#include "qmv/rng.hpp"

namespace qmv {

std::vector<int> SupersiteLattice::plaquette_sites(int pi, int pj) const {
    std::vector<int> out;
    const int i2 = std::min(pi + 1, rows - 1);
    const int j2 = std::min(pj + 1, cols - 1);
    for (int i = pi; i <= i2; ++i)
        for (int j = pj; j <= j2; ++j) out.push_back(flat(i, j));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

std::vector<int> touched_supersites(const SupersiteLattice& lattice,
                                    const std::vector<int>& qubits) {
    std::vector<int> sites;
    for (int q : qubits) {
        const int r = q / lattice.grid_cols;
        const int c = q % lattice.grid_cols;
        sites.push_back(lattice.flat(std::min(r / lattice.block, lattice.rows - 1),
                                     std::min(c / lattice.block, lattice.cols - 1)));
    }
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    return sites;
}

bool covered_by_plaquette(const SupersiteLattice& lattice, const std::vector<int>& sites,
                          int pi, int pj) {
    const std::vector<int> cell = lattice.plaquette_sites(pi, pj);
    return std::includes(cell.begin(), cell.end(), sites.begin(), sites.end());
}

} // namespace

SupersiteLattice coarse_grain(const Circuit& circuit, int d) {
    if (!circuit.layout)
        throw precondition_error("coarse_grain: circuit has no grid layout");
    if (d < 1) throw precondition_error("coarse_grain: d must be >= 1");
    if (circuit.depth() > d)
        throw precondition_error("coarse_grain: circuit depth " +
                                 std::to_string(circuit.depth()) + " exceeds d = " +
                                 std::to_string(d));
    SupersiteLattice lattice;
    lattice.grid_rows = circuit.layout->rows;
    lattice.grid_cols = circuit.layout->cols;
    lattice.block = 2 * d;
    lattice.depth = d;
    lattice.rows = (lattice.grid_rows + lattice.block - 1) / lattice.block;
    lattice.cols = (lattice.grid_cols + lattice.block - 1) / lattice.block;
    lattice.site_qubits.assign(static_cast<std::size_t>(lattice.rows * lattice.cols), {});
    for (int r = 0; r < lattice.grid_rows; ++r)
        for (int c = 0; c < lattice.grid_cols; ++c) {
            const int site = lattice.flat(std::min(r / lattice.block, lattice.rows - 1),
                                          std::min(c / lattice.block, lattice.cols - 1));
            lattice.site_qubits[static_cast<std::size_t>(site)].push_back(
                circuit.layout->index(r, c));
        }
    int max_area = 0;
    for (auto& qs : lattice.site_qubits) {
        std::sort(qs.begin(), qs.end()); // row-major local order
        max_area = std::max(max_area, static_cast<int>(qs.size()));
    }
    lattice.max_phys_dim = 1 << max_area;

    // Every conjugated observable must fit inside one plaquette.
    for (int s = 0; s < circuit.n; ++s) {
        const std::set<int> cone = backward_lightcone(circuit, {s});
        const std::vector<int> sites =
            touched_supersites(lattice, std::vector<int>(cone.begin(), cone.end()));
        bool covered = false;
        for (int pi = 0; pi < lattice.plaq_rows() && !covered; ++pi)
            for (int pj = 0; pj < lattice.plaq_cols() && !covered; ++pj)
                covered = covered_by_plaquette(lattice, sites, pi, pj);
        if (!covered)
            throw precondition_error("coarse_grain: lightcone of qubit " + std::to_string(s) +
                                     " escapes every plaquette (depth/d mismatch)");
    }
    return lattice;
}

ConjugatedOp conjugated_observable(const Circuit& circuit, const ProductObservable& observable,
                                   int s) {
    if (s < 0 || s >= circuit.n)
        throw precondition_error("conjugated_observable: qubit out of range");
    const std::set<int> cone = backward_lightcone(circuit, {s});
    const RestrictedCircuit restricted = restrict_circuit(circuit, cone);
    const int m = restricted.circuit.n;
    const int local = restricted.original_to_new[static_cast<std::size_t>(s)];
    const std::size_t dim = std::size_t(1) << m;

    ConjugatedOp op;
    op.source_qubit = s;
    op.qubits = restricted.kept_qubits;
    op.matrix.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t b = 0; b < dim; ++b) {
        StateVector col(m, [&] {
            std::vector<cplx> amps(dim, cplx(0));
            amps[b] = cplx(1.0, 0.0);
            return amps;
        }());
        col.apply_circuit(restricted.circuit);
        col.apply_one_qubit_operator(local, observable.op(s));
        col.apply_circuit_adjoint(restricted.circuit);
        for (std::size_t r = 0; r < dim; ++r)
            op.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) =
                col.amplitude(r);
    }
    return op;
}

PlaquetteAssignment assign_plaquettes(const SupersiteLattice& lattice,
                                      const std::vector<std::vector<int>>& qubit_supersites) {
    PlaquetteAssignment assignment;
    assignment.qubits.assign(
        static_cast<std::size_t>(lattice.plaq_rows() * lattice.plaq_cols()), {});
    for (std::size_t q = 0; q < qubit_supersites.size(); ++q) {
        std::vector<int> sites = qubit_supersites[q];
        std::sort(sites.begin(), sites.end());
        bool assigned = false;
        for (int pi = 0; pi < lattice.plaq_rows() && !assigned; ++pi)
            for (int pj = 0; pj < lattice.plaq_cols() && !assigned; ++pj)
                if (covered_by_plaquette(lattice, sites, pi, pj)) {
                    assignment.qubits[static_cast<std::size_t>(pi * lattice.plaq_cols() + pj)]
                        .push_back(static_cast<int>(q));
                    assigned = true;
                }
        if (!assigned)
            throw precondition_error("assign_plaquettes: support of qubit " +
                                     std::to_string(q) + " is not covered by any plaquette");
    }
    return assignment;
}

std::vector<int> PlaquetteOperator::cell_qubits(const SupersiteLattice& lattice) const {
    std::vector<int> out;
    for (int site : supersites) {
        const auto& qs = lattice.site_qubits[static_cast<std::size_t>(site)];
        out.insert(out.end(), qs.begin(), qs.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::MatrixXcd PlaquetteOperator::dense(int max_qubits) const {
    std::vector<int> qubits;
    for (const ConjugatedOp& f : factors)
        qubits.insert(qubits.end(), f.qubits.begin(), f.qubits.end());
    std::sort(qubits.begin(), qubits.end());
    qubits.erase(std::unique(qubits.begin(), qubits.end()), qubits.end());
    const int m = static_cast<int>(qubits.size());
    if (m > max_qubits)
        throw resource_error("PlaquetteOperator::dense: " + std::to_string(m) +
                             " qubits exceed the materialization cap");
    const std::size_t dim = std::size_t(1) << m;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(dim),
                                                      static_cast<Eigen::Index>(dim));
    for (const ConjugatedOp& f : factors) {
        // Embed the factor over the merged qubit list.
        const int q = static_cast<int>(f.qubits.size());
        std::vector<int> pos(static_cast<std::size_t>(q));
        for (int t = 0; t < q; ++t) {
            const auto it = std::lower_bound(qubits.begin(), qubits.end(), f.qubits[t]);
            pos[static_cast<std::size_t>(t)] =
                m - 1 - static_cast<int>(it - qubits.begin());
        }
        Eigen::MatrixXcd embedded = Eigen::MatrixXcd::Zero(out.rows(), out.cols());
        const std::size_t fdim = std::size_t(1) << q;
        for (std::size_t row = 0; row < dim; ++row) {
            std::size_t frow = 0;
            for (int t = 0; t < q; ++t)
                frow |= ((row >> pos[static_cast<std::size_t>(t)]) & 1) << (q - 1 - t);
            for (std::size_t fcol = 0; fcol < fdim; ++fcol) {
                std::size_t col = row;
                for (int t = 0; t < q; ++t) {
                    const std::size_t bit = (fcol >> (q - 1 - t)) & 1;
                    const int p = pos[static_cast<std::size_t>(t)];
                    col = (col & ~(std::size_t(1) << p)) | (bit << p);
                }
                embedded(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                    f.matrix(static_cast<Eigen::Index>(frow), static_cast<Eigen::Index>(fcol));
            }
        }
        out = embedded * out;
    }
    return out;
}

std::vector<PlaquetteOperator> build_plaquette_operators(const SupersiteLattice& lattice,
                                                         const Circuit& circuit,
                                                         const ProductObservable& observable) {
    if (observable.n() != circuit.n)
        throw precondition_error("build_plaquette_operators: observable size mismatch");
    std::vector<ConjugatedOp> ops;
    std::vector<std::vector<int>> supports;
    ops.reserve(static_cast<std::size_t>(circuit.n));
    supports.reserve(static_cast<std::size_t>(circuit.n));
    for (int s = 0; s < circuit.n; ++s) {
        ops.push_back(conjugated_observable(circuit, observable, s));
        supports.push_back(touched_supersites(lattice, ops.back().qubits));
    }
    const PlaquetteAssignment assignment = assign_plaquettes(lattice, supports);

    std::vector<PlaquetteOperator> plaquettes;
    for (int pi = 0; pi < lattice.plaq_rows(); ++pi)
        for (int pj = 0; pj < lattice.plaq_cols(); ++pj) {
            PlaquetteOperator plaq;
            plaq.pi = pi;
            plaq.pj = pj;
            plaq.supersites = lattice.plaquette_sites(pi, pj);
            plaq.hermitian = observable.hermitian();
            for (int q :
                 assignment.qubits[static_cast<std::size_t>(pi * lattice.plaq_cols() + pj)])
                plaq.factors.push_back(ops[static_cast<std::size_t>(q)]);
            plaquettes.push_back(std::move(plaq));
        }
    return plaquettes;
}

// ---------------------------------------------------------------------------
// MPS machinery
// ---------------------------------------------------------------------------

int SnakeOrderedMPS::max_bond() const {
    int chi = 1;
    for (const MpsSite& s : sites) chi = std::max({chi, s.left(), s.right()});
    return chi;
}

cplx SnakeOrderedMPS::amplitude(const std::vector<int>& values) const {
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (std::size_t k = 0; k < sites.size(); ++k)
        v = v * sites[k].a[static_cast<std::size_t>(values[k])];
    return v(0);
}

std::vector<cplx> SnakeOrderedMPS::densify(int max_qubits) const {
    if (n_qubits() > max_qubits)
        throw resource_error("SnakeOrderedMPS::densify: " + std::to_string(n_qubits()) +
                             " qubits exceed the cap " + std::to_string(max_qubits));
    // Fold left-to-right: rows index the physical prefix, columns the bond.
    Eigen::MatrixXcd cur = Eigen::MatrixXcd::Ones(1, 1);
    for (const MpsSite& site : sites) {
        Eigen::MatrixXcd next(cur.rows() * site.phys, site.right());
        for (int x = 0; x < site.phys; ++x) {
            next.block(static_cast<Eigen::Index>(x) * cur.rows(), 0, cur.rows(), site.right()) =
                cur * site.a[static_cast<std::size_t>(x)];
        }
        // Row index must be prefix-major: rows are (p_prev, x) with x minor.
        Eigen::MatrixXcd reordered(next.rows(), next.cols());
        for (Eigen::Index p = 0; p < cur.rows(); ++p)
            for (int x = 0; x < site.phys; ++x)
                reordered.row(p * site.phys + x) =
                    next.row(static_cast<Eigen::Index>(x) * cur.rows() + p);
        cur = std::move(reordered);
    }
    std::vector<cplx> out(static_cast<std::size_t>(cur.rows()));
    for (Eigen::Index i = 0; i < cur.rows(); ++i) out[static_cast<std::size_t>(i)] = cur(i, 0);
    return out;
}

SampleDraw SnakeOrderedMPS::sample(std::mt19937_64& rng) const {
    const std::size_t length = sites.size();
    // Right environments of |Psi><Psi|.
    std::vector<Eigen::MatrixXcd> env(length + 1);
    env[length] = Eigen::MatrixXcd::Ones(1, 1);
    for (std::size_t k = length; k-- > 0;) {
        const MpsSite& site = sites[k];
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(site.left(), site.left());
        for (int x = 0; x < site.phys; ++x)
            e += site.a[static_cast<std::size_t>(x)] * env[k + 1] *
                 site.a[static_cast<std::size_t>(x)].adjoint();
        env[k] = std::move(e);
    }

    SampleDraw draw;
    draw.values.resize(length);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (std::size_t k = 0; k < length; ++k) {
        const MpsSite& site = sites[k];
        std::vector<double> weights(static_cast<std::size_t>(site.phys), 0.0);
        std::vector<Eigen::RowVectorXcd> branches(static_cast<std::size_t>(site.phys));
        double total = 0.0;
        for (int x = 0; x < site.phys; ++x) {
            branches[static_cast<std::size_t>(x)] = v * site.a[static_cast<std::size_t>(x)];
            const Eigen::RowVectorXcd& w = branches[static_cast<std::size_t>(x)];
            const double p = std::max(0.0, (w * env[k + 1] * w.adjoint())(0).real());
            weights[static_cast<std::size_t>(x)] = p;
            total += p;
        }
        if (total <= 0.0)
            throw internal_error("mps_sample: vanishing branch weight (zero-norm state?)");
        double u = uniform(rng) * total;
        int chosen = -1;
        for (int x = 0; x < site.phys; ++x) {
            const double p = weights[static_cast<std::size_t>(x)];
            if (p <= 0.0) continue;
            chosen = x;
            if (u <= p) break;
            u -= p;
        }
        draw.values[k] = chosen;
        v = branches[static_cast<std::size_t>(chosen)];
    }
    draw.amplitude = v(0) / gamma;
    draw.probability = std::norm(draw.amplitude);
    return draw;
}

namespace {

double mps_norm(const SnakeOrderedMPS& mps) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Ones(1, 1);
    for (const MpsSite& site : mps.sites) {
        Eigen::MatrixXcd next = Eigen::MatrixXcd::Zero(site.right(), site.right());
        for (int x = 0; x < site.phys; ++x)
            next += site.a[static_cast<std::size_t>(x)].adjoint() * e *
                    site.a[static_cast<std::size_t>(x)];
        e = std::move(next);
    }
    return std::sqrt(std::max(0.0, e(0, 0).real()));
}

// Strip partition (lists of lattice columns) for the two parities.
std::vector<std::vector<int>> strip_partition(const SupersiteLattice& lattice, int b) {
    std::vector<std::vector<int>> strips;
    if (lattice.cols == 1) {
        strips.push_back({0});
        return strips;
    }
    int start = 0;
    if (b == 0) {
        strips.push_back({0});
        start = 1;
    }
    for (int c = start; c < lattice.cols; c += 2) {
        if (c + 1 < lattice.cols)
            strips.push_back({c, c + 1});
        else
            strips.push_back({c});
    }
    return strips;
}

struct Window {
    int first = 0, last = 0; // chain positions, inclusive
    Eigen::Index chi_l = 1, chi_r = 1;
    std::vector<int> phys; // per site in window
    std::uint64_t p_total = 1;
    std::vector<cplx> data; // index: (l * p_total + p) * chi_r + r
};

Window contract_window(const SnakeOrderedMPS& mps, int first, int last,
                       std::uint64_t max_elements) {
    Window w;
    w.first = first;
    w.last = last;
    w.chi_l = mps.sites[static_cast<std::size_t>(first)].left();
    w.chi_r = mps.sites[static_cast<std::size_t>(last)].right();
    w.p_total = 1;
    for (int k = first; k <= last; ++k) {
        w.phys.push_back(mps.sites[static_cast<std::size_t>(k)].phys);
        w.p_total *= static_cast<std::uint64_t>(mps.sites[static_cast<std::size_t>(k)].phys);
    }
    const std::uint64_t total =
        static_cast<std::uint64_t>(w.chi_l) * w.p_total * static_cast<std::uint64_t>(w.chi_r);
    if (total > max_elements)
        throw resource_error("mpsmc: window tensor of " + std::to_string(total) +
                             " elements exceeds the budget " + std::to_string(max_elements));

    // Fold sites left to right; p index is site-major (first site most significant).
    std::uint64_t p_done = 1;
    Eigen::Index chi = w.chi_l;
    std::vector<cplx> cur(static_cast<std::size_t>(w.chi_l) * w.chi_l, cplx(0));
    // Start with the identity on the left bond: data(l, -, r=l).
    for (Eigen::Index l = 0; l < w.chi_l; ++l)
        cur[static_cast<std::size_t>(l * w.chi_l + l)] = cplx(1.0, 0.0);
    for (int k = first; k <= last; ++k) {
        const MpsSite& site = mps.sites[static_cast<std::size_t>(k)];
        const Eigen::Index right = site.right();
        std::vector<cplx> next(static_cast<std::size_t>(w.chi_l) * p_done *
                                   static_cast<std::size_t>(site.phys) *
                                   static_cast<std::size_t>(right),
                               cplx(0));
        for (std::uint64_t lp = 0; lp < static_cast<std::uint64_t>(w.chi_l) * p_done; ++lp) {
            for (int x = 0; x < site.phys; ++x) {
                const Eigen::MatrixXcd& a = site.a[static_cast<std::size_t>(x)];
                const std::uint64_t out_base =
                    (lp * static_cast<std::uint64_t>(site.phys) + static_cast<std::uint64_t>(x)) *
                    static_cast<std::uint64_t>(right);
                const std::uint64_t in_base = lp * static_cast<std::uint64_t>(chi);
                for (Eigen::Index rr = 0; rr < right; ++rr) {
                    cplx acc(0, 0);
                    for (Eigen::Index c = 0; c < chi; ++c)
                        acc += cur[static_cast<std::size_t>(in_base + c)] * a(c, rr);
                    next[static_cast<std::size_t>(out_base + rr)] = acc;
                }
            }
        }
        cur = std::move(next);
        p_done *= static_cast<std::uint64_t>(site.phys);
        chi = right;
    }
    w.data = std::move(cur);
    return w;
}

// Apply a small dense operator over a subset of the window's qubit bits.
void apply_factor_to_window(Window& w, const std::vector<int>& bit_positions,
                            const Eigen::MatrixXcd& m) {
    const int q = static_cast<int>(bit_positions.size());
    const std::size_t fdim = std::size_t(1) << q;
    std::uint64_t op_mask = 0;
    for (int p : bit_positions) op_mask |= std::uint64_t(1) << p;
    const std::uint64_t free_mask = (w.p_total - 1) & ~op_mask;

    std::vector<std::uint64_t> offsets(fdim, 0);
    for (std::size_t j = 0; j < fdim; ++j) {
        std::uint64_t off = 0;
        for (int t = 0; t < q; ++t)
            if ((j >> (q - 1 - t)) & 1)
                off |= std::uint64_t(1) << bit_positions[static_cast<std::size_t>(t)];
        offsets[j] = off;
    }

    std::vector<cplx> in(fdim), out(fdim);
    const std::uint64_t chi_l = static_cast<std::uint64_t>(w.chi_l);
    const std::uint64_t chi_r = static_cast<std::uint64_t>(w.chi_r);
    for (std::uint64_t l = 0; l < chi_l; ++l) {
        std::uint64_t base = free_mask;
        while (true) {
            for (std::uint64_t r = 0; r < chi_r; ++r) {
                for (std::size_t j = 0; j < fdim; ++j)
                    in[j] = w.data[static_cast<std::size_t>(
                        (l * w.p_total + (base | offsets[j])) * chi_r + r)];
                for (std::size_t row = 0; row < fdim; ++row) {
                    cplx acc(0, 0);
                    for (std::size_t col = 0; col < fdim; ++col)
                        acc += m(static_cast<Eigen::Index>(row),
                                 static_cast<Eigen::Index>(col)) *
                               in[col];
                    out[row] = acc;
                }
                for (std::size_t j = 0; j < fdim; ++j)
                    w.data[static_cast<std::size_t>(
                        (l * w.p_total + (base | offsets[j])) * chi_r + r)] = out[j];
            }
            if (base == 0) break;
            base = (base - 1) & free_mask;
        }
    }
}

// Exact SVD re-split of the window back into MPS sites.
void resplit_window(SnakeOrderedMPS& mps, Window& w, double threshold, int bond_cap) {
    const int count = w.last - w.first + 1;
    Eigen::Index chi = w.chi_l;
    std::uint64_t p_rest = w.p_total;
    // data layout: (l * p_rest + p) * chi_r + r, l of dimension chi.
    std::vector<cplx> cur = std::move(w.data);
    for (int k = 0; k < count - 1; ++k) {
        const int phys = w.phys[static_cast<std::size_t>(k)];
        const std::uint64_t tail = p_rest / static_cast<std::uint64_t>(phys);
        const Eigen::Index rows = chi * phys;
        const Eigen::Index cols =
            static_cast<Eigen::Index>(tail * static_cast<std::uint64_t>(w.chi_r));
        Eigen::MatrixXcd matrix(rows, cols);
        for (Eigen::Index l = 0; l < chi; ++l)
            for (int x = 0; x < phys; ++x)
                for (Eigen::Index c = 0; c < cols; ++c)
                    matrix(l * phys + x, c) = cur[static_cast<std::size_t>(
                        (static_cast<std::uint64_t>(l) * p_rest +
                         static_cast<std::uint64_t>(x) * tail) *
                            static_cast<std::uint64_t>(w.chi_r) +
                        static_cast<std::uint64_t>(c))];
        // cols index = p_tail * chi_r + r, matching the (p, r) layout.
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& sigma = svd.singularValues();
        const double cutoff = sigma.size() > 0 ? sigma(0) * threshold : 0.0;
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < sigma.size(); ++i)
            if (sigma(i) > cutoff) ++rank;
        rank = std::max<Eigen::Index>(rank, 1);
        if (rank > bond_cap)
            throw internal_error("mpsmc: bond dimension " + std::to_string(rank) +
                                 " exceeds the D^3 bound " + std::to_string(bond_cap));

        MpsSite& site = mps.sites[static_cast<std::size_t>(w.first + k)];
        site.phys = phys;
        site.a.assign(static_cast<std::size_t>(phys), Eigen::MatrixXcd(chi, rank));
        for (int x = 0; x < phys; ++x)
            for (Eigen::Index l = 0; l < chi; ++l)
                for (Eigen::Index rr = 0; rr < rank; ++rr)
                    site.a[static_cast<std::size_t>(x)](l, rr) = svd.matrixU()(l * phys + x, rr);

        Eigen::MatrixXcd carry =
            sigma.head(rank).asDiagonal().toDenseMatrix().cast<cplx>() *
            svd.matrixV().leftCols(rank).adjoint();
        // carry: rank x (tail * chi_r); becomes the new (l, p, r) data.
        cur.assign(static_cast<std::size_t>(rank) * tail *
                       static_cast<std::uint64_t>(w.chi_r),
                   cplx(0));
        for (Eigen::Index l = 0; l < rank; ++l)
            for (Eigen::Index c = 0; c < carry.cols(); ++c)
                cur[static_cast<std::size_t>(static_cast<std::uint64_t>(l) * tail *
                                                 static_cast<std::uint64_t>(w.chi_r) +
                                             static_cast<std::uint64_t>(c))] = carry(l, c);
        chi = rank;
        p_rest = tail;
    }
    // Last site absorbs the remaining (chi x phys x chi_r) block.
    const int phys = w.phys[static_cast<std::size_t>(count - 1)];
    MpsSite& site = mps.sites[static_cast<std::size_t>(w.last)];
    site.phys = phys;
    site.a.assign(static_cast<std::size_t>(phys), Eigen::MatrixXcd(chi, w.chi_r));
    for (int x = 0; x < phys; ++x)
        for (Eigen::Index l = 0; l < chi; ++l)
            for (Eigen::Index r = 0; r < w.chi_r; ++r)
                site.a[static_cast<std::size_t>(x)](l, r) = cur[static_cast<std::size_t>(
                    (static_cast<std::uint64_t>(l) * static_cast<std::uint64_t>(phys) +
                     static_cast<std::uint64_t>(x)) *
                        static_cast<std::uint64_t>(w.chi_r) +
                    static_cast<std::uint64_t>(r))];
}

} // namespace

SnakeOrderedMPS build_parity_state(const SupersiteLattice& lattice,
                                   const std::vector<PlaquetteOperator>& plaquettes, int b,
                                   const MpsOptions& options) {
    if (b != 0 && b != 1) throw precondition_error("build_parity_state: b must be 0 or 1");
    SnakeOrderedMPS mps;

    const std::vector<std::vector<int>> strips = strip_partition(lattice, b);
    std::vector<int> site_chain_pos(lattice.site_qubits.size(), -1);
    std::vector<int> strip_of_col(static_cast<std::size_t>(lattice.cols), -1);
    for (std::size_t si = 0; si < strips.size(); ++si)
        for (int c : strips[si]) strip_of_col[static_cast<std::size_t>(c)] = static_cast<int>(si);

    std::vector<std::pair<int, int>> strip_range; // chain range per strip
    for (const std::vector<int>& strip : strips) {
        const int start = static_cast<int>(mps.site_supersite.size());
        // Snake: down the first column, up the second.
        for (int i = 0; i < lattice.rows; ++i)
            mps.site_supersite.push_back(lattice.flat(i, strip[0]));
        if (strip.size() == 2)
            for (int i = lattice.rows - 1; i >= 0; --i)
                mps.site_supersite.push_back(lattice.flat(i, strip[1]));
        strip_range.emplace_back(start, static_cast<int>(mps.site_supersite.size()) - 1);
    }
    for (std::size_t k = 0; k < mps.site_supersite.size(); ++k) {
        site_chain_pos[static_cast<std::size_t>(mps.site_supersite[k])] = static_cast<int>(k);
        const auto& qs = lattice.site_qubits[static_cast<std::size_t>(mps.site_supersite[k])];
        mps.chain_qubits.insert(mps.chain_qubits.end(), qs.begin(), qs.end());
    }

    // Product state |0...0>.
    mps.sites.resize(mps.site_supersite.size());
    for (std::size_t k = 0; k < mps.sites.size(); ++k) {
        const int phys = lattice.phys_dim(mps.site_supersite[k]);
        mps.sites[k].phys = phys;
        mps.sites[k].a.assign(static_cast<std::size_t>(phys), Eigen::MatrixXcd::Zero(1, 1));
        mps.sites[k].a[0](0, 0) = cplx(1.0, 0.0);
    }

    // Window qubit bookkeeping: position of each physical qubit in the chain.
    std::vector<int> qubit_chain_index(mps.chain_qubits.size());
    for (std::size_t i = 0; i < mps.chain_qubits.size(); ++i)
        qubit_chain_index[static_cast<std::size_t>(mps.chain_qubits[i])] = static_cast<int>(i);
    std::vector<int> site_qubit_offset(mps.sites.size() + 1, 0);
    for (std::size_t k = 0; k < mps.sites.size(); ++k)
        site_qubit_offset[k + 1] =
            site_qubit_offset[k] +
            static_cast<int>(
                lattice.site_qubits[static_cast<std::size_t>(mps.site_supersite[k])].size());

    const int bond_cap =
        lattice.max_phys_dim * lattice.max_phys_dim * lattice.max_phys_dim;

    // Apply each parity-b plaquette operator inside its strip.
    for (const PlaquetteOperator& plaq : plaquettes) {
        const int parity = (plaq.pj + 1) % 2; // 1-indexed column parity
        if (parity != b) continue;
        if (plaq.factors.empty()) continue;

        int first = static_cast<int>(mps.sites.size()), last = -1;
        for (const ConjugatedOp& f : plaq.factors) {
            const std::vector<int> sites = touched_supersites(lattice, f.qubits);
            for (int s : sites) {
                const int pos = site_chain_pos[static_cast<std::size_t>(s)];
                if (pos < 0) throw internal_error("build_parity_state: site outside chain");
                first = std::min(first, pos);
                last = std::max(last, pos);
            }
        }

        Window window = contract_window(mps, first, last, options.max_window_elements);
        // Window bit positions: chain qubit order, first window qubit most
        // significant within the physical index.
        const int first_qubit_offset = site_qubit_offset[static_cast<std::size_t>(first)];
        const int window_bits = site_qubit_offset[static_cast<std::size_t>(last + 1)] -
                                first_qubit_offset;
        for (const ConjugatedOp& f : plaq.factors) {
            std::vector<int> positions;
            positions.reserve(f.qubits.size());
            for (int q : f.qubits) {
                const int chain_index = [&] {
                    for (int i = site_qubit_offset[static_cast<std::size_t>(first)];
                         i < site_qubit_offset[static_cast<std::size_t>(last + 1)]; ++i)
                        if (mps.chain_qubits[static_cast<std::size_t>(i)] == q) return i;
                    throw internal_error("build_parity_state: factor qubit outside window");
                }();
                positions.push_back(window_bits - 1 - (chain_index - first_qubit_offset));
            }
            apply_factor_to_window(window, positions, f.matrix);
        }
        resplit_window(mps, window, options.svd_threshold, bond_cap);
    }

    if (mps.max_bond() > bond_cap)
        throw internal_error("build_parity_state: bond bound violated");
    mps.gamma = mps_norm(mps);
    return mps;
}

OrderMap make_order_map(const SnakeOrderedMPS& psi0, const SnakeOrderedMPS& psi1) {
    if (psi0.chain_qubits.size() != psi1.chain_qubits.size())
        throw precondition_error("make_order_map: qubit count mismatch");
    std::vector<int> pos1(psi1.chain_qubits.size());
    for (std::size_t i = 0; i < psi1.chain_qubits.size(); ++i)
        pos1[static_cast<std::size_t>(psi1.chain_qubits[i])] = static_cast<int>(i);
    OrderMap order;
    order.chain0_to_chain1.resize(psi0.chain_qubits.size());
    for (std::size_t i = 0; i < psi0.chain_qubits.size(); ++i)
        order.chain0_to_chain1[i] = pos1[static_cast<std::size_t>(psi0.chain_qubits[i])];
    return order;
}

cplx exact_overlap(const SnakeOrderedMPS& psi0, const SnakeOrderedMPS& psi1,
                   const OrderMap& order, int max_qubits) {
    const int n = psi0.n_qubits();
    const std::vector<cplx> dense0 = psi0.densify(max_qubits);
    const std::vector<cplx> dense1 = psi1.densify(max_qubits);
    cplx acc(0, 0);
    const std::uint64_t dim = std::uint64_t(1) << n;
    for (std::uint64_t idx0 = 0; idx0 < dim; ++idx0) {
        std::uint64_t idx1 = 0;
        for (int i = 0; i < n; ++i) {
            const std::uint64_t bit = (idx0 >> (n - 1 - i)) & 1;
            idx1 |= bit << (n - 1 - order.chain0_to_chain1[static_cast<std::size_t>(i)]);
        }
        acc += std::conj(dense0[idx0]) * dense1[idx1];
    }
    return acc;
}

MpsPipeline build_pipeline(const Circuit& circuit, const ProductObservable& observable, int d,
                           const MpsOptions& options) {
    MpsPipeline pipe;
    const int depth = (d > 0) ? d : std::max(1, circuit.depth());
    pipe.lattice = coarse_grain(circuit, depth);
    pipe.plaquettes = build_plaquette_operators(pipe.lattice, circuit, observable);
    pipe.psi1 = build_parity_state(pipe.lattice, pipe.plaquettes, 1, options);
    pipe.psi0 = build_parity_state(pipe.lattice, pipe.plaquettes, 0, options);
    pipe.order = make_order_map(pipe.psi0, pipe.psi1);
    return pipe;
}

namespace {

std::vector<int> decode_bits(const SnakeOrderedMPS& mps, const SupersiteLattice& lattice,
                             const std::vector<int>& values) {
    std::vector<int> bits(mps.chain_qubits.size(), 0);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < mps.sites.size(); ++k) {
        const auto& qs = lattice.site_qubits[static_cast<std::size_t>(mps.site_supersite[k])];
        const int q_count = static_cast<int>(qs.size());
        for (int t = 0; t < q_count; ++t)
            bits[static_cast<std::size_t>(qs[static_cast<std::size_t>(t)])] =
                (values[k] >> (q_count - 1 - t)) & 1;
        offset += qs.size();
    }
    (void)offset;
    return bits;
}

std::vector<int> encode_values(const SnakeOrderedMPS& mps, const SupersiteLattice& lattice,
                               const std::vector<int>& bits) {
    std::vector<int> values(mps.sites.size(), 0);
    for (std::size_t k = 0; k < mps.sites.size(); ++k) {
        const auto& qs = lattice.site_qubits[static_cast<std::size_t>(mps.site_supersite[k])];
        const int q_count = static_cast<int>(qs.size());
        int v = 0;
        for (int t = 0; t < q_count; ++t)
            v = (v << 1) | bits[static_cast<std::size_t>(qs[static_cast<std::size_t>(t)])];
        values[k] = v;
        (void)q_count;
    }
    return values;
}

} // namespace

MeanEstimate mc_estimate(const Circuit& circuit, const ProductObservable& observable,
                         double delta, std::uint64_t seed, std::int64_t samples_override,
                         const MpsOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (delta <= 0.0 || delta >= 1.0)
        throw precondition_error("mc_estimate: delta must lie in (0, 1)");
    if (!observable.hermitian())
        throw precondition_error("mc_estimate: observable must be Hermitian");
    if (observable.max_site_norm() > 1.0 + tol::unitarity)
        throw precondition_error("mc_estimate: observable must satisfy ||O_j|| <= 1");

    MpsPipeline pipe = build_pipeline(circuit, observable, -1, options);
    const double gamma0 = pipe.psi0.gamma;
    const double gamma1 = pipe.psi1.gamma;

    MeanEstimate estimate;
    estimate.kind = ErrorKind::additive;
    estimate.delta = delta;
    estimate.confidence = 2.0 / 3.0;
    const std::uint64_t samples =
        samples_override > 0 ? static_cast<std::uint64_t>(samples_override)
                             : static_cast<std::uint64_t>(std::ceil(3.0 / (delta * delta)));
    estimate.diagnostics["S"] = static_cast<double>(samples);
    estimate.diagnostics["gamma0"] = gamma0;
    estimate.diagnostics["gamma1"] = gamma1;
    estimate.diagnostics["gamma_product"] = gamma0 * gamma1;
    estimate.diagnostics["max_bond0"] = pipe.psi0.max_bond();
    estimate.diagnostics["max_bond1"] = pipe.psi1.max_bond();
    estimate.diagnostics["D"] = pipe.lattice.max_phys_dim;
    estimate.diagnostics["chi_bound"] = std::pow(pipe.lattice.max_phys_dim, 3);

    if (gamma0 <= 0.0 || gamma1 <= 0.0) {
        // A vanishing factor state means mu = <Psi0|W|Psi1> = 0 exactly.
        estimate.value = cplx(0.0, 0.0);
        estimate.diagnostics["var_F"] = 0.0;
        estimate.diagnostics["degenerate"] = 1.0;
        estimate.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return estimate;
    }

    std::vector<cplx> f_values;
    f_values.reserve(samples);
    for (std::uint64_t i = 0; i < samples; ++i) {
        std::mt19937_64 rng = derived_stream(seed, i);
        const SampleDraw draw = pipe.psi0.sample(rng);
        const std::vector<int> bits = decode_bits(pipe.psi0, pipe.lattice, draw.values);
        const std::vector<int> values1 = encode_values(pipe.psi1, pipe.lattice, bits);
        const cplx amp1 = pipe.psi1.amplitude(values1) / gamma1;
        f_values.push_back(gamma0 * gamma1 * amp1 / draw.amplitude);
    }
    cplx mean(0, 0);
    for (const cplx& f : f_values) mean += f;
    mean /= static_cast<double>(samples);
    double var = 0.0;
    for (const cplx& f : f_values) var += std::norm(f - mean);
    var /= static_cast<double>(samples);

    estimate.value = mean;
    estimate.diagnostics["var_F"] = var;
    estimate.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return estimate;
}

} // namespace qmv
