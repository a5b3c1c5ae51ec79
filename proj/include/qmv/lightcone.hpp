#pragma once

#include <set>
#include <vector>

#include "qmv/circuit.hpp"

namespace qmv {

// Lightcones are computed by explicit layer sweeps absorbing the full support
// of any gate that touches the growing set. forward_lightcone sweeps layers in
// application order (front-to-back) and bounds the spread of operators
// conjugated as U A U^dag; backward_lightcone sweeps back-to-front and bounds
// U^dag A U. The two are mutual inverses in the sense of the symmetry
// j in L(k) <=> k in L_back(j).
std::set<int> forward_lightcone(const Circuit& circuit, const std::set<int>& s);
std::set<int> backward_lightcone(const Circuit& circuit, const std::set<int>& s);

// Iterated cones: level 1 is a sweep in the table's own direction, and each
// further level re-sweeps the previous set in the opposite direction
// (forward, backward-of-forward, forward-of-that, ...).
struct LightconeTable {
    int c_max = 0;
    // forward[c-1][j], backward[c-1][j] for c = 1..c_max
    std::vector<std::vector<std::set<int>>> forward;
    std::vector<std::vector<std::set<int>>> backward;
    std::vector<int> ell; // ell[c-1] = max over qubits and both directions

    int ell_at(int c) const { return ell[static_cast<std::size_t>(c - 1)]; }
};

LightconeTable iterated_lightcones(const Circuit& circuit, int c_max);

// Keeps exactly the gates with support inside `kept`, relabeling qubits to
// 0..|kept|-1 in ascending order. Layer structure (and hence depth) is kept.
struct RestrictedCircuit {
    Circuit circuit;
    std::vector<int> kept_qubits;     // new index -> original qubit
    std::vector<int> original_to_new; // original qubit -> new index, -1 if dropped
};

RestrictedCircuit restrict_circuit(const Circuit& circuit, const std::set<int>& kept);

} // namespace qmv
