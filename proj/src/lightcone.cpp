#include "qmv/lightcone.hpp"

#include <algorithm>

namespace qmv {

namespace {

void absorb_layer(const std::vector<Gate>& layer, std::vector<char>& in_set) {
    for (const Gate& g : layer) {
        bool touches = false;
        for (int q : g.qubits)
            if (in_set[static_cast<std::size_t>(q)]) {
                touches = true;
                break;
            }
        if (touches)
            for (int q : g.qubits) in_set[static_cast<std::size_t>(q)] = 1;
    }
}

std::set<int> sweep(const Circuit& circuit, const std::set<int>& s, bool front_to_back) {
    std::vector<char> in_set(static_cast<std::size_t>(circuit.n), 0);
    for (int q : s) in_set.at(static_cast<std::size_t>(q)) = 1;
    if (front_to_back) {
        for (const auto& layer : circuit.layers) absorb_layer(layer, in_set);
    } else {
        for (auto it = circuit.layers.rbegin(); it != circuit.layers.rend(); ++it)
            absorb_layer(*it, in_set);
    }
    std::set<int> out;
    for (int q = 0; q < circuit.n; ++q)
        if (in_set[static_cast<std::size_t>(q)]) out.insert(q);
    return out;
}

} // namespace

std::set<int> forward_lightcone(const Circuit& circuit, const std::set<int>& s) {
    return sweep(circuit, s, true);
}

std::set<int> backward_lightcone(const Circuit& circuit, const std::set<int>& s) {
    return sweep(circuit, s, false);
}

LightconeTable iterated_lightcones(const Circuit& circuit, int c_max) {
    if (c_max < 1) throw precondition_error("iterated_lightcones: c_max must be >= 1");
    LightconeTable table;
    table.c_max = c_max;
    table.forward.resize(static_cast<std::size_t>(c_max));
    table.backward.resize(static_cast<std::size_t>(c_max));
    table.ell.assign(static_cast<std::size_t>(c_max), 0);

    for (int c = 0; c < c_max; ++c) {
        table.forward[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(circuit.n));
        table.backward[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(circuit.n));
    }
    for (int j = 0; j < circuit.n; ++j) {
        std::set<int> fwd = {j};
        std::set<int> bwd = {j};
        for (int c = 1; c <= c_max; ++c) {
            // Direction alternates with the level: odd levels sweep in the
            // table's own direction, even levels in the opposite one.
            const bool fwd_dir = (c % 2) == 1;
            fwd = sweep(circuit, fwd, fwd_dir);
            bwd = sweep(circuit, bwd, !fwd_dir);
            table.forward[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(j)] = fwd;
            table.backward[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(j)] = bwd;
            int& ell = table.ell[static_cast<std::size_t>(c - 1)];
            ell = std::max(ell, static_cast<int>(fwd.size()));
            ell = std::max(ell, static_cast<int>(bwd.size()));
        }
    }
    if (circuit.n == 0) table.ell.assign(static_cast<std::size_t>(c_max), 0);
    return table;
}

RestrictedCircuit restrict_circuit(const Circuit& circuit, const std::set<int>& kept) {
    RestrictedCircuit out;
    out.kept_qubits.assign(kept.begin(), kept.end());
    out.original_to_new.assign(static_cast<std::size_t>(circuit.n), -1);
    for (std::size_t i = 0; i < out.kept_qubits.size(); ++i)
        out.original_to_new[static_cast<std::size_t>(out.kept_qubits[i])] = static_cast<int>(i);

    out.circuit.n = static_cast<int>(out.kept_qubits.size());
    out.circuit.layers.reserve(circuit.layers.size());
    for (const auto& layer : circuit.layers) {
        std::vector<Gate> kept_gates;
        for (const Gate& g : layer) {
            bool inside = true;
            for (int q : g.qubits)
                if (out.original_to_new[static_cast<std::size_t>(q)] < 0) {
                    inside = false;
                    break;
                }
            if (!inside) continue;
            Gate relabeled = g;
            for (int& q : relabeled.qubits) q = out.original_to_new[static_cast<std::size_t>(q)];
            kept_gates.push_back(std::move(relabeled));
        }
        out.circuit.layers.push_back(std::move(kept_gates));
    }
    // A restriction of a grid circuit generally breaks the grid, so the layout
    // is intentionally dropped.
    return out;
}

} // namespace qmv
