#include "qmv/circuit.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qmv/linalg.hpp"

namespace qmv {

using nlohmann::json;

Gate one_qubit_gate(int qubit, const Eigen::Matrix2cd& m) {
    return Gate{{qubit}, m};
}

Gate two_qubit_gate(int q_first, int q_second, const Eigen::Matrix4cd& m) {
    return Gate{{q_first, q_second}, m};
}

void Circuit::validate() const {
    if (n < 0) throw parse_error("circuit: negative qubit count");
    if (layout) {
        if (layout->rows <= 0 || layout->cols <= 0)
            throw parse_error("circuit: layout dimensions must be positive");
        if (layout->rows * layout->cols != n)
            throw parse_error("circuit: layout " + std::to_string(layout->rows) + "x" +
                              std::to_string(layout->cols) + " does not cover n=" +
                              std::to_string(n) + " qubits");
    }
    for (std::size_t li = 0; li < layers.size(); ++li) {
        std::set<int> used;
        for (const Gate& g : layers[li]) {
            if (g.qubits.size() != 1 && g.qubits.size() != 2)
                throw parse_error("circuit: gate must act on one or two qubits");
            if (g.qubits.size() == 2 && g.qubits[0] == g.qubits[1])
                throw parse_error("circuit: two-qubit gate with repeated qubit " +
                                  std::to_string(g.qubits[0]));
            const int dim = 1 << g.qubits.size();
            if (g.matrix.rows() != dim || g.matrix.cols() != dim)
                throw parse_error("circuit: gate matrix dimension mismatch");
            for (int q : g.qubits) {
                if (q < 0 || q >= n)
                    throw parse_error("circuit: qubit index " + std::to_string(q) +
                                      " out of range");
                if (!used.insert(q).second)
                    throw parse_error("circuit: overlapping gates on qubit " +
                                      std::to_string(q) + " in layer " + std::to_string(li));
            }
            Eigen::MatrixXcd delta = g.matrix.adjoint() * g.matrix;
            delta -= Eigen::MatrixXcd::Identity(dim, dim);
            const double dev = max_abs(delta);
            if (dev > tol::unitarity) {
                std::ostringstream msg;
                msg << "circuit: non-unitary gate in layer " << li << ", ||M^dag M - I||_max = "
                    << dev;
                throw parse_error(msg.str());
            }
            if (layout && g.qubits.size() == 2 && !layout->adjacent(g.qubits[0], g.qubits[1]))
                throw parse_error("circuit: two-qubit gate on non-adjacent grid qubits " +
                                  std::to_string(g.qubits[0]) + "," +
                                  std::to_string(g.qubits[1]));
        }
    }
}

Circuit identity_circuit(int n) {
    Circuit c;
    c.n = n;
    return c;
}

ProductObservable::ProductObservable(std::vector<Eigen::Matrix2cd> ops) : ops_(std::move(ops)) {
    site_norms_.reserve(ops_.size());
    gamma_ = 0.0;
    hermitian_ = true;
    psd_ = true;
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    for (const Eigen::Matrix2cd& o : ops_) {
        site_norms_.push_back(spectral_norm(o));
        gamma_ = std::max(gamma_, spectral_norm(Eigen::MatrixXcd(o - id)));
        if (!is_hermitian(o)) hermitian_ = false;
    }
    if (!hermitian_) {
        psd_ = false;
    } else {
        for (const Eigen::Matrix2cd& o : ops_) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(o);
            if (es.eigenvalues().minCoeff() < tol::psd_eigenvalue) {
                psd_ = false;
                break;
            }
        }
    }
}

double ProductObservable::max_site_norm() const {
    double m = 0.0;
    for (double v : site_norms_) m = std::max(m, v);
    return m;
}

ProductObservable ProductObservable::identity(int n) {
    return ProductObservable(
        std::vector<Eigen::Matrix2cd>(static_cast<std::size_t>(n), Eigen::Matrix2cd::Identity()));
}

ProductObservable noisy_z_observable(double p, int n) {
    if (p < 0.0 || p > 0.5)
        throw precondition_error("noisy_z_observable: error rate must lie in [0, 1/2]");
    Eigen::Matrix2cd o = Eigen::Matrix2cd::Identity() + (1.0 - 2.0 * p) * pauli_z();
    return ProductObservable(std::vector<Eigen::Matrix2cd>(static_cast<std::size_t>(n), o));
}

namespace {

cplx parse_entry(const json& e) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw parse_error("expected complex entry as [re, im]");
    return cplx(e[0].get<double>(), e[1].get<double>());
}

Eigen::MatrixXcd parse_matrix(const json& rows) {
    if (!rows.is_array() || rows.empty()) throw parse_error("matrix must be a list of rows");
    const int dim = static_cast<int>(rows.size());
    Eigen::MatrixXcd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != dim)
            throw parse_error("matrix rows must all have the same length");
        for (int j = 0; j < dim; ++j) m(i, j) = parse_entry(rows[i][j]);
    }
    return m;
}

json matrix_to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

Circuit parse_circuit(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("circuit: malformed JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("n") || !doc.contains("layers"))
        throw parse_error("circuit: document must contain \"n\" and \"layers\"");
    Circuit c;
    if (!doc["n"].is_number_integer()) throw parse_error("circuit: \"n\" must be an integer");
    c.n = doc["n"].get<int>();
    if (doc.contains("layout") && !doc["layout"].is_null()) {
        const json& lay = doc["layout"];
        if (!lay.is_object() || !lay.contains("rows") || !lay.contains("cols"))
            throw parse_error("circuit: layout must contain rows and cols");
        c.layout = GridLayout{lay["rows"].get<int>(), lay["cols"].get<int>()};
    }
    if (!doc["layers"].is_array()) throw parse_error("circuit: \"layers\" must be a list");
    for (const json& layer : doc["layers"]) {
        if (!layer.is_array()) throw parse_error("circuit: each layer must be a list of gates");
        std::vector<Gate> gates;
        for (const json& g : layer) {
            if (!g.is_object() || !g.contains("qubits") || !g.contains("matrix"))
                throw parse_error("circuit: gate must contain qubits and matrix");
            Gate gate;
            for (const json& q : g["qubits"]) {
                if (!q.is_number_integer()) throw parse_error("circuit: qubit must be integer");
                gate.qubits.push_back(q.get<int>());
            }
            gate.matrix = parse_matrix(g["matrix"]);
            gates.push_back(std::move(gate));
        }
        c.layers.push_back(std::move(gates));
    }
    c.validate();
    return c;
}

std::string serialize_circuit(const Circuit& circuit) {
    json doc;
    doc["n"] = circuit.n;
    doc["layout"] = nullptr;
    if (circuit.layout)
        doc["layout"] = json{{"rows", circuit.layout->rows}, {"cols", circuit.layout->cols}};
    json layers = json::array();
    for (const auto& layer : circuit.layers) {
        json jl = json::array();
        for (const Gate& g : layer)
            jl.push_back(json{{"qubits", g.qubits}, {"matrix", matrix_to_json(g.matrix)}});
        layers.push_back(jl);
    }
    doc["layers"] = layers;
    return doc.dump();
}

ProductObservable parse_observable(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("observable: malformed JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("ops") || !doc["ops"].is_array())
        throw parse_error("observable: document must contain an \"ops\" list");
    std::vector<Eigen::Matrix2cd> ops;
    for (const json& m : doc["ops"]) {
        Eigen::MatrixXcd parsed = parse_matrix(m);
        if (parsed.rows() != 2) throw parse_error("observable: operators must be 2x2");
        ops.emplace_back(parsed);
    }
    return ProductObservable(std::move(ops));
}

std::string serialize_observable(const ProductObservable& observable) {
    json ops = json::array();
    for (const Eigen::Matrix2cd& o : observable.ops()) ops.push_back(matrix_to_json(o));
    return json{{"ops", ops}}.dump();
}

} // namespace qmv
