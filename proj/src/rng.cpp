#include "qmv/rng.hpp"

namespace qmv {

Eigen::MatrixXcd ginibre(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd g(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double re = gauss(rng);
            double im = gauss(rng);
            g(i, j) = cplx(re, im);
        }
    return g;
}

Eigen::MatrixXcd haar_unitary(int dim, std::mt19937_64& rng) {
    Eigen::MatrixXcd g = ginibre(dim, dim, rng);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the gauge so the distribution is exactly Haar (Mezzadri's recipe).
    for (int j = 0; j < dim; ++j) {
        cplx d = r(j, j);
        double a = std::abs(d);
        cplx phase = (a > 0.0) ? d / a : cplx(1.0, 0.0);
        q.col(j) *= phase;
    }
    return q;
}

Eigen::VectorXcd haar_state(int dim, std::mt19937_64& rng) {
    Eigen::VectorXcd v = ginibre(dim, 1, rng).col(0);
    v.normalize();
    return v;
}

} // namespace qmv
