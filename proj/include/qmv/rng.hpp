#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "qmv/types.hpp"

namespace qmv {

// splitmix64: cheap, well-mixed stream derivation for per-task RNGs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic independent stream for draw `index` of a run seeded by `seed`.
// Scheduling-independent: stream i depends only on (seed, i).
inline std::mt19937_64 derived_stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

// Complex standard Gaussian (Ginibre) matrix.
Eigen::MatrixXcd ginibre(int rows, int cols, std::mt19937_64& rng);

// Haar-distributed unitary: QR of a Ginibre matrix with the R-diagonal phase fix.
Eigen::MatrixXcd haar_unitary(int dim, std::mt19937_64& rng);

// Haar-distributed pure state of dimension `dim` (the first column of a Haar
// unitary, sampled directly as a normalized Gaussian vector).
Eigen::VectorXcd haar_state(int dim, std::mt19937_64& rng);

} // namespace qmv
