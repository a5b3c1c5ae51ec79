#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qmv {

using cplx = std::complex<double>;

// Central tolerance record. Every module-level check uses these values;
// anything tighter/looser is a local contract stated at the call site.
namespace tol {
inline constexpr double unitarity = 1e-10;       // max-entry of M^dag M - I
inline constexpr double hermiticity = 1e-10;     // max-entry of M - M^dag
inline constexpr double psd_eigenvalue = -1e-10; // min eigenvalue cutoff
inline constexpr double block_equality = 1e-12;  // block-encoding identities
inline constexpr double root_residual = 1e-8;    // |p(root)| / ||p||_1
inline constexpr double svd_truncation = 1e-12;  // relative singular value cutoff
inline constexpr double norm_preservation = 1e-12;
inline constexpr double coeff_identity = 1e-10;  // c_0 = 1 checks
} // namespace tol

// Error taxonomy mirrored by the CLI exit codes (2/3/4).
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

struct precondition_error : std::runtime_error {
    explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

// Violation of an internal theorem-backed invariant (e.g. the MPS bond bound).
// These indicate a construction bug, not bad input.
struct internal_error : std::logic_error {
    explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

inline constexpr const char* version_string = "0.1.0";

} // namespace qmv
