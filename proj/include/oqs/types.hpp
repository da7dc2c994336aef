// types.hpp — Shared aliases, error types, and small matrix helpers

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace oqs {

using Complex    = std::complex<double>;
using Matrix     = Eigen::MatrixXcd;
using Vector     = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Index      = Eigen::Index;

// hbar = 1 and k_B = 1 throughout: energies in units of J (or hbar*Omega for
// the oscillator), times in hbar/J, temperatures in J.
inline constexpr double hbar = 1.0;
inline constexpr double pi   = 3.14159265358979323846;
inline constexpr Complex imag_unit{0.0, 1.0};

// Bad user input / config (CLI exit code 2)
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid model construction or a violated operation contract
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: pole collision, degenerate solve, stiffness (CLI exit code 3)
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool nearly_hermitian(const Matrix& m, double tol_rel = 1e-12) {
    const double scale = std::max(max_abs(m), 1e-300);
    return max_abs(Matrix(m - m.adjoint())) <= tol_rel * scale;
}

inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double frobenius_norm(const Matrix& m) { return m.norm(); }

// Dense Kronecker product (row-major pair ordering, standard convention)
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Column-major vectorization: vec(rho) stacks columns, so vec(A rho B) = (B^T ⊗ A) vec(rho)
inline Vector vectorize(const Matrix& rho) {
    return Eigen::Map<const Vector>(rho.data(), rho.size());
}

inline Matrix unvectorize(const Vector& v, Index dim) {
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

// Superoperator for rho -> A rho
inline Matrix spre(const Matrix& a) {
    return kron(Matrix::Identity(a.rows(), a.cols()), a);
}

// Superoperator for rho -> rho B
inline Matrix spost(const Matrix& b) {
    return kron(b.transpose(), Matrix::Identity(b.rows(), b.cols()));
}

// Superoperator for rho -> A rho B
inline Matrix sandwich(const Matrix& a, const Matrix& b) {
    return kron(b.transpose(), a);
}

} // namespace oqs
