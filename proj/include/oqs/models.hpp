// models.hpp — System Hamiltonians (extended Hubbard chain, truncated oscillator),
// diagonalization, and basis transforms

#pragma once

#include <string>
#include <vector>

#include "oqs/basis.hpp"
#include "oqs/types.hpp"

namespace oqs::models {

// Dense operator over a labeled basis
struct ManyBodyOperator {
    std::string basis_tag;
    Matrix matrix;
    bool hermitian{false};

    Index dim() const { return matrix.rows(); }
};

ManyBodyOperator make_operator(std::string basis_tag, Matrix m, bool hermitian);

// Eigendecomposition of a Hermitian Hamiltonian: H = U diag(eps) U†
struct SpectrumDecomposition {
    RealVector eps; // ascending
    Matrix U;       // columns are eigenvectors

    Index dim() const { return eps.size(); }
    double splitting(Index q, Index k) const { return eps(q) - eps(k); }

    // Matrix of all level splittings eps_q - eps_k
    RealMatrix splittings() const;
};

// Open extended Hubbard chain, fixed particle number.
// Hopping -J sum_i (c†_i c_{i+1} + h.c.) carries no Jordan-Wigner sign for
// nearest neighbors with the ascending-site string convention; interaction
// +V sum_i n_i n_{i+1}.
ManyBodyOperator build_hubbard(const FermionBasis& basis, double hopping, double interaction);
ManyBodyOperator build_hubbard(int sites, int particles, double hopping, double interaction);

// Diagonal occupation operator n_i (site index 1-based)
ManyBodyOperator number_operator(int site, const FermionBasis& basis);

// Site-reflection permutation i -> l+1-i acting on basis patterns
Matrix site_reflection(const FermionBasis& basis);

// Harmonic oscillator truncated to fock_levels Fock states |0..n_max-1>
struct OscillatorModel {
    double mass{1.0};
    double frequency{1.0};
    int fock_levels{2};
    Matrix a, a_dag;   // ladder operators
    Matrix Q, P;       // position and momentum, hbar = 1
    Matrix coupling;   // S = (a + a†)/sqrt(2)
    ManyBodyOperator hamiltonian; // Omega (a†a + 1/2)
};

OscillatorModel build_oscillator(double mass, double frequency, int fock_levels);

// Analytic spectrum of the truncated oscillator (already diagonal, U = 1)
SpectrumDecomposition oscillator_spectrum(const OscillatorModel& model);

// Smallest Fock count with thermal population below `tol` at the first excluded level
int min_fock_levels(double temperature, double frequency, double tol = 1e-8);

SpectrumDecomposition diagonalize(const ManyBodyOperator& op);

// U† op U; Frobenius norm preserved
ManyBodyOperator to_eigenbasis(const ManyBodyOperator& op, const SpectrumDecomposition& spec);

} // namespace oqs::models
