// evolve.hpp — Density-matrix propagation, steady states, trace-distance error
// metrics, and chain observables

#pragma once

#include <string>
#include <vector>

#include "oqs/dissipators.hpp"
#include "oqs/models.hpp"
#include "oqs/types.hpp"

namespace oqs::evolve {

using dissipators::Generator;
using models::FermionBasis;
using models::SpectrumDecomposition;

struct SimulationRecord {
    std::vector<double> times;
    std::vector<Matrix> states; // energy eigenbasis
    std::string generator_kind;

    Index size() const { return static_cast<Index>(times.size()); }
};

// Adaptive integration of rho' = L_t[rho] through all grid points.
// rho0 must be Hermitian with unit trace (1e-10); trace drift beyond 1e-8
// raises NumericsError.
SimulationRecord propagate(const Generator& gen, const Matrix& rho0,
                           const std::vector<double>& t_grid, double rtol = 1e-8,
                           double atol = 1e-10, std::string kind = "");

struct SteadyStateResult {
    Matrix rho;
    double residual{0.0};       // ||L vec(rho)||_inf / max|L|
    double min_eigenvalue{0.0};
    bool negative_flag{false};  // min eigenvalue < -1e-10
};

// Null vector of the frozen generator with the trace-1 constraint replacing
// one row. Uniqueness is checked by the second-smallest singular value for
// dim^2 <= 400 and by re-solving with a different replaced row above that.
SteadyStateResult steady_state(const Generator& gen);

// (1/2) sum |eig(rho1 - rho2)|
double trace_distance(const Matrix& rho1, const Matrix& rho2);

// Trapezoidal average of trace_distance(a(t), b(t)) over [0, tau]; records
// must share a time grid that covers tau
double time_averaged_distance(const SimulationRecord& a, const SimulationRecord& b, double tau);

// Gibbs state exp(-beta H)/Z, diagonal in the eigenbasis
Matrix gibbs_state(const SpectrumDecomposition& spec, double beta);

// Named initial states (eigenbasis): the ground state and the equal-amplitude
// superposition (|g> + |e>)/sqrt(2)
Vector ground_state(const SpectrumDecomposition& spec);
Vector ground_plus_first(const SpectrumDecomposition& spec);
Matrix pure_density(const Vector& psi);

// Site occupations of the chain transformed once into the eigenbasis
struct ChainObservables {
    int sites{0};
    std::vector<Matrix> n_eig; // per site
    Matrix imbalance_eig;      // sum_{i<=l/2} n_i - sum_{i>l/2} n_i (odd middle site excluded)
};

ChainObservables make_chain_observables(const FermionBasis& basis,
                                        const SpectrumDecomposition& spec);

struct Observables {
    RealVector site_occupation;
    double n_left{0.0};
    double n_right{0.0};
    double imbalance{0.0};
    RealVector populations;  // eigenbasis diagonal
    double max_coherence{0.0};
};

// For even l the halves split at l/2; for odd l the middle site is excluded
Observables observables(const Matrix& rho_eig, const ChainObservables& chain);

} // namespace oqs::evolve
