// trajectories.hpp — Monte-Carlo wave-function unraveling of a frozen Lindblad
// generator with seeded, reproducible, parallel sampling

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oqs/dissipators.hpp"
#include "oqs/evolve.hpp"
#include "oqs/types.hpp"

namespace oqs::trajectories {

using dissipators::LindbladForm;

struct TrajectoryConfig {
    int n_traj{1000};
    std::uint64_t seed{0};
    double t_max{50.0};
    double burn_in{10.0};
    double sample_dt{0.5};
    double rtol{1e-8};
    double atol{1e-10};
    double jump_tol{1e-10};  // relative tolerance of the jump-time bisection
    int n_workers{0};        // 0 = hardware concurrency
    double snapshot_time{-1.0}; // >= 0: also accumulate the ensemble state there
};

struct EstimatorResult {
    std::vector<std::string> names;
    RealVector mean;
    RealVector std_error; // sigma / sqrt(n_traj) over trajectory means
    int n_traj{0};
    std::uint64_t seed{0};
    Matrix ensemble_state; // only if snapshot_time was set

    double value(const std::string& name) const;
    double error(const std::string& name) const;
};

// Standard MCWF: deterministic drift under H_eff = H_coh - (i/2) sum A†A,
// jumps located by bisection on the interpolated norm, channel chosen with
// probability ∝ ||A psi||^2. Observables are time-averaged over
// [burn_in, t_max] per trajectory, then averaged over trajectories.
// Results are bit-identical for a fixed (seed, config) at any worker count.
EstimatorResult unravel(const LindbladForm& gen, const Vector& psi0,
                        const std::vector<Matrix>& observables,
                        const std::vector<std::string>& names, const TrajectoryConfig& cfg);

// Two local baths at different temperatures on the outermost chain sites;
// returns per-site occupations and the particle imbalance of the truncated
// generator's nonequilibrium steady state.
struct NessSetup {
    int sites{6};
    int particles{3};
    double hopping{1.0};
    double interaction{2.0};
    double gamma{0.2};
    double Ec{17.0};
    double T_left{7.0};
    double T_right{13.0};
};

EstimatorResult ness_imbalance(const NessSetup& setup, const TrajectoryConfig& cfg);

namespace detail {

// splittable per-trajectory RNG: xoshiro256++ seeded via splitmix64
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t next();
    double uniform(); // in [0, 1)

  private:
    std::uint64_t s_[4];
};

// Channel selection given cumulative weights; throws NumericsError when all
// jump weights vanish at a jump
std::size_t select_channel(const std::vector<double>& weights, double u);

} // namespace detail

} // namespace oqs::trajectories
