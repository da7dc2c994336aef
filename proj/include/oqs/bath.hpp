// bath.hpp — Ohmic-Drude bath correlation as an exponential sum and its
// half-Fourier transform G_t(Delta) = g_t + i h_t

#pragma once

#include <limits>
#include <vector>

#include "oqs/types.hpp"

namespace oqs::bath {

inline constexpr double t_infinity = std::numeric_limits<double>::infinity();

// J(Delta) = gamma * Delta / (1 + (Delta/Ec)^2); antisymmetric by construction
struct DrudeSpectralDensity {
    double gamma{0.1};
    double Ec{10.0};

    double J(double delta) const {
        return gamma * delta / (1.0 + (delta / Ec) * (delta / Ec));
    }
};

struct ExpTerm {
    Complex amplitude; // c_j
    double rate;       // kappa_j > 0, energy units
};

// Bath correlation C_tau for tau >= 0.
//   exp_sum:  C_tau = sum_j c_j exp(-kappa_j tau); term 0 is the Drude pole at
//             rate Ec, terms j>=1 are Matsubara poles at nu_l = 2 pi l / beta.
//   singular: delta-correlated fixture with G_t(Delta) == alpha for all t, Delta.
class CorrelationFunction {
  public:
    enum class Kind { exp_sum, singular };

    static CorrelationFunction drude_exp_sum(const DrudeSpectralDensity& jd, double beta,
                                             double tol = 1e-11);
    static CorrelationFunction singular(double alpha);

    Kind kind() const { return kind_; }
    double beta() const { return beta_; }
    double alpha() const { return alpha_; }
    const DrudeSpectralDensity& spectral_density() const { return jd_; }
    const std::vector<ExpTerm>& terms() const { return terms_; }
    int matsubara_count() const { return static_cast<int>(terms_.size()) - 1; }
    double overall_scale() const { return scale_; }

    // Half-Fourier transform G_t(Delta) = Int_0^t exp(-i Delta tau) C_tau dtau,
    // evaluated term-wise in closed form; t may be t_infinity.
    Complex G(double delta, double t) const;

    // Same values for many Delta at one t, sharing the per-term exponentials
    void G_batch(const std::vector<double>& deltas, double t, std::vector<Complex>& out) const;

    // C_tau from the exponential sum (exp_sum kind only)
    Complex C(double tau) const;

    // Long-time real part from the closed form J(Delta)/(e^{beta Delta}-1);
    // satisfies detailed balance exactly
    double g_exact(double delta) const;

    // Rescale the correlation amplitudes (used to fold coupling normalization
    // into the bath, and to split non-Hermitian couplings into two channels)
    CorrelationFunction scaled(double factor) const;

    // Cancel the constant damping-kernel part of Im G (potential renormalization
    // of the damped-oscillator model)
    void set_damping_kernel_subtraction(bool on) { subtract_damping_ = on; }
    bool damping_kernel_subtracted() const { return subtract_damping_; }

  private:
    Complex tail_remainder(double delta) const;
    Complex tail_decay(double delta, double t) const;

    Kind kind_{Kind::exp_sum};
    DrudeSpectralDensity jd_{};
    double beta_{1.0};
    double alpha_{0.0};
    double scale_{1.0};
    double tol_{1e-11};
    bool subtract_damping_{false};
    std::vector<ExpTerm> terms_;
};

// Throws NumericsError if beta*Ec sits within 1e-6 relative of a Matsubara
// frequency 2 pi l (Drude pole colliding with a Matsubara pole)
void check_pole_collision(double beta, double Ec);

// g_inf(Delta) = J(Delta) / (e^{beta Delta} - 1), continuous at Delta = 0
// with value gamma/beta
double g_inf(double delta, const DrudeSpectralDensity& jd, double beta);

// Decomposition of h_inf(Delta) = Im G_inf(Delta) into the constant damping
// kernel, the symmetric vacuum part, and the antisymmetric thermal part
struct HInfParts {
    double damping_kernel{0.0};
    double vacuum{0.0};
    double thermal{0.0};

    double sum() const { return damping_kernel + vacuum + thermal; }
};

// l_max <= 0 selects the Matsubara count from the tolerance
HInfParts h_inf_parts(double delta, const DrudeSpectralDensity& jd, double beta, int l_max = 0);

// High-temperature coefficient of the antisymmetric thermal part,
// h_th(Delta) -> -gamma Delta chi(xi) in the joint limit Ec -> inf, beta -> 0
// at fixed xi = beta*Ec
double chi(double xi);

} // namespace oqs::bath
