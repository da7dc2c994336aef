// dissipators.hpp — Convolution operator, Lamb shift, and the four generators:
// Redfield, RWA, exact pseudo-Lindblad, and optimized truncated Lindblad

#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "oqs/bath.hpp"
#include "oqs/models.hpp"
#include "oqs/types.hpp"

namespace oqs::dissipators {

using models::ManyBodyOperator;
using models::SpectrumDecomposition;

// One system-bath coupling channel. The coupling operator is stored in the
// energy eigenbasis with unit Frobenius norm; the original norm is folded
// into the correlation amplitudes and recorded as `scale`.
struct BathChannel {
    Matrix S;    // eigenbasis, ||S||_F = 1
    double scale{1.0};
    bath::CorrelationFunction corr;
    std::string label;
};

BathChannel make_channel(const ManyBodyOperator& coupling, const SpectrumDecomposition& spec,
                         const bath::CorrelationFunction& corr, std::string label = "");

// Same, for a coupling already expressed in the eigenbasis
BathChannel make_channel_eigenbasis(const Matrix& coupling_eig, const bath::CorrelationFunction& corr,
                                    std::string label = "");

// Non-Hermitian coupling H_SB = (S ⊗ B + S† ⊗ B†)/2 splits into two channels
// carrying S and S†, each with half the correlation amplitude. For Hermitian S
// the pair reproduces the single-channel dissipator.
std::vector<BathChannel> split_nonhermitian(const ManyBodyOperator& coupling,
                                            const SpectrumDecomposition& spec,
                                            const bath::CorrelationFunction& corr,
                                            std::string label = "");

// Distinct level splittings grouped within a tolerance, with the bucket index
// of every (q, k) pair; shared by the secular grouping and the fast
// time-dependent convolution path
struct SplittingBuckets {
    std::vector<double> omega;
    Eigen::MatrixXi index;
};

SplittingBuckets build_splitting_buckets(const SpectrumDecomposition& spec, double tol = 1e-9);

// Convolution of the coupling with the bath correlation: element-wise
// (S_t)_qk = S_qk G_t(Delta_qk) in the eigenbasis
struct ConvolutionOperator {
    Matrix matrix;
    double time{bath::t_infinity};
};

ConvolutionOperator build_convolution(const BathChannel& channel, const SpectrumDecomposition& spec,
                                      double t);

// Lamb-shift Hamiltonian hbar (S† S_conv - S_conv† S) / 2i; Hermitian
Matrix lamb_shift(const Matrix& S, const Matrix& S_conv);

// Optimal decomposition parameters minimizing the negative weight:
// lambda_sq = ||S_conv||_F / ||S||_F and
// sin(phi)  = -Im tr(S S_conv†) / (||S||_F ||S_conv||_F)
struct OptimalParams {
    double lambda_sq{0.0};
    double phi{0.0};
};

OptimalParams optimal_params(const Matrix& S, const Matrix& S_conv);

// Pseudo-Lindblad jump operators A± = [lambda± S ± S_conv / lambda±] / sqrt(2 cos phi)
// with lambda± = sqrt(lambda_sq) exp(∓ i phi / 2); exact rewriting of the
// Redfield dissipator as a positive minus a negative Lindblad term
struct PseudoLindbladDecomposition {
    double lambda_sq{0.0};
    double phi{0.0};
    Matrix A_plus;
    Matrix A_minus;
    double w_plus{0.0};  // ||A+||_F^2
    double w_minus{0.0}; // ||A-||_F^2
};

PseudoLindbladDecomposition decompose(const Matrix& S, const Matrix& S_conv, double lambda_sq,
                                      double phi);

// Weights of an existing decomposition (w_plus, w_minus)
std::pair<double, double> weights(const PseudoLindbladDecomposition& dec);

// Closed form of the optimized weights:
// ±Re tr(S S_conv†) + sqrt(||S||^2 ||S_conv||^2 - [Im tr(S S_conv†)]^2)
std::pair<double, double> optimal_weights_closed_form(const Matrix& S, const Matrix& S_conv);

// Redfield dissipator acting on rho for one channel (general, S need not be Hermitian):
// S rho S_conv† + S_conv rho S† - {S† S_conv + S_conv† S, rho}/2
Matrix redfield_dissipator_apply(const Matrix& S, const Matrix& S_conv, const Matrix& rho);

// Pseudo-Lindblad action sum_sigma sigma [A rho A† - {A†A, rho}/2]
Matrix pseudo_lindblad_apply(const PseudoLindbladDecomposition& dec, const Matrix& rho);

// Dense dim^2 x dim^2 superoperator of the full Redfield generator
// (coherent part H_S + sum_a H_LS,a plus all channel dissipators)
Matrix redfield_superoperator(const std::vector<BathChannel>& channels,
                              const SpectrumDecomposition& spec, double t);

// --------------------------------- generators --------------------------------

// Snapshot of a Lindblad-form generator. Rates are normally absorbed into the
// jump operators (rate 1); finite-time RWA rates may be negative and are then
// kept explicit.
struct LindbladForm {
    Matrix h_coh;
    std::vector<Matrix> jumps;
    std::vector<double> rates;

    Index dim() const { return h_coh.rows(); }
    Matrix apply(const Matrix& rho) const;
    Matrix superoperator() const;
    // H_coh - (i/2) sum_a rate_a A_a† A_a; requires nonnegative rates
    Matrix effective_hamiltonian() const;
};

// Common interface for propagation and steady-state solvers
class Generator {
  public:
    virtual ~Generator() = default;
    virtual Index dim() const = 0;
    virtual bool time_dependent() const = 0;
    virtual Matrix apply(const Matrix& rho, double t) const = 0;
    virtual Matrix superoperator(double t) const = 0;

    Matrix apply_frozen(const Matrix& rho) const { return apply(rho, bath::t_infinity); }
};

// Time-independent generator defined directly by a LindbladForm snapshot
class FrozenLindbladGenerator : public Generator {
  public:
    explicit FrozenLindbladGenerator(LindbladForm form) : form_(std::move(form)) {}

    Index dim() const override { return form_.dim(); }
    bool time_dependent() const override { return false; }
    Matrix apply(const Matrix& rho, double) const override { return form_.apply(rho); }
    Matrix superoperator(double) const override { return form_.superoperator(); }
    const LindbladForm& form() const { return form_; }

  private:
    LindbladForm form_;
};

// Full Redfield generator; frozen mode caches the t = inf convolutions
class RedfieldGenerator : public Generator {
  public:
    RedfieldGenerator(std::vector<BathChannel> channels, SpectrumDecomposition spec, bool frozen);

    Index dim() const override { return spec_.dim(); }
    bool time_dependent() const override { return !frozen_; }
    Matrix apply(const Matrix& rho, double t) const override;
    Matrix superoperator(double t) const override;

    const std::vector<BathChannel>& channels() const { return channels_; }
    const SpectrumDecomposition& spectrum() const { return spec_; }

  private:
    Matrix convolution_fast(std::size_t channel, double t) const;

    std::vector<BathChannel> channels_;
    SpectrumDecomposition spec_;
    bool frozen_;
    SplittingBuckets buckets_;
    Matrix h_coh_inf_;
    std::vector<Matrix> conv_inf_;
};

// Rotating-wave (secular) generator. Jump operators are grouped by degenerate
// level splittings (equal within 1e-9); at t = inf the rates use the exact
// g_inf and the steady state of a single thermal bath is the Gibbs state.
class RwaGenerator : public Generator {
  public:
    RwaGenerator(std::vector<BathChannel> channels, SpectrumDecomposition spec, bool frozen);

    Index dim() const override { return spec_.dim(); }
    bool time_dependent() const override { return !frozen_; }
    Matrix apply(const Matrix& rho, double t) const override;
    Matrix superoperator(double t) const override;

    LindbladForm form(double t) const;
    // Set when any finite-time rate 2 g_t(omega) went negative (never clamped)
    bool negative_rate_seen() const { return negative_rate_seen_.load(); }

    const std::vector<double>& bucket_splittings() const { return buckets_.omega; }
    // Masked coupling operator of channel `a` in splitting bucket `b`
    const Matrix& bucket_operator(std::size_t a, std::size_t b) const {
        return bucket_ops_[a][b];
    }

  private:
    std::vector<BathChannel> channels_;
    SpectrumDecomposition spec_;
    bool frozen_;
    SplittingBuckets buckets_;
    std::vector<std::vector<Matrix>> bucket_ops_;     // [channel][bucket]
    std::vector<std::vector<Matrix>> bucket_ops_dd_;  // precomputed Sw† Sw
    mutable std::atomic<bool> negative_rate_seen_{false};
};

// Truncated Lindblad generator: full Lamb shift plus one positive jump
// operator A+ per channel. Parameters are the per-channel optimum unless a
// fixed (lambda_sq, phi) is supplied.
class TruncatedGenerator : public Generator {
  public:
    TruncatedGenerator(std::vector<BathChannel> channels, SpectrumDecomposition spec, bool frozen);
    // Fixed-parameter variant (e.g. lambda_sq = J/hbar, phi = 0)
    TruncatedGenerator(std::vector<BathChannel> channels, SpectrumDecomposition spec, bool frozen,
                       double fixed_lambda_sq, double fixed_phi);

    Index dim() const override { return spec_.dim(); }
    bool time_dependent() const override { return !frozen_; }
    Matrix apply(const Matrix& rho, double t) const override;
    Matrix superoperator(double t) const override;

    LindbladForm form(double t) const;
    // Per-channel decomposition at time t (inf allowed)
    std::vector<PseudoLindbladDecomposition> decompositions(double t) const;

  private:
    Matrix convolution_fast(std::size_t channel, double t) const;

    std::vector<BathChannel> channels_;
    SpectrumDecomposition spec_;
    bool frozen_;
    bool use_fixed_{false};
    double fixed_lambda_sq_{0.0};
    double fixed_phi_{0.0};
    SplittingBuckets buckets_;
    LindbladForm form_inf_;
};

// Small-beta prediction for the relative weight w-/w+ of the time-independent
// decomposition for an Ohmic-Drude bath:
//   [1/16 + chi(beta Ec)^2 / 4] * beta^2 * V[Delta]
// (coefficient from the optimized-weight expansion; see decomposition tests)
double relative_weight_prediction(double beta, double Ec, double var_delta);

// Weighted splitting variance V[Delta] = bar(Delta^2) - bar(Delta)^2 with
// probabilities |S_qk|^2 of the normalized coupling
double splitting_variance(const Matrix& S_eig, const SpectrumDecomposition& spec);

} // namespace oqs::dissipators
