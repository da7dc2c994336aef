#include "oqs/dissipators.hpp"

#include <algorithm>
#include <cmath>

namespace oqs::dissipators {

namespace {

Matrix coherent_commutator(const Matrix& h, const Matrix& rho) {
    return -imag_unit / hbar * (h * rho - rho * h);
}

Matrix coherent_superoperator(const Matrix& h) {
    return -imag_unit / hbar * (spre(h) - spost(h));
}

// Dissipator superoperator for S rho Sconv† + Sconv rho S† - {S† Sconv + Sconv† S, rho}/2
Matrix channel_dissipator_superoperator(const Matrix& S, const Matrix& Sc) {
    const Matrix K = S.adjoint() * Sc + Sc.adjoint() * S;
    Matrix out = sandwich(S, Sc.adjoint()) + sandwich(Sc, S.adjoint());
    out -= 0.5 * (spre(K) + spost(K));
    return out;
}

} // namespace

BathChannel make_channel_eigenbasis(const Matrix& coupling_eig,
                                    const bath::CorrelationFunction& corr, std::string label) {
    if (coupling_eig.rows() != coupling_eig.cols())
        throw ModelError("bath channel: coupling operator must be square");
    const double nrm = coupling_eig.norm();
    if (nrm <= 0) throw ModelError("bath channel: coupling operator vanishes");

    BathChannel ch;
    ch.S = coupling_eig / nrm;
    ch.scale = nrm;
    // coupling normalization is folded into the bath amplitudes
    ch.corr = corr.scaled(nrm * nrm);
    ch.label = std::move(label);
    return ch;
}

BathChannel make_channel(const ManyBodyOperator& coupling, const SpectrumDecomposition& spec,
                         const bath::CorrelationFunction& corr, std::string label) {
    if (coupling.dim() != spec.dim()) throw ModelError("bath channel: dimension mismatch");
    return make_channel_eigenbasis(spec.U.adjoint() * coupling.matrix * spec.U, corr,
                                   std::move(label));
}

std::vector<BathChannel> split_nonhermitian(const ManyBodyOperator& coupling,
                                            const SpectrumDecomposition& spec,
                                            const bath::CorrelationFunction& corr,
                                            std::string label) {
    if (coupling.dim() != spec.dim()) throw ModelError("split_nonhermitian: dimension mismatch");
    const Matrix s_eig = spec.U.adjoint() * coupling.matrix * spec.U;
    const bath::CorrelationFunction half = corr.scaled(0.5);
    std::vector<BathChannel> channels;
    channels.push_back(make_channel_eigenbasis(s_eig, half, label + ":S"));
    channels.push_back(make_channel_eigenbasis(s_eig.adjoint(), half, label + ":S_dag"));
    return channels;
}

ConvolutionOperator build_convolution(const BathChannel& channel, const SpectrumDecomposition& spec,
                                      double t) {
    if (channel.S.rows() != spec.dim()) throw ModelError("convolution: dimension mismatch");
    if (!(t >= 0)) throw ModelError("convolution: t must be >= 0 (or infinity)");
    const Index n = spec.dim();
    ConvolutionOperator conv;
    conv.time = t;
    conv.matrix = Matrix::Zero(n, n);
    for (Index k = 0; k < n; ++k)
        for (Index q = 0; q < n; ++q) {
            const Complex s = channel.S(q, k);
            if (s != Complex(0.0, 0.0))
                conv.matrix(q, k) = s * channel.corr.G(spec.eps(q) - spec.eps(k), t);
        }
    return conv;
}

Matrix lamb_shift(const Matrix& S, const Matrix& S_conv) {
    if (S.rows() != S_conv.rows() || S.cols() != S_conv.cols())
        throw ModelError("lamb_shift: dimension mismatch");
    Matrix h = hbar * (S.adjoint() * S_conv - S_conv.adjoint() * S) / (2.0 * imag_unit);
    // Hermitian by construction up to rounding at the scale of the inputs
    const double scale = std::max(S.norm() * S_conv.norm(), 1e-300);
    if (max_abs(Matrix(h - h.adjoint())) > 1e-10 * scale)
        throw NumericsError("lamb_shift: result failed the Hermiticity check");
    return hermitize(h);
}

OptimalParams optimal_params(const Matrix& S, const Matrix& S_conv) {
    const double ns = S.norm();
    const double nc = S_conv.norm();
    if (nc <= 1e-300 * std::max(ns, 1.0))
        throw NumericsError("optimal_params: degenerate decomposition, ||S_conv|| = 0 (t = 0?)");

    OptimalParams p;
    p.lambda_sq = nc / ns;
    // sin(phi) = -Im tr(S Sconv†)/(||S|| ||Sconv||); the sign follows from
    // minimizing ||A-||^2, cross-checked against a grid search in the tests
    const Complex overlap = (S * S_conv.adjoint()).trace();
    const double s = std::clamp(-overlap.imag() / (ns * nc), -1.0, 1.0);
    p.phi = std::asin(s);
    return p;
}

PseudoLindbladDecomposition decompose(const Matrix& S, const Matrix& S_conv, double lambda_sq,
                                      double phi) {
    if (!(lambda_sq > 0)) throw ModelError("decompose: lambda_sq must be > 0");
    if (!(std::abs(phi) < 0.5 * pi)) throw ModelError("decompose: need |phi| < pi/2");

    const double lambda = std::sqrt(lambda_sq);
    const Complex lam_p = lambda * std::exp(Complex(0.0, -0.5 * phi));
    const Complex lam_m = lambda * std::exp(Complex(0.0, +0.5 * phi));
    const double norm = 1.0 / std::sqrt(2.0 * std::cos(phi));

    PseudoLindbladDecomposition dec;
    dec.lambda_sq = lambda_sq;
    dec.phi = phi;
    dec.A_plus = norm * (lam_p * S + S_conv / lam_p);
    dec.A_minus = norm * (lam_m * S - S_conv / lam_m);
    dec.w_plus = dec.A_plus.squaredNorm();
    dec.w_minus = dec.A_minus.squaredNorm();
    return dec;
}

std::pair<double, double> weights(const PseudoLindbladDecomposition& dec) {
    return {dec.A_plus.squaredNorm(), dec.A_minus.squaredNorm()};
}

std::pair<double, double> optimal_weights_closed_form(const Matrix& S, const Matrix& S_conv) {
    const Complex overlap = (S * S_conv.adjoint()).trace();
    const double cross = S.squaredNorm() * S_conv.squaredNorm() - overlap.imag() * overlap.imag();
    const double root = std::sqrt(std::max(cross, 0.0));
    return {overlap.real() + root, -overlap.real() + root};
}

Matrix redfield_dissipator_apply(const Matrix& S, const Matrix& S_conv, const Matrix& rho) {
    const Matrix K = S.adjoint() * S_conv + S_conv.adjoint() * S;
    return S * rho * S_conv.adjoint() + S_conv * rho * S.adjoint() -
           0.5 * (K * rho + rho * K);
}

Matrix pseudo_lindblad_apply(const PseudoLindbladDecomposition& dec, const Matrix& rho) {
    const Matrix& Ap = dec.A_plus;
    const Matrix& Am = dec.A_minus;
    const Matrix KP = Ap.adjoint() * Ap;
    const Matrix KM = Am.adjoint() * Am;
    return Ap * rho * Ap.adjoint() - 0.5 * (KP * rho + rho * KP) -
           (Am * rho * Am.adjoint() - 0.5 * (KM * rho + rho * KM));
}

Matrix redfield_superoperator(const std::vector<BathChannel>& channels,
                              const SpectrumDecomposition& spec, double t) {
    if (channels.empty()) throw ModelError("redfield_superoperator: no channels");
    const Index n = spec.dim();
    Matrix h = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) h(i, i) = spec.eps(i);

    Matrix diss = Matrix::Zero(n * n, n * n);
    for (const BathChannel& ch : channels) {
        if (ch.S.rows() != n) throw ModelError("redfield_superoperator: dimension mismatch");
        const Matrix Sc = build_convolution(ch, spec, t).matrix;
        h += lamb_shift(ch.S, Sc);
        diss += channel_dissipator_superoperator(ch.S, Sc);
    }
    return coherent_superoperator(h) + diss;
}

// --------------------------------- LindbladForm -------------------------------

Matrix LindbladForm::apply(const Matrix& rho) const {
    Matrix out = coherent_commutator(h_coh, rho);
    for (std::size_t a = 0; a < jumps.size(); ++a) {
        const double r = rates.empty() ? 1.0 : rates[a];
        if (r == 0.0) continue;
        const Matrix& j = jumps[a];
        const Matrix K = j.adjoint() * j;
        out += r * (j * rho * j.adjoint() - 0.5 * (K * rho + rho * K));
    }
    return out;
}

Matrix LindbladForm::superoperator() const {
    Matrix out = coherent_superoperator(h_coh);
    for (std::size_t a = 0; a < jumps.size(); ++a) {
        const double r = rates.empty() ? 1.0 : rates[a];
        if (r == 0.0) continue;
        const Matrix& j = jumps[a];
        const Matrix K = j.adjoint() * j;
        out += r * (sandwich(j, j.adjoint()) - 0.5 * (spre(K) + spost(K)));
    }
    return out;
}

Matrix LindbladForm::effective_hamiltonian() const {
    Matrix h = h_coh;
    for (std::size_t a = 0; a < jumps.size(); ++a) {
        const double r = rates.empty() ? 1.0 : rates[a];
        if (r < 0)
            throw ModelError("effective_hamiltonian: negative rate has no Lindblad unraveling");
        h -= 0.5 * imag_unit * hbar * r * (jumps[a].adjoint() * jumps[a]);
    }
    return h;
}

// ------------------------------ splitting buckets -----------------------------

SplittingBuckets build_splitting_buckets(const SpectrumDecomposition& spec, double tol) {
    const Index n = spec.dim();
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n) * n);
    for (Index q = 0; q < n; ++q)
        for (Index k = 0; k < n; ++k) values.push_back(spec.eps(q) - spec.eps(k));
    std::sort(values.begin(), values.end());

    SplittingBuckets buckets;
    for (double v : values)
        if (buckets.omega.empty() || v - buckets.omega.back() > tol) buckets.omega.push_back(v);

    buckets.index.resize(n, n);
    for (Index q = 0; q < n; ++q)
        for (Index k = 0; k < n; ++k) {
            const double w = spec.eps(q) - spec.eps(k);
            const auto it =
                std::lower_bound(buckets.omega.begin(), buckets.omega.end(), w - tol);
            buckets.index(q, k) = static_cast<int>(it - buckets.omega.begin());
        }
    return buckets;
}

namespace {

Matrix bucketed_convolution(const Matrix& S, const SplittingBuckets& buckets,
                            const bath::CorrelationFunction& corr, double t) {
    std::vector<Complex> g;
    corr.G_batch(buckets.omega, t, g);
    const Index n = S.rows();
    Matrix out(n, n);
    for (Index k = 0; k < n; ++k)
        for (Index q = 0; q < n; ++q)
            out(q, k) = S(q, k) * g[static_cast<std::size_t>(buckets.index(q, k))];
    return out;
}

} // namespace

// ------------------------------ RedfieldGenerator -----------------------------

RedfieldGenerator::RedfieldGenerator(std::vector<BathChannel> channels, SpectrumDecomposition spec,
                                     bool frozen)
    : channels_(std::move(channels)), spec_(std::move(spec)), frozen_(frozen) {
    if (channels_.empty()) throw ModelError("RedfieldGenerator: no channels");
    for (const BathChannel& ch : channels_)
        if (ch.S.rows() != spec_.dim()) throw ModelError("RedfieldGenerator: dimension mismatch");
    if (frozen_) {
        const Index n = spec_.dim();
        h_coh_inf_ = Matrix::Zero(n, n);
        for (Index i = 0; i < n; ++i) h_coh_inf_(i, i) = spec_.eps(i);
        for (const BathChannel& ch : channels_) {
            conv_inf_.push_back(build_convolution(ch, spec_, bath::t_infinity).matrix);
            h_coh_inf_ += lamb_shift(ch.S, conv_inf_.back());
        }
    } else {
        buckets_ = build_splitting_buckets(spec_);
    }
}

Matrix RedfieldGenerator::convolution_fast(std::size_t channel, double t) const {
    return bucketed_convolution(channels_[channel].S, buckets_, channels_[channel].corr, t);
}

Matrix RedfieldGenerator::apply(const Matrix& rho, double t) const {
    if (frozen_) {
        Matrix out = coherent_commutator(h_coh_inf_, rho);
        for (std::size_t a = 0; a < channels_.size(); ++a)
            out += redfield_dissipator_apply(channels_[a].S, conv_inf_[a], rho);
        return out;
    }
    const Index n = spec_.dim();
    Matrix h = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) h(i, i) = spec_.eps(i);
    Matrix out = Matrix::Zero(n, n);
    for (std::size_t a = 0; a < channels_.size(); ++a) {
        const Matrix Sc = convolution_fast(a, t);
        h += lamb_shift(channels_[a].S, Sc);
        out += redfield_dissipator_apply(channels_[a].S, Sc, rho);
    }
    out += coherent_commutator(h, rho);
    return out;
}

Matrix RedfieldGenerator::superoperator(double t) const {
    return redfield_superoperator(channels_, spec_, frozen_ ? bath::t_infinity : t);
}

// -------------------------------- RwaGenerator --------------------------------

RwaGenerator::RwaGenerator(std::vector<BathChannel> channels, SpectrumDecomposition spec,
                           bool frozen)
    : channels_(std::move(channels)), spec_(std::move(spec)), frozen_(frozen) {
    if (channels_.empty()) throw ModelError("RwaGenerator: no channels");
    const Index n = spec_.dim();
    for (const BathChannel& ch : channels_)
        if (ch.S.rows() != n) throw ModelError("RwaGenerator: dimension mismatch");

    buckets_ = build_splitting_buckets(spec_);
    bucket_ops_.resize(channels_.size());
    bucket_ops_dd_.resize(channels_.size());
    for (std::size_t a = 0; a < channels_.size(); ++a) {
        bucket_ops_[a].assign(buckets_.omega.size(), Matrix::Zero(n, n));
        for (Index q = 0; q < n; ++q)
            for (Index k = 0; k < n; ++k)
                bucket_ops_[a][static_cast<std::size_t>(buckets_.index(q, k))](q, k) =
                    channels_[a].S(q, k);
        for (const Matrix& op : bucket_ops_[a])
            bucket_ops_dd_[a].push_back(op.adjoint() * op);
    }
}

LindbladForm RwaGenerator::form(double t) const {
    const Index n = spec_.dim();
    const double te = frozen_ ? bath::t_infinity : t;
    const bool infinite = std::isinf(te);

    LindbladForm f;
    f.h_coh = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) f.h_coh(i, i) = spec_.eps(i);

    std::vector<Complex> g_vals;
    for (std::size_t a = 0; a < channels_.size(); ++a) {
        channels_[a].corr.G_batch(buckets_.omega, te, g_vals);
        for (std::size_t b = 0; b < buckets_.omega.size(); ++b) {
            // at t = inf the rate uses the closed-form g with exact detailed balance
            const double g = infinite ? channels_[a].corr.g_exact(buckets_.omega[b])
                                      : g_vals[b].real();
            if (g < 0) negative_rate_seen_.store(true);
            f.h_coh += hbar * g_vals[b].imag() * bucket_ops_dd_[a][b];
            const double rate = 2.0 * g;
            if (rate == 0.0) continue;
            if (rate > 0.0) {
                f.jumps.push_back(std::sqrt(rate) * bucket_ops_[a][b]);
                f.rates.push_back(1.0);
            } else {
                // finite-time rates may go negative; kept explicit, never clamped
                f.jumps.push_back(bucket_ops_[a][b]);
                f.rates.push_back(rate);
            }
        }
    }
    return f;
}

Matrix RwaGenerator::apply(const Matrix& rho, double t) const {
    return form(t).apply(rho);
}

Matrix RwaGenerator::superoperator(double t) const { return form(t).superoperator(); }

// ----------------------------- TruncatedGenerator -----------------------------

TruncatedGenerator::TruncatedGenerator(std::vector<BathChannel> channels,
                                       SpectrumDecomposition spec, bool frozen)
    : channels_(std::move(channels)), spec_(std::move(spec)), frozen_(frozen) {
    if (channels_.empty()) throw ModelError("TruncatedGenerator: no channels");
    for (const BathChannel& ch : channels_)
        if (ch.S.rows() != spec_.dim()) throw ModelError("TruncatedGenerator: dimension mismatch");
    if (frozen_)
        form_inf_ = form(bath::t_infinity);
    else
        buckets_ = build_splitting_buckets(spec_);
}

TruncatedGenerator::TruncatedGenerator(std::vector<BathChannel> channels,
                                       SpectrumDecomposition spec, bool frozen,
                                       double fixed_lambda_sq, double fixed_phi)
    : channels_(std::move(channels)), spec_(std::move(spec)), frozen_(frozen), use_fixed_(true),
      fixed_lambda_sq_(fixed_lambda_sq), fixed_phi_(fixed_phi) {
    if (channels_.empty()) throw ModelError("TruncatedGenerator: no channels");
    if (frozen_)
        form_inf_ = form(bath::t_infinity);
    else
        buckets_ = build_splitting_buckets(spec_);
}

Matrix TruncatedGenerator::convolution_fast(std::size_t channel, double t) const {
    if (std::isinf(t) || buckets_.omega.empty())
        return build_convolution(channels_[channel], spec_, t).matrix;
    return bucketed_convolution(channels_[channel].S, buckets_, channels_[channel].corr, t);
}

LindbladForm TruncatedGenerator::form(double t) const {
    if (frozen_ && form_inf_.h_coh.size() > 0) return form_inf_;
    const Index n = spec_.dim();
    const double te = frozen_ ? bath::t_infinity : t;
    LindbladForm f;
    f.h_coh = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) f.h_coh(i, i) = spec_.eps(i);
    for (std::size_t a = 0; a < channels_.size(); ++a) {
        const BathChannel& ch = channels_[a];
        const Matrix Sc = convolution_fast(a, te);
        f.h_coh += lamb_shift(ch.S, Sc);
        const double nc = Sc.norm();
        if (!use_fixed_ && nc == 0.0) {
            // t = 0 limit: the optimized jump operator vanishes continuously
            f.jumps.push_back(Matrix::Zero(n, n));
            f.rates.push_back(1.0);
            continue;
        }
        double lam, phi;
        if (use_fixed_) {
            lam = fixed_lambda_sq_;
            phi = fixed_phi_;
        } else {
            lam = nc / ch.S.norm();
            const Complex overlap = (ch.S * Sc.adjoint()).trace();
            phi = std::asin(std::clamp(-overlap.imag() / (ch.S.norm() * nc), -1.0, 1.0));
        }
        f.jumps.push_back(decompose(ch.S, Sc, lam, phi).A_plus);
        f.rates.push_back(1.0);
    }
    return f;
}

std::vector<PseudoLindbladDecomposition> TruncatedGenerator::decompositions(double t) const {
    std::vector<PseudoLindbladDecomposition> out;
    const double te = frozen_ ? bath::t_infinity : t;
    for (const BathChannel& ch : channels_) {
        const Matrix Sc = build_convolution(ch, spec_, te).matrix;
        if (use_fixed_) {
            out.push_back(decompose(ch.S, Sc, fixed_lambda_sq_, fixed_phi_));
        } else {
            const OptimalParams p = optimal_params(ch.S, Sc);
            out.push_back(decompose(ch.S, Sc, p.lambda_sq, p.phi));
        }
    }
    return out;
}

Matrix TruncatedGenerator::apply(const Matrix& rho, double t) const {
    if (frozen_) return form_inf_.apply(rho);
    return form(t).apply(rho);
}

Matrix TruncatedGenerator::superoperator(double t) const {
    if (frozen_) return form_inf_.superoperator();
    return form(t).superoperator();
}

// ----------------------------- weight-ratio scaling ---------------------------

double relative_weight_prediction(double beta, double Ec, double var_delta) {
    const double x = bath::chi(beta * Ec);
    return (1.0 / 16.0 + 0.25 * x * x) * beta * beta * var_delta;
}

double splitting_variance(const Matrix& S_eig, const SpectrumDecomposition& spec) {
    if (S_eig.rows() != spec.dim()) throw ModelError("splitting_variance: dimension mismatch");
    const double total = S_eig.squaredNorm();
    if (total <= 0) throw ModelError("splitting_variance: coupling vanishes");
    double mean = 0.0, mean2 = 0.0;
    for (Index q = 0; q < spec.dim(); ++q)
        for (Index k = 0; k < spec.dim(); ++k) {
            const double w = std::norm(S_eig(q, k)) / total;
            const double d = spec.eps(q) - spec.eps(k);
            mean += w * d;
            mean2 += w * d * d;
        }
    return mean2 - mean * mean;
}

} // namespace oqs::dissipators
