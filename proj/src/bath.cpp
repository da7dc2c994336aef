#include "oqs/bath.hpp"

#include <algorithm>
#include <cmath>

namespace oqs::bath {

namespace {

// Digamma for complex z with Re z > 0: recurrence into the asymptotic region,
// then the Bernoulli series
Complex digamma(Complex z) {
    Complex shift(0.0, 0.0);
    while (z.real() < 16.0) {
        shift -= 1.0 / z;
        z += 1.0;
    }
    const Complex inv = 1.0 / z;
    const Complex inv2 = inv * inv;
    const Complex series =
        inv2 * (-1.0 / 12.0 +
                inv2 * (1.0 / 120.0 +
                        inv2 * (-1.0 / 252.0 +
                                inv2 * (1.0 / 240.0 +
                                        inv2 * (-1.0 / 132.0 +
                                                inv2 * (691.0 / 32760.0 + inv2 * (-1.0 / 12.0)))))));
    return shift + std::log(z) - 0.5 * inv + series;
}

} // namespace

void check_pole_collision(double beta, double Ec) {
    const double xi = beta * Ec;
    const long l = std::lround(xi / (2.0 * pi));
    if (l >= 1) {
        const double nearest = 2.0 * pi * static_cast<double>(l);
        if (std::abs(xi - nearest) < 1e-6 * nearest)
            throw NumericsError(
                "degenerate cutoff: beta*Ec = " + std::to_string(xi) +
                " collides with Matsubara frequency 2*pi*" + std::to_string(l) +
                "; perturb Ec (or the temperature) away from the pole");
    }
}

CorrelationFunction CorrelationFunction::drude_exp_sum(const DrudeSpectralDensity& jd, double beta,
                                                       double tol) {
    if (beta <= 0) throw ModelError("bath correlation: beta must be > 0");
    if (jd.gamma <= 0 || jd.Ec <= 0)
        throw ModelError("bath correlation: gamma and Ec must be > 0");
    if (tol <= 0 || tol > 1e-2) throw ModelError("bath correlation: tol out of range");
    check_pole_collision(beta, jd.Ec);

    CorrelationFunction c;
    c.kind_ = Kind::exp_sum;
    c.jd_ = jd;
    c.beta_ = beta;
    c.tol_ = tol;

    const double xi = beta * jd.Ec;
    const Complex drude_amp =
        0.5 * jd.gamma * jd.Ec * jd.Ec * Complex(1.0 / std::tan(0.5 * xi), -1.0);
    c.terms_.push_back({drude_amp, jd.Ec});

    // Matsubara poles are stored explicitly until they are well separated from
    // the Drude pole; the remaining tail is evaluated analytically in G().
    // Plain truncation converges only like 1/l^2 in Re G_inf, far too slow for
    // the requested tolerances, and C_0 itself diverges logarithmically.
    const int floor_l = tol < 1e-12 ? 96 : 48;
    int l = 0;
    while (true) {
        ++l;
        const double nu = 2.0 * pi * l / beta;
        const double denom = 1.0 - (nu / jd.Ec) * (nu / jd.Ec);
        const double amp = -(2.0 * jd.gamma / beta) * nu / denom;
        c.terms_.push_back({Complex(amp, 0.0), nu});
        if (nu >= 8.0 * jd.Ec && l >= floor_l) break;
        if (l >= 200000)
            throw NumericsError("bath correlation: Matsubara pole selection failed to converge");
    }
    return c;
}

CorrelationFunction CorrelationFunction::singular(double alpha) {
    CorrelationFunction c;
    c.kind_ = Kind::singular;
    c.alpha_ = alpha;
    return c;
}

// Exact tail of the t = inf transform beyond the stored Matsubara poles:
// sum_{l>L} a_l / (nu_l + i Delta) with a_l = (2 gamma/beta) nu_l Ec^2 / (nu_l^2 - Ec^2),
// reduced to digamma values by partial fractions (the 1/l pieces cancel).
Complex CorrelationFunction::tail_remainder(double delta) const {
    const double L = static_cast<double>(matsubara_count());
    const double gamma = scale_ * jd_.gamma;
    const double Ec = jd_.Ec;
    const Complex q(0.0, delta);
    const Complex A = 1.0 / (2.0 * (Ec + q));
    const Complex B = 1.0 / (2.0 * (q - Ec));
    const Complex Cc = q / (Ec * Ec - q * q);
    const double p_red = beta_ * Ec / (2.0 * pi);
    const Complex q_red = q * (beta_ / (2.0 * pi));
    const Complex psi_sum = A * digamma(Complex(L + 1.0 - p_red, 0.0)) +
                            B * digamma(Complex(L + 1.0 + p_red, 0.0)) +
                            Cc * digamma(Complex(L + 1.0) + q_red);
    return -(gamma * Ec * Ec / pi) * psi_sum;
}

// Decaying part of the tail, sum_{l>L} a_l exp(-(nu_l + i Delta) t) / (nu_l + i Delta),
// summed directly; only relevant for small t
Complex CorrelationFunction::tail_decay(double delta, double t) const {
    const int L = matsubara_count();
    const double gamma = scale_ * jd_.gamma;
    const double Ec2 = jd_.Ec * jd_.Ec;
    const double step = 2.0 * pi / beta_;
    if (static_cast<double>(L + 1) * step * t > 40.0) return Complex(0.0, 0.0);

    Complex sum(0.0, 0.0);
    const double eps = 1e-17 * (gamma / beta_ + 1e-300);
    for (int l = L + 1; l <= L + 2000000; ++l) {
        const double nu = step * l;
        const double a = (2.0 * gamma / beta_) * nu * Ec2 / (nu * nu - Ec2);
        const double damp = std::exp(-nu * t);
        const Complex term = a * damp * std::exp(Complex(0.0, -delta * t)) / Complex(nu, delta);
        sum += term;
        if (damp * a / nu < eps) break;
    }
    return sum;
}

Complex CorrelationFunction::G(double delta, double t) const {
    if (t < 0) throw ModelError("G_t: t must be >= 0 (or infinity)");
    if (kind_ == Kind::singular) return Complex(alpha_, 0.0);

    Complex g(0.0, 0.0);
    const bool infinite = std::isinf(t);
    if (t > 0) {
        for (const ExpTerm& term : terms_) {
            const Complex pole(term.rate, delta); // kappa + i Delta
            if (infinite)
                g += term.amplitude / pole;
            else
                g += term.amplitude * (1.0 - std::exp(-pole * t)) / pole;
        }
        g += tail_remainder(delta);
        if (!infinite) g -= tail_decay(delta, t);
    }
    if (subtract_damping_) {
        // potential renormalization: remove the damping-kernel constant from Im G
        const double h_damp = -0.5 * scale_ * jd_.gamma * jd_.Ec;
        const double s = infinite ? 1.0 : -std::expm1(-jd_.Ec * t);
        g -= imag_unit * (h_damp * s);
    }
    return g;
}

void CorrelationFunction::G_batch(const std::vector<double>& deltas, double t,
                                  std::vector<Complex>& out) const {
    out.resize(deltas.size());
    if (kind_ == Kind::singular) {
        std::fill(out.begin(), out.end(), Complex(alpha_, 0.0));
        return;
    }
    if (t < 0) throw ModelError("G_t: t must be >= 0 (or infinity)");
    const bool infinite = std::isinf(t);

    std::vector<double> decay;
    if (!infinite && t > 0) {
        decay.resize(terms_.size());
        for (std::size_t j = 0; j < terms_.size(); ++j)
            decay[j] = std::exp(-terms_[j].rate * t);
    }

    for (std::size_t d = 0; d < deltas.size(); ++d) {
        if (t == 0.0) {
            out[d] = Complex(0.0, 0.0);
            continue;
        }
        const double delta = deltas[d];
        Complex g(0.0, 0.0);
        if (infinite) {
            for (const ExpTerm& term : terms_) g += term.amplitude / Complex(term.rate, delta);
        } else {
            const Complex phase = std::exp(Complex(0.0, -delta * t));
            for (std::size_t j = 0; j < terms_.size(); ++j)
                g += terms_[j].amplitude * (1.0 - decay[j] * phase) /
                     Complex(terms_[j].rate, delta);
        }
        g += tail_remainder(delta);
        if (!infinite) g -= tail_decay(delta, t);
        if (subtract_damping_) {
            const double h_damp = -0.5 * scale_ * jd_.gamma * jd_.Ec;
            const double s = infinite ? 1.0 : -std::expm1(-jd_.Ec * t);
            g -= imag_unit * (h_damp * s);
        }
        out[d] = g;
    }
}

Complex CorrelationFunction::C(double tau) const {
    if (kind_ != Kind::exp_sum)
        throw ModelError("C_tau: only defined for the exponential-sum form");
    if (tau < 0) throw ModelError("C_tau: tau must be >= 0");
    if (tau == 0.0)
        throw ModelError("C_tau: C_0 diverges logarithmically for a Drude bath");
    Complex c(0.0, 0.0);
    for (const ExpTerm& term : terms_) c += term.amplitude * std::exp(-term.rate * tau);

    // Matsubara tail beyond the stored poles: with a_l = (2 gamma/beta) nu Ec^2/(nu^2 - Ec^2)
    // split off the 1/nu part, whose geometric-log sum is exact at any tau,
    // and sum the remaining 1/nu^3 part directly
    const double step = 2.0 * pi / beta_;
    const int L = matsubara_count();
    const double gamma = scale_ * jd_.gamma;
    const double Ec2 = jd_.Ec * jd_.Ec;
    const double x = std::exp(-step * tau);

    double partial = 0.0;
    double xl = 1.0;
    for (int l = 1; l <= L; ++l) {
        xl *= x;
        partial += xl / l;
    }
    const double log_sum = -std::log1p(-x); // sum_{l>=1} x^l / l
    c += (2.0 * gamma / beta_) * Ec2 * (beta_ / (2.0 * pi)) * (log_sum - partial);

    double cubic = 0.0;
    double xl2 = xl;
    for (int l = L + 1; l <= L + 1000000; ++l) {
        xl2 *= x;
        const double nu = step * l;
        const double term = Ec2 * Ec2 / (nu * (nu * nu - Ec2)) * xl2;
        cubic += term;
        if (std::abs(term) < 1e-17 * (std::abs(cubic) + 1.0)) break;
    }
    c += (2.0 * gamma / beta_) * cubic;
    return c;
}

double CorrelationFunction::g_exact(double delta) const {
    if (kind_ == Kind::singular) return alpha_;
    return scale_ * g_inf(delta, jd_, beta_);
}

CorrelationFunction CorrelationFunction::scaled(double factor) const {
    CorrelationFunction c = *this;
    c.scale_ *= factor;
    c.alpha_ *= factor;
    for (ExpTerm& term : c.terms_) term.amplitude *= factor;
    return c;
}

double g_inf(double delta, const DrudeSpectralDensity& jd, double beta) {
    if (beta <= 0) throw ModelError("g_inf: beta must be > 0");
    const double x = beta * delta;
    const double j_over_delta = jd.gamma / (1.0 + (delta / jd.Ec) * (delta / jd.Ec));
    if (std::abs(x) < 1e-6) {
        // series of x/(e^x - 1) around x = 0 to avoid 0/0
        return j_over_delta / (beta * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0));
    }
    return j_over_delta * delta / std::expm1(x);
}

HInfParts h_inf_parts(double delta, const DrudeSpectralDensity& jd, double beta, int l_max) {
    if (beta <= 0) throw ModelError("h_inf_parts: beta must be > 0");
    check_pole_collision(beta, jd.Ec);

    const double Ec2 = jd.Ec * jd.Ec;
    const double d2 = delta * delta;
    HInfParts parts;
    parts.damping_kernel = -0.5 * jd.gamma * jd.Ec;
    parts.vacuum = 0.5 * jd.gamma * d2 * jd.Ec / (Ec2 + d2);

    const double xi = beta * jd.Ec;
    double bracket = -Ec2 / (2.0 * (Ec2 + d2)) / std::tan(0.5 * xi);
    double series = 0.0;
    const int cap = l_max > 0 ? l_max : 2000000;
    for (int l = 1; l <= cap; ++l) {
        const double nu = 2.0 * pi * l / beta;
        const double term = nu / ((d2 + nu * nu) * (1.0 - nu * nu / Ec2));
        series += term;
        if (l_max <= 0 && nu * nu > 4.0 * std::max(Ec2, d2) &&
            std::abs(term) < 1e-15 * (std::abs(series) + std::abs(bracket) + 1e-300))
            break;
    }
    bracket += (2.0 / beta) * series;
    parts.thermal = delta * jd.gamma * bracket;
    return parts;
}

double chi(double xi) {
    if (xi <= 0) throw ModelError("chi: xi must be > 0");
    {
        const long l = std::lround(xi / (2.0 * pi));
        if (l >= 1 && std::abs(xi - 2.0 * pi * l) < 1e-6 * (2.0 * pi * l))
            throw NumericsError("chi: xi collides with a Matsubara frequency 2*pi*l");
    }
    // chi = cot(xi/2)/2 + (xi^2/pi) sum_l 1/( l ((2 pi l)^2 - xi^2) );
    // the sign of the sum is fixed by the h_inf thermal-part limit
    double value = 0.5 / std::tan(0.5 * xi);
    const double pref = xi * xi / pi;
    double partial = 0.0;
    long l = 1;
    for (; l < 10000000; ++l) {
        const double tl = 1.0 / (l * (4.0 * pi * pi * l * l - xi * xi));
        partial += tl;
        if (4.0 * pi * pi * l * l > 2.0 * xi * xi &&
            std::abs(tl) < 1e-12 * (std::abs(partial) + 1e-300))
            break;
    }
    // integral tail of 1/(4 pi^2 l^3)
    const double tail = 1.0 / (8.0 * pi * pi * static_cast<double>(l) * l);
    return value + pref * (partial + tail);
}

} // namespace oqs::bath
