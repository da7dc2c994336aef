// oracles.hpp — Independent reference computations used only by the tests:
// adaptive Gauss-Kronrod quadrature, a full-Fock-space Jordan-Wigner chain
// build, the four-index Redfield action, and a Pauli rate-equation solver.

#pragma once

#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "oqs/bath.hpp"
#include "oqs/models.hpp"
#include "oqs/types.hpp"

namespace oracles {

using oqs::Complex;
using oqs::Index;
using oqs::Matrix;
using oqs::RealVector;
using oqs::Vector;

// ------------------------- adaptive Gauss-Kronrod (G7, K15) -------------------

namespace gk {

inline constexpr double nodes[8] = {
    0.0,
    0.2077849550078985,
    0.4058451513773972,
    0.5860872354676911,
    0.7415311855993945,
    0.8648644233597691,
    0.9491079123427585,
    0.9914553711208126,
};
inline constexpr double wk[8] = {
    0.2094821410847278, 0.2044329400752989, 0.1903505780647854, 0.1690047266392679,
    0.1406532597155259, 0.1047900103222502, 0.0630920926299785, 0.0229353220105292,
};
// Gauss-7 weights on nodes 0, 2, 4, 6
inline constexpr double wg[4] = {
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892767,
    0.1294849661688697,
};

template <typename F>
void panel(const F& f, double a, double b, Complex& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Complex fk[8][2];
    for (int i = 0; i < 8; ++i) {
        fk[i][0] = f(c - h * nodes[i]);
        fk[i][1] = f(c + h * nodes[i]);
    }
    Complex k15 = wk[0] * fk[0][0];
    Complex g7 = wg[0] * fk[0][0];
    for (int i = 1; i < 8; ++i) k15 += wk[i] * (fk[i][0] + fk[i][1]);
    for (int i = 1; i < 4; ++i) g7 += wg[i] * (fk[2 * i][0] + fk[2 * i][1]);
    kronrod = h * k15;
    err = std::abs(h * (k15 - g7));
}

} // namespace gk

// Adaptive bisection quadrature of a complex integrand on [a, b]
template <typename F>
Complex integrate(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    struct Segment {
        double a, b;
        int depth;
    };
    std::vector<Segment> stack{{a, b, 0}};
    Complex total(0.0, 0.0);
    while (!stack.empty()) {
        const Segment s = stack.back();
        stack.pop_back();
        Complex value;
        double err;
        gk::panel(f, s.a, s.b, value, err);
        if (err < tol * std::max(1.0, (s.b - s.a) / (b - a)) || s.depth >= max_depth) {
            total += value;
        } else {
            const double m = 0.5 * (s.a + s.b);
            stack.push_back({s.a, m, s.depth + 1});
            stack.push_back({m, s.b, s.depth + 1});
        }
    }
    return total;
}

// ------------------ full-Fock-space Jordan-Wigner chain build -----------------

inline Matrix kron(const Matrix& a, const Matrix& b) { return oqs::kron(a, b); }

// c_i = Z^(i-1) ⊗ c ⊗ 1 with site 1 the least significant factor
inline Matrix full_space_annihilator(int site, int sites) {
    Matrix c(2, 2), z(2, 2), id(2, 2);
    c << 0, 1, 0, 0;
    z << 1, 0, 0, -1;
    id.setIdentity();
    Matrix op(1, 1);
    op.setOnes();
    for (int j = 1; j <= sites; ++j) {
        const Matrix& factor = (j < site) ? z : (j == site ? c : id);
        op = kron(factor, op); // higher sites are more significant
    }
    return op;
}

// Extended Hubbard chain assembled from explicit occupation-number algebra in
// the full 2^l space, then projected onto the N-particle sector (ascending
// pattern order, matching FermionBasis)
inline Matrix full_space_hubbard(int sites, int particles, double hopping, double interaction) {
    const Index full = Index(1) << sites;
    Matrix h = Matrix::Zero(full, full);
    std::vector<Matrix> cs, ns;
    for (int i = 1; i <= sites; ++i) {
        cs.push_back(full_space_annihilator(i, sites));
        ns.push_back(cs.back().adjoint() * cs.back());
    }
    for (int i = 0; i + 1 < sites; ++i) {
        h += -hopping * (cs[i].adjoint() * cs[i + 1] + cs[i + 1].adjoint() * cs[i]);
        h += interaction * ns[i] * ns[i + 1];
    }
    std::vector<Index> sector;
    for (Index s = 0; s < full; ++s)
        if (std::popcount(static_cast<std::uint32_t>(s)) == particles) sector.push_back(s);
    Matrix out(sector.size(), sector.size());
    for (std::size_t r = 0; r < sector.size(); ++r)
        for (std::size_t c2 = 0; c2 < sector.size(); ++c2)
            out(static_cast<Index>(r), static_cast<Index>(c2)) = h(sector[r], sector[c2]);
    return out;
}

// --------------------- four-index Redfield action (explicit) ------------------

// Direct element-wise evaluation of the Redfield generator in the eigenbasis,
// with explicit G(Delta) calls for every index pair
inline Matrix redfield_apply_four_index(const Matrix& S, const RealVector& eps,
                                        const oqs::bath::CorrelationFunction& corr, double t,
                                        const Matrix& rho) {
    const Index n = S.rows();
    Matrix sconv(n, n);
    for (Index q = 0; q < n; ++q)
        for (Index k = 0; k < n; ++k) sconv(q, k) = S(q, k) * corr.G(eps(q) - eps(k), t);

    Matrix out = Matrix::Zero(n, n);
    // coherent part: -i [H_S + H_LS, rho] with H_LS = (S† Sconv - Sconv† S)/2i
    Matrix h = Matrix::Zero(n, n);
    for (Index a = 0; a < n; ++a) {
        h(a, a) += eps(a);
        for (Index b = 0; b < n; ++b)
            for (Index c = 0; c < n; ++c)
                h(a, b) += (std::conj(S(c, a)) * sconv(c, b) -
                            std::conj(sconv(c, a)) * S(c, b)) /
                           (2.0 * oqs::imag_unit);
    }
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) {
            Complex v(0.0, 0.0);
            for (Index c = 0; c < n; ++c) v += h(a, c) * rho(c, b) - rho(a, c) * h(c, b);
            out(a, b) += -oqs::imag_unit * v;
        }

    // dissipator: S rho Sconv† + Sconv rho S† - {S† Sconv + Sconv† S, rho}/2
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) {
            Complex v(0.0, 0.0);
            for (Index c = 0; c < n; ++c)
                for (Index d = 0; d < n; ++d) {
                    v += S(a, c) * rho(c, d) * std::conj(sconv(b, d));
                    v += sconv(a, c) * rho(c, d) * std::conj(S(b, d));
                }
            out(a, b) += v;
        }
    Matrix anti = Matrix::Zero(n, n);
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b)
            for (Index c = 0; c < n; ++c)
                anti(a, b) += std::conj(S(c, a)) * sconv(c, b) + std::conj(sconv(c, a)) * S(c, b);
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) {
            Complex v(0.0, 0.0);
            for (Index c = 0; c < n; ++c) v += anti(a, c) * rho(c, b) + rho(a, c) * anti(c, b);
            out(a, b) += -0.5 * v;
        }
    return out;
}

// -------------------------- Pauli rate-equation oracle ------------------------

// Population dynamics of the secular generator on a nondegenerate spectrum:
// dp_q/dt = sum_k [W_qk p_k - W_kq p_q], W_qk = 2 g(eps_q - eps_k) |S_qk|^2
struct PauliRates {
    Eigen::MatrixXd W;

    static PauliRates build(const Matrix& S, const RealVector& eps,
                            const std::function<double(double)>& g) {
        const Index n = S.rows();
        PauliRates pr;
        pr.W = Eigen::MatrixXd::Zero(n, n);
        for (Index q = 0; q < n; ++q)
            for (Index k = 0; k < n; ++k)
                if (q != k) pr.W(q, k) = 2.0 * g(eps(q) - eps(k)) * std::norm(S(q, k));
        return pr;
    }

    RealVector derivative(const RealVector& p) const {
        const Index n = W.rows();
        RealVector dp = RealVector::Zero(n);
        for (Index q = 0; q < n; ++q)
            for (Index k = 0; k < n; ++k) {
                if (q == k) continue;
                dp(q) += W(q, k) * p(k) - W(k, q) * p(q);
            }
        return dp;
    }

    // fixed-step RK4, accurate enough as an oracle for smooth rate equations
    RealVector propagate(RealVector p, double t, int steps = 20000) const {
        const double h = t / steps;
        for (int s = 0; s < steps; ++s) {
            const RealVector k1 = derivative(p);
            const RealVector k2 = derivative(p + 0.5 * h * k1);
            const RealVector k3 = derivative(p + 0.5 * h * k2);
            const RealVector k4 = derivative(p + h * k3);
            p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return p;
    }
};

// ------------------------- 2-D grid search for (lambda^2, phi) ----------------

// Brute-force minimization of ||A-||^2 by explicit jump-operator construction
// on a log-spaced lambda^2 grid and a uniform phi grid
struct GridSearchResult {
    double lambda_sq{0.0};
    double phi{0.0};
    double w_minus{0.0};
    double lambda_step_factor{1.0}; // multiplicative grid spacing
    double phi_step{0.0};
};

inline GridSearchResult grid_search_min_wminus(const Matrix& S, const Matrix& Sconv,
                                               double lam_lo = 0.01, double lam_hi = 100.0,
                                               int n_lam = 201, double phi_lo = -1.5,
                                               double phi_hi = 1.5, int n_phi = 201) {
    GridSearchResult best;
    best.w_minus = std::numeric_limits<double>::infinity();
    best.lambda_step_factor = std::pow(lam_hi / lam_lo, 1.0 / (n_lam - 1));
    best.phi_step = (phi_hi - phi_lo) / (n_phi - 1);
    for (int i = 0; i < n_lam; ++i) {
        const double lam = lam_lo * std::pow(lam_hi / lam_lo, double(i) / (n_lam - 1));
        const Complex sqrt_lam = std::sqrt(Complex(lam, 0.0));
        for (int j = 0; j < n_phi; ++j) {
            const double phi = phi_lo + j * best.phi_step;
            const Complex lam_m = sqrt_lam * std::exp(Complex(0.0, 0.5 * phi));
            const Matrix a_minus =
                (lam_m * S - Sconv / lam_m) / std::sqrt(2.0 * std::cos(phi));
            const double w = a_minus.squaredNorm();
            if (w < best.w_minus) {
                best.w_minus = w;
                best.lambda_sq = lam;
                best.phi = phi;
            }
        }
    }
    return best;
}

// ------------------------------ random matrices -------------------------------

inline Matrix random_matrix(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = Complex(dist(rng), dist(rng));
    return m;
}

inline Matrix random_hermitian(Index n, std::mt19937_64& rng) {
    const Matrix m = random_matrix(n, rng);
    return 0.5 * (m + m.adjoint());
}

inline Matrix random_density(Index n, std::mt19937_64& rng) {
    const Matrix m = random_matrix(n, rng);
    Matrix rho = m * m.adjoint();
    rho /= rho.trace();
    return rho;
}

} // namespace oracles
