#include "oqs/evolve.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "oqs/integrate.hpp"

namespace oqs::evolve {

SimulationRecord propagate(const Generator& gen, const Matrix& rho0,
                           const std::vector<double>& t_grid, double rtol, double atol,
                           std::string kind) {
    if (t_grid.empty()) throw ModelError("propagate: empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1])
            throw ModelError("propagate: time grid must be strictly increasing");
    if (t_grid.front() < 0) throw ModelError("propagate: negative start time");
    if (!nearly_hermitian(rho0, 1e-10))
        throw ModelError("propagate: initial state is not Hermitian");
    if (std::abs(rho0.trace().real() - 1.0) > 1e-10 || std::abs(rho0.trace().imag()) > 1e-10)
        throw ModelError("propagate: initial state must have unit trace");

    SimulationRecord rec;
    rec.generator_kind = std::move(kind);
    const auto rhs = [&gen](double t, const Matrix& rho) { return gen.apply(rho, t); };

    integrate::StepControl ctrl;
    ctrl.rtol = rtol;
    ctrl.atol = atol;

    Matrix rho = rho0;
    double t = t_grid.front();
    if (t > 0) rho = integrate::integrate_adaptive(rhs, rho, 0.0, t, ctrl);
    rec.times.push_back(t);
    rec.states.push_back(rho);

    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        rho = integrate::integrate_adaptive(rhs, rho, t, t_grid[i], ctrl);
        t = t_grid[i];
        const Complex tr = rho.trace();
        if (std::abs(tr - Complex(1.0, 0.0)) > 1e-8)
            throw NumericsError("propagate: trace drift above 1e-8 at t = " + std::to_string(t));
        rec.times.push_back(t);
        rec.states.push_back(rho);
    }
    return rec;
}

SteadyStateResult steady_state(const Generator& gen) {
    const Index n = gen.dim();
    const Index n2 = n * n;
    const Matrix L = gen.superoperator(bath::t_infinity);
    const double l_scale = std::max(max_abs(L), 1e-300);

    const auto solve_with_row = [&](Index row) {
        Matrix A = L;
        Vector b = Vector::Zero(n2);
        A.row(row).setZero();
        for (Index i = 0; i < n; ++i) A(row, i * n + i) = 1.0;
        b(row) = 1.0;
        Eigen::PartialPivLU<Matrix> lu(A);
        const Vector x = lu.solve(b);
        return hermitize(unvectorize(x, n));
    };

    // the row for a diagonal element is replaced by the trace-1 constraint
    Matrix rho = solve_with_row(0);

    const double residual = (L * vectorize(rho)).cwiseAbs().maxCoeff() / l_scale;
    if (!(residual <= 1e-10))
        throw NumericsError("steady_state: residual " + std::to_string(residual) +
                            " above 1e-10 of the generator scale");

    if (n2 <= 400) {
        // uniqueness via the second-smallest singular value of the generator
        Eigen::JacobiSVD<Matrix> svd(L);
        const auto& sv = svd.singularValues();
        if (sv(n2 - 2) <= 1e-8 * sv(0))
            throw NumericsError("steady_state: generator kernel is degenerate");
    } else {
        const Matrix rho2 = solve_with_row(n + 1);
        if (trace_distance(rho, rho2) > 1e-8)
            throw NumericsError("steady_state: solutions from two constraint rows disagree");
    }

    SteadyStateResult out;
    out.rho = rho;
    out.residual = residual;
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    out.negative_flag = out.min_eigenvalue < -1e-10;
    return out;
}

double trace_distance(const Matrix& rho1, const Matrix& rho2) {
    if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols())
        throw ModelError("trace_distance: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho1 - rho2), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double time_averaged_distance(const SimulationRecord& a, const SimulationRecord& b, double tau) {
    if (a.times.size() != b.times.size())
        throw ModelError("time_averaged_distance: records have different grids");
    for (std::size_t i = 0; i < a.times.size(); ++i)
        if (std::abs(a.times[i] - b.times[i]) > 1e-9)
            throw ModelError("time_averaged_distance: records have different grids");
    if (a.times.empty() || a.times.back() < tau - 1e-9)
        throw ModelError("time_averaged_distance: grid shorter than the averaging window");

    double integral = 0.0;
    double covered = 0.0;
    double d_prev = trace_distance(a.states[0], b.states[0]);
    for (std::size_t i = 1; i < a.times.size() && covered < tau - 1e-12; ++i) {
        const double dt = std::min(a.times[i], tau) - a.times[i - 1];
        const double d_next = trace_distance(a.states[i], b.states[i]);
        integral += 0.5 * (d_prev + d_next) * dt;
        covered += dt;
        d_prev = d_next;
    }
    return integral / tau;
}

Matrix gibbs_state(const SpectrumDecomposition& spec, double beta) {
    const Index n = spec.dim();
    RealVector w(n);
    for (Index i = 0; i < n; ++i) w(i) = std::exp(-beta * (spec.eps(i) - spec.eps(0)));
    w /= w.sum();
    Matrix rho = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) rho(i, i) = w(i);
    return rho;
}

Vector ground_state(const SpectrumDecomposition& spec) {
    Vector psi = Vector::Zero(spec.dim());
    psi(0) = 1.0;
    return psi;
}

Vector ground_plus_first(const SpectrumDecomposition& spec) {
    if (spec.dim() < 2) throw ModelError("ground_plus_first: need at least two levels");
    Vector psi = Vector::Zero(spec.dim());
    psi(0) = 1.0 / std::sqrt(2.0);
    psi(1) = 1.0 / std::sqrt(2.0);
    return psi;
}

Matrix pure_density(const Vector& psi) {
    const double nrm = psi.norm();
    if (nrm <= 0) throw ModelError("pure_density: zero state");
    const Vector p = psi / nrm;
    return p * p.adjoint();
}

ChainObservables make_chain_observables(const FermionBasis& basis,
                                        const SpectrumDecomposition& spec) {
    ChainObservables obs;
    obs.sites = basis.sites;
    const Index n = spec.dim();
    obs.imbalance_eig = Matrix::Zero(n, n);
    const int l = basis.sites;
    for (int i = 1; i <= l; ++i) {
        const models::ManyBodyOperator ni = models::number_operator(i, basis);
        obs.n_eig.push_back(spec.U.adjoint() * ni.matrix * spec.U);
        // left half 2i < l+1, right half 2i > l+1; the middle site of an odd
        // chain belongs to neither
        if (2 * i < l + 1)
            obs.imbalance_eig += obs.n_eig.back();
        else if (2 * i > l + 1)
            obs.imbalance_eig -= obs.n_eig.back();
    }
    return obs;
}

Observables observables(const Matrix& rho_eig, const ChainObservables& chain) {
    const int l = chain.sites;
    Observables out;
    out.site_occupation = RealVector(l);
    for (int i = 0; i < l; ++i)
        out.site_occupation(i) = (rho_eig * chain.n_eig[static_cast<std::size_t>(i)]).trace().real();

    out.n_left = 0.0;
    out.n_right = 0.0;
    for (int i = 1; i <= l; ++i) {
        if (2 * i < l + 1) out.n_left += out.site_occupation(i - 1);
        if (2 * i > l + 1) out.n_right += out.site_occupation(i - 1);
    }
    out.imbalance = out.n_left - out.n_right;

    const Index n = rho_eig.rows();
    out.populations = RealVector(n);
    for (Index i = 0; i < n; ++i) out.populations(i) = rho_eig(i, i).real();
    double mc = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j) mc = std::max(mc, std::abs(rho_eig(i, j)));
    out.max_coherence = mc;
    return out;
}

} // namespace oqs::evolve
