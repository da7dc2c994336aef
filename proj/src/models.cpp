#include "oqs/models.hpp"

#include <cmath>

namespace oqs::models {

ManyBodyOperator make_operator(std::string basis_tag, Matrix m, bool hermitian) {
    if (m.rows() != m.cols()) throw ModelError("operator must be square");
    if (hermitian && !nearly_hermitian(m))
        throw ModelError("operator flagged Hermitian fails the Hermiticity check");
    return ManyBodyOperator{std::move(basis_tag), std::move(m), hermitian};
}

RealMatrix SpectrumDecomposition::splittings() const {
    const Index n = dim();
    RealMatrix d(n, n);
    for (Index q = 0; q < n; ++q)
        for (Index k = 0; k < n; ++k) d(q, k) = eps(q) - eps(k);
    return d;
}

ManyBodyOperator build_hubbard(const FermionBasis& basis, double hopping, double interaction) {
    const Index n = basis.dim();
    const int l = basis.sites;
    Matrix h = Matrix::Zero(n, n);

    for (Index j = 0; j < n; ++j) {
        const std::uint32_t s = basis.states[static_cast<std::size_t>(j)];
        double diag = 0.0;
        for (int i = 1; i < l; ++i) {
            const bool left = (s >> (i - 1)) & 1u;
            const bool right = (s >> i) & 1u;
            if (left && right) diag += interaction;
            if (left != right) {
                // adjacent hop; the Jordan-Wigner string cancels for nearest
                // neighbors in the ascending-site convention
                const std::uint32_t flipped = s ^ (3u << (i - 1));
                h(basis.index_of(flipped), j) += -hopping;
            }
        }
        h(j, j) += diag;
    }
    return make_operator("hubbard l=" + std::to_string(l) + " N=" + std::to_string(basis.particles),
                         std::move(h), true);
}

ManyBodyOperator build_hubbard(int sites, int particles, double hopping, double interaction) {
    return build_hubbard(build_fermion_basis(sites, particles), hopping, interaction);
}

ManyBodyOperator number_operator(int site, const FermionBasis& basis) {
    if (site < 1 || site > basis.sites)
        throw ModelError("number operator: site " + std::to_string(site) + " out of range 1.." +
                         std::to_string(basis.sites));
    const Index n = basis.dim();
    Matrix m = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j)
        if (basis.occupied(basis.states[static_cast<std::size_t>(j)], site)) m(j, j) = 1.0;
    return make_operator("n_" + std::to_string(site), std::move(m), true);
}

Matrix site_reflection(const FermionBasis& basis) {
    const Index n = basis.dim();
    const int l = basis.sites;
    Matrix r = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        const std::uint32_t s = basis.states[static_cast<std::size_t>(j)];
        std::uint32_t rev = 0;
        for (int i = 0; i < l; ++i)
            if ((s >> i) & 1u) rev |= 1u << (l - 1 - i);
        r(basis.index_of(rev), j) = 1.0;
    }
    return r;
}

OscillatorModel build_oscillator(double mass, double frequency, int fock_levels) {
    if (fock_levels < 2) throw ModelError("oscillator needs at least two Fock levels");
    if (mass <= 0 || frequency <= 0) throw ModelError("oscillator: mass and frequency must be > 0");

    const Index n = fock_levels;
    OscillatorModel m;
    m.mass = mass;
    m.frequency = frequency;
    m.fock_levels = fock_levels;
    m.a = Matrix::Zero(n, n);
    for (Index k = 1; k < n; ++k) m.a(k - 1, k) = std::sqrt(static_cast<double>(k));
    m.a_dag = m.a.adjoint();
    m.Q = std::sqrt(hbar / (2.0 * mass * frequency)) * (m.a + m.a_dag);
    m.P = imag_unit * std::sqrt(hbar * mass * frequency / 2.0) * (m.a_dag - m.a);
    m.coupling = (m.a + m.a_dag) / std::sqrt(2.0);

    Matrix h = hbar * frequency * (m.a_dag * m.a + 0.5 * Matrix::Identity(n, n));
    m.hamiltonian = make_operator("oscillator n_max=" + std::to_string(fock_levels),
                                  std::move(h), true);
    return m;
}

SpectrumDecomposition oscillator_spectrum(const OscillatorModel& model) {
    SpectrumDecomposition spec;
    const Index n = model.fock_levels;
    spec.eps = RealVector(n);
    for (Index k = 0; k < n; ++k) spec.eps(k) = hbar * model.frequency * (k + 0.5);
    spec.U = Matrix::Identity(n, n);
    return spec;
}

int min_fock_levels(double temperature, double frequency, double tol) {
    if (temperature <= 0 || frequency <= 0)
        throw ModelError("min_fock_levels: temperature and frequency must be > 0");
    const double x = hbar * frequency / temperature; // beta hbar Omega
    // Gibbs population of level n is (1 - e^-x) e^{-n x}
    const double p0 = 1.0 - std::exp(-x);
    int n = static_cast<int>(std::ceil(std::log(p0 / tol) / x)) + 1;
    return std::max(n, 2);
}

SpectrumDecomposition diagonalize(const ManyBodyOperator& op) {
    if (!op.hermitian || !nearly_hermitian(op.matrix))
        throw ModelError("diagonalize: operator is not flagged/verified Hermitian");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(op.matrix);
    if (solver.info() != Eigen::Success)
        throw NumericsError("diagonalize: eigensolver failed");

    SpectrumDecomposition spec;
    spec.eps = solver.eigenvalues();
    spec.U = solver.eigenvectors();

    const double scale = std::max(max_abs(op.matrix), 1e-300);
    const Matrix residual = op.matrix * spec.U - spec.U * spec.eps.asDiagonal().toDenseMatrix().cast<Complex>();
    if (max_abs(residual) > 1e-10 * scale)
        throw NumericsError("diagonalize: residual above tolerance");
    const Matrix ortho = spec.U.adjoint() * spec.U - Matrix::Identity(spec.dim(), spec.dim());
    if (max_abs(ortho) > 1e-10)
        throw NumericsError("diagonalize: eigenvectors not orthonormal");
    return spec;
}

ManyBodyOperator to_eigenbasis(const ManyBodyOperator& op, const SpectrumDecomposition& spec) {
    if (op.dim() != spec.dim())
        throw ModelError("to_eigenbasis: dimension mismatch");
    Matrix m = spec.U.adjoint() * op.matrix * spec.U;
    return ManyBodyOperator{op.basis_tag + " (eigenbasis)", std::move(m), op.hermitian};
}

} // namespace oqs::models
