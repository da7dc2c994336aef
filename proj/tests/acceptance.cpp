// acceptance.cpp — End-to-end acceptance suite. Each criterion runs at its
// stated tolerance and prints one pass/fail line; the exit code is the number
// of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oqs/version.hpp"

#include "oqs/bath.hpp"
#include "oqs/cli.hpp"
#include "oqs/dissipators.hpp"
#include "oqs/evolve.hpp"
#include "oqs/models.hpp"
#include "oqs/trajectories.hpp"
#include "oracles.hpp"

using namespace oqs;
using namespace oqs::models;
using namespace oqs::bath;
using namespace oqs::dissipators;
using namespace oqs::evolve;
using namespace oqs::trajectories;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int index, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] %2d. %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

void info(const std::string& text) { std::printf("       %s\n", text.c_str()); }

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return std::string(buf);
}

struct HubbardSystem {
    FermionBasis basis;
    ManyBodyOperator h;
    SpectrumDecomposition spec;

    HubbardSystem(int l, int N, double V = 2.0)
        : basis(build_fermion_basis(l, N)), h(build_hubbard(basis, 1.0, V)),
          spec(diagonalize(h)) {}

    BathChannel channel(int site, double gamma, double Ec, double T) const {
        return make_channel(number_operator(site, basis), spec,
                            CorrelationFunction::drude_exp_sum({gamma, Ec}, 1.0 / T),
                            "n_" + std::to_string(site));
    }
};

std::vector<double> linear_grid(double t_max, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(t_max * i / (n - 1));
    return g;
}

// ------------------------------- criterion 1 ----------------------------------

void criterion_1() {
    Timer timer;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> lam_dist(std::log(0.01), std::log(100.0));
    std::uniform_real_distribution<double> phi_dist(-1.4, 1.4);

    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const Index n = 2 + static_cast<Index>(rng() % 7);
        Matrix S = oracles::random_hermitian(n, rng);
        S /= S.norm();
        const Matrix Sconv = oracles::random_matrix(n, rng);
        const double lam = std::exp(lam_dist(rng));
        const double phi = phi_dist(rng);
        const PseudoLindbladDecomposition dec = decompose(S, Sconv, lam, phi);

        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < n; ++b) {
                Matrix unit = Matrix::Zero(n, n);
                unit(a, b) = 1.0;
                const Matrix lhs = pseudo_lindblad_apply(dec, unit);
                const Matrix rhs = redfield_dissipator_apply(S, Sconv, unit);
                const double scale = std::max(1.0, max_abs(rhs));
                worst = std::max(worst, max_abs(Matrix(lhs - rhs)) / scale);
            }
    }
    report(1, "pseudo-Lindblad decomposition identity", worst <= 1e-12,
           fmt("max relative deviation %.2e over 200 instances (tolerance 1e-12)", worst),
           timer.seconds());
}

// ------------------------------- criterion 2 ----------------------------------

void criterion_2() {
    Timer timer;
    std::mt19937_64 rng(202);
    bool in_cell = true;
    bool never_better = true;
    double worst_cell = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const Index n = 2 + static_cast<Index>(rng() % 7);
        Matrix S = oracles::random_hermitian(n, rng);
        S /= S.norm();
        Matrix Sconv = oracles::random_matrix(n, rng);
        Sconv *= std::pow(10.0, -1.0 + 2.0 * (double(rng() % 1000) / 999.0)) / Sconv.norm();
        // physically admissible filters have g_bar = Re tr(S Sconv†) > 0
        if ((S * Sconv.adjoint()).trace().real() < 0) Sconv = -Sconv;

        const OptimalParams opt = optimal_params(S, Sconv);
        const auto grid = oracles::grid_search_min_wminus(S, Sconv);
        const double lam_cells =
            std::abs(std::log(opt.lambda_sq / grid.lambda_sq)) /
            std::log(grid.lambda_step_factor);
        const double phi_cells = std::abs(opt.phi - grid.phi) / grid.phi_step;
        worst_cell = std::max({worst_cell, lam_cells, phi_cells});
        if (lam_cells > 1.0001 || phi_cells > 1.0001) in_cell = false;

        const PseudoLindbladDecomposition base = decompose(S, Sconv, opt.lambda_sq, opt.phi);
        for (double factor : {0.95, 1.05}) {
            const auto d_lam = decompose(S, Sconv, opt.lambda_sq * factor, opt.phi);
            const auto d_phi = decompose(S, Sconv, opt.lambda_sq, opt.phi * factor);
            for (const auto& d : {d_lam, d_phi}) {
                if (d.w_minus < base.w_minus * (1.0 - 1e-12)) never_better = false;
                if (d.w_minus / d.w_plus < base.w_minus / base.w_plus * (1.0 - 1e-12))
                    never_better = false;
            }
        }
    }
    report(2, "closed-form optimum vs 2-D grid search", in_cell && never_better,
           fmt("worst grid offset %.2f cells; perturbations never improve: %s", worst_cell,
               never_better ? "yes" : "no"),
           timer.seconds());
}

// ------------------------------- criterion 3 ----------------------------------

void criterion_3() {
    Timer timer;
    const HubbardSystem sys(5, 2);
    const double Ec = 17.0, gamma = 0.1;
    const Matrix S_eig = sys.spec.U.adjoint() * number_operator(1, sys.basis).matrix * sys.spec.U;
    const double vd = splitting_variance(S_eig, sys.spec);

    const auto exact_ratio = [&](double beta, double Ec_run) {
        const BathChannel ch = sys.channel(1, gamma, Ec_run, 1.0 / beta);
        const Matrix Sc = build_convolution(ch, sys.spec, t_infinity).matrix;
        const OptimalParams p = optimal_params(ch.S, Sc);
        const auto dec = decompose(ch.S, Sc, p.lambda_sq, p.phi);
        return dec.w_minus / dec.w_plus;
    };

    // log-log slope of the exact ratio across beta in [1e-3, 1e-2] at fixed Ec
    std::vector<double> betas, ratios;
    for (int i = 0; i < 7; ++i) {
        betas.push_back(1e-3 * std::pow(10.0, i / 6.0));
        ratios.push_back(exact_ratio(betas.back(), Ec));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const double x = std::log(betas[i]);
        const double y = std::log(ratios[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = static_cast<double>(betas.size());
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const bool slope_ok = std::abs(slope - 2.0) <= 0.05;

    // printed high-temperature formula at beta = 1e-2
    const double beta_ref = 1e-2;
    const double exact = exact_ratio(beta_ref, Ec);
    const double x = chi(beta_ref * Ec);
    const double printed = (1.0 / 16.0 + 0.5 * x * x) * beta_ref * beta_ref * vd;
    const double printed_dev = std::abs(printed / exact - 1.0);
    const bool formula_ok = printed_dev <= 0.05;

    report(3, "weight-ratio high-temperature scaling", slope_ok && formula_ok,
           fmt("slope %.3f (want 2.00±0.05); [1/16+chi^2/2] prediction off by %.0f%% "
               "(want <=5%%)",
               slope, 100.0 * printed_dev),
           timer.seconds());

    // diagnostics: the quadratic law holds in the joint limit the expansion is
    // derived in (Ec ∝ 1/beta at fixed xi), and the weight-display expansion
    // carries chi^2/4, which does match the exact ratio
    const double xi = beta_ref * Ec;
    const double r1 = exact_ratio(1e-3, xi / 1e-3);
    const double r2 = exact_ratio(1e-2, xi / 1e-2);
    info(fmt("fixed-xi slope: %.4f; chi^2/4 prediction off by %.1f%%; exact ratio %.4e",
             std::log(r2 / r1) / std::log(10.0),
             100.0 * std::abs(relative_weight_prediction(beta_ref, Ec, vd) / exact - 1.0),
             exact));
}

// ------------------------------- criterion 4 ----------------------------------

void criterion_4() {
    Timer timer;
    const double gamma = 0.1, Ec = 17.0, beta = 0.2;
    const CorrelationFunction corr = CorrelationFunction::drude_exp_sum({gamma, Ec}, beta);
    const DrudeSpectralDensity jd{gamma, Ec};

    double worst_g = 0.0;
    // the finite-time integral is taken to t; the long-time one is truncated at
    // 40 bath correlation times, where every stored pole has fully decayed
    const double t_max_eff = 40.0 * std::max(1.0 / Ec, beta / (2.0 * pi));
    int points = 0;
    for (double d : {-4.0, -1.5, 0.0, 0.8, 3.0}) {
        for (double t : {0.3, 1.0, 5.0, t_infinity}) {
            const Complex quad = oracles::integrate(
                [&](double tau) { return corr.C(tau) * std::exp(Complex(0.0, -d * tau)); }, 0.0,
                std::isinf(t) ? t_max_eff : t, 1e-12);
            const Complex val = corr.G(d, t);
            worst_g = std::max(worst_g, std::abs(val - quad));
            ++points;
        }
    }

    double worst_kms = 0.0;
    for (double d : {0.4, 1.0, 2.5, 6.0, 11.0}) {
        const double lhs = g_inf(-d, jd, beta);
        const double rhs = std::exp(beta * d) * g_inf(d, jd, beta);
        worst_kms = std::max(worst_kms, std::abs(lhs / rhs - 1.0));
    }

    report(4, "bath transform vs quadrature and detailed balance",
           worst_g <= 1e-6 && worst_kms <= 1e-12,
           fmt("max |G - quadrature| %.2e over %d points (tol 1e-6); KMS deviation %.2e "
               "(tol 1e-12)",
               worst_g, points, worst_kms),
           timer.seconds());
}

// ------------------------------- criterion 5 ----------------------------------

void criterion_5() {
    Timer timer;
    const HubbardSystem sys(5, 2);
    const double T = 5.0;
    const RwaGenerator rwa({sys.channel(1, 0.1, 17.0, T)}, sys.spec, true);
    const double dist = trace_distance(steady_state(rwa).rho, gibbs_state(sys.spec, 1.0 / T));
    report(5, "RWA steady state is the Gibbs state", dist < 1e-8,
           fmt("trace distance %.2e (tolerance 1e-8)", dist), timer.seconds());
}

// ------------------------------- criterion 6 ----------------------------------

void criterion_6() {
    Timer timer;
    const HubbardSystem sys(5, 2);
    const BathChannel ch = make_channel(number_operator(1, sys.basis), sys.spec,
                                        CorrelationFunction::singular(0.42), "sc");
    const RedfieldGenerator redfield({ch}, sys.spec, true);
    const TruncatedGenerator trunc({ch}, sys.spec, true);
    const Matrix L_red = redfield.superoperator(t_infinity);
    const Matrix L_tr = trunc.superoperator(t_infinity);
    const double dev = max_abs(Matrix(L_red - L_tr)) / std::max(1.0, max_abs(L_red));

    const auto dec = trunc.decompositions(t_infinity);
    const double a_minus = max_abs(dec[0].A_minus);
    report(6, "singular coupling makes the truncation exact",
           dev <= 1e-12 && a_minus <= 1e-12,
           fmt("generator deviation %.2e, |A-| = %.2e (tolerance 1e-12)", dev, a_minus),
           timer.seconds());
}

// ------------------------------- criterion 7 ----------------------------------

void criterion_7() {
    Timer timer;
    const HubbardSystem sys(5, 2);
    const double gamma = 0.2, T = 2.0, Ec = 17.0;
    const BathChannel ch = sys.channel(1, gamma, Ec, T);
    const RedfieldGenerator redfield({ch}, sys.spec, false);
    const TruncatedGenerator opt({ch}, sys.spec, false);
    const TruncatedGenerator fixed({ch}, sys.spec, false, 1.0, 0.0);
    const RwaGenerator rwa({ch}, sys.spec, false);

    const double tau = 2.0 / gamma;
    const std::vector<double> grid = linear_grid(tau, 81);
    const Matrix rho0 = pure_density(ground_state(sys.spec));
    const SimulationRecord rec_red = propagate(redfield, rho0, grid);
    const SimulationRecord rec_opt = propagate(opt, rho0, grid);
    const SimulationRecord rec_fix = propagate(fixed, rho0, grid);
    const SimulationRecord rec_rwa = propagate(rwa, rho0, grid);

    const double d_opt = time_averaged_distance(rec_opt, rec_red, tau);
    const double d_fix = time_averaged_distance(rec_fix, rec_red, tau);
    const double d_rwa = time_averaged_distance(rec_rwa, rec_red, tau);
    report(7, "transient error ordering at the reference parameters",
           d_opt < d_fix && d_opt < d_rwa,
           fmt("d(optimal) %.3e < d(fixed) %.3e and < d(RWA) %.3e", d_opt, d_fix, d_rwa),
           timer.seconds());
}

// ------------------------------- criterion 8 ----------------------------------

void criterion_8() {
    Timer timer;
    const HubbardSystem sys(5, 2);
    const double T = 20.0, gamma = 0.19;
    const BathChannel ch = sys.channel(1, gamma, 17.0, T);
    const RedfieldGenerator redfield({ch}, sys.spec, true);
    const TruncatedGenerator trunc({ch}, sys.spec, true);
    const RwaGenerator rwa({ch}, sys.spec, true);

    const Matrix red_ss = steady_state(redfield).rho;
    const double d_trunc = trace_distance(steady_state(trunc).rho, red_ss);
    const double d_rwa = trace_distance(steady_state(rwa).rho, red_ss);
    report(8, "high-temperature steady-state accuracy of the truncation",
           d_trunc < 0.02 && d_trunc < d_rwa,
           fmt("d(truncated) %.4f (tol 0.02), d(RWA) %.4f", d_trunc, d_rwa), timer.seconds());
}

// ------------------------------- criterion 9 ----------------------------------

void criterion_9() {
    Timer timer;
    const HubbardSystem sys(5, 2);
    const BathChannel ch = sys.channel(1, 0.1, 17.0, 0.5);
    const SteadyStateResult red = steady_state(RedfieldGenerator({ch}, sys.spec, true));
    const SteadyStateResult tr = steady_state(TruncatedGenerator({ch}, sys.spec, true));
    report(9, "Redfield positivity violation is detected, truncation stays positive",
           red.negative_flag && red.min_eigenvalue < 0 && tr.min_eigenvalue >= -1e-12,
           fmt("Redfield min eigenvalue %.2e (flag %s), truncated min eigenvalue %.2e",
               red.min_eigenvalue, red.negative_flag ? "on" : "off", tr.min_eigenvalue),
           timer.seconds());
}

// ------------------------------- criterion 10 ---------------------------------

void criterion_10() {
    Timer timer;
    const HubbardSystem sys(6, 3);
    const double gamma = 0.2, Ec = 17.0, T_left = 7.0, T_right = 13.0;
    std::vector<BathChannel> channels = {sys.channel(1, gamma, Ec, T_left),
                                         sys.channel(6, gamma, Ec, T_right)};
    const ChainObservables chain = make_chain_observables(sys.basis, sys.spec);

    const double dn_rwa =
        observables(steady_state(RwaGenerator(channels, sys.spec, true)).rho, chain).imbalance;
    const double dn_red =
        observables(steady_state(RedfieldGenerator(channels, sys.spec, true)).rho, chain)
            .imbalance;
    const TruncatedGenerator trunc(channels, sys.spec, true);
    const double dn_trunc = observables(steady_state(trunc).rho, chain).imbalance;

    NessSetup setup;
    setup.sites = 6;
    setup.particles = 3;
    setup.gamma = gamma;
    setup.Ec = Ec;
    setup.T_left = T_left;
    setup.T_right = T_right;
    TrajectoryConfig cfg;
    cfg.n_traj = 2000;
    cfg.seed = 424242;
    cfg.burn_in = 5.0 / gamma;
    cfg.t_max = cfg.burn_in + 50.0;
    cfg.sample_dt = 0.5;
    const EstimatorResult est = ness_imbalance(setup, cfg);
    const double dn_traj = est.value("imbalance");
    const double sigma = est.error("imbalance");

    const bool ok = std::abs(dn_rwa) <= 1e-8 && dn_red > 0 && dn_trunc > 0 &&
                    std::abs(dn_traj - dn_trunc) <= 3.0 * sigma;
    report(10, "nonequilibrium imbalance signs and trajectory consistency", ok,
           fmt("RWA %.1e, Redfield %.4f, truncated %.4f, trajectories %.4f ± %.4f",
               dn_rwa, dn_red, dn_trunc, dn_traj, sigma),
           timer.seconds());
}

// ------------------------------- criterion 11 ---------------------------------

void criterion_11() {
    Timer timer;
    const HubbardSystem sys(5, 2);
    const double gamma = 0.2, Ec = 17.0;
    std::vector<BathChannel> channels = {sys.channel(1, gamma, Ec, 7.0),
                                         sys.channel(5, gamma, Ec, 13.0)};
    const TruncatedGenerator gen(channels, sys.spec, true);
    const LindbladForm form = gen.form(t_infinity);
    const ChainObservables chain = make_chain_observables(sys.basis, sys.spec);

    TrajectoryConfig cfg;
    cfg.seed = 777;
    cfg.burn_in = 25.0;
    cfg.t_max = 75.0;
    cfg.sample_dt = 0.5;

    std::vector<double> ns = {250, 1000, 4000, 16000};
    std::vector<double> errs;
    for (double n : ns) {
        cfg.n_traj = static_cast<int>(n);
        errs.push_back(unravel(form, ground_state(sys.spec), {chain.n_eig[0]}, {"n_1"}, cfg)
                           .error("n_1"));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double x = std::log(ns[i]);
        const double y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = static_cast<double>(ns.size());
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const bool slope_ok = std::abs(slope + 0.5) <= 0.1;

    cfg.n_traj = 1000;
    bool reproducible = true;
    EstimatorResult first;
    for (int workers : {1, 4, 8}) {
        cfg.n_workers = workers;
        const EstimatorResult r =
            unravel(form, ground_state(sys.spec), {chain.n_eig[0]}, {"n_1"}, cfg);
        if (workers == 1) {
            first = r;
        } else if (r.mean(0) != first.mean(0) || r.std_error(0) != first.std_error(0)) {
            reproducible = false;
        }
    }
    report(11, "trajectory statistics scale and reproduce", slope_ok && reproducible,
           fmt("stderr slope %.3f (want -0.5±0.1); bit-exact across 1/4/8 workers: %s",
               slope, reproducible ? "yes" : "no"),
           timer.seconds());
}

// ------------------------------- criterion 12 ---------------------------------

void criterion_12() {
    Timer timer;
    const double M = 1.0, Omega = 1.0, gamma = 0.1, Ec = 100.0;

    // lambda and phi limits at k_B T = 50 hbar Omega through the dense machinery
    const double T_ref = 50.0;
    CorrelationFunction corr = CorrelationFunction::drude_exp_sum({gamma, Ec}, 1.0 / T_ref);
    corr.set_damping_kernel_subtraction(true);
    const OscillatorModel osc = build_oscillator(M, Omega, min_fock_levels(T_ref, Omega));
    const SpectrumDecomposition spec = oscillator_spectrum(osc);
    const BathChannel ch =
        make_channel(ManyBodyOperator{"S", osc.coupling, true}, spec, corr, "osc");
    const Matrix Sc = build_convolution(ch, spec, t_infinity).matrix;
    const OptimalParams p = optimal_params(ch.S, Sc);
    const double lam_rel = p.lambda_sq / (ch.scale * ch.scale) / (gamma * T_ref / hbar);
    const bool lam_ok = std::abs(lam_rel - 1.0) <= 0.02;
    const bool phi_ok = std::abs(p.phi) <= 1e-3;

    // Q:P coefficient ratio of A+ against the printed 2 M k_B T / (hbar chi),
    // extrapolated to T -> infinity in xi^2 = (Ec/T)^2
    oqs::cli::ExperimentConfig cfg = oqs::cli::parse_config(
        oqs::cli::json{{"experiment", "brownian"},
                       {"bath", oqs::cli::json{{"gamma", gamma}, {"Ec", Ec}}},
                       {"T_list", {50.0, 100.0, 200.0, 400.0}}});
    cfg.out_dir = "acceptance_out";
    const auto files = oqs::cli::run_brownian(cfg);
    oqs::cli::json out;
    {
        std::ifstream f(files[0]);
        f >> out;
    }
    const double extrap_dev = out["extrapolation"]["deviation"].get<double>();
    const bool ratio_ok = extrap_dev <= 0.05;

    report(12, "Brownian-motion limit of the truncated jump operator",
           lam_ok && phi_ok && ratio_ok,
           fmt("lambda^2/(gamma k_B T) = %.4f (tol 2%%), phi = %.1e (tol 1e-3), "
               "ratio extrapolation off by %.2f%% (tol 5%%)",
               lam_rel, p.phi, 100.0 * extrap_dev),
           timer.seconds());
    info(fmt("overall Q-coefficient scale vs printed form at k_B T = 400: %.4f (informational)",
             out["points"].back()["q_scale_rel"].get<double>()));
}

} // namespace

int main() {
    std::printf("acceptance suite, library version %s\n", oqs::version);
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::printf("%d of 12 criteria failed\n", failures);
    return failures;
}
