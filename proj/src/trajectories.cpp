#include "oqs/trajectories.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "oqs/integrate.hpp"

namespace oqs::trajectories {

namespace detail {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed ^ (0xD1B54A32D192ED03ULL + stream * 0x9E3779B97F4A7C15ULL);
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1; // xoshiro must not be all-zero
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t select_channel(const std::vector<double>& weights, double u) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
        throw NumericsError("trajectory jump: all jump weights vanish (numerical degeneracy)");
    double target = u * total;
    for (std::size_t a = 0; a < weights.size(); ++a) {
        target -= weights[a];
        if (target <= 0.0) return a;
    }
    return weights.size() - 1;
}

} // namespace detail

namespace {

struct TrajectoryOutcome {
    RealVector sums;    // per-observable sums over sample points
    long n_samples{0};
    Matrix snapshot;    // optional
};

// One MCWF trajectory with a per-trajectory RNG stream
TrajectoryOutcome run_trajectory(const LindbladForm& gen, const Matrix& h_eff,
                                 const Vector& psi0, const std::vector<Matrix>& observables,
                                 const TrajectoryConfig& cfg, int index) {
    detail::Rng rng(cfg.seed, static_cast<std::uint64_t>(index));

    const auto rhs = [&h_eff](double, const Vector& psi) -> Vector {
        return -imag_unit / hbar * (h_eff * psi);
    };

    integrate::StepControl ctrl;
    ctrl.rtol = cfg.rtol;
    ctrl.atol = cfg.atol;

    // stop times: sample grid over [burn_in, t_max], optional snapshot time
    std::vector<double> stops;
    for (double ts = cfg.burn_in; ts <= cfg.t_max + 1e-9; ts += cfg.sample_dt)
        stops.push_back(std::min(ts, cfg.t_max));
    if (cfg.snapshot_time >= 0) stops.push_back(cfg.snapshot_time);
    if (stops.empty() || stops.back() < cfg.t_max) stops.push_back(cfg.t_max);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                stops.end());

    TrajectoryOutcome out;
    out.sums = RealVector::Zero(static_cast<Index>(observables.size()));

    Vector psi = psi0 / psi0.norm();
    double t = 0.0;
    double r = rng.uniform(); // next jump threshold on ||psi||^2

    std::size_t stop_idx = 0;
    while (stop_idx < stops.size()) {
        const double t_stop = stops[stop_idx];
        if (t_stop <= t + 1e-12) {
            // record at this stop
            const double n2 = psi.squaredNorm();
            if (cfg.snapshot_time >= 0 && std::abs(t_stop - cfg.snapshot_time) < 1e-9)
                out.snapshot = (psi * psi.adjoint()) / n2;
            if (t_stop >= cfg.burn_in - 1e-9 &&
                std::abs(std::remainder(t_stop - cfg.burn_in, cfg.sample_dt)) < 1e-6) {
                for (std::size_t o = 0; o < observables.size(); ++o)
                    out.sums(static_cast<Index>(o)) +=
                        (psi.adjoint() * observables[o] * psi)(0).real() / n2;
                ++out.n_samples;
            }
            ++stop_idx;
            continue;
        }

        bool crossed = false;
        integrate::StepResult<Vector> crossing_step;
        const std::function<bool(const integrate::StepResult<Vector>&)> watch =
            [&](const integrate::StepResult<Vector>& step) {
                const double n0 = step.y0.squaredNorm();
                const double n1 = step.y1.squaredNorm();
                if (n1 > n0 * (1.0 + 1e-12))
                    throw NumericsError("trajectory: norm increased between jumps");
                if (n1 < r) {
                    crossed = true;
                    crossing_step = step;
                    return false;
                }
                return true;
            };

        const Vector y_end = integrate::integrate_adaptive(rhs, psi, t, t_stop, ctrl, watch);

        if (!crossed) {
            psi = y_end;
            t = t_stop;
            continue;
        }

        // locate the crossing of ||psi||^2 = r on the interpolated norm
        double lo = 0.0, hi = 1.0;
        const double t_scale = std::max({1.0, std::abs(crossing_step.t0), crossing_step.h});
        for (int it = 0; it < 200 && (hi - lo) * crossing_step.h > cfg.jump_tol * t_scale; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (crossing_step.interpolate(mid).squaredNorm() < r)
                hi = mid;
            else
                lo = mid;
        }
        const double theta = 0.5 * (lo + hi);
        const double t_jump = crossing_step.t0 + theta * crossing_step.h;
        Vector psi_at = crossing_step.interpolate(theta);

        // select the jump channel with probability ∝ rate * ||A psi||^2
        std::vector<double> weights(gen.jumps.size());
        std::vector<Vector> jumped(gen.jumps.size());
        for (std::size_t a = 0; a < gen.jumps.size(); ++a) {
            const double rate = gen.rates.empty() ? 1.0 : gen.rates[a];
            jumped[a] = gen.jumps[a] * psi_at;
            weights[a] = rate * jumped[a].squaredNorm();
        }
        const std::size_t chosen = detail::select_channel(weights, rng.uniform());
        psi = jumped[chosen] / jumped[chosen].norm();
        t = t_jump;
        r = rng.uniform();
    }
    return out;
}

} // namespace

double EstimatorResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return mean(static_cast<Index>(i));
    throw ModelError("EstimatorResult: unknown observable " + name);
}

double EstimatorResult::error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return std_error(static_cast<Index>(i));
    throw ModelError("EstimatorResult: unknown observable " + name);
}

EstimatorResult unravel(const LindbladForm& gen, const Vector& psi0,
                        const std::vector<Matrix>& observables,
                        const std::vector<std::string>& names, const TrajectoryConfig& cfg) {
    if (gen.jumps.empty()) throw ModelError("unravel: generator has no jump operators");
    if (psi0.size() != gen.dim()) throw ModelError("unravel: state dimension mismatch");
    if (psi0.norm() <= 0) throw ModelError("unravel: zero initial state");
    if (observables.size() != names.size())
        throw ModelError("unravel: observables and names differ in length");
    if (cfg.n_traj < 1) throw ModelError("unravel: n_traj must be >= 1");
    if (!(cfg.burn_in < cfg.t_max)) throw ModelError("unravel: need burn_in < t_max");
    if (cfg.snapshot_time > cfg.t_max)
        throw ModelError("unravel: snapshot_time beyond t_max");
    for (double rate : gen.rates)
        if (rate < 0) throw ModelError("unravel: negative rate has no Lindblad unraveling");

    const Matrix h_eff = gen.effective_hamiltonian();

    std::vector<TrajectoryOutcome> outcomes(static_cast<std::size_t>(cfg.n_traj));
    std::atomic<int> next{0};
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int n_workers = cfg.n_workers > 0 ? cfg.n_workers : static_cast<int>(hw);

    const auto worker = [&]() {
        while (true) {
            const int k = next.fetch_add(1);
            if (k >= cfg.n_traj) break;
            outcomes[static_cast<std::size_t>(k)] =
                run_trajectory(gen, h_eff, psi0, observables, cfg, k);
        }
    };

    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    // deterministic reduction in trajectory-index order
    const Index n_obs = static_cast<Index>(observables.size());
    EstimatorResult res;
    res.names = names;
    res.n_traj = cfg.n_traj;
    res.seed = cfg.seed;
    res.mean = RealVector::Zero(n_obs);
    res.std_error = RealVector::Zero(n_obs);

    std::vector<RealVector> traj_means;
    traj_means.reserve(outcomes.size());
    for (const TrajectoryOutcome& o : outcomes) {
        if (o.n_samples == 0) throw NumericsError("unravel: trajectory collected no samples");
        traj_means.push_back(o.sums / static_cast<double>(o.n_samples));
        res.mean += traj_means.back();
    }
    res.mean /= static_cast<double>(cfg.n_traj);
    if (cfg.n_traj > 1) {
        RealVector var = RealVector::Zero(n_obs);
        for (const RealVector& m : traj_means) {
            const RealVector d = m - res.mean;
            var += d.cwiseProduct(d);
        }
        var /= static_cast<double>(cfg.n_traj - 1);
        res.std_error = (var / static_cast<double>(cfg.n_traj)).cwiseSqrt();
    }

    if (cfg.snapshot_time >= 0) {
        res.ensemble_state = Matrix::Zero(gen.dim(), gen.dim());
        for (const TrajectoryOutcome& o : outcomes) res.ensemble_state += o.snapshot;
        res.ensemble_state /= static_cast<double>(cfg.n_traj);
    }
    return res;
}

EstimatorResult ness_imbalance(const NessSetup& setup, const TrajectoryConfig& cfg) {
    using namespace oqs::models;
    using namespace oqs::dissipators;

    const FermionBasis basis = build_fermion_basis(setup.sites, setup.particles);
    const ManyBodyOperator h = build_hubbard(basis, setup.hopping, setup.interaction);
    const SpectrumDecomposition spec = diagonalize(h);

    const bath::DrudeSpectralDensity jd{setup.gamma, setup.Ec};
    const auto corr_left =
        bath::CorrelationFunction::drude_exp_sum(jd, 1.0 / setup.T_left);
    const auto corr_right =
        bath::CorrelationFunction::drude_exp_sum(jd, 1.0 / setup.T_right);

    std::vector<BathChannel> channels;
    channels.push_back(make_channel(number_operator(1, basis), spec, corr_left, "left"));
    channels.push_back(
        make_channel(number_operator(setup.sites, basis), spec, corr_right, "right"));

    const TruncatedGenerator gen(channels, spec, /*frozen=*/true);
    const LindbladForm form = gen.form(bath::t_infinity);

    const evolve::ChainObservables chain = evolve::make_chain_observables(basis, spec);
    std::vector<Matrix> obs;
    std::vector<std::string> names;
    for (int i = 1; i <= setup.sites; ++i) {
        obs.push_back(chain.n_eig[static_cast<std::size_t>(i - 1)]);
        names.push_back("n_" + std::to_string(i));
    }
    obs.push_back(chain.imbalance_eig);
    names.push_back("imbalance");

    return unravel(form, evolve::ground_state(spec), obs, names, cfg);
}

} // namespace oqs::trajectories
