#include "oqs/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "oqs/bath.hpp"
#include "oqs/dissipators.hpp"
#include "oqs/evolve.hpp"
#include "oqs/models.hpp"
#include "oqs/trajectories.hpp"
#include "oqs/version.hpp"

namespace oqs::cli {

namespace {

using namespace oqs::models;
using namespace oqs::bath;
using namespace oqs::dissipators;
using namespace oqs::evolve;

// ------------------------------- config helpers -------------------------------

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected an object");
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ConfigError(context + ": unknown key \"" + item.key() + "\"");
    }
}

double need_double(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key)) throw ConfigError(context + ": missing \"" + key + "\"");
    if (!j[key].is_number()) throw ConfigError(context + ": \"" + key + "\" must be a number");
    return j[key].get<double>();
}

double opt_double(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError("\"" + key + "\" must be a number");
    return j[key].get<double>();
}

int need_int(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw ConfigError(context + ": \"" + key + "\" must be an integer");
    return j[key].get<int>();
}

// axis: explicit array or {"min":..,"max":..,"n":..} (log-spaced)
std::vector<double> parse_axis(const json& j, const std::string& context) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError(context + ": axis entries must be numbers");
            out.push_back(v.get<double>());
        }
    } else if (j.is_object()) {
        check_keys(j, {"min", "max", "n"}, context);
        const double lo = need_double(j, "min", context);
        const double hi = need_double(j, "max", context);
        const int n = need_int(j, "n", context);
        if (!(lo > 0) || !(hi > lo) || n < 2)
            throw ConfigError(context + ": need 0 < min < max and n >= 2");
        for (int i = 0; i < n; ++i)
            out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    } else {
        throw ConfigError(context + ": expected an array or {min,max,n}");
    }
    if (out.empty()) throw ConfigError(context + ": empty axis");
    return out;
}

std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i)
        out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return out;
}

struct HubbardSetup {
    int l{5};
    int N{2};
    double J{1.0};
    double V{2.0};
};

HubbardSetup parse_hubbard(const json& model, bool l_required = true) {
    check_keys(model, {"model", "l", "N", "J", "V"}, "model");
    if (!model.contains("model") || model["model"] != "hubbard")
        throw ConfigError("model: expected \"model\": \"hubbard\"");
    HubbardSetup s;
    if (l_required || model.contains("l")) s.l = need_int(model, "l", "model");
    if (model.contains("N"))
        s.N = need_int(model, "N", "model");
    else
        s.N = s.l / 2;
    s.J = opt_double(model, "J", 1.0);
    s.V = opt_double(model, "V", 2.0);
    return s;
}

CorrelationFunction drude_corr(double gamma, double Ec, double temperature) {
    if (temperature <= 0) throw ConfigError("bath: temperature must be > 0");
    return CorrelationFunction::drude_exp_sum({gamma, Ec}, 1.0 / temperature);
}

void parallel_for(int n, int n_workers, const std::function<void(int)>& fn) {
    if (n_workers <= 0)
        n_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n_workers = std::min(n_workers, n);
    if (n_workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < n_workers; ++w)
        pool.emplace_back([&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// --------------------------------- output files -------------------------------

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

void write_csv_cells(const std::string& path, const ExperimentConfig& cfg,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "# experiment: " << cfg.experiment << "\n";
    out << "# version: " << oqs::version << "\n";
    out << "# config_hash: " << config_hash(cfg.raw) << "\n";
    out << "# seed: " << cfg.seed << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c)
        out << columns[c] << (c + 1 < columns.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << row[c] << (c + 1 < row.size() ? "," : "\n");
    }
}

void write_csv(const std::string& path, const ExperimentConfig& cfg,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<std::string> r;
        r.reserve(row.size());
        for (double v : row) r.push_back(format_number(v));
        cells.push_back(std::move(r));
    }
    write_csv_cells(path, cfg, columns, cells);
}

void write_meta(const std::string& path, const ExperimentConfig& cfg,
                const std::vector<std::string>& columns, const json& extra = json::object()) {
    json meta;
    meta["experiment"] = cfg.experiment;
    meta["version"] = oqs::version;
    meta["config_hash"] = config_hash(cfg.raw);
    meta["seed"] = cfg.seed;
    meta["columns"] = columns;
    meta["config"] = cfg.raw;
    for (const auto& item : extra.items()) meta[item.key()] = item.value();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << meta.dump(2) << "\n";
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

} // namespace

std::string config_hash(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

ExperimentConfig parse_config(const json& j, const std::string& experiment_hint) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");

    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.experiment = j.value("experiment", experiment_hint);
    if (cfg.experiment.empty()) throw ConfigError("config: missing \"experiment\"");
    if (!experiment_hint.empty() && cfg.experiment != experiment_hint)
        throw ConfigError("config: experiment \"" + cfg.experiment +
                          "\" does not match the subcommand \"" + experiment_hint + "\"");

    static const std::vector<std::string> known = {
        "errormap", "imbalance", "optim_compare", "brownian", "weights"};
    if (std::find(known.begin(), known.end(), cfg.experiment) == known.end())
        throw ConfigError("config: unknown experiment \"" + cfg.experiment + "\"");

    if (cfg.experiment == "errormap") {
        check_keys(j, {"experiment", "model", "bath", "grid", "coupling", "seed"}, "config");
        cfg.model = j.value("model", json{{"model", "hubbard"}, {"l", 5}, {"N", 2}});
        check_keys(cfg.model, {"model", "l", "N", "J", "V"}, "model");
        cfg.bath = j.value("bath", json::object());
        check_keys(cfg.bath, {"Ec"}, "bath");
        cfg.coupling = j.value("coupling", std::string("local"));
        if (cfg.coupling != "local" && cfg.coupling != "global")
            throw ConfigError("config: coupling must be \"local\" or \"global\"");
        const json grid = j.value("grid", json::object());
        check_keys(grid, {"T", "gamma"}, "grid");
        cfg.grid_T = grid.contains("T") ? parse_axis(grid["T"], "grid.T") : logspace(0.5, 20.0, 12);
        cfg.grid_gamma = grid.contains("gamma") ? parse_axis(grid["gamma"], "grid.gamma")
                                                : logspace(0.02, 0.3, 12);
    } else if (cfg.experiment == "imbalance") {
        check_keys(j, {"experiment", "model", "bath", "l_list", "n_traj", "seed"}, "config");
        cfg.model = j.value("model", json{{"model", "hubbard"}});
        check_keys(cfg.model, {"model", "J", "V"}, "model");
        cfg.bath = j.value("bath", json::object());
        check_keys(cfg.bath, {"gamma", "Ec", "T_left", "T_right"}, "bath");
        if (j.contains("l_list")) {
            if (!j["l_list"].is_array()) throw ConfigError("config: l_list must be an array");
            for (const auto& v : j["l_list"]) {
                if (!v.is_number_integer())
                    throw ConfigError("config: l_list entries must be integers");
                cfg.grid_l.push_back(v.get<int>());
            }
        } else {
            cfg.grid_l = {4, 5, 6};
        }
        for (int l : cfg.grid_l)
            if (l < 2 || l > 10)
                throw ConfigError("config: imbalance supports 2 <= l <= 10 at desk scale");
        if (j.contains("n_traj") && !j["n_traj"].is_number_integer())
            throw ConfigError("config: n_traj must be an integer");
        cfg.n_traj = j.value("n_traj", 2000);
        if (cfg.n_traj < 2) throw ConfigError("config: n_traj must be >= 2");
    } else if (cfg.experiment == "optim_compare") {
        check_keys(j, {"experiment", "model", "bath", "t_max", "n_steps", "fixed_lambda_sq",
                       "seed"},
                   "config");
        if (j.contains("n_steps") && (!j["n_steps"].is_number_integer() || j["n_steps"] < 2))
            throw ConfigError("config: n_steps must be an integer >= 2");
        cfg.model = j.value("model", json{{"model", "hubbard"}, {"l", 5}, {"N", 2}});
        check_keys(cfg.model, {"model", "l", "N", "J", "V"}, "model");
        cfg.bath = j.value("bath", json{{"gamma", 0.2}, {"Ec", 17.0}, {"T", 2.0}});
        check_keys(cfg.bath, {"gamma", "Ec", "T"}, "bath");
    } else if (cfg.experiment == "brownian") {
        check_keys(j, {"experiment", "model", "bath", "T_list", "seed"}, "config");
        cfg.model = j.value("model", json{{"model", "oscillator"}, {"M", 1.0}, {"Omega", 1.0}});
        check_keys(cfg.model, {"model", "M", "Omega", "n_max"}, "model");
        if (cfg.model.contains("n_max") && !cfg.model["n_max"].is_number_integer())
            throw ConfigError("model: n_max must be an integer");
        cfg.bath = j.value("bath", json{{"gamma", 0.1}, {"Ec", 100.0}});
        check_keys(cfg.bath, {"gamma", "Ec"}, "bath");
        if (j.contains("T_list"))
            cfg.temperature_list = parse_axis(j["T_list"], "T_list");
        else
            cfg.temperature_list = {50.0, 100.0, 200.0, 400.0};
    } else if (cfg.experiment == "weights") {
        check_keys(j, {"experiment", "model", "bath", "coupling_site", "beta", "seed"}, "config");
        if (j.contains("coupling_site") && !j["coupling_site"].is_number_integer())
            throw ConfigError("config: coupling_site must be an integer");
        cfg.model = j.value("model", json{{"model", "hubbard"}, {"l", 5}, {"N", 2}});
        if (cfg.model.value("model", std::string()) == "oscillator") {
            check_keys(cfg.model, {"model", "M", "Omega", "n_max"}, "model");
            if (cfg.model.contains("n_max") && !cfg.model["n_max"].is_number_integer())
                throw ConfigError("model: n_max must be an integer");
        } else {
            check_keys(cfg.model, {"model", "l", "N", "J", "V"}, "model");
        }
        cfg.bath = j.value("bath", json{{"gamma", 0.1}, {"Ec", 17.0}});
        check_keys(cfg.bath, {"gamma", "Ec"}, "bath");
        if (j.contains("beta"))
            cfg.beta_grid = parse_axis(j["beta"], "beta");
        else
            cfg.beta_grid = logspace(1e-3, 1e-2, 7);
    }

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw ConfigError("config: seed must be an integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------- errormap ----------------------------------

namespace {

struct ErrormapCell {
    double T{0}, gamma{0};
    double d_rwa_ss{0}, d_trunc_ss{0};
    double d_rwa_tr{0}, d_trunc_tr{0};
    double w_ratio{0};
    bool redfield_negative{false};
    bool failed{false};
};

ErrormapCell errormap_cell(const HubbardSetup& hs, const FermionBasis& basis,
                           const SpectrumDecomposition& spec, bool global, double Ec, double T,
                           double gamma) {
    ErrormapCell cell;
    cell.T = T;
    cell.gamma = gamma;

    const CorrelationFunction corr = drude_corr(gamma, Ec, T);
    std::vector<BathChannel> channels;
    if (global) {
        for (int i = 1; i <= hs.l; ++i)
            channels.push_back(
                make_channel(number_operator(i, basis), spec, corr, "n_" + std::to_string(i)));
    } else {
        channels.push_back(make_channel(number_operator(1, basis), spec, corr, "n_1"));
    }

    const RedfieldGenerator redfield(channels, spec, /*frozen=*/true);
    const RwaGenerator rwa(channels, spec, /*frozen=*/true);
    const TruncatedGenerator trunc(channels, spec, /*frozen=*/true);

    const SteadyStateResult red_ss = steady_state(redfield);
    const SteadyStateResult rwa_ss = steady_state(rwa);
    const SteadyStateResult trunc_ss = steady_state(trunc);
    cell.d_rwa_ss = trace_distance(rwa_ss.rho, red_ss.rho);
    cell.d_trunc_ss = trace_distance(trunc_ss.rho, red_ss.rho);
    cell.redfield_negative = red_ss.negative_flag;

    double wp = 0.0, wm = 0.0;
    for (const auto& dec : trunc.decompositions(bath::t_infinity)) {
        wp += dec.w_plus;
        wm += dec.w_minus;
    }
    cell.w_ratio = wm / wp;

    // transient comparison with the time-dependent generators
    const double tau = (global ? 1.0 : 2.0) / (gamma * hs.J);
    std::vector<double> grid;
    const int n_pts = 41;
    for (int i = 0; i < n_pts; ++i) grid.push_back(tau * i / (n_pts - 1));
    grid.erase(grid.begin()); // propagate() owns t = 0
    std::vector<double> full_grid = {0.0};
    full_grid.insert(full_grid.end(), grid.begin(), grid.end());

    const RedfieldGenerator redfield_t(channels, spec, /*frozen=*/false);
    const RwaGenerator rwa_t(channels, spec, /*frozen=*/false);
    const TruncatedGenerator trunc_t(channels, spec, /*frozen=*/false);

    const Matrix rho0 =
        pure_density(global ? ground_plus_first(spec) : ground_state(spec));
    const SimulationRecord rec_red = propagate(redfield_t, rho0, full_grid, 1e-8, 1e-10, "redfield");
    const SimulationRecord rec_rwa = propagate(rwa_t, rho0, full_grid, 1e-8, 1e-10, "rwa");
    const SimulationRecord rec_trunc =
        propagate(trunc_t, rho0, full_grid, 1e-8, 1e-10, "truncated");
    cell.d_rwa_tr = time_averaged_distance(rec_rwa, rec_red, tau);
    cell.d_trunc_tr = time_averaged_distance(rec_trunc, rec_red, tau);
    return cell;
}

} // namespace

std::vector<std::string> run_errormap(const ExperimentConfig& cfg) {
    HubbardSetup hs = parse_hubbard(cfg.model);
    if (cfg.full) {
        hs.l = 8;
        hs.N = 4;
        std::cerr << "oqs errormap: --full selects the l = 8 chain on a fine grid; "
                     "steady states and transients at dimension 70 take hours, not minutes\n";
    }
    const bool global = cfg.coupling == "global";
    const double Ec = opt_double(cfg.bath, "Ec", global ? 40.0 : 17.0);

    const FermionBasis basis = build_fermion_basis(hs.l, hs.N);
    const ManyBodyOperator h = build_hubbard(basis, hs.J, hs.V);
    const SpectrumDecomposition spec = diagonalize(h);

    std::vector<std::pair<double, double>> cells;
    std::vector<double> T_axis = cfg.grid_T;
    std::vector<double> g_axis = cfg.grid_gamma;
    if (cfg.full && cfg.grid_T.size() == 12 && cfg.grid_gamma.size() == 12) {
        T_axis = logspace(0.5, 20.0, 24);
        g_axis = logspace(0.02, 0.3, 24);
    }
    for (double T : T_axis)
        for (double g : g_axis) cells.emplace_back(T, g);

    std::vector<ErrormapCell> results(cells.size());
    parallel_for(static_cast<int>(cells.size()), cfg.threads, [&](int i) {
        const auto [T, g] = cells[static_cast<std::size_t>(i)];
        try {
            results[static_cast<std::size_t>(i)] =
                errormap_cell(hs, basis, spec, global, Ec, T, g);
        } catch (const std::exception& e) {
            ErrormapCell bad;
            bad.T = T;
            bad.gamma = g;
            bad.failed = true;
            results[static_cast<std::size_t>(i)] = bad;
            std::cerr << "oqs errormap: cell (T=" << T << ", gamma=" << g << ") failed: "
                      << e.what() << "\n";
        }
    });

    const std::vector<std::string> columns = {"T",
                                              "gamma",
                                              "d_rwa_ss",
                                              "d_trunc_ss",
                                              "d_rwa_transient",
                                              "d_trunc_transient",
                                              "w_ratio",
                                              "redfield_negative"};
    std::vector<std::vector<double>> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const ErrormapCell& c : results) {
        if (c.failed)
            rows.push_back({c.T, c.gamma, nan, nan, nan, nan, nan, 0.0});
        else
            rows.push_back({c.T, c.gamma, c.d_rwa_ss, c.d_trunc_ss, c.d_rwa_tr, c.d_trunc_tr,
                            c.w_ratio, c.redfield_negative ? 1.0 : 0.0});
    }

    const std::string csv = out_path(cfg, "errormap.csv");
    const std::string meta = out_path(cfg, "errormap.meta.json");
    write_csv(csv, cfg, columns, rows);
    write_meta(meta, cfg, columns,
               json{{"coupling", cfg.coupling}, {"Ec", Ec}, {"l", hs.l}, {"N", hs.N}});
    return {csv, meta};
}

// ---------------------------------- imbalance ---------------------------------

std::vector<std::string> run_imbalance(const ExperimentConfig& cfg) {
    const double gamma = opt_double(cfg.bath, "gamma", 0.2);
    const double Ec = opt_double(cfg.bath, "Ec", 17.0);
    const double T_left = opt_double(cfg.bath, "T_left", 7.0);
    const double T_right = opt_double(cfg.bath, "T_right", 13.0);
    const HubbardSetup base = parse_hubbard(cfg.model, /*l_required=*/false);

    const std::vector<std::string> columns = {"l", "gamma", "method", "imbalance", "stderr"};
    std::vector<std::vector<std::string>> rows;
    const auto add_row = [&](int l, const std::string& method, double dn, double err) {
        rows.push_back({std::to_string(l), format_number(gamma), method, format_number(dn),
                        format_number(err)});
    };

    for (int l : cfg.grid_l) {
        const int N = l / 2;
        const FermionBasis basis = build_fermion_basis(l, N);
        const ManyBodyOperator h = build_hubbard(basis, base.J, base.V);
        const SpectrumDecomposition spec = diagonalize(h);
        const ChainObservables chain = make_chain_observables(basis, spec);

        std::vector<BathChannel> channels;
        channels.push_back(
            make_channel(number_operator(1, basis), spec, drude_corr(gamma, Ec, T_left), "left"));
        channels.push_back(make_channel(number_operator(l, basis), spec,
                                        drude_corr(gamma, Ec, T_right), "right"));

        if (l <= 7) {
            const RedfieldGenerator redfield(channels, spec, true);
            const TruncatedGenerator trunc(channels, spec, true);
            const RwaGenerator rwa(channels, spec, true);
            add_row(l, "redfield", observables(steady_state(redfield).rho, chain).imbalance, 0.0);
            add_row(l, "truncated", observables(steady_state(trunc).rho, chain).imbalance, 0.0);
            add_row(l, "rwa", observables(steady_state(rwa).rho, chain).imbalance, 0.0);
        }

        trajectories::NessSetup setup;
        setup.sites = l;
        setup.particles = N;
        setup.hopping = base.J;
        setup.interaction = base.V;
        setup.gamma = gamma;
        setup.Ec = Ec;
        setup.T_left = T_left;
        setup.T_right = T_right;

        trajectories::TrajectoryConfig tc;
        tc.n_traj = cfg.n_traj;
        tc.seed = cfg.seed;
        tc.burn_in = 5.0 / (gamma * base.J);
        tc.t_max = tc.burn_in + 10.0 / (gamma * base.J);
        tc.sample_dt = 0.5;
        tc.n_workers = cfg.threads;
        const trajectories::EstimatorResult est = trajectories::ness_imbalance(setup, tc);
        add_row(l, "trajectories", est.value("imbalance"), est.error("imbalance"));
    }

    const std::string csv = out_path(cfg, "imbalance.csv");
    const std::string meta = out_path(cfg, "imbalance.meta.json");
    write_csv_cells(csv, cfg, columns, rows);
    write_meta(meta, cfg, columns,
               json{{"bath", json{{"gamma", gamma},
                                  {"Ec", Ec},
                                  {"T_left", T_left},
                                  {"T_right", T_right}}}});
    return {csv, meta};
}

// -------------------------------- optim_compare -------------------------------

std::vector<std::string> run_optim_compare(const ExperimentConfig& cfg) {
    const HubbardSetup hs = parse_hubbard(cfg.model);
    const double gamma = need_double(cfg.bath, "gamma", "bath");
    const double Ec = need_double(cfg.bath, "Ec", "bath");
    const double T = need_double(cfg.bath, "T", "bath");
    const double t_max = opt_double(cfg.raw, "t_max", 2.0 / (gamma * hs.J));
    const int n_steps = cfg.raw.value("n_steps", 81);
    const double fixed_lambda_sq = opt_double(cfg.raw, "fixed_lambda_sq", hs.J / hbar);

    const FermionBasis basis = build_fermion_basis(hs.l, hs.N);
    const ManyBodyOperator h = build_hubbard(basis, hs.J, hs.V);
    const SpectrumDecomposition spec = diagonalize(h);

    std::vector<BathChannel> channels = {
        make_channel(number_operator(1, basis), spec, drude_corr(gamma, Ec, T), "n_1")};

    const RedfieldGenerator redfield(channels, spec, false);
    const TruncatedGenerator trunc_opt(channels, spec, false);
    const TruncatedGenerator trunc_fixed(channels, spec, false, fixed_lambda_sq, 0.0);
    const RwaGenerator rwa(channels, spec, false);

    std::vector<double> grid;
    for (int i = 0; i < n_steps; ++i) grid.push_back(t_max * i / (n_steps - 1));

    const Matrix rho0 = pure_density(ground_state(spec));
    const SimulationRecord rec_red = propagate(redfield, rho0, grid, 1e-8, 1e-10, "redfield");
    const SimulationRecord rec_opt = propagate(trunc_opt, rho0, grid, 1e-8, 1e-10, "trunc_opt");
    const SimulationRecord rec_fix =
        propagate(trunc_fixed, rho0, grid, 1e-8, 1e-10, "trunc_fixed");
    const SimulationRecord rec_rwa = propagate(rwa, rho0, grid, 1e-8, 1e-10, "rwa");

    const std::vector<std::string> columns = {
        "time",
        "redfield_pop_ground", "redfield_max_coherence",
        "trunc_opt_pop_ground", "trunc_opt_max_coherence", "trunc_opt_distance",
        "trunc_fixed_pop_ground", "trunc_fixed_max_coherence", "trunc_fixed_distance",
        "rwa_pop_ground", "rwa_max_coherence", "rwa_distance"};

    const ChainObservables chain = make_chain_observables(basis, spec);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rec_red.times.size(); ++i) {
        const Observables o_red = observables(rec_red.states[i], chain);
        const Observables o_opt = observables(rec_opt.states[i], chain);
        const Observables o_fix = observables(rec_fix.states[i], chain);
        const Observables o_rwa = observables(rec_rwa.states[i], chain);
        rows.push_back({rec_red.times[i],
                        o_red.populations(0), o_red.max_coherence,
                        o_opt.populations(0), o_opt.max_coherence,
                        trace_distance(rec_opt.states[i], rec_red.states[i]),
                        o_fix.populations(0), o_fix.max_coherence,
                        trace_distance(rec_fix.states[i], rec_red.states[i]),
                        o_rwa.populations(0), o_rwa.max_coherence,
                        trace_distance(rec_rwa.states[i], rec_red.states[i])});
    }

    const std::string csv = out_path(cfg, "optim_compare.csv");
    const std::string meta = out_path(cfg, "optim_compare.meta.json");
    write_csv(csv, cfg, columns, rows);
    write_meta(meta, cfg, columns, json{{"fixed_lambda_sq", fixed_lambda_sq}, {"tau", t_max}});
    return {csv, meta};
}

// ---------------------------------- brownian ----------------------------------

namespace {

struct BrownianPoint {
    double T{0};
    double lambda_sq_rel{0}; // lambda^2 / (gamma k_B T / hbar)
    double phi{0};
    double qp_ratio{0};         // |Q coeff| / |P coeff| of A+
    double qp_ratio_printed{0}; // 2 M k_B T / (hbar chi)
    double q_scale_rel{0};      // informational overall-scale comparison
    int fock_levels{0};         // 0 marks the two-frequency evaluation
};

// Channel quantities from G(±Omega) alone; exact for the ladder coupling at
// any Fock truncation because the ± splittings carry equal weight
BrownianPoint brownian_scalar(double M, double Omega, double gamma, double Ec, double T) {
    CorrelationFunction corr = drude_corr(gamma, Ec, T);
    corr.set_damping_kernel_subtraction(true);
    const Complex Gp = corr.G(Omega, bath::t_infinity);
    const Complex Gm = corr.G(-Omega, bath::t_infinity);

    BrownianPoint p;
    p.T = T;
    const double lambda_sq = std::sqrt(0.5 * (std::norm(Gp) + std::norm(Gm)));
    p.lambda_sq_rel = lambda_sq / (gamma * T / hbar);
    const double h_bar_avg = 0.5 * (Gp.imag() + Gm.imag());
    p.phi = std::asin(std::clamp(h_bar_avg / lambda_sq, -1.0, 1.0));

    const Complex lam_p = std::sqrt(lambda_sq) * std::exp(Complex(0.0, -0.5 * p.phi));
    // A+ = [lam+ S + Sconv/lam+]/sqrt(2 cos phi) on the (a, a†) pair
    const double norm = 1.0 / std::sqrt(2.0 * std::cos(p.phi));
    const Complex u = norm * (lam_p + Gm / lam_p) / std::sqrt(2.0); // a coefficient
    const Complex v = norm * (lam_p + Gp / lam_p) / std::sqrt(2.0); // a† coefficient
    // a = sqrt(M Omega / 2 hbar) (Q + i P / (M Omega))
    const Complex qc = std::sqrt(M * Omega / (2.0 * hbar)) * (u + v);
    const Complex pc = std::sqrt(M * Omega / (2.0 * hbar)) * (imag_unit / (M * Omega)) * (u - v);
    p.qp_ratio = std::abs(qc) / std::abs(pc);
    p.qp_ratio_printed = 2.0 * M * T / (hbar * chi(Ec / T));
    p.q_scale_rel =
        std::abs(qc) / (std::sqrt(gamma * Omega / 2.0) * std::sqrt(4.0 * M * T / (hbar * hbar)));
    return p;
}

// Same quantities through the dense operator machinery
BrownianPoint brownian_dense(double M, double Omega, double gamma, double Ec, double T,
                             int fock_levels) {
    const OscillatorModel osc = build_oscillator(M, Omega, fock_levels);
    const SpectrumDecomposition spec = oscillator_spectrum(osc);
    CorrelationFunction corr = drude_corr(gamma, Ec, T);
    corr.set_damping_kernel_subtraction(true);

    const ManyBodyOperator coupling =
        make_operator("S", osc.coupling, true);
    const BathChannel ch = make_channel(coupling, spec, corr, "osc");
    const Matrix Sc = build_convolution(ch, spec, bath::t_infinity).matrix;
    const OptimalParams opt = optimal_params(ch.S, Sc);
    const PseudoLindbladDecomposition dec = decompose(ch.S, Sc, opt.lambda_sq, opt.phi);

    BrownianPoint p;
    p.T = T;
    p.fock_levels = fock_levels;
    // undo the folded coupling normalization to compare with gamma k_B T
    p.lambda_sq_rel = opt.lambda_sq / (ch.scale * ch.scale) / (gamma * T / hbar);
    p.phi = opt.phi;

    // Gram solve for A+ = qc Q + pc P
    const Matrix& Q = osc.Q;
    const Matrix& P = osc.P;
    Eigen::Matrix2cd gram;
    gram << (Q.adjoint() * Q).trace(), (Q.adjoint() * P).trace(),
        (P.adjoint() * Q).trace(), (P.adjoint() * P).trace();
    Eigen::Vector2cd rhs;
    rhs << (Q.adjoint() * dec.A_plus).trace(), (P.adjoint() * dec.A_plus).trace();
    const Eigen::Vector2cd coef = gram.fullPivLu().solve(rhs);
    p.qp_ratio = std::abs(coef(0)) / std::abs(coef(1));
    p.qp_ratio_printed = 2.0 * M * T / (hbar * chi(Ec / T));
    p.q_scale_rel = std::abs(coef(0)) / ch.scale /
                    (std::sqrt(gamma * Omega / 2.0) * std::sqrt(4.0 * M * T / (hbar * hbar)));
    return p;
}

} // namespace

std::vector<std::string> run_brownian(const ExperimentConfig& cfg) {
    const double M = opt_double(cfg.model, "M", 1.0);
    const double Omega = opt_double(cfg.model, "Omega", 1.0);
    const double gamma = need_double(cfg.bath, "gamma", "bath");
    const double Ec = need_double(cfg.bath, "Ec", "bath");
    const int dense_cap = 1400;

    json points = json::array();
    std::vector<double> rel_dev;
    std::vector<double> xi_sq;
    for (double T : cfg.temperature_list) {
        if (T <= 0) throw ConfigError("brownian: temperatures must be > 0");
        const BrownianPoint sp = brownian_scalar(M, Omega, gamma, Ec, T);
        json entry{{"T", T},
                   {"lambda_sq_over_thermal", sp.lambda_sq_rel},
                   {"phi", sp.phi},
                   {"qp_ratio", sp.qp_ratio},
                   {"qp_ratio_printed", sp.qp_ratio_printed},
                   {"q_scale_rel", sp.q_scale_rel}};
        int needed = cfg.model.contains("n_max") ? cfg.model["n_max"].get<int>()
                                                 : min_fock_levels(T, Omega);
        if (cfg.model.contains("n_max") && needed < min_fock_levels(T, Omega))
            throw ModelError("brownian: Fock truncation insufficient for T = " +
                             std::to_string(T));
        if (needed <= dense_cap) {
            const BrownianPoint dp = brownian_dense(M, Omega, gamma, Ec, T, needed);
            entry["fock_levels"] = dp.fock_levels;
            entry["dense_lambda_sq_over_thermal"] = dp.lambda_sq_rel;
            entry["dense_phi"] = dp.phi;
            entry["dense_qp_ratio"] = dp.qp_ratio;
        }
        points.push_back(entry);
        rel_dev.push_back(sp.qp_ratio / sp.qp_ratio_printed);
        xi_sq.push_back((Ec / T) * (Ec / T));
    }

    // linear extrapolation of qp_ratio / printed in xi^2 to the T -> inf limit
    json extrapolation = json::object();
    if (rel_dev.size() >= 2) {
        const std::size_t n = rel_dev.size();
        const double x1 = xi_sq[n - 2], x2 = xi_sq[n - 1];
        const double y1 = rel_dev[n - 2], y2 = rel_dev[n - 1];
        const double y0 = y1 + (y2 - y1) * (0.0 - x1) / (x2 - x1);
        extrapolation["qp_ratio_over_printed"] = y0;
        extrapolation["deviation"] = std::abs(y0 - 1.0);
    }

    json out;
    out["experiment"] = cfg.experiment;
    out["version"] = oqs::version;
    out["config_hash"] = config_hash(cfg.raw);
    out["seed"] = cfg.seed;
    out["M"] = M;
    out["Omega"] = Omega;
    out["gamma"] = gamma;
    out["Ec"] = Ec;
    out["points"] = points;
    out["extrapolation"] = extrapolation;

    const std::string path = out_path(cfg, "brownian.json");
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << out.dump(2) << "\n";
    const std::string meta = out_path(cfg, "brownian.meta.json");
    write_meta(meta, cfg, {});
    return {path, meta};
}

// ----------------------------------- weights ----------------------------------

std::vector<std::string> run_weights(const ExperimentConfig& cfg) {
    const double gamma = need_double(cfg.bath, "gamma", "bath");
    const double Ec = need_double(cfg.bath, "Ec", "bath");

    SpectrumDecomposition spec;
    ManyBodyOperator coupling;
    if (cfg.model.value("model", std::string()) == "oscillator") {
        const double M = opt_double(cfg.model, "M", 1.0);
        const double Omega = opt_double(cfg.model, "Omega", 1.0);
        const int n_max = cfg.model.value("n_max", 60);
        const OscillatorModel osc = build_oscillator(M, Omega, n_max);
        spec = oscillator_spectrum(osc);
        coupling = make_operator("S", osc.coupling, true);
    } else {
        const HubbardSetup hs = parse_hubbard(cfg.model);
        const int site = cfg.raw.value("coupling_site", 1);
        const FermionBasis basis = build_fermion_basis(hs.l, hs.N);
        spec = diagonalize(build_hubbard(basis, hs.J, hs.V));
        coupling = number_operator(site, basis);
    }
    const ManyBodyOperator& n_op = coupling;
    const Matrix S_eig = spec.U.adjoint() * n_op.matrix * spec.U;
    const double var_delta = splitting_variance(S_eig, spec);

    json points = json::array();
    for (double beta : cfg.beta_grid) {
        if (beta <= 0) throw ConfigError("weights: beta must be > 0");
        const CorrelationFunction corr = drude_corr(gamma, Ec, 1.0 / beta);
        const BathChannel ch = make_channel(n_op, spec, corr, "n");
        const Matrix Sc = build_convolution(ch, spec, bath::t_infinity).matrix;
        const OptimalParams opt = optimal_params(ch.S, Sc);
        const PseudoLindbladDecomposition dec = decompose(ch.S, Sc, opt.lambda_sq, opt.phi);
        points.push_back(json{{"beta", beta},
                              {"w_plus", dec.w_plus},
                              {"w_minus", dec.w_minus},
                              {"ratio", dec.w_minus / dec.w_plus},
                              {"ratio_prediction",
                               relative_weight_prediction(beta, Ec, var_delta)},
                              {"chi", chi(beta * Ec)}});
    }

    json out;
    out["experiment"] = cfg.experiment;
    out["version"] = oqs::version;
    out["config_hash"] = config_hash(cfg.raw);
    out["seed"] = cfg.seed;
    out["var_delta"] = var_delta;
    out["points"] = points;

    const std::string path = out_path(cfg, "weights.json");
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << out.dump(2) << "\n";
    const std::string meta = out_path(cfg, "weights.meta.json");
    write_meta(meta, cfg, {});
    return {path, meta};
}

// ------------------------------------ main ------------------------------------

int main(const std::vector<std::string>& args) {
    try {
        if (args.empty() || args[0] == "-h" || args[0] == "--help") {
            std::cout << "usage: oqs <errormap|imbalance|optim_compare|brownian|weights> "
                         "--config <file> [--out <dir>] [--seed <u64>] [--threads <n>] [--full]\n";
            return args.empty() ? 2 : 0;
        }
        const std::string sub = args[0];
        std::string config_path, out_dir = ".";
        std::uint64_t seed = 0;
        bool seed_set = false;
        int threads = 0;
        bool full = false;
        for (std::size_t i = 1; i < args.size(); ++i) {
            const std::string& a = args[i];
            const auto next = [&]() -> const std::string& {
                if (i + 1 >= args.size()) throw ConfigError("missing value after " + a);
                return args[++i];
            };
            if (a == "--config")
                config_path = next();
            else if (a == "--out")
                out_dir = next();
            else if (a == "--seed") {
                seed = std::stoull(next());
                seed_set = true;
            } else if (a == "--threads")
                threads = std::stoi(next());
            else if (a == "--full")
                full = true;
            else
                throw ConfigError("unknown option " + a);
        }
        if (config_path.empty()) throw ConfigError("--config is required");

        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file " + config_path);
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        ExperimentConfig cfg = parse_config(j, sub);
        cfg.out_dir = out_dir;
        cfg.threads = threads;
        cfg.full = full;
        if (seed_set) {
            cfg.seed = seed;
            cfg.raw["seed"] = seed;
        }

        std::vector<std::string> files;
        if (sub == "errormap")
            files = run_errormap(cfg);
        else if (sub == "imbalance")
            files = run_imbalance(cfg);
        else if (sub == "optim_compare")
            files = run_optim_compare(cfg);
        else if (sub == "brownian")
            files = run_brownian(cfg);
        else if (sub == "weights")
            files = run_weights(cfg);
        else
            throw ConfigError("unknown subcommand " + sub);

        for (const std::string& f : files) std::cout << f << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace oqs::cli
