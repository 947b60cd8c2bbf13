// tcldro: simulate a TCL ensemble, estimate its default transition model,
// and compute dispatch policies that are robust to uncertainty in the
// transition probabilities.
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 data error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcldro/config.hpp"
#include "tcldro/errors.hpp"
#include "tcldro/io.hpp"
#include "tcldro/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tcldro;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::int64_t> seed;
};

ScenarioConfig load_config(const GlobalOpts& g) {
    ScenarioConfig cfg;
    if (!g.config_path.empty()) {
        if (!fs::exists(g.config_path)) throw config_error("config file not found: " + g.config_path);
        cfg = ScenarioConfig::from_toml(TomlTable::parse(io::read_text(g.config_path)));
    }
    if (g.seed) cfg.seed = static_cast<std::uint64_t>(*g.seed);
    cfg.validate();
    return cfg;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

void require_artifact(const std::string& path) {
    if (!fs::exists(path)) throw data_error("missing upstream artifact: " + path);
}

// scenario inputs reconstructed from the artifacts in the out directory
ScenarioData load_scenario_data(const GlobalOpts& g, const ScenarioConfig& cfg) {
    ScenarioData data;
    const std::string nominal_path = out_path(g, "nominal.csv");
    const std::string samples_path = out_path(g, "samples.csv");
    const std::string space_path = out_path(g, "state_space.json");
    const std::string rho0_path = out_path(g, "rho0.csv");
    require_artifact(nominal_path);
    require_artifact(samples_path);
    require_artifact(space_path);
    require_artifact(rho0_path);
    data.nominal = io::read_matrix_csv(nominal_path);
    data.samples = io::read_samples_csv(samples_path);
    data.space = io::read_state_space_json(space_path);
    data.rho0 = io::read_rho0_csv(rho0_path);
    require_simplex(data.rho0, "rho0");
    data.moments = sample_moments(data.samples);
    if (cfg.pooled_variance) data.moments = pool_variance(data.moments);
    if (!cfg.price_file.empty()) {
        data.prices = io::read_price_csv(cfg.price_file);
        if (static_cast<int>(data.prices.size()) < cfg.horizon)
            throw config_error("price series shorter than the horizon");
        data.prices.resize(cfg.horizon);
    } else {
        data.prices.assign(cfg.horizon, cfg.flat_price);
    }
    data.utility = Utility::from_prices(data.prices, data.space.rated_power);
    return data;
}

int cmd_simulate(const GlobalOpts& g, const ScenarioConfig& cfg, double hours, bool temps) {
    const double sim_hours = hours > 0.0 ? hours : cfg.sim_hours;
    const int steps = static_cast<int>(std::lround(sim_hours / cfg.tcl.step_hours));
    const EnsembleTrace trace =
        simulate_ensemble(cfg.tcl, cfg.devices, cfg.ambient, steps, cfg.seed, temps);
    io::write_trace_csv(out_path(g, "trace.csv"), trace);
    if (temps) io::write_temperatures_csv(out_path(g, "temperatures.csv"), trace);
    std::cout << "wrote " << out_path(g, "trace.csv") << " (" << steps << " steps, " << cfg.devices
              << " devices)\n";
    return 0;
}

int cmd_estimate(const GlobalOpts& g, const ScenarioConfig& cfg, const std::string& trace_file) {
    const std::string trace_path = trace_file.empty() ? out_path(g, "trace.csv") : trace_file;
    require_artifact(trace_path);
    const std::vector<double> power = io::read_trace_csv(trace_path);
    const int stride =
        std::max(1, static_cast<int>(std::lround(cfg.mdp_step_hours / cfg.tcl.step_hours)));
    std::vector<double> thinned = thin_series(power, stride);
    const int burn = static_cast<int>(std::lround(cfg.burn_in_hours / cfg.mdp_step_hours));
    if (burn >= static_cast<int>(thinned.size()))
        throw config_error("burn-in leaves no samples for estimation");
    thinned.erase(thinned.begin(), thinned.begin() + burn);

    auto [space, states] = discretize(thinned, cfg.states);
    Matrix nominal = estimate_transitions(states, cfg.states);
    if (cfg.smoothing_eps > 0.0) nominal = smooth_deterministic_columns(nominal, cfg.smoothing_eps);
    io::write_matrix_csv(out_path(g, "nominal.csv"), nominal);
    io::write_state_space_json(out_path(g, "state_space.json"), space);
    const std::vector<double> rho0 = initial_distribution(states, cfg.states, cfg.rho0_mode);
    io::write_vector_csv(out_path(g, "rho0.csv"), "state,rho", rho0);
    std::cout << "wrote " << out_path(g, "nominal.csv") << " (" << cfg.states << " states, "
              << states.size() << " thinned samples)\n";
    return 0;
}

int cmd_sample(const GlobalOpts& g, const ScenarioConfig& cfg, const std::string& nominal_file,
               double fraction, int count) {
    const std::string nominal_path = nominal_file.empty() ? out_path(g, "nominal.csv") : nominal_file;
    require_artifact(nominal_path);
    const Matrix nominal = io::read_matrix_csv(nominal_path);
    const double f = fraction >= 0.0 ? fraction : cfg.perturb_fraction;
    const int n = count > 0 ? count : cfg.sample_count;
    const SampleSet set = perturb_samples(nominal, f, n, derive_seed(cfg.seed, 0x5a3f17ULL));
    io::write_samples_csv(out_path(g, "samples.csv"), set);
    std::cout << "wrote " << out_path(g, "samples.csv") << " (" << n << " samples, fraction " << f
              << ")\n";
    return 0;
}

void write_solve_outputs(const GlobalOpts& g, const ScenarioConfig& cfg, const SolveOutput& out,
                         const std::string& tag) {
    io::write_policy_csv(out_path(g, "policy_" + tag + ".csv"), out.policy);
    io::write_value_function_csv(out_path(g, "value_function_" + tag + ".csv"), out.value_function);
    const std::string rho_name = "rho_" + tag + ".csv";
    io::write_rho_csv(out_path(g, rho_name), out.result.rho);
    io::write_dispatch_result_json(out_path(g, "result_" + tag + ".json"), out.result, rho_name);
    if (!out.moment_report.empty())
        io::write_moment_report_csv(out_path(g, "moment_report_" + tag + ".csv"), out.moment_report);
    if (!out.wasserstein_diag.empty())
        io::write_wasserstein_diag_csv(out_path(g, "wasserstein_diag_" + tag + ".csv"),
                                       out.wasserstein_diag);
    (void)cfg;
}

int cmd_solve(const GlobalOpts& g, const ScenarioConfig& cfg, bool with_oos) {
    const ScenarioData data = load_scenario_data(g, cfg);
    const SolveOutput out = solve_method(data, cfg, cfg.method, with_oos);
    write_solve_outputs(g, cfg, out, cfg.method.name);
    std::printf("method=%s gamma=%.4g objective=%.6f\n", cfg.method.name.c_str(), cfg.method.gamma,
                out.result.objective);
    return 0;
}

int cmd_evaluate(const GlobalOpts& g, const ScenarioConfig& cfg, const std::string& policy_file,
                 bool with_oos) {
    require_artifact(policy_file);
    const ScenarioData data = load_scenario_data(g, cfg);
    const Policy policy = io::read_policy_csv(policy_file);
    const SolveConfig sc = make_solve_config(cfg, cfg.method.gamma);
    DispatchResult r;
    r.method = "evaluate:" + cfg.method.name;
    r.gamma = cfg.method.gamma;
    r.objective = expected_cost(policy, CostModel::standard(data.nominal), data.utility, sc, data.rho0);
    r.rho = forward_evolve(data.rho0, policy);
    r.power = power_profile(r.rho, data.space);
    if (with_oos) {
        const auto [mean, worst] = out_of_sample_cost(policy, data.samples, data.utility, sc, data.rho0);
        r.oos_mean = mean;
        r.oos_worst = worst;
    }
    io::write_rho_csv(out_path(g, "rho_evaluate.csv"), r.rho);
    io::write_dispatch_result_json(out_path(g, "evaluation.json"), r, "rho_evaluate.csv");
    std::printf("objective=%.6f\n", r.objective);
    return 0;
}

// parameter sweeps mirroring the case-study tables; each cell re-solves on
// the shared scenario data
int cmd_report(const GlobalOpts& g, const ScenarioConfig& cfg, int table) {
    const ScenarioData data = load_scenario_data(g, cfg);
    const std::vector<double> gammas{0.05, 0.10, 1.00};

    auto solve_with = [&](MethodSpec m) { return solve_method(data, cfg, m); };
    auto delta_csv = [&](const std::string& name, const SolveOutput& base,
                         const std::vector<std::pair<std::string, SolveOutput>>& others) {
        std::ostringstream oss;
        oss << "t,standard_power_kw";
        for (const auto& [label, o] : others) oss << ",delta_" << label << "_kw";
        oss << "\n";
        for (std::size_t t = 0; t < base.result.power.size(); ++t) {
            oss << t << "," << io::format_double(base.result.power[t]);
            for (const auto& [label, o] : others)
                oss << "," << io::format_double(o.result.power[t] - base.result.power[t]);
            oss << "\n";
        }
        io::write_text_atomic(out_path(g, name), oss.str());
    };

    if (table == 2) {
        const std::vector<double> etas{0.0, 0.25, 0.5, 0.75, 1.0};
        std::ostringstream oss;
        oss << "gamma,eta_0.00,eta_0.25,eta_0.50,eta_0.75,eta_1.00\n";
        for (double gamma : gammas) {
            oss << io::format_double(gamma);
            for (double eta : etas) {
                MethodSpec m = cfg.method;
                m.name = "hybrid";
                m.gamma = gamma;
                m.eta = eta;
                oss << "," << io::format_double(solve_with(m).result.objective);
            }
            oss << "\n";
        }
        io::write_text_atomic(out_path(g, "table2.csv"), oss.str());
        for (double gamma : gammas) {
            MethodSpec std_m = cfg.method;
            std_m.name = "standard";
            std_m.gamma = gamma;
            MethodSpec sto = cfg.method;
            sto.name = "hybrid";
            sto.gamma = gamma;
            sto.eta = 1.0;
            MethodSpec wc = sto;
            wc.eta = 0.0;
            const SolveOutput base = solve_with(std_m);
            delta_csv("deltap_analytic_gamma" + io::format_double(gamma) + ".csv", base,
                      {{"stochastic", solve_with(sto)}, {"dro", solve_with(wc)}});
        }
        std::cout << "wrote " << out_path(g, "table2.csv") << "\n";
    } else if (table == 3) {
        const std::vector<double> conf{0.1, 0.01, 0.001};
        std::ostringstream oss;
        oss << "gamma,varsigma,xi_0.1,xi_0.01,xi_0.001\n";
        for (double gamma : gammas)
            for (double vs : conf) {
                oss << io::format_double(gamma) << "," << io::format_double(vs);
                for (double xi : conf) {
                    MethodSpec m = cfg.method;
                    m.name = "dro";
                    m.gamma = gamma;
                    m.varsigma = vs;
                    m.xi = xi;
                    oss << "," << io::format_double(solve_with(m).result.objective);
                }
                oss << "\n";
            }
        io::write_text_atomic(out_path(g, "table3.csv"), oss.str());
        std::cout << "wrote " << out_path(g, "table3.csv") << "\n";
    } else if (table == 4) {
        const std::vector<double> bs{0.05, 0.10, 0.20};
        const std::vector<double> cs{1.5, 2.0, 3.0};
        std::ostringstream oss;
        oss << "gamma,c,b_0.05,b_0.10,b_0.20\n";
        for (double gamma : gammas)
            for (double cc : cs) {
                oss << io::format_double(gamma) << "," << io::format_double(cc);
                for (double bb : bs) {
                    MethodSpec m = cfg.method;
                    m.name = "moment";
                    m.gamma = gamma;
                    m.b = bb;
                    m.c = cc;
                    oss << "," << io::format_double(solve_with(m).result.objective);
                }
                oss << "\n";
            }
        io::write_text_atomic(out_path(g, "table4.csv"), oss.str());
        for (double gamma : gammas) {
            MethodSpec std_m = cfg.method;
            std_m.name = "standard";
            std_m.gamma = gamma;
            MethodSpec mm = cfg.method;
            mm.name = "moment";
            mm.gamma = gamma;
            delta_csv("deltap_moment_gamma" + io::format_double(gamma) + ".csv", solve_with(std_m),
                      {{"moment", solve_with(mm)}});
        }
        std::cout << "wrote " << out_path(g, "table4.csv") << "\n";
    } else if (table == 5) {
        const std::vector<double> psis{0.5, 1.0, 2.0};
        std::ostringstream oss;
        oss << "gamma,psi_0.5,psi_1.0,psi_2.0\n";
        for (double gamma : gammas) {
            oss << io::format_double(gamma);
            for (double psi : psis) {
                MethodSpec m = cfg.method;
                m.name = "wasserstein";
                m.gamma = gamma;
                m.psi = psi;
                oss << "," << io::format_double(solve_with(m).result.objective);
            }
            oss << "\n";
        }
        io::write_text_atomic(out_path(g, "table5.csv"), oss.str());
        for (double gamma : gammas) {
            MethodSpec std_m = cfg.method;
            std_m.name = "standard";
            std_m.gamma = gamma;
            MethodSpec wm = cfg.method;
            wm.name = "wasserstein";
            wm.gamma = gamma;
            delta_csv("deltap_wasserstein_gamma" + io::format_double(gamma) + ".csv",
                      solve_with(std_m), {{"wasserstein", solve_with(wm)}});
        }
        std::cout << "wrote " << out_path(g, "table5.csv") << "\n";
    } else {
        throw config_error("report: --table must be one of 2, 3, 4, 5");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TCL ensemble dispatch under transition-probability uncertainty"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "scenario config (toml)");
    app.add_option("--out", g.out_dir, "artifact directory")->capture_default_str();
    std::int64_t seed_opt = -1;
    auto* seed_flag = app.add_option("--seed", seed_opt, "override the scenario seed");

    auto* sim = app.add_subcommand("simulate", "simulate the ensemble and write the power trace");
    double sim_hours = -1.0;
    bool sim_temps = false;
    sim->add_option("--hours", sim_hours, "simulation length in hours (default: config)");
    sim->add_flag("--temps", sim_temps, "also write per-device temperatures");

    auto* est = app.add_subcommand("estimate", "estimate the default transition matrix");
    std::string trace_file;
    est->add_option("--trace", trace_file, "power trace csv (default: <out>/trace.csv)");

    auto* smp = app.add_subcommand("sample", "generate the perturbed observation set");
    std::string nominal_file;
    double fraction = -1.0;
    int count = -1;
    smp->add_option("--nominal", nominal_file, "nominal matrix csv (default: <out>/nominal.csv)");
    smp->add_option("--fraction", fraction, "perturbation fraction (default: config)");
    smp->add_option("--count", count, "number of samples (default: config)");

    auto* sol = app.add_subcommand("solve", "compute a dispatch policy");
    std::string method_name;
    double opt_gamma = -1.0, opt_eta = -1.0, opt_varsigma = -1.0, opt_xi = -1.0, opt_b = -1.0,
           opt_c = -1.0, opt_psi = -1.0;
    int opt_grid = -1;
    std::string opt_mode;
    bool solve_oos = false;
    sol->add_option("--method", method_name,
                    "standard|stochastic|dro|hybrid|moment|wasserstein (default: config)");
    sol->add_option("--gamma", opt_gamma, "discomfort penalty");
    sol->add_option("--eta", opt_eta, "hybrid weight");
    sol->add_option("--varsigma", opt_varsigma, "mean-bound confidence");
    sol->add_option("--xi", opt_xi, "variance-bound confidence");
    sol->add_option("--b", opt_b, "moment mean slack");
    sol->add_option("--c", opt_c, "moment variance inflation");
    sol->add_option("--grid-points", opt_grid, "moment support discretization");
    sol->add_option("--psi", opt_psi, "wasserstein radius");
    sol->add_option("--mode", opt_mode, "wasserstein loss mode (weighted|literal)");
    sol->add_flag("--oos", solve_oos, "also report out-of-sample costs over the sample set");

    auto* eva = app.add_subcommand("evaluate", "evaluate a stored policy on the scenario");
    std::string policy_file;
    bool eval_oos = false;
    eva->add_option("--policy", policy_file, "policy csv")->required();
    eva->add_flag("--oos", eval_oos, "also report out-of-sample costs");

    auto* rep = app.add_subcommand("report", "run a case-study parameter sweep");
    int table = 0;
    rep->add_option("--table", table, "table number: 2, 3, 4 or 5")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (seed_flag->count() > 0) g.seed = seed_opt;
        ScenarioConfig cfg = load_config(g);
        if (sol->parsed()) {
            if (!method_name.empty()) cfg.method.name = method_name;
            if (opt_gamma >= 0.0) cfg.method.gamma = opt_gamma;
            if (opt_eta >= 0.0) cfg.method.eta = opt_eta;
            if (opt_varsigma >= 0.0) cfg.method.varsigma = opt_varsigma;
            if (opt_xi >= 0.0) cfg.method.xi = opt_xi;
            if (opt_b >= 0.0) cfg.method.b = opt_b;
            if (opt_c >= 0.0) cfg.method.c = opt_c;
            if (opt_grid > 0) cfg.method.grid_points = opt_grid;
            if (opt_psi >= 0.0) cfg.method.psi = opt_psi;
            if (!opt_mode.empty()) cfg.method.mode = opt_mode;
            cfg.validate();
        }
        if (sim->parsed()) return cmd_simulate(g, cfg, sim_hours, sim_temps);
        if (est->parsed()) return cmd_estimate(g, cfg, trace_file);
        if (smp->parsed()) return cmd_sample(g, cfg, nominal_file, fraction, count);
        if (sol->parsed()) return cmd_solve(g, cfg, solve_oos);
        if (eva->parsed()) return cmd_evaluate(g, cfg, policy_file, eval_oos);
        if (rep->parsed()) return cmd_report(g, cfg, table);
        std::cerr << "error=config reason=no subcommand\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "error=config reason=" << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "error=numerical reason=" << e.what() << "\n";
        return 3;
    } catch (const data_error& e) {
        std::cerr << "error=data reason=" << e.what() << "\n";
        return 4;
    } catch (const domain_error& e) {
        std::cerr << "error=data reason=" << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error=internal reason=" << e.what() << "\n";
        return 3;
    }
}
