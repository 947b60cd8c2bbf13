#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tcldro/bellman.hpp"
#include "tcldro/config.hpp"
#include "tcldro/dro_moment.hpp"
#include "tcldro/dro_wasserstein.hpp"
#include "tcldro/evaluate.hpp"
#include "tcldro/io.hpp"
#include "tcldro/markov_model.hpp"
#include "tcldro/thermal_sim.hpp"

namespace tcldro {

// Everything the solvers need, produced once per scenario:
// simulate -> thin -> discretize -> estimate -> perturb -> moments.
struct ScenarioData {
    StateSpace space;
    std::vector<double> thinned_power; // post burn-in, at the dispatch step
    std::vector<int> state_series;
    Matrix nominal;
    SampleSet samples;
    MomentMatrices moments;
    std::vector<double> rho0;
    Utility utility;
    std::vector<double> prices; // per dispatch step
};

inline std::vector<double> initial_distribution(const std::vector<int>& states, int n,
                                                const std::string& mode) {
    std::vector<double> rho(n, 0.0);
    if (mode == "uniform") {
        for (double& v : rho) v = 1.0 / n;
    } else if (mode == "occupancy") {
        for (int s : states) rho[s] += 1.0;
        for (double& v : rho) v /= states.size();
    } else { // last-state
        rho[states.back()] = 1.0;
    }
    return rho;
}

inline ScenarioData build_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioData data;

    const int sim_steps = static_cast<int>(std::lround(cfg.sim_hours / cfg.tcl.step_hours));
    const int stride = std::max(1, static_cast<int>(std::lround(cfg.mdp_step_hours / cfg.tcl.step_hours)));
    const EnsembleTrace trace = simulate_ensemble(cfg.tcl, cfg.devices, cfg.ambient, sim_steps,
                                                  cfg.seed, /*store_temperatures=*/false);
    const std::vector<double> thinned = thin_series(trace.aggregate_power, stride);
    const int burn = static_cast<int>(std::lround(cfg.burn_in_hours / cfg.mdp_step_hours));
    if (burn >= static_cast<int>(thinned.size()))
        throw config_error("build_scenario: burn-in leaves no samples");
    data.thinned_power.assign(thinned.begin() + burn, thinned.end());

    auto [space, states] = discretize(data.thinned_power, cfg.states);
    data.space = std::move(space);
    data.state_series = std::move(states);
    data.nominal = estimate_transitions(data.state_series, cfg.states);
    if (cfg.smoothing_eps > 0.0)
        data.nominal = smooth_deterministic_columns(data.nominal, cfg.smoothing_eps);
    data.samples = perturb_samples(data.nominal, cfg.perturb_fraction, cfg.sample_count,
                                   derive_seed(cfg.seed, 0x5a3f17ULL));
    data.moments = sample_moments(data.samples);
    if (cfg.pooled_variance) data.moments = pool_variance(data.moments);
    data.rho0 = initial_distribution(data.state_series, cfg.states, cfg.rho0_mode);

    if (!cfg.price_file.empty()) {
        data.prices = io::read_price_csv(cfg.price_file);
        if (static_cast<int>(data.prices.size()) < cfg.horizon)
            throw config_error("build_scenario: price series shorter than the horizon");
        data.prices.resize(cfg.horizon);
    } else {
        data.prices.assign(cfg.horizon, cfg.flat_price);
    }
    data.utility = Utility::from_prices(data.prices, data.space.rated_power);
    return data;
}

inline SolveConfig make_solve_config(const ScenarioConfig& cfg, double gamma) {
    SolveConfig sc;
    sc.gamma = gamma;
    sc.horizon = cfg.horizon;
    sc.terminal = cfg.terminal == "ones" ? TerminalRule::ones : TerminalRule::last_utility;
    sc.eta = cfg.method.eta;
    return sc;
}

struct SolveOutput {
    Policy policy;
    ValueFunction value_function;
    DispatchResult result;
    std::vector<MomentEntryReport> moment_report;        // moment method only
    std::vector<WassersteinDiagnostic> wasserstein_diag; // wasserstein method only
};

// Mean / worst of the standard-model cost across a sample set used as
// reference matrices (out-of-sample audit).
inline std::pair<double, double> out_of_sample_cost(const Policy& policy, const SampleSet& samples,
                                                    const Utility& utility, const SolveConfig& sc,
                                                    const std::vector<double>& rho0) {
    double sum = 0.0, worst = -std::numeric_limits<double>::infinity();
    for (const Matrix& ref : samples.matrices) {
        const double c = expected_cost(policy, CostModel::standard(ref), utility, sc, rho0);
        sum += c;
        worst = std::max(worst, c);
    }
    return {sum / samples.size(), worst};
}

// Solves one method on prepared scenario data. The reported objective is
// evaluated under that method's own cost model.
inline SolveOutput solve_method(const ScenarioData& data, const ScenarioConfig& cfg,
                                const MethodSpec& method, bool with_oos = false) {
    const SolveConfig sc = make_solve_config(cfg, method.gamma);
    const auto exponent = cfg.exponent_convention == "appendix" ? ExponentConvention::appendix
                                                                : ExponentConvention::theorem;
    const auto chi2conv = cfg.chi2_convention == "standard" ? VarianceBoundConvention::standard
                                                            : VarianceBoundConvention::paper_literal;
    SolveOutput out;
    DispatchResult& r = out.result;
    r.method = method.name;
    r.gamma = method.gamma;

    if (method.name == "standard") {
        const ZTerm zt = z_term_standard(data.nominal);
        out.value_function = backward_recursion(zt, data.utility, sc);
        out.policy = policy_from_z(zt, out.value_function, sc);
        r.objective = expected_cost(out.policy, CostModel::from_zterm(zt), data.utility, sc, data.rho0);
    } else if (method.name == "stochastic") {
        const ZTerm zt = z_term_stochastic(data.moments, sc.gamma, exponent);
        out.value_function = backward_recursion(zt, data.utility, sc);
        out.policy = policy_from_z(zt, out.value_function, sc);
        r.objective = expected_cost(out.policy, CostModel::from_zterm(zt), data.utility, sc, data.rho0);
    } else if (method.name == "dro") {
        const BoundsMatrices bounds =
            confidence_bounds(data.moments, data.samples.size(), method.varsigma, method.xi, chi2conv);
        const ZTerm zt = z_term_dro(bounds, sc.gamma, exponent);
        out.value_function = backward_recursion(zt, data.utility, sc);
        out.policy = policy_from_z(zt, out.value_function, sc);
        r.objective = expected_cost(out.policy, CostModel::from_zterm(zt), data.utility, sc, data.rho0);
        r.xi = method.xi;
        r.varsigma = method.varsigma;
    } else if (method.name == "hybrid") {
        const ZTerm zt_e = z_term_stochastic(data.moments, sc.gamma, exponent);
        const BoundsMatrices bounds =
            confidence_bounds(data.moments, data.samples.size(), method.varsigma, method.xi, chi2conv);
        const ZTerm zt_wc = z_term_dro(bounds, sc.gamma, exponent);
        const ValueFunction vf_e = backward_recursion(zt_e, data.utility, sc);
        const ValueFunction vf_wc = backward_recursion(zt_wc, data.utility, sc);
        const Policy p_e = policy_from_z(zt_e, vf_e, sc);
        const Policy p_wc = policy_from_z(zt_wc, vf_wc, sc);
        out.policy = hybrid_policy(p_wc, p_e, method.eta);
        out.value_function = vf_wc;
        // hybrid objective: (1 - eta) O^WC + eta O^E at the mixed policy
        const double cost_wc =
            expected_cost(out.policy, CostModel::from_zterm(zt_wc), data.utility, sc, data.rho0);
        const double cost_e =
            expected_cost(out.policy, CostModel::from_zterm(zt_e), data.utility, sc, data.rho0);
        r.objective = (1.0 - method.eta) * cost_wc + method.eta * cost_e;
        r.eta = method.eta;
        r.xi = method.xi;
        r.varsigma = method.varsigma;
    } else if (method.name == "moment") {
        MomentSolveResult m = solve_moment_mdp(data.moments, method.b, method.c, data.utility, sc,
                                               data.rho0, method.grid_points);
        out.policy = std::move(m.policy);
        out.value_function = std::move(m.value_function);
        out.moment_report = std::move(m.report);
        r.objective = m.objective;
        r.b = method.b;
        r.c = method.c;
    } else if (method.name == "wasserstein") {
        const auto mode =
            method.mode == "literal" ? WassersteinMode::literal : WassersteinMode::weighted;
        WassersteinSolveResult w =
            solve_wasserstein_mdp(data.samples, method.psi, data.utility, sc, data.rho0, mode);
        out.policy = std::move(w.policy);
        out.value_function = std::move(w.value_function);
        out.wasserstein_diag = std::move(w.diagnostics);
        r.objective = w.objective;
        r.psi = method.psi;
        r.mode = method.mode;
    } else {
        throw config_error("solve_method: unknown method " + method.name);
    }

    r.rho = forward_evolve(data.rho0, out.policy);
    r.power = power_profile(r.rho, data.space);
    if (with_oos) {
        const auto [mean, worst] = out_of_sample_cost(out.policy, data.samples, data.utility, sc, data.rho0);
        r.oos_mean = mean;
        r.oos_worst = worst;
    }
    return out;
}

} // namespace tcldro
