#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "tcldro/errors.hpp"
#include "tcldro/rng.hpp"

namespace tcldro {

// Parameters of one air conditioner: first-order thermal model with a
// hysteretic (deadband) thermostat.
struct TclParams {
    double thermal_resistance = 2.0;   // R, degC per kW
    double thermal_capacitance = 10.0; // C, kWh per degC
    double rated_power = 5.6;          // electrical draw when on, kW
    double cop = 2.5;                  // thermal efficiency (aleph)
    double setpoint = 22.5;            // degC
    double deadband = 0.5;             // half-width, degC
    double step_hours = 1.0 / 60.0;    // h
    double noise_std = 0.05;           // degC per step

    // decay factor of the indoor temperature over one step
    double decay() const { return std::exp(-step_hours / (thermal_resistance * thermal_capacitance)); }

    void validate() const {
        if (!(thermal_resistance > 0.0) || !(thermal_capacitance > 0.0) || !(rated_power > 0.0) ||
            !(cop > 0.0) || !(deadband >= 0.0) || !(step_hours > 0.0) || !(noise_std >= 0.0))
            throw domain_error("TclParams: parameter outside its domain");
    }
};

struct TclState {
    double temperature = 0.0; // degC
    int on = 0;               // compressor state, 0 or 1
};

// One simulated ensemble: per-step aggregate power and (optionally)
// per-step per-device temperatures.
struct EnsembleTrace {
    int steps = 0;
    int devices = 0;
    std::vector<double> aggregate_power;     // kW, length steps
    std::vector<double> temperatures;        // row-major steps x devices; empty if not stored
    double temperature(int step, int device) const {
        return temperatures[static_cast<std::size_t>(step) * devices + device];
    }
};

// Advances one device by one step. The temperature update uses the
// incoming compressor state; the thermostat then switches on the updated
// temperature (measure-then-switch).
inline TclState step_tcl(const TclState& state, const TclParams& p, double ambient, double noise) {
    const double rho = p.decay();
    const double target = ambient - p.cop * p.thermal_resistance * p.rated_power * state.on;
    TclState next;
    next.temperature = rho * state.temperature + (1.0 - rho) * target + noise;
    if (next.temperature > p.setpoint + p.deadband)
        next.on = 1;
    else if (next.temperature < p.setpoint - p.deadband)
        next.on = 0;
    else
        next.on = state.on;
    return next;
}

// Simulates `devices` independent units over `steps` steps. Initial
// temperatures are uniform in the deadband and initial compressor states
// Bernoulli(0.5); each device evolves on its own derived sub-seed, so the
// trace is reproducible independent of evaluation order. Entry k of the
// trace holds the state after the k-th update.
inline EnsembleTrace simulate_ensemble(const TclParams& params, int devices,
                                       const std::vector<double>& ambient_series, int steps,
                                       std::uint64_t seed, bool store_temperatures = true) {
    params.validate();
    if (steps < 1 || devices < 1) throw domain_error("simulate_ensemble: need steps >= 1 and devices >= 1");
    if (static_cast<int>(ambient_series.size()) != steps) {
        std::ostringstream oss;
        oss << "simulate_ensemble: ambient series length " << ambient_series.size()
            << " does not match steps " << steps;
        throw data_error(oss.str());
    }

    EnsembleTrace trace;
    trace.steps = steps;
    trace.devices = devices;
    trace.aggregate_power.assign(steps, 0.0);
    if (store_temperatures)
        trace.temperatures.assign(static_cast<std::size_t>(steps) * devices, 0.0);

    for (int d = 0; d < devices; ++d) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
        TclState s;
        s.temperature = rng.uniform(params.setpoint - params.deadband, params.setpoint + params.deadband);
        s.on = rng.bernoulli(0.5) ? 1 : 0;
        for (int k = 0; k < steps; ++k) {
            const double noise = params.noise_std > 0.0 ? rng.normal(0.0, params.noise_std) : 0.0;
            s = step_tcl(s, params, ambient_series[k], noise);
            if (s.on) trace.aggregate_power[k] += params.rated_power;
            if (store_temperatures)
                trace.temperatures[static_cast<std::size_t>(k) * devices + d] = s.temperature;
        }
    }
    return trace;
}

inline EnsembleTrace simulate_ensemble(const TclParams& params, int devices, double ambient,
                                       int steps, std::uint64_t seed, bool store_temperatures = true) {
    return simulate_ensemble(params, devices, std::vector<double>(steps, ambient), steps, seed,
                             store_temperatures);
}

// Keeps the sample at the end of each block of `stride` steps; used to
// thin a sub-hourly simulation to the dispatch step.
inline std::vector<double> thin_series(const std::vector<double>& series, int stride) {
    if (stride < 1) throw domain_error("thin_series: stride must be >= 1");
    std::vector<double> out;
    out.reserve(series.size() / stride);
    for (std::size_t k = static_cast<std::size_t>(stride) - 1; k < series.size();
         k += static_cast<std::size_t>(stride))
        out.push_back(series[k]);
    return out;
}

} // namespace tcldro
