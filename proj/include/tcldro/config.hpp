#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "tcldro/errors.hpp"
#include "tcldro/thermal_sim.hpp"

namespace tcldro {

// Minimal TOML-style reader: [section] headers, `key = value` pairs,
// strings, numbers, booleans and # comments. Enough for scenario files;
// unknown keys are rejected by the consumer, not the parser.
class TomlTable {
  public:
    static TomlTable parse(const std::string& text) {
        TomlTable t;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = strip_comment(line);
            const std::string trimmed = trim(s);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw config_error("toml: malformed section header at line " + std::to_string(lineno));
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw config_error("toml: expected key = value at line " + std::to_string(lineno));
            const std::string key = trim(trimmed.substr(0, eq));
            std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty() || value.empty())
                throw config_error("toml: empty key or value at line " + std::to_string(lineno));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                value = value.substr(1, value.size() - 2);
            t.values_[section.empty() ? key : section + "." + key] = value;
        }
        return t;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' is not a number: " + it->second);
        }
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const std::int64_t v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' is not an integer: " + it->second);
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        throw config_error("config: key '" + key + "' is not a boolean: " + it->second);
    }

  private:
    static std::string strip_comment(const std::string& line) {
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) return line.substr(0, i);
        }
        return line;
    }
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    std::map<std::string, std::string> values_;
};

struct MethodSpec {
    std::string name = "standard"; // standard|stochastic|dro|hybrid|moment|wasserstein
    double gamma = 0.1;
    double eta = 0.5;       // hybrid weight
    double varsigma = 0.1;  // mean-bound confidence
    double xi = 0.001;      // variance-bound confidence
    double b = 0.1;         // moment mean slack
    double c = 2.0;         // moment variance inflation
    int grid_points = 201;  // moment support discretization
    double psi = 1.0;       // wasserstein radius
    std::string mode = "weighted"; // wasserstein loss mode
};

struct ScenarioConfig {
    TclParams tcl;
    int devices = 1000;
    double ambient = 32.0;       // degC, constant profile
    double sim_hours = 240.0;    // estimation window
    double burn_in_hours = 24.0; // dropped before estimation
    int states = 8;
    int horizon = 24;            // dispatch steps
    double mdp_step_hours = 1.0;
    int sample_count = 1000;
    double perturb_fraction = 0.15;
    double flat_price = 0.1;     // $/kWh
    std::string price_file;      // optional csv `t,price`
    double smoothing_eps = 0.0;
    std::string terminal = "last-utility"; // or "ones"
    bool pooled_variance = false;
    std::string chi2_convention = "paper";       // or "standard"
    std::string exponent_convention = "theorem"; // or "appendix"
    std::string rho0_mode = "last-state";        // last-state|uniform|occupancy
    MethodSpec method;
    std::uint64_t seed = 1;

    void validate() const {
        tcl.validate();
        if (devices < 1) throw config_error("config: ensemble.devices must be >= 1");
        if (!(sim_hours > 0.0)) throw config_error("config: ensemble.sim_hours must be > 0");
        if (burn_in_hours < 0.0 || burn_in_hours >= sim_hours)
            throw config_error("config: ensemble.burn_in_hours must be in [0, sim_hours)");
        if (states < 2) throw config_error("config: mdp.states must be >= 2");
        if (horizon < 1) throw config_error("config: mdp.horizon must be >= 1");
        if (!(mdp_step_hours > 0.0)) throw config_error("config: mdp.step_hours must be > 0");
        if (sample_count < 2) throw config_error("config: samples.count must be >= 2");
        if (!(perturb_fraction >= 0.0 && perturb_fraction < 1.0))
            throw config_error("config: samples.fraction must be in [0, 1)");
        if (!(method.gamma > 0.0)) throw config_error("config: method.gamma must be > 0");
        if (!(method.eta >= 0.0 && method.eta <= 1.0))
            throw config_error("config: method.eta must be in [0, 1]");
        if (!(method.varsigma > 0.0 && method.varsigma < 1.0))
            throw config_error("config: method.varsigma must be in (0, 1)");
        if (!(method.xi > 0.0 && method.xi < 1.0))
            throw config_error("config: method.xi must be in (0, 1)");
        if (method.b < 0.0) throw config_error("config: method.b must be >= 0");
        if (method.grid_points < 1) throw config_error("config: method.grid_points must be >= 1");
        if (method.psi < 0.0) throw config_error("config: method.psi must be >= 0");
        if (method.mode != "weighted" && method.mode != "literal")
            throw config_error("config: method.mode must be weighted or literal");
        if (terminal != "last-utility" && terminal != "ones")
            throw config_error("config: utility.terminal must be last-utility or ones");
        if (chi2_convention != "paper" && chi2_convention != "standard")
            throw config_error("config: method.chi2_convention must be paper or standard");
        if (exponent_convention != "theorem" && exponent_convention != "appendix")
            throw config_error("config: method.exponent_convention must be theorem or appendix");
        if (rho0_mode != "last-state" && rho0_mode != "uniform" && rho0_mode != "occupancy")
            throw config_error("config: run.rho0 must be last-state, uniform or occupancy");
        static const char* names[] = {"standard", "stochastic", "dro", "hybrid", "moment", "wasserstein"};
        bool ok = false;
        for (const char* nm : names) ok = ok || method.name == nm;
        if (!ok) throw config_error("config: unknown method name: " + method.name);
    }

    static ScenarioConfig from_toml(const TomlTable& t) {
        ScenarioConfig c;
        c.tcl.thermal_resistance = t.get_double("tcl.r", c.tcl.thermal_resistance);
        c.tcl.thermal_capacitance = t.get_double("tcl.c", c.tcl.thermal_capacitance);
        c.tcl.rated_power = t.get_double("tcl.p_rated", c.tcl.rated_power);
        c.tcl.cop = t.get_double("tcl.cop", c.tcl.cop);
        c.tcl.setpoint = t.get_double("tcl.setpoint_c", c.tcl.setpoint);
        c.tcl.deadband = t.get_double("tcl.deadband_c", c.tcl.deadband);
        c.tcl.step_hours = t.get_double("tcl.sim_step_hours", c.tcl.step_hours);
        c.tcl.noise_std = t.get_double("tcl.noise_std_c", c.tcl.noise_std);
        c.devices = static_cast<int>(t.get_int("ensemble.devices", c.devices));
        c.ambient = t.get_double("ensemble.ambient_c", c.ambient);
        c.sim_hours = t.get_double("ensemble.sim_hours", c.sim_hours);
        c.burn_in_hours = t.get_double("ensemble.burn_in_hours", c.burn_in_hours);
        c.states = static_cast<int>(t.get_int("mdp.states", c.states));
        c.horizon = static_cast<int>(t.get_int("mdp.horizon", c.horizon));
        c.mdp_step_hours = t.get_double("mdp.step_hours", c.mdp_step_hours);
        c.sample_count = static_cast<int>(t.get_int("samples.count", c.sample_count));
        c.perturb_fraction = t.get_double("samples.fraction", c.perturb_fraction);
        c.smoothing_eps = t.get_double("samples.smoothing_eps", c.smoothing_eps);
        c.flat_price = t.get_double("utility.price_per_kwh", c.flat_price);
        c.price_file = t.get_string("utility.price_file", c.price_file);
        c.terminal = t.get_string("utility.terminal", c.terminal);
        c.method.name = t.get_string("method.name", c.method.name);
        c.method.gamma = t.get_double("method.gamma", c.method.gamma);
        c.method.eta = t.get_double("method.eta", c.method.eta);
        c.method.varsigma = t.get_double("method.varsigma", c.method.varsigma);
        c.method.xi = t.get_double("method.xi", c.method.xi);
        c.method.b = t.get_double("method.b", c.method.b);
        c.method.c = t.get_double("method.c", c.method.c);
        c.method.grid_points = static_cast<int>(t.get_int("method.grid_points", c.method.grid_points));
        c.method.psi = t.get_double("method.psi", c.method.psi);
        c.method.mode = t.get_string("method.mode", c.method.mode);
        c.pooled_variance = t.get_bool("method.pooled_variance", c.pooled_variance);
        c.chi2_convention = t.get_string("method.chi2_convention", c.chi2_convention);
        c.exponent_convention = t.get_string("method.exponent_convention", c.exponent_convention);
        c.rho0_mode = t.get_string("run.rho0", c.rho0_mode);
        c.seed = static_cast<std::uint64_t>(t.get_int("run.seed", static_cast<std::int64_t>(c.seed)));
        c.validate();
        return c;
    }
};

} // namespace tcldro
