#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcldro/bellman.hpp"
#include "tcldro/dro_moment.hpp"
#include "tcldro/dro_wasserstein.hpp"
#include "tcldro/errors.hpp"
#include "tcldro/evaluate.hpp"
#include "tcldro/markov_model.hpp"
#include "tcldro/matrix.hpp"
#include "tcldro/thermal_sim.hpp"

namespace tcldro {

namespace io {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// write-to-temp + rename so partially written artifacts are never visible
inline void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw data_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::istringstream in(read_text(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw data_error("empty csv: " + path);
    return rows;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error("cannot parse number '" + s + "' in " + context);
    }
}

// Matrix CSV: row index = destination alpha, column index = origin beta,
// header `to\from,s0,...,s{n-1}`, row labels s0..s{n-1}.
inline std::string matrix_csv(const Matrix& m) {
    std::ostringstream oss;
    oss << "to\\from";
    for (int b = 0; b < m.cols(); ++b) oss << ",s" << b;
    oss << "\n";
    for (int a = 0; a < m.rows(); ++a) {
        oss << "s" << a;
        for (int b = 0; b < m.cols(); ++b) oss << "," << format_double(m(a, b));
        oss << "\n";
    }
    return oss.str();
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
    write_text_atomic(path, matrix_csv(m));
}

inline Matrix read_matrix_csv(const std::string& path) {
    const auto rows = read_csv(path);
    const int n = static_cast<int>(rows[0].size()) - 1;
    if (n < 1 || static_cast<int>(rows.size()) != n + 1)
        throw data_error("matrix csv is not square: " + path);
    Matrix m(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) m(a, b) = parse_double(rows[a + 1][b + 1], path);
    require_column_stochastic(m, path.c_str());
    return m;
}

// SampleSet CSV: matrix layout with a leading sample_id column.
inline void write_samples_csv(const std::string& path, const SampleSet& set) {
    std::ostringstream oss;
    const int n = set.matrices.at(0).rows();
    oss << "sample_id,to\\from";
    for (int b = 0; b < n; ++b) oss << ",s" << b;
    oss << "\n";
    for (int j = 0; j < set.size(); ++j)
        for (int a = 0; a < n; ++a) {
            oss << j << ",s" << a;
            for (int b = 0; b < n; ++b) oss << "," << format_double(set.matrices[j](a, b));
            oss << "\n";
        }
    write_text_atomic(path, oss.str());
}

inline SampleSet read_samples_csv(const std::string& path) {
    const auto rows = read_csv(path);
    const int n = static_cast<int>(rows[0].size()) - 2;
    if (n < 1 || (rows.size() - 1) % n != 0) throw data_error("malformed sample set csv: " + path);
    const int count = static_cast<int>((rows.size() - 1) / n);
    SampleSet set;
    set.provenance = "observed";
    set.matrices.assign(count, Matrix(n, n));
    for (int j = 0; j < count; ++j) {
        for (int a = 0; a < n; ++a) {
            const auto& row = rows[1 + static_cast<std::size_t>(j) * n + a];
            for (int b = 0; b < n; ++b) set.matrices[j](a, b) = parse_double(row[b + 2], path);
        }
        require_column_stochastic(set.matrices[j], path.c_str());
    }
    return set;
}

inline void write_state_space_json(const std::string& path, const StateSpace& space) {
    nlohmann::json j;
    j["n"] = space.n;
    j["bin_edges"] = space.bin_edges;
    j["p_rated_state"] = space.rated_power;
    write_text_atomic(path, j.dump(2) + "\n");
}

inline StateSpace read_state_space_json(const std::string& path) {
    const nlohmann::json j = nlohmann::json::parse(read_text(path));
    StateSpace space;
    space.n = j.at("n").get<int>();
    space.bin_edges = j.at("bin_edges").get<std::vector<double>>();
    space.rated_power = j.at("p_rated_state").get<std::vector<double>>();
    if (static_cast<int>(space.bin_edges.size()) != space.n + 1 ||
        static_cast<int>(space.rated_power.size()) != space.n)
        throw data_error("inconsistent state space json: " + path);
    return space;
}

inline void write_trace_csv(const std::string& path, const EnsembleTrace& trace) {
    std::ostringstream oss;
    oss << "step,aggregate_power_kw\n";
    for (int k = 0; k < trace.steps; ++k)
        oss << k << "," << format_double(trace.aggregate_power[k]) << "\n";
    write_text_atomic(path, oss.str());
}

inline std::vector<double> read_trace_csv(const std::string& path) {
    const auto rows = read_csv(path);
    std::vector<double> power;
    power.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) power.push_back(parse_double(rows[i][1], path));
    return power;
}

inline void write_temperatures_csv(const std::string& path, const EnsembleTrace& trace) {
    std::ostringstream oss;
    oss << "step,device_id,theta_c\n";
    for (int k = 0; k < trace.steps; ++k)
        for (int d = 0; d < trace.devices; ++d)
            oss << k << "," << d << "," << format_double(trace.temperature(k, d)) << "\n";
    write_text_atomic(path, oss.str());
}

// Policy CSV: one block per time step with a leading t column.
inline void write_policy_csv(const std::string& path, const Policy& policy) {
    std::ostringstream oss;
    const int n = policy.states();
    oss << "t,to\\from";
    for (int b = 0; b < n; ++b) oss << ",s" << b;
    oss << "\n";
    for (int t = 0; t < policy.horizon(); ++t)
        for (int a = 0; a < n; ++a) {
            oss << t << ",s" << a;
            for (int b = 0; b < n; ++b) oss << "," << format_double(policy.steps[t](a, b));
            oss << "\n";
        }
    write_text_atomic(path, oss.str());
}

inline Policy read_policy_csv(const std::string& path) {
    const auto rows = read_csv(path);
    const int n = static_cast<int>(rows[0].size()) - 2;
    if (n < 1 || (rows.size() - 1) % n != 0) throw data_error("malformed policy csv: " + path);
    const int horizon = static_cast<int>((rows.size() - 1) / n);
    Policy policy;
    policy.steps.assign(horizon, Matrix(n, n));
    for (int t = 0; t < horizon; ++t) {
        for (int a = 0; a < n; ++a) {
            const auto& row = rows[1 + static_cast<std::size_t>(t) * n + a];
            for (int b = 0; b < n; ++b) policy.steps[t](a, b) = parse_double(row[b + 2], path);
        }
        require_column_stochastic(policy.steps[t], path.c_str());
    }
    return policy;
}

inline void write_value_function_csv(const std::string& path, const ValueFunction& vf) {
    std::ostringstream oss;
    oss << "t,state,phi,z\n";
    for (int t = 0; t <= vf.horizon; ++t)
        for (int a = 0; a < vf.n; ++a)
            oss << t << "," << a << "," << format_double(vf.phi(t, a)) << ","
                << format_double(vf.z(t, a)) << "\n";
    write_text_atomic(path, oss.str());
}

inline void write_rho_csv(const std::string& path, const std::vector<std::vector<double>>& rho) {
    std::ostringstream oss;
    const int n = rho.empty() ? 0 : static_cast<int>(rho[0].size());
    oss << "t";
    for (int b = 0; b < n; ++b) oss << ",s" << b;
    oss << "\n";
    for (std::size_t t = 0; t < rho.size(); ++t) {
        oss << t;
        for (int b = 0; b < n; ++b) oss << "," << format_double(rho[t][b]);
        oss << "\n";
    }
    write_text_atomic(path, oss.str());
}

inline void write_moment_report_csv(const std::string& path,
                                    const std::vector<MomentEntryReport>& report) {
    std::ostringstream oss;
    oss << "alpha,beta,m,sigma2,b,c,primal,dual,gap\n";
    for (const auto& r : report)
        oss << r.alpha << "," << r.beta << "," << format_double(r.mean) << ","
            << format_double(r.sigma2) << "," << format_double(r.b) << "," << format_double(r.c)
            << "," << format_double(r.primal) << "," << format_double(r.dual) << ","
            << format_double(r.gap) << "\n";
    write_text_atomic(path, oss.str());
}

inline void write_wasserstein_diag_csv(const std::string& path,
                                       const std::vector<WassersteinDiagnostic>& diags) {
    std::ostringstream oss;
    oss << "t,beta,lambda_star,worst_case,n_candidates,cuts_used\n";
    for (const auto& d : diags)
        oss << d.t << "," << d.beta << "," << format_double(d.lambda) << ","
            << format_double(d.worst_case) << "," << d.n_candidates << "," << d.cuts_used << "\n";
    write_text_atomic(path, oss.str());
}

inline void write_dispatch_result_json(const std::string& path, const DispatchResult& r,
                                       const std::string& rho_path) {
    nlohmann::json j;
    j["method"] = r.method;
    j["gamma"] = r.gamma;
    nlohmann::json params;
    auto put = [&params](const char* key, double v) {
        if (std::isnan(v))
            params[key] = nullptr;
        else
            params[key] = v;
    };
    put("eta", r.eta);
    put("xi", r.xi);
    put("varsigma", r.varsigma);
    put("b", r.b);
    put("c", r.c);
    put("psi", r.psi);
    if (!r.mode.empty()) params["mode"] = r.mode;
    j["params"] = params;
    j["objective"] = r.objective;
    if (!std::isnan(r.oos_mean)) j["oos_mean"] = r.oos_mean;
    if (!std::isnan(r.oos_worst)) j["oos_worst"] = r.oos_worst;
    j["power"] = r.power;
    j["rho_path"] = rho_path;
    write_text_atomic(path, j.dump(2) + "\n");
}

// price series csv with header `t,price`
inline std::vector<double> read_price_csv(const std::string& path) {
    const auto rows = read_csv(path);
    std::vector<double> prices;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 2) throw data_error("malformed price csv: " + path);
        prices.push_back(parse_double(rows[i][1], path));
    }
    if (prices.empty()) throw data_error("empty price csv: " + path);
    return prices;
}

inline void write_vector_csv(const std::string& path, const std::string& header,
                             const std::vector<double>& values) {
    std::ostringstream oss;
    oss << header << "\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        oss << i << "," << format_double(values[i]) << "\n";
    write_text_atomic(path, oss.str());
}

inline std::vector<double> read_rho0_csv(const std::string& path) {
    const auto rows = read_csv(path);
    std::vector<double> rho;
    for (std::size_t i = 1; i < rows.size(); ++i)
        rho.push_back(parse_double(rows[i].back(), path));
    return rho;
}

} // namespace io

} // namespace tcldro
