#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tcldro/bellman.hpp"
#include "tcldro/errors.hpp"
#include "tcldro/markov_model.hpp"
#include "tcldro/matrix.hpp"

namespace tcldro {

inline void require_simplex(const std::vector<double>& rho, const char* what, double tol = 1e-9) {
    double sum = 0.0;
    for (double v : rho) {
        if (!(v >= -tol)) throw data_error(std::string(what) + ": negative probability entry");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > tol) throw data_error(std::string(what) + ": distribution does not sum to 1");
}

// rho_{t+1}^alpha = sum_beta P_t^{alpha beta} rho_t^beta, returning all
// T + 1 distributions.
inline std::vector<std::vector<double>> forward_evolve(const std::vector<double>& rho0,
                                                       const Policy& policy) {
    const int n = static_cast<int>(rho0.size());
    require_simplex(rho0, "forward_evolve");
    std::vector<std::vector<double>> rho;
    rho.reserve(policy.horizon() + 1);
    rho.push_back(rho0);
    for (int t = 0; t < policy.horizon(); ++t) {
        const Matrix& p = policy.steps[t];
        if (p.rows() != n || p.cols() != n) throw data_error("forward_evolve: policy shape mismatch");
        for (int b = 0; b < n; ++b) {
            if (std::fabs(column_sum(p, b) - 1.0) > 1e-9) {
                std::ostringstream oss;
                oss << "forward_evolve: policy column " << b << " at t=" << t << " is not stochastic";
                throw data_error(oss.str());
            }
        }
        std::vector<double> next(n, 0.0);
        for (int b = 0; b < n; ++b) {
            const double rb = rho.back()[b];
            if (rb == 0.0) continue;
            for (int a = 0; a < n; ++a) next[a] += p(a, b) * rb;
        }
        rho.push_back(std::move(next));
    }
    return rho;
}

// p_t = sum_beta rated_power[beta] * rho_t^beta
inline std::vector<double> power_profile(const std::vector<std::vector<double>>& rho,
                                         const StateSpace& space) {
    std::vector<double> power;
    power.reserve(rho.size());
    for (const auto& dist : rho) {
        if (static_cast<int>(dist.size()) != space.n)
            throw data_error("power_profile: distribution size does not match state space");
        double p = 0.0;
        for (int b = 0; b < space.n; ++b) p += space.rated_power[b] * dist[b];
        power.push_back(p);
    }
    return power;
}

// Stage-cost description used when pricing a policy: reference matrix for
// the log-ratio term, per-transition surcharge constants, and optional
// per-(t, beta) additive constants. Each solve method prices against its
// own model, so reported objectives line up with that method's problem.
struct CostModel {
    Matrix base;          // reference; support must contain the policy support
    Matrix surcharge;     // $ per transition, weighted by the policy
    StageConstants stage; // optional $ per (t, beta)

    static CostModel standard(const Matrix& pbar) {
        return CostModel{pbar, Matrix(pbar.rows(), pbar.cols(), 0.0), StageConstants()};
    }
    static CostModel from_zterm(const ZTerm& zt) {
        return CostModel{zt.base, zt.surcharge, StageConstants()};
    }
    // base of all ones on the given support: the log-ratio term degenerates
    // to the negative policy entropy
    static CostModel entropy_only(const Matrix& support_from, StageConstants stage = StageConstants()) {
        Matrix ones(support_from.rows(), support_from.cols(), 0.0);
        for (int a = 0; a < support_from.rows(); ++a)
            for (int b = 0; b < support_from.cols(); ++b)
                if (support_from(a, b) > 0.0) ones(a, b) = 1.0;
        return CostModel{std::move(ones), Matrix(support_from.rows(), support_from.cols(), 0.0),
                         std::move(stage)};
    }
};

// Expected dispatch cost of a policy:
//   sum_t sum_beta rho_t^beta [ sum_alpha P_t^{alpha beta} ( -U_{t+1}^alpha
//     + gamma (log P_t^{alpha beta} - log base^{alpha beta}) + Z^{alpha beta} )
//     + c_t^beta ]
// For the optimal policy of a matching ZTerm this equals E_{rho0}[phi_0].
inline double expected_cost(const Policy& policy, const CostModel& model, const Utility& utility,
                            const SolveConfig& cfg, const std::vector<double>& rho0) {
    const int n = static_cast<int>(rho0.size());
    const int T = policy.horizon();
    if (utility.horizon() != T || utility.states() != n)
        throw data_error("expected_cost: utility shape mismatch");
    const auto rho = forward_evolve(rho0, policy);
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        const Matrix& p = policy.steps[t];
        for (int b = 0; b < n; ++b) {
            const double rb = rho[t][b];
            double stage_cost = model.stage.empty() ? 0.0 : model.stage.at(t, b);
            for (int a = 0; a < n; ++a) {
                const double pab = p(a, b);
                if (pab == 0.0) continue;
                const double ref = model.base(a, b);
                if (ref <= 0.0) {
                    std::ostringstream oss;
                    oss << "expected_cost: policy leaves the reference support at t=" << t << " ("
                        << a << "," << b << ")";
                    throw domain_error(oss.str());
                }
                stage_cost += pab * (-utility.at(t, a) + cfg.gamma * (std::log(pab) - std::log(ref)) +
                                     model.surcharge(a, b));
            }
            total += rb * stage_cost;
        }
    }
    return total;
}

// KL divergence of one policy column against the reference column.
inline double column_kl(const Matrix& p, const Matrix& ref, int t_unused, int b) {
    (void)t_unused;
    double kl = 0.0;
    for (int a = 0; a < p.rows(); ++a) {
        const double v = p(a, b);
        if (v > 0.0) kl += v * (std::log(v) - std::log(ref(a, b)));
    }
    return kl;
}

struct DispatchResult {
    std::string method;
    double gamma = 0.0;
    double eta = std::nan("");
    double xi = std::nan("");
    double varsigma = std::nan("");
    double b = std::nan("");
    double c = std::nan("");
    double psi = std::nan("");
    std::string mode; // wasserstein only
    double objective = 0.0;
    double oos_mean = std::nan("");
    double oos_worst = std::nan("");
    std::vector<double> power;            // T + 1 values, kW
    std::vector<std::vector<double>> rho; // T + 1 distributions
};

// Entrywise a.power - b.power.
inline std::vector<double> delta_power(const DispatchResult& a, const DispatchResult& b) {
    if (a.power.size() != b.power.size()) throw data_error("delta_power: horizon mismatch");
    std::vector<double> d(a.power.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.power[i] - b.power[i];
    return d;
}

} // namespace tcldro
