#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "tcldro/bellman.hpp"
#include "tcldro/errors.hpp"
#include "tcldro/evaluate.hpp"
#include "tcldro/markov_model.hpp"
#include "tcldro/matrix.hpp"

namespace tcldro {

enum class WassersteinMode {
    weighted, // loss weighted by the policy column (default, well-posed)
    literal   // unweighted sum over destinations, as written in the source formulation
};

// Candidate maximizers of loss(v) - lambda * |v - y|_1 over
// {box intersect simplex hyperplane}: every coordinate at a breakpoint in
// {lo, y, hi} except one slack coordinate absorbing the residual. The
// sample's own coordinates are breakpoints because v = y is the maximizer
// at large lambda.
inline std::vector<std::vector<double>> candidate_points(const std::vector<double>& lo,
                                                         const std::vector<double>& hi,
                                                         const std::vector<double>& y) {
    const int s = static_cast<int>(lo.size());
    if (s == 0 || hi.size() != lo.size() || y.size() != lo.size())
        throw data_error("candidate_points: inconsistent box/sample sizes");
    if (s > 16) throw numerical_error("candidate_points: support too large for enumeration");
    constexpr double tol = 1e-12;

    std::vector<std::vector<double>> cands;
    std::vector<double> v(s);
    std::vector<int> digits(std::max(s - 1, 0), 0);
    for (int slack = 0; slack < s; ++slack) {
        std::fill(digits.begin(), digits.end(), 0);
        while (true) {
            double sum = 0.0;
            int di = 0;
            for (int i = 0; i < s; ++i) {
                if (i == slack) continue;
                const double b = digits[di] == 0 ? lo[i] : digits[di] == 1 ? y[i] : hi[i];
                v[i] = b;
                sum += b;
                ++di;
            }
            const double resid = 1.0 - sum;
            if (resid >= lo[slack] - tol && resid <= hi[slack] + tol) {
                v[slack] = std::min(std::max(resid, lo[slack]), hi[slack]);
                cands.push_back(v);
            }
            // odometer over the s-1 breakpoint digits
            int k = 0;
            for (; k < s - 1; ++k) {
                if (++digits[k] < 3) break;
                digits[k] = 0;
            }
            if (k == s - 1) break;
        }
    }

    std::sort(cands.begin(), cands.end());
    std::vector<std::vector<double>> unique;
    for (auto& c : cands) {
        if (!unique.empty()) {
            double d = 0.0;
            for (int i = 0; i < s; ++i) d = std::max(d, std::fabs(c[i] - unique.back()[i]));
            if (d <= tol) continue;
        }
        unique.push_back(std::move(c));
    }
    if (unique.empty()) throw data_error("candidate_points: box does not intersect the simplex hyperplane");
    return unique;
}

// Per-origin-state ambiguity data: box hull of the sample columns plus the
// flattened candidate sets of every sample.
struct WassersteinColumn {
    int beta = 0;
    std::vector<int> support;                 // destination indices with positive entries
    std::vector<double> lo, hi;               // box on support coordinates
    std::vector<std::vector<double>> samples; // N x s, on support
    // flattened candidates over all samples
    std::vector<std::size_t> offset;   // N + 1 prefix (candidate index space)
    std::vector<double> cand_loss_vec; // candidate-major, s entries each: -log v_i
    std::vector<double> cand_loss_sum; // unweighted loss per candidate
    std::vector<double> cand_dist;     // l1 transport distance to its sample
    double lambda_cap = 0.0;

    int support_size() const { return static_cast<int>(support.size()); }
    std::size_t total_candidates() const { return cand_dist.size(); }
};

inline WassersteinColumn build_wasserstein_column(const SampleSet& samples, int beta) {
    if (samples.size() < 1) throw data_error("build_wasserstein_column: empty sample set");
    const int n = samples.matrices[0].rows();
    WassersteinColumn col;
    col.beta = beta;
    for (int a = 0; a < n; ++a)
        if (samples.matrices[0](a, beta) > 0.0) col.support.push_back(a);
    const int s = col.support_size();
    if (s == 0) throw data_error("build_wasserstein_column: column has empty support");

    col.lo.assign(s, std::numeric_limits<double>::infinity());
    col.hi.assign(s, -std::numeric_limits<double>::infinity());
    col.samples.reserve(samples.size());
    for (const Matrix& m : samples.matrices) {
        std::vector<double> y(s);
        double sum = 0.0;
        for (int i = 0; i < s; ++i) {
            y[i] = m(col.support[i], beta);
            if (!(y[i] > 0.0))
                throw data_error("build_wasserstein_column: sample zero pattern differs from hull");
            col.lo[i] = std::min(col.lo[i], y[i]);
            col.hi[i] = std::max(col.hi[i], y[i]);
            sum += y[i];
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw data_error("build_wasserstein_column: sample column does not sum to 1");
        col.samples.push_back(std::move(y));
    }

    col.offset.push_back(0);
    double max_loss = 0.0;
    double min_pos_dist = std::numeric_limits<double>::infinity();
    for (const auto& y : col.samples) {
        const auto cands = candidate_points(col.lo, col.hi, y);
        for (const auto& v : cands) {
            double loss_sum = 0.0, dist = 0.0;
            for (int i = 0; i < s; ++i) {
                const double li = -std::log(v[i]);
                col.cand_loss_vec.push_back(li);
                loss_sum += li;
                dist += std::fabs(v[i] - y[i]);
            }
            col.cand_loss_sum.push_back(loss_sum);
            col.cand_dist.push_back(dist);
            max_loss = std::max(max_loss, loss_sum);
            if (dist > 1e-12) min_pos_dist = std::min(min_pos_dist, dist);
        }
        col.offset.push_back(col.cand_dist.size());
    }
    col.lambda_cap =
        std::isfinite(min_pos_dist) ? 10.0 * std::max(max_loss, 1.0) / min_pos_dist : 0.0;
    return col;
}

// g_y(lambda) = max over candidates of loss(v) - lambda |v - y|_1, with the
// unweighted loss. Ties resolve to the first candidate in sorted order.
inline double inner_sup_literal(const WassersteinColumn& col, int sample, double lambda) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = col.offset[sample]; k < col.offset[sample + 1]; ++k)
        best = std::max(best, col.cand_loss_sum[k] - lambda * col.cand_dist[k]);
    return best;
}

// Weighted counterpart with loss sum_i p_i * (-log v_i) for a policy
// column p on the support.
inline double inner_sup_weighted(const WassersteinColumn& col, int sample,
                                 const std::vector<double>& p, double lambda) {
    const int s = col.support_size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = col.offset[sample]; k < col.offset[sample + 1]; ++k) {
        const double* lv = &col.cand_loss_vec[k * s];
        double val = 0.0;
        for (int i = 0; i < s; ++i) val += p[i] * lv[i];
        val -= lambda * col.cand_dist[k];
        best = std::max(best, val);
    }
    return best;
}

struct LambdaSearchResult {
    double lambda = 0.0;
    double value = 0.0; // lambda * psi + (1/N) sum_y g_y(lambda)
};

namespace detail {

// Range of the subgradient of h(lambda) = lambda psi + (1/N) sum_y g_y,
// using the min / max distance over tied maximizers per sample.
inline std::pair<double, double> wasserstein_subgradient_range(const WassersteinColumn& col,
                                                               double psi, double lambda) {
    const int n_samples = static_cast<int>(col.samples.size());
    double dmin_sum = 0.0, dmax_sum = 0.0;
    for (int y = 0; y < n_samples; ++y) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = col.offset[y]; k < col.offset[y + 1]; ++k)
            best = std::max(best, col.cand_loss_sum[k] - lambda * col.cand_dist[k]);
        double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
        const double tie = 1e-11 * (1.0 + std::fabs(best));
        for (std::size_t k = col.offset[y]; k < col.offset[y + 1]; ++k) {
            const double val = col.cand_loss_sum[k] - lambda * col.cand_dist[k];
            if (val >= best - tie) {
                dmin = std::min(dmin, col.cand_dist[k]);
                dmax = std::max(dmax, col.cand_dist[k]);
            }
        }
        dmin_sum += dmin;
        dmax_sum += dmax;
    }
    const double inv = 1.0 / n_samples;
    return {psi - dmax_sum * inv, psi - dmin_sum * inv};
}

} // namespace detail

// Minimizes h(lambda) = lambda psi + (1/N) sum_y g_y(lambda) over
// [0, lambda_cap] by bisection on the subgradient sign. h is convex
// piecewise linear, so the sign of the subdifferential brackets the
// minimizer.
inline LambdaSearchResult lambda_search(const WassersteinColumn& col, double psi) {
    if (psi < 0.0) throw domain_error("lambda_search: psi must be >= 0");
    const int n_samples = static_cast<int>(col.samples.size());
    auto h = [&](double lambda) {
        double sum = 0.0;
        for (int y = 0; y < n_samples; ++y) sum += inner_sup_literal(col, y, lambda);
        return lambda * psi + sum / n_samples;
    };

    double lo = 0.0, hi = col.lambda_cap;
    {
        const auto [g_lo, g_hi] = detail::wasserstein_subgradient_range(col, psi, hi);
        if (hi > 0.0 && g_hi < -1e-9)
            throw numerical_error("lambda_search: cap reached with negative subgradient; raise lambda_cap");
        (void)g_lo;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-8; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto [g_min, g_max] = detail::wasserstein_subgradient_range(col, psi, mid);
        if (g_max < 0.0)
            lo = mid; // h still decreasing: move right
        else if (g_min > 0.0)
            hi = mid; // h increasing: move left
        else {
            lo = hi = mid; // 0 in the subdifferential
        }
    }
    LambdaSearchResult res;
    res.lambda = 0.5 * (lo + hi);
    res.value = std::min({h(res.lambda), h(lo), h(hi)});
    return res;
}

namespace detail {

inline void project_simplex(std::vector<double>& w) {
    // Euclidean projection onto the probability simplex (sort-based)
    const int k = static_cast<int>(w.size());
    std::vector<double> u(w);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    for (int i = 0; i < k; ++i) {
        css += u[i];
        const double t = (css - 1.0) / (i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            theta = t;
        }
    }
    (void)rho;
    for (double& x : w) x = std::max(x - theta, 0.0);
}

// Master problem of the cutting-plane stage solver, solved through its
// cut-multiplier dual:
//   min_{P in simplex, lambda in [0,cap], r}  gamma sum P log P + P.phi
//     + gamma psi lambda + gamma r,   r >= B_k.P - D_k lambda.
// For fixed lambda the dual over multipliers gamma*omega, omega in the
// K-simplex, is smooth:
//   g(omega) = -gamma LSE(-(phi + gamma omega B)/gamma) - lambda gamma omega.D,
// maximized by projected gradient; the outer lambda search is golden
// section on the convex profile.
struct MasterResult {
    std::vector<double> policy;
    double lambda = 0.0;
    double lower_bound = 0.0; // valid joint dual bound
    std::vector<double> omega;
};

class StageMaster {
  public:
    StageMaster(const std::vector<double>& phi, double gamma, double psi, double cap)
        : phi_(phi), s_(static_cast<int>(phi.size())), gamma_(gamma), psi_(psi), cap_(cap) {}

    void add_cut(std::vector<double> bvec, double d) {
        cut_b_.push_back(std::move(bvec));
        cut_d_.push_back(d);
        if (omega_.empty()) {
            omega_.assign(1, 1.0);
        } else {
            // keep the warm-started weights, give the new cut a small share
            for (double& w : omega_) w *= 0.9;
            omega_.push_back(0.1);
        }
    }

    int cut_count() const { return static_cast<int>(cut_b_.size()); }

    MasterResult solve() {
        MasterResult res;
        if (cap_ <= 0.0) {
            res.lambda = 0.0;
            maximize_omega(0.0);
        } else {
            // golden section on the convex profile M(lambda)
            const double invphi = 0.6180339887498949;
            double a = 0.0, b = cap_;
            double x1 = b - invphi * (b - a);
            double x2 = a + invphi * (b - a);
            double f1 = profile(x1), f2 = profile(x2);
            for (int it = 0; it < 80 && (b - a) > 1e-10 * (1.0 + cap_); ++it) {
                if (f1 < f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - invphi * (b - a);
                    f1 = profile(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + invphi * (b - a);
                    f2 = profile(x2);
                }
            }
            res.lambda = 0.5 * (a + b);
            maximize_omega(res.lambda);
        }
        res.policy = policy_at_omega();
        res.omega = omega_;
        res.lower_bound = joint_dual_bound();
        return res;
    }

    // Joint dual value, valid for any omega on the cut simplex:
    //   -gamma LSE(-(phi + gamma omega B)/gamma) + cap * min(0, gamma psi - gamma omega.D).
    // When omega.D overshoots psi the cap amplifies solver residuals, so
    // omega is first projected onto {omega.D = psi} by mixing toward the
    // smallest-distance cut.
    double joint_dual_bound() {
        double omega_d = 0.0;
        for (int k = 0; k < cut_count(); ++k) omega_d += omega_[k] * cut_d_[k];
        if (gamma_ * psi_ - gamma_ * omega_d >= 0.0) return neg_gamma_lse();
        int jmin = 0;
        for (int k = 1; k < cut_count(); ++k)
            if (cut_d_[k] < cut_d_[jmin]) jmin = k;
        if (cut_d_[jmin] <= psi_) {
            const double t = (omega_d - psi_) / (omega_d - cut_d_[jmin]);
            const std::vector<double> saved = omega_;
            for (int k = 0; k < cut_count(); ++k) omega_[k] *= (1.0 - t);
            omega_[jmin] += t;
            const double bound = neg_gamma_lse();
            omega_ = saved;
            return bound;
        }
        return neg_gamma_lse() + cap_ * (gamma_ * psi_ - gamma_ * omega_d);
    }

  private:
    // tilted exponent vector xi_alpha = -(phi + gamma omega B)_alpha / gamma
    void tilt(std::vector<double>& xi) const {
        xi.assign(s_, 0.0);
        for (int i = 0; i < s_; ++i) xi[i] = phi_[i];
        for (int k = 0; k < cut_count(); ++k) {
            const double w = gamma_ * omega_[k];
            if (w == 0.0) continue;
            for (int i = 0; i < s_; ++i) xi[i] += w * cut_b_[k][i];
        }
        for (int i = 0; i < s_; ++i) xi[i] = -xi[i] / gamma_;
    }

    std::vector<double> policy_at_omega() const {
        std::vector<double> xi;
        tilt(xi);
        const double m = *std::max_element(xi.begin(), xi.end());
        std::vector<double> p(s_);
        double sum = 0.0;
        for (int i = 0; i < s_; ++i) {
            p[i] = std::exp(xi[i] - m);
            sum += p[i];
        }
        for (double& v : p) v /= sum;
        return p;
    }

    double neg_gamma_lse() const {
        std::vector<double> xi;
        tilt(xi);
        const double m = *std::max_element(xi.begin(), xi.end());
        double sum = 0.0;
        for (double v : xi) sum += std::exp(v - m);
        return -gamma_ * (m + std::log(sum));
    }

    double dual_value(double lambda) const {
        double omega_d = 0.0;
        for (int k = 0; k < cut_count(); ++k) omega_d += omega_[k] * cut_d_[k];
        return neg_gamma_lse() - lambda * gamma_ * omega_d;
    }

    // maximize g(omega) for fixed lambda by projected gradient ascent with
    // backtracking; omega is warm-started across calls
    double maximize_omega(double lambda) {
        const int kk = cut_count();
        if (kk == 1) {
            omega_.assign(1, 1.0);
            return dual_value(lambda);
        }
        double step = 1.0;
        double cur = dual_value(lambda);
        std::vector<double> grad(kk), trial(kk);
        for (int it = 0; it < 600; ++it) {
            const auto p = policy_at_omega();
            double max_g = -std::numeric_limits<double>::infinity();
            double omega_g = 0.0;
            for (int k = 0; k < kk; ++k) {
                double bp = 0.0;
                for (int i = 0; i < s_; ++i) bp += cut_b_[k][i] * p[i];
                grad[k] = gamma_ * (bp - lambda * cut_d_[k]);
                max_g = std::max(max_g, grad[k]);
                omega_g += omega_[k] * grad[k];
            }
            if (max_g - omega_g <= 1e-11 * (1.0 + std::fabs(cur))) break; // FW gap certificate
            bool improved = false;
            for (int bt = 0; bt < 40; ++bt) {
                for (int k = 0; k < kk; ++k) trial[k] = omega_[k] + step * grad[k] / gamma_;
                project_simplex(trial);
                std::swap(trial, omega_);
                const double val = dual_value(lambda);
                if (val > cur + 1e-15) {
                    cur = val;
                    improved = true;
                    step *= 1.3;
                    break;
                }
                std::swap(trial, omega_); // revert
                step *= 0.5;
            }
            if (!improved) break;
        }
        return cur;
    }

    double profile(double lambda) { return gamma_ * psi_ * lambda + maximize_omega(lambda); }

    std::vector<double> phi_;
    int s_;
    double gamma_, psi_, cap_;
    std::vector<std::vector<double>> cut_b_;
    std::vector<double> cut_d_;
    std::vector<double> omega_;
};

} // namespace detail

struct WassersteinStageSolution {
    double value = 0.0;           // optimal stage value, $
    std::vector<double> policy;   // on the column support
    double lambda = 0.0;
    double worst_case = 0.0;      // lambda psi + (1/N) sum_y g_y at the solution, nats
    int cuts_used = 0;
    double gap = 0.0;
};

// Per-(t, beta) weighted subproblem:
//   min_{P in simplex, lambda >= 0}  gamma [ sum P log P + lambda psi
//     + (1/N) sum_y max_v ( sum_i P_i (-log v_i) - lambda |v - y|_1 ) ]
//     + sum_i P_i phi_next_i
// by Kelley cutting planes: each candidate selection yields an affine cut
// in (P, lambda); the entropy stays exact in the master.
inline WassersteinStageSolution solve_stage_weighted(const WassersteinColumn& col,
                                                     const std::vector<double>& phi_next,
                                                     double gamma, double psi,
                                                     double tol = 5e-8, int max_cuts = 200) {
    const int s = col.support_size();
    const int n_samples = static_cast<int>(col.samples.size());
    if (static_cast<int>(phi_next.size()) != s)
        throw data_error("solve_stage_weighted: phi size does not match support");

    // evaluate the true objective at (p, lambda) and produce the aggregated cut
    auto evaluate = [&](const std::vector<double>& p, double lambda, std::vector<double>& bvec,
                        double& dsum) {
        bvec.assign(s, 0.0);
        dsum = 0.0;
        double total = 0.0;
        for (int y = 0; y < n_samples; ++y) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_k = col.offset[y];
            for (std::size_t k = col.offset[y]; k < col.offset[y + 1]; ++k) {
                const double* lv = &col.cand_loss_vec[k * s];
                double val = 0.0;
                for (int i = 0; i < s; ++i) val += p[i] * lv[i];
                val -= lambda * col.cand_dist[k];
                if (val > best) {
                    best = val;
                    best_k = k;
                }
            }
            total += best;
            const double* lv = &col.cand_loss_vec[best_k * s];
            for (int i = 0; i < s; ++i) bvec[i] += lv[i];
            dsum += col.cand_dist[best_k];
        }
        const double inv = 1.0 / n_samples;
        for (double& v : bvec) v *= inv;
        dsum *= inv;
        return total * inv;
    };
    auto full_value = [&](const std::vector<double>& p, double lambda, double g_val) {
        double ent = 0.0, lin = 0.0;
        for (int i = 0; i < s; ++i) {
            if (p[i] > 0.0) ent += p[i] * std::log(p[i]);
            lin += p[i] * phi_next[i];
        }
        return gamma * (ent + psi * lambda + g_val) + lin;
    };

    detail::StageMaster master(phi_next, gamma, psi, col.lambda_cap);

    // start from the entropy-only solution
    std::vector<double> p(s);
    {
        const double m = -*std::min_element(phi_next.begin(), phi_next.end());
        double sum = 0.0;
        for (int i = 0; i < s; ++i) {
            p[i] = std::exp((-phi_next[i] - m) / gamma);
            sum += p[i];
        }
        for (double& v : p) v /= sum;
    }
    double lambda = 0.0;

    WassersteinStageSolution best;
    best.value = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    std::vector<double> bvec;
    double dsum = 0.0;

    // seed with the transport-free selection (v = y per sample, distance 0):
    // anchors the dual projection for every psi
    {
        const double g_cap = evaluate(p, col.lambda_cap, bvec, dsum);
        const double ub = full_value(p, col.lambda_cap, g_cap);
        if (ub < best.value) {
            best.value = ub;
            best.policy = p;
            best.lambda = col.lambda_cap;
            best.worst_case = psi * col.lambda_cap + g_cap;
        }
        master.add_cut(bvec, dsum);
    }

    for (int it = 0; it < max_cuts; ++it) {
        const double g_val = evaluate(p, lambda, bvec, dsum);
        const double ub = full_value(p, lambda, g_val);
        if (ub < best.value) {
            best.value = ub;
            best.policy = p;
            best.lambda = lambda;
            best.worst_case = psi * lambda + g_val;
        }
        master.add_cut(bvec, dsum);
        const detail::MasterResult mres = master.solve();
        lb = std::max(lb, mres.lower_bound);
        best.cuts_used = master.cut_count();
        best.gap = best.value - lb;
        if (best.gap <= tol * (1.0 + std::fabs(best.value))) return best;
        p = mres.policy;
        lambda = mres.lambda;
    }
    std::ostringstream oss;
    oss << "solve_stage_weighted: cutting-plane cap reached with gap " << best.gap;
    throw numerical_error(oss.str());
}

struct WassersteinDiagnostic {
    int t = -1; // -1 marks a time-independent (literal mode) entry
    int beta = 0;
    double lambda = 0.0;
    double worst_case = 0.0;
    std::size_t n_candidates = 0;
    int cuts_used = 0;
};

struct WassersteinSolveResult {
    Policy policy;
    double objective = 0.0;
    ValueFunction value_function;
    Matrix support_base; // ones on the sample-hull support
    StageConstants stage;
    std::vector<WassersteinDiagnostic> diagnostics;
};

// Wasserstein-ball distributionally robust solve, per-column balls of
// radius psi around the empirical column distribution.
inline WassersteinSolveResult solve_wasserstein_mdp(const SampleSet& samples, double psi,
                                                    const Utility& utility, const SolveConfig& cfg,
                                                    const std::vector<double>& rho0,
                                                    WassersteinMode mode = WassersteinMode::weighted) {
    cfg.validate();
    if (psi < 0.0) throw domain_error("solve_wasserstein_mdp: psi must be >= 0");
    const int n = samples.matrices.at(0).rows();
    const int T = cfg.horizon;

    std::vector<WassersteinColumn> columns;
    columns.reserve(n);
    for (int b = 0; b < n; ++b) columns.push_back(build_wasserstein_column(samples, b));

    WassersteinSolveResult out;
    out.support_base = Matrix(n, n, 0.0);
    for (int b = 0; b < n; ++b)
        for (int i = 0; i < columns[b].support_size(); ++i)
            out.support_base(columns[b].support[i], b) = 1.0;
    out.stage = StageConstants(T, n, 0.0);

    if (mode == WassersteinMode::literal) {
        // worst-case term is policy independent: one radius search per column
        std::vector<double> constants(n, 0.0);
        for (int b = 0; b < n; ++b) {
            const LambdaSearchResult ls = lambda_search(columns[b], psi);
            constants[b] = cfg.gamma * ls.value;
            out.diagnostics.push_back(WassersteinDiagnostic{
                -1, b, ls.lambda, ls.value, columns[b].total_candidates(), 0});
        }
        for (int t = 0; t < T; ++t)
            for (int b = 0; b < n; ++b) out.stage.at(t, b) = constants[b];
        const ZTerm zt{out.support_base, Matrix(n, n, 0.0)};
        out.value_function = backward_recursion(zt, utility, cfg, out.stage);
        out.policy = policy_from_z(zt, out.value_function, cfg);
    } else {
        // backward induction with one cutting-plane subproblem per (t, beta)
        ValueFunction vf;
        vf.horizon = T;
        vf.n = n;
        vf.phi_data.assign(static_cast<std::size_t>(T + 1) * n, 0.0);
        vf.log_z_data.assign(static_cast<std::size_t>(T + 1) * n, 0.0);
        auto set_phi = [&vf, n](int t, int a, double v) {
            vf.phi_data[static_cast<std::size_t>(t) * n + a] = v;
        };
        for (int a = 0; a < n; ++a) {
            const double phi_T =
                cfg.terminal == TerminalRule::last_utility ? -utility.at(T - 1, a) : 0.0;
            set_phi(T, a, phi_T);
        }
        Policy policy;
        policy.steps.assign(T, Matrix(n, n, 0.0));
        for (int t = T - 1; t >= 0; --t) {
            for (int b = 0; b < n; ++b) {
                const WassersteinColumn& col = columns[b];
                std::vector<double> phi_next(col.support_size());
                for (int i = 0; i < col.support_size(); ++i)
                    phi_next[i] = vf.phi_data[static_cast<std::size_t>(t + 1) * n + col.support[i]];
                const WassersteinStageSolution sol =
                    solve_stage_weighted(col, phi_next, cfg.gamma, psi);
                for (int i = 0; i < col.support_size(); ++i)
                    policy.steps[t](col.support[i], b) = sol.policy[i];
                const double u_here = t >= 1 ? utility.at(t - 1, b) : 0.0;
                set_phi(t, b, sol.value - u_here);
                out.stage.at(t, b) = cfg.gamma * sol.worst_case;
                out.diagnostics.push_back(WassersteinDiagnostic{
                    t, b, sol.lambda, sol.worst_case, col.total_candidates(), sol.cuts_used});
            }
        }
        for (std::size_t i = 0; i < vf.log_z_data.size(); ++i)
            vf.log_z_data[i] = -vf.phi_data[i] / cfg.gamma;
        out.value_function = std::move(vf);
        out.policy = std::move(policy);
    }

    out.objective = expected_cost(out.policy, CostModel::entropy_only(out.support_base, out.stage),
                                  utility, cfg, rho0);
    return out;
}

} // namespace tcldro
