#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "tcldro/errors.hpp"

namespace tcldro {

enum class LpSense : char { le = '<', eq = '=', ge = '>' };
enum class LpStatus { optimal, infeasible, unbounded };

// min c.x  s.t.  A x {<=,=,>=} b,  lower <= x <= upper.
// Bounds default to [0, +inf); lower may be -inf (free variable).
struct LpProblem {
    int nvars = 0;
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<LpSense> senses;
    std::vector<double> lower, upper;

    explicit LpProblem(int n = 0)
        : nvars(n), objective(n, 0.0), lower(n, 0.0),
          upper(n, std::numeric_limits<double>::infinity()) {}

    void add_row(std::vector<double> coeffs, LpSense sense, double b) {
        rows.push_back(std::move(coeffs));
        senses.push_back(sense);
        rhs.push_back(b);
    }
};

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    std::vector<double> x;
};

namespace detail {

// Dense tableau simplex on standard form (x >= 0, equality rows, b >= 0).
// Dantzig pricing with a switch to Bland's rule after a fixed number of
// iterations to break cycling.
class SimplexTableau {
  public:
    SimplexTableau(int nrows, int ncols) : m_(nrows), n_(ncols), t_(nrows + 1, std::vector<double>(ncols + 1, 0.0)), basis_(nrows, -1) {}

    double& at(int r, int c) { return t_[r][c]; }
    double& rhs(int r) { return t_[r][n_]; }
    double& obj(int c) { return t_[m_][c]; }
    double& obj_rhs() { return t_[m_][n_]; }
    int& basis(int r) { return basis_[r]; }

    // price out a basic column so its reduced cost is zero
    void price_out(int row) {
        const int col = basis_[row];
        const double f = t_[m_][col];
        if (f == 0.0) return;
        for (int c = 0; c <= n_; ++c) t_[m_][c] -= f * t_[row][c];
    }

    void pivot(int row, int col) {
        const double piv = t_[row][col];
        for (int c = 0; c <= n_; ++c) t_[row][c] /= piv;
        for (int r = 0; r <= m_; ++r) {
            if (r == row) continue;
            const double f = t_[r][col];
            if (f == 0.0) continue;
            for (int c = 0; c <= n_; ++c) t_[r][c] -= f * t_[row][c];
        }
        basis_[row] = col;
    }

    // returns optimal|unbounded; `allowed` masks candidate entering columns
    LpStatus iterate(const std::vector<bool>& allowed) {
        constexpr double eps = 1e-10;
        constexpr int bland_after = 2000;
        constexpr int max_iter = 50000;
        for (int it = 0; it < max_iter; ++it) {
            const bool bland = it >= bland_after;
            int enter = -1;
            double best = -eps;
            for (int c = 0; c < n_; ++c) {
                if (!allowed[c]) continue;
                const double rc = t_[m_][c];
                if (rc < -eps) {
                    if (bland) {
                        enter = c;
                        break;
                    }
                    if (rc < best) {
                        best = rc;
                        enter = c;
                    }
                }
            }
            if (enter < 0) return LpStatus::optimal;
            int leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m_; ++r) {
                const double a = t_[r][enter];
                if (a > eps) {
                    const double ratio = t_[r][n_] / a;
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 &&
                         (leave < 0 || basis_[r] < basis_[leave]))) {
                        best_ratio = ratio;
                        leave = r;
                    }
                }
            }
            if (leave < 0) return LpStatus::unbounded;
            pivot(leave, enter);
        }
        throw numerical_error("simplex: iteration cap exceeded");
    }

    int rows_count() const { return m_; }
    int cols_count() const { return n_; }

  private:
    int m_, n_;
    std::vector<std::vector<double>> t_;
    std::vector<int> basis_;
};

} // namespace detail

// Two-phase dense simplex. General bounds are reduced to standard form:
// finite lower bounds are shifted out, free variables split, finite upper
// bounds become extra rows.
inline LpResult lp_solve(const LpProblem& prob) {
    const int n0 = prob.nvars;
    const int m0 = static_cast<int>(prob.rows.size());
    const double inf = std::numeric_limits<double>::infinity();

    // column mapping: each original variable gets a shifted column, free
    // variables get a second (negated) column
    std::vector<int> pos_col(n0), neg_col(n0, -1);
    std::vector<double> shift(n0, 0.0);
    int ncols = 0;
    for (int j = 0; j < n0; ++j) {
        pos_col[j] = ncols++;
        if (prob.lower[j] == -inf)
            neg_col[j] = ncols++;
        else
            shift[j] = prob.lower[j];
    }

    struct StdRow {
        std::vector<double> a;
        double b;
        LpSense sense;
    };
    std::vector<StdRow> rows;
    rows.reserve(m0 + n0);
    for (int i = 0; i < m0; ++i) {
        StdRow r{std::vector<double>(ncols, 0.0), prob.rhs[i], prob.senses[i]};
        for (int j = 0; j < n0; ++j) {
            const double a = prob.rows[i][j];
            if (a == 0.0) continue;
            r.a[pos_col[j]] += a;
            if (neg_col[j] >= 0) r.a[neg_col[j]] -= a;
            r.b -= a * shift[j];
        }
        rows.push_back(std::move(r));
    }
    for (int j = 0; j < n0; ++j) {
        if (prob.upper[j] == inf) continue;
        StdRow r{std::vector<double>(ncols, 0.0), prob.upper[j] - shift[j], LpSense::le};
        r.a[pos_col[j]] = 1.0;
        if (neg_col[j] >= 0) r.a[neg_col[j]] = -1.0;
        rows.push_back(std::move(r));
    }

    const int m = static_cast<int>(rows.size());
    // count slack/artificial columns
    int nslack = 0, nart = 0;
    for (const auto& r : rows) {
        const bool flip = r.b < 0.0;
        LpSense s = r.sense;
        if (flip) s = (s == LpSense::le ? LpSense::ge : s == LpSense::ge ? LpSense::le : LpSense::eq);
        if (s != LpSense::eq) ++nslack;
        if (s != LpSense::le) ++nart;
    }
    const int total = ncols + nslack + nart;
    detail::SimplexTableau tab(m, total);

    int slack_at = ncols;
    int art_at = ncols + nslack;
    const int art_begin = art_at;
    for (int i = 0; i < m; ++i) {
        const bool flip = rows[i].b < 0.0;
        const double sgn = flip ? -1.0 : 1.0;
        for (int c = 0; c < ncols; ++c) tab.at(i, c) = sgn * rows[i].a[c];
        tab.rhs(i) = sgn * rows[i].b;
        LpSense s = rows[i].sense;
        if (flip) s = (s == LpSense::le ? LpSense::ge : s == LpSense::ge ? LpSense::le : LpSense::eq);
        if (s == LpSense::le) {
            tab.at(i, slack_at) = 1.0;
            tab.basis(i) = slack_at++;
        } else if (s == LpSense::ge) {
            tab.at(i, slack_at) = -1.0;
            ++slack_at;
            tab.at(i, art_at) = 1.0;
            tab.basis(i) = art_at++;
        } else {
            tab.at(i, art_at) = 1.0;
            tab.basis(i) = art_at++;
        }
    }

    LpResult result;

    // phase 1: minimize the sum of artificial variables
    if (nart > 0) {
        for (int c = art_begin; c < total; ++c) tab.obj(c) = 1.0;
        for (int r = 0; r < m; ++r)
            if (tab.basis(r) >= art_begin) tab.price_out(r);
        std::vector<bool> allowed(total, true);
        const LpStatus st = tab.iterate(allowed);
        (void)st; // phase 1 is always bounded below by 0
        if (tab.obj_rhs() < -1e-7) {
            result.status = LpStatus::infeasible;
            return result;
        }
        // drive leftover artificials out of the basis where possible
        for (int r = 0; r < m; ++r) {
            if (tab.basis(r) < art_begin) continue;
            int piv = -1;
            for (int c = 0; c < art_begin; ++c)
                if (std::fabs(tab.at(r, c)) > 1e-9) {
                    piv = c;
                    break;
                }
            if (piv >= 0) tab.pivot(r, piv);
        }
        // reset the objective row for phase 2
        for (int c = 0; c <= total; ++c) tab.obj(c) = 0.0;
    }

    // phase 2 objective
    for (int j = 0; j < n0; ++j) {
        tab.obj(pos_col[j]) += prob.objective[j];
        if (neg_col[j] >= 0) tab.obj(neg_col[j]) -= prob.objective[j];
    }
    double constant = 0.0;
    for (int j = 0; j < n0; ++j) constant += prob.objective[j] * shift[j];
    for (int r = 0; r < m; ++r)
        if (tab.basis(r) >= 0) tab.price_out(r);

    std::vector<bool> allowed(total, true);
    for (int c = art_begin; c < total; ++c) allowed[c] = false;
    const LpStatus st = tab.iterate(allowed);
    if (st == LpStatus::unbounded) {
        result.status = LpStatus::unbounded;
        return result;
    }

    std::vector<double> xs(total, 0.0);
    for (int r = 0; r < m; ++r)
        if (tab.basis(r) >= 0) xs[tab.basis(r)] = tab.rhs(r);
    result.x.assign(n0, 0.0);
    for (int j = 0; j < n0; ++j) {
        double v = xs[pos_col[j]] + shift[j];
        if (neg_col[j] >= 0) v -= xs[neg_col[j]];
        result.x[j] = v;
    }
    result.value = -tab.obj_rhs() + constant;
    result.status = LpStatus::optimal;
    return result;
}

} // namespace tcldro
