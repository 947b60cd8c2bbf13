#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "tcldro/errors.hpp"

namespace tcldro {

// Dense row-major matrix. Transition matrices follow the column-stochastic
// convention used throughout: entry (alpha, beta) is the probability of
// moving FROM origin state beta TO destination state alpha, so every
// column sums to one.
class Matrix {
  public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

  private:
    int rows_, cols_;
    std::vector<double> data_;
};

inline double column_sum(const Matrix& m, int col) {
    double s = 0.0;
    for (int r = 0; r < m.rows(); ++r) s += m(r, col);
    return s;
}

inline bool is_column_stochastic(const Matrix& m, double tol = 1e-9) {
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) {
            const double v = m(r, c);
            if (!(v >= -tol) || !(v <= 1.0 + tol) || !std::isfinite(v)) return false;
        }
        if (std::fabs(column_sum(m, c) - 1.0) > tol) return false;
    }
    return true;
}

inline void require_column_stochastic(const Matrix& m, const char* what, double tol = 1e-9) {
    if (!is_column_stochastic(m, tol)) {
        std::ostringstream oss;
        oss << what << ": matrix is not column-stochastic within " << tol;
        throw data_error(oss.str());
    }
}

// true where both matrices are zero / nonzero in the same cells
inline bool same_zero_pattern(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c)
            if ((a(r, c) == 0.0) != (b(r, c) == 0.0)) return false;
    return true;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double d = 0.0;
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) d = std::max(d, std::fabs(a(r, c) - b(r, c)));
    return d;
}

} // namespace tcldro
