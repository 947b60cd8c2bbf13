#pragma once

#include <cstdint>
#include <sstream>
#include <vector>

#include "tcldro/errors.hpp"
#include "tcldro/matrix.hpp"
#include "tcldro/rng.hpp"

namespace tcldro {

// Uniform discretization of the aggregate power range. State beta covers
// [bin_edges[beta], bin_edges[beta+1]) and is represented by the bin
// midpoint when recovering a power profile.
struct StateSpace {
    int n = 0;
    std::vector<double> bin_edges;     // n + 1 ascending power levels, kW
    std::vector<double> rated_power;   // representative power per state, kW
};

// N observed (or synthetically perturbed) default transition matrices with
// identical zero pattern.
struct SampleSet {
    std::vector<Matrix> matrices;
    std::string provenance; // "observed" or "perturbed(fraction,seed)"
    int size() const { return static_cast<int>(matrices.size()); }
};

struct MomentMatrices {
    Matrix mean;
    Matrix variance; // entrywise, unbiased (divisor N-1)
};

inline std::pair<StateSpace, std::vector<int>> discretize(const std::vector<double>& power_series,
                                                          int n) {
    if (n < 2) throw domain_error("discretize: need at least 2 states");
    if (power_series.empty()) throw data_error("discretize: empty power series");
    double lo = power_series[0], hi = power_series[0];
    for (double v : power_series) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw data_error("discretize: constant power series has zero range");

    StateSpace space;
    space.n = n;
    space.bin_edges.resize(n + 1);
    space.rated_power.resize(n);
    const double width = (hi - lo) / n;
    for (int b = 0; b <= n; ++b) space.bin_edges[b] = lo + width * b;
    space.bin_edges[n] = hi; // guard against rounding drift
    for (int b = 0; b < n; ++b) space.rated_power[b] = lo + width * (b + 0.5);

    std::vector<int> indices;
    indices.reserve(power_series.size());
    for (double v : power_series) {
        int idx = static_cast<int>((v - lo) / width);
        if (idx >= n) idx = n - 1; // the maximum maps to the top state
        if (idx < 0) idx = 0;
        indices.push_back(idx);
    }
    return {space, indices};
}

// Maximum-likelihood column-stochastic transition matrix from a state
// index series: entry (alpha, beta) = count(beta -> alpha) / count(beta as
// origin). Transitions never observed stay exactly zero.
inline Matrix estimate_transitions(const std::vector<int>& state_series, int n) {
    if (state_series.size() < 2) throw data_error("estimate_transitions: need at least 2 samples");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n) * n, 0);
    std::vector<std::int64_t> origin(n, 0);
    for (std::size_t k = 0; k + 1 < state_series.size(); ++k) {
        const int from = state_series[k];
        const int to = state_series[k + 1];
        if (from < 0 || from >= n || to < 0 || to >= n)
            throw data_error("estimate_transitions: state index out of range");
        counts[static_cast<std::size_t>(to) * n + from] += 1;
        origin[from] += 1;
    }
    for (int b = 0; b < n; ++b) {
        if (origin[b] == 0) {
            std::ostringstream oss;
            oss << "estimate_transitions: state " << b << " never visited as an origin";
            throw data_error(oss.str());
        }
    }
    Matrix p(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            p(a, b) = static_cast<double>(counts[static_cast<std::size_t>(a) * n + b]) /
                      static_cast<double>(origin[b]);
    return p;
}

// Optional smoothing for columns that are deterministic (single support
// entry): spreads eps over the other entries and renormalizes, widening
// the support so that downstream log-ratio terms stay finite if the
// policy must leave the observed transition.
inline Matrix smooth_deterministic_columns(const Matrix& p, double eps) {
    if (eps <= 0.0) return p;
    Matrix out = p;
    const int n = p.rows();
    for (int b = 0; b < n; ++b) {
        int support = 0;
        for (int a = 0; a < n; ++a)
            if (p(a, b) > 0.0) ++support;
        if (support != 1) continue;
        double sum = 0.0;
        for (int a = 0; a < n; ++a) {
            out(a, b) = p(a, b) + eps;
            sum += out(a, b);
        }
        for (int a = 0; a < n; ++a) out(a, b) /= sum;
    }
    return out;
}

// Generates N perturbed copies of the nominal matrix: every nonzero entry
// is scaled by (1 + u), u ~ Uniform(-fraction, fraction) i.i.d., and each
// column is renormalized to sum one. Zeros are preserved.
inline SampleSet perturb_samples(const Matrix& nominal, double fraction, int n_samples,
                                 std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw domain_error("perturb_samples: fraction must be in [0, 1)");
    if (n_samples < 2) throw domain_error("perturb_samples: need N >= 2");
    const int n = nominal.rows();
    SampleSet set;
    set.matrices.reserve(n_samples);
    {
        std::ostringstream oss;
        oss << "perturbed(" << fraction << "," << seed << ")";
        set.provenance = oss.str();
    }
    for (int j = 0; j < n_samples; ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
        Matrix m(n, n);
        for (int b = 0; b < n; ++b) {
            double sum = 0.0;
            for (int a = 0; a < n; ++a) {
                const double v = nominal(a, b);
                if (v > 0.0) {
                    m(a, b) = v * (1.0 + rng.uniform(-fraction, fraction));
                    sum += m(a, b);
                }
            }
            if (sum <= 0.0) throw data_error("perturb_samples: column with empty support");
            for (int a = 0; a < n; ++a)
                if (m(a, b) > 0.0) m(a, b) /= sum;
        }
        set.matrices.push_back(std::move(m));
    }
    return set;
}

// Entrywise sample mean and unbiased variance over the set.
inline MomentMatrices sample_moments(const SampleSet& samples) {
    const int count = samples.size();
    if (count < 2) throw domain_error("sample_moments: need N >= 2");
    const int n = samples.matrices[0].rows();
    MomentMatrices mom{Matrix(n, n), Matrix(n, n)};
    for (const Matrix& m : samples.matrices)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) mom.mean(a, b) += m(a, b);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) mom.mean(a, b) /= count;
    for (const Matrix& m : samples.matrices)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const double d = m(a, b) - mom.mean(a, b);
                mom.variance(a, b) += d * d;
            }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) mom.variance(a, b) /= (count - 1);
    return mom;
}

// Replaces every in-support variance entry by the average over the
// support (single pooled variance mode).
inline MomentMatrices pool_variance(const MomentMatrices& mom) {
    MomentMatrices out = mom;
    double sum = 0.0;
    int cnt = 0;
    for (int a = 0; a < mom.mean.rows(); ++a)
        for (int b = 0; b < mom.mean.cols(); ++b)
            if (mom.mean(a, b) > 0.0) {
                sum += mom.variance(a, b);
                ++cnt;
            }
    const double pooled = cnt > 0 ? sum / cnt : 0.0;
    for (int a = 0; a < mom.mean.rows(); ++a)
        for (int b = 0; b < mom.mean.cols(); ++b)
            out.variance(a, b) = mom.mean(a, b) > 0.0 ? pooled : 0.0;
    return out;
}

} // namespace tcldro
