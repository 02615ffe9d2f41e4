#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "gendir/error.hpp"

namespace gendir::stats {

struct CorrelationResult {
    double coefficient = 0.0;
    /// Two-sided; NaN when n < 3.
    double p_value = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
};

struct MeanStd {
    double mean = 0.0;
    /// Sample standard deviation (n - 1 denominator); 0 for a single sample.
    double std = 0.0;
};

/// Regularized incomplete beta I_x(a, b) by the modified Lentz continued fraction.
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    // The fraction converges fast for x < (a+1)/(a+b+2); use the symmetry otherwise.
    const bool flip = x > (a + 1.0) / (a + b + 2.0);
    if (flip) {
        std::swap(a, b);
        x = 1.0 - x;
    }

    const double log_front = a * std::log(x) + b * std::log1p(-x) -
                             (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    const double front = std::exp(log_front) / a;

    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 10000;

    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double f = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double dm = static_cast<double>(m);
        // even step
        double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        f *= d * c;
        // odd step
        num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    const double value = front * f;
    return flip ? 1.0 - value : value;
}

/// Upper tail P(T > t) of Student's t with `dof` degrees of freedom.
inline double student_t_sf(double t, double dof) {
    if (!(dof > 0.0)) throw std::invalid_argument("student_t_sf: dof must be positive");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
    const double x = dof / (dof + t * t);
    const double half_tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
    return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

/// Two-sided p-value of a sample correlation r over n points (t approximation).
inline double correlation_p_value(double r, std::size_t n) {
    if (n < 3) return std::numeric_limits<double>::quiet_NaN();
    const double dof = static_cast<double>(n - 2);
    const double one_minus_r2 = 1.0 - r * r;
    if (one_minus_r2 <= 0.0) return 0.0;
    const double t = std::abs(r) * std::sqrt(dof / one_minus_r2);
    return std::min(1.0, 2.0 * student_t_sf(t, dof));
}

inline CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw ValidationError("pearson: need at least two points");

    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedCorrelation("correlation undefined: a variable has zero variance");
    }
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return {r, correlation_p_value(r, n), n};
}

/// Fractional ranks starting at 1; ties receive the average of their positions.
inline std::vector<double> midranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && v[order[j]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j); // mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

inline CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
    const auto rx = midranks(x);
    const auto ry = midranks(y);
    return pearson(rx, ry);
}

/// Holm step-down adjustment; output is in the input order.
inline std::vector<double> holm_bonferroni(std::span<const double> p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    std::vector<double> out(m);
    double running = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double scaled = std::min(1.0, static_cast<double>(m - j) * p[order[j]]);
        running = std::max(running, scaled);
        out[order[j]] = running;
    }
    return out;
}

inline MeanStd mean_std(std::span<const double> samples) {
    if (samples.empty()) throw ValidationError("mean_std: no samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (samples.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

} // namespace gendir::stats
