#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "windxai/core.hpp"

namespace windxai {

// Piecewise-linear interpolation over sorted knots, clamped at both ends.
inline double linear_interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.empty()) throw UsageError("linear_interp: empty knot set");
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

// Monotonicity-preserving cubic Hermite slopes (Fritsch-Carlson).
inline std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto edge = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) {
            s = 0.0;
        } else if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) {
            s = 3.0 * d0;
        }
        return s;
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

inline double pchip_eval(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& d, double q) {
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    const std::size_t hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double h = x[hi] - x[lo];
    const double t = (q - x[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y[lo] * (2 * t3 - 3 * t2 + 1) + h * d[lo] * (t3 - 2 * t2 + t) +
           y[hi] * (-2 * t3 + 3 * t2) + h * d[hi] * (t3 - t2);
}

// Expected value of `curve` under a Gaussian centered at v with the given
// standard deviation: trapezoidal quadrature over [v - 4s, v + 4s] with the
// weight renormalized over the truncated support. The integration step is
// refined below the knot spacing so the quadrature error stays well under the
// one-tenth-kW level. A degenerate sigma returns curve(v) exactly.
inline double gaussian_smoothed(const std::function<double(double)>& curve, double v, double sigma,
                                double knot_step = 0.25) {
    if (!(sigma > 1e-12)) return curve(v);
    const double lo = v - 4.0 * sigma;
    const double hi = v + 4.0 * sigma;
    const double step = std::min(knot_step, sigma / 8.0);
    const std::size_t n = std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil((hi - lo) / step)));
    const double h = (hi - lo) / static_cast<double>(n);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double u = lo + h * static_cast<double>(i);
        const double z = u - v;
        double w = std::exp(-z * z * inv2s2);
        if (i == 0 || i == n) w *= 0.5;
        num += curve(u) * w;
        den += w;
    }
    return num / den;
}

inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw UsageError("percentile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - w) + values[hi] * w;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace windxai
