#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "windxai/core.hpp"
#include "windxai/math.hpp"
#include "windxai/predictor.hpp"

namespace windxai {

// IEC 61400-12-1 air-density normalization for pitch-regulated machines.
inline double density_normalize(double v, double rho, double rho_ref) {
    if (!(rho > 0.0) || !(rho_ref > 0.0)) throw UsageError("density_normalize: non-positive density");
    return v * std::cbrt(rho / rho_ref);
}

// Actuator-disk yaw loss factor cos^3(delta).
inline double yaw_power_factor(double delta_deg) {
    if (delta_deg < 0.0 || delta_deg > 90.0) throw UsageError("yaw_power_factor: angle outside [0, 90] deg");
    const double c = std::cos(delta_deg * 0.017453292519943295);
    return c * c * c;
}

// Method-of-bins power curve over density-normalized wind speed.
struct BinnedPowerCurve {
    struct Bin {
        double v_center = 0.0;  // bin midpoint k*w + w/2
        double mean_v = 0.0;    // arithmetic mean of normalized wind speeds
        double mean_p = 0.0;    // arithmetic mean of power, kW
        std::int64_t count = 0;
    };
    double bin_width = 0.5;
    double rho_ref = 1.225;
    std::vector<Bin> bins;

    double support_lo() const { return bins.front().v_center - 0.5 * bin_width; }
    double support_hi() const { return bins.back().v_center + 0.5 * bin_width; }
};

inline BinnedPowerCurve fit_binned_curve(const Records& train, double bin_width, double rho_ref,
                                         int min_count = 3) {
    if (train.empty()) throw DataError("fit_binned_curve: empty training set");
    if (!(bin_width > 0.0)) throw UsageError("fit_binned_curve: bin width must be positive");
    struct Acc {
        double sv = 0.0, sp = 0.0;
        std::int64_t n = 0;
    };
    std::map<std::int64_t, Acc> acc;
    for (const auto& r : train) {
        const double vn = density_normalize(r.v_w, r.rho, rho_ref);
        const auto k = static_cast<std::int64_t>(std::floor(vn / bin_width));
        auto& a = acc[k];
        a.sv += vn;
        a.sp += r.power;
        a.n += 1;
    }
    BinnedPowerCurve curve;
    curve.bin_width = bin_width;
    curve.rho_ref = rho_ref;
    for (const auto& [k, a] : acc) {
        if (a.n < min_count) continue;
        BinnedPowerCurve::Bin b;
        b.v_center = (static_cast<double>(k) + 0.5) * bin_width;
        b.mean_v = a.sv / static_cast<double>(a.n);
        b.mean_p = a.sp / static_cast<double>(a.n);
        b.count = a.n;
        curve.bins.push_back(b);
    }
    if (curve.bins.empty()) throw DataError("fit_binned_curve: all bins below the minimum count");
    return curve;
}

// Piecewise-linear evaluation through the (mean_v, mean_p) knots. Clamps to
// the boundary values outside the covered range, except below the first
// bin's lower edge where a positive first bin implies the machine is still
// off and the curve reads zero.
inline double curve_interpolate(const BinnedPowerCurve& curve, double v) {
    if (curve.bins.empty()) throw UsageError("curve_interpolate: empty curve");
    const auto& bins = curve.bins;
    if (v < bins.front().mean_v) {
        const double lower_edge = bins.front().v_center - 0.5 * curve.bin_width;
        if (bins.front().mean_p > 0.0 && v < lower_edge) return 0.0;
        return bins.front().mean_p;
    }
    if (v >= bins.back().mean_v) return bins.back().mean_p;
    std::size_t hi = 1;
    while (bins[hi].mean_v < v) ++hi;
    const auto& a = bins[hi - 1];
    const auto& b = bins[hi];
    const double w = (v - a.mean_v) / (b.mean_v - a.mean_v);
    return a.mean_p + w * (b.mean_p - a.mean_p);
}

// Latent power curve at zero turbulence intensity on a uniform grid.
struct ZeroTICurve {
    double grid_start = 0.0;
    double grid_step = 0.25;
    std::vector<double> p_zero;
    bool converged = false;
    int iterations = 0;

    double grid_end() const {
        return grid_start + grid_step * static_cast<double>(p_zero.size() - 1);
    }
    double knot(std::size_t i) const { return grid_start + grid_step * static_cast<double>(i); }

    double value_at(double v) const {
        if (p_zero.empty()) throw UsageError("ZeroTICurve: empty grid");
        if (v <= grid_start) return p_zero.front();
        const double pos = (v - grid_start) / grid_step;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= p_zero.size()) return p_zero.back();
        const double w = pos - static_cast<double>(i);
        return p_zero[i] * (1.0 - w) + p_zero[i + 1] * w;
    }
};

// 10-minute turbulence correction: expected power under a Gaussian wind
// distribution with sigma = TI * v (IEC Annex-M style).
inline double ti_expected_power(const ZeroTICurve& zero_ti, double v, double ti) {
    if (ti < 0.0) throw UsageError("ti_expected_power: negative turbulence intensity");
    const double sigma = ti * v;
    return gaussian_smoothed([&](double u) { return zero_ti.value_at(u); }, v, sigma, zero_ti.grid_step);
}

namespace detail {

// Grid values from the current bin-knot estimates: zero below the first bin
// edge, monotone cubic through the knots, and a slope-continuation tail
// capped at rated power beyond the last knot. The tail matters when the data
// ends near the rated knee; a flat extension there rings the whole fit.
inline std::vector<double> zero_ti_grid_values(const std::vector<double>& knot_v,
                                               const std::vector<double>& knot_p, double first_edge,
                                               double grid_start, double grid_step, std::size_t grid_n,
                                               double rated_power) {
    std::vector<double> xs, ys;
    xs.reserve(knot_v.size() + 1);
    ys.reserve(knot_v.size() + 1);
    if (first_edge < knot_v.front()) {
        xs.push_back(first_edge);
        ys.push_back(0.0);
    }
    xs.insert(xs.end(), knot_v.begin(), knot_v.end());
    ys.insert(ys.end(), knot_p.begin(), knot_p.end());
    const auto slopes = pchip_slopes(xs, ys);

    double tail_slope = 0.0;
    if (knot_v.size() >= 2) {
        const std::size_t n = knot_v.size();
        tail_slope = (knot_p[n - 1] - knot_p[n - 2]) / std::max(knot_v[n - 1] - knot_v[n - 2], 1e-9);
        tail_slope = std::max(tail_slope, 0.0);
    }

    std::vector<double> values(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) {
        const double u = grid_start + grid_step * static_cast<double>(i);
        double p;
        if (u < xs.front()) {
            p = 0.0;
        } else if (u <= xs.back()) {
            p = pchip_eval(xs, ys, slopes, u);
        } else {
            p = std::min(knot_p.back() + tail_slope * (u - xs.back()), rated_power);
        }
        values[i] = std::clamp(p, 0.0, 1.05 * rated_power);
    }
    return values;
}

}  // namespace detail

// Fixed-point recovery of the zero-TI curve: at every bin knot, simulate the
// measured 10-minute power from the current estimate and the bin's mean TI,
// and shift the knot by the residual. Residuals below tol_kw at every knot
// count as converged; non-convergence is flagged, not fatal.
inline ZeroTICurve fit_zero_ti_curve(const BinnedPowerCurve& binned, const Records& train,
                                     int max_iter, double tol_kw, double rated_power) {
    if (binned.bins.empty()) throw UsageError("fit_zero_ti_curve: empty binned curve");
    if (train.empty()) throw DataError("fit_zero_ti_curve: empty training set");
    if (!(tol_kw > 0.0) || max_iter < 1) throw UsageError("fit_zero_ti_curve: bad iteration parameters");

    // Per-bin mean turbulence intensity, same bin assignment as the fit.
    std::map<std::int64_t, std::pair<double, std::int64_t>> ti_acc;
    for (const auto& r : train) {
        const double vn = density_normalize(r.v_w, r.rho, binned.rho_ref);
        const auto k = static_cast<std::int64_t>(std::floor(vn / binned.bin_width));
        auto& a = ti_acc[k];
        a.first += r.ti;
        a.second += 1;
    }
    std::vector<double> knot_v, knot_p, knot_ti;
    for (const auto& b : binned.bins) {
        knot_v.push_back(b.mean_v);
        knot_p.push_back(b.mean_p);
        const auto k = static_cast<std::int64_t>(std::floor(b.v_center / binned.bin_width));
        const auto it = ti_acc.find(k);
        knot_ti.push_back(it != ti_acc.end() && it->second.second > 0
                              ? it->second.first / static_cast<double>(it->second.second)
                              : 0.0);
    }

    const double first_edge = binned.support_lo();
    ZeroTICurve curve;
    curve.grid_start = 0.0;
    curve.grid_step = 0.25;
    const double grid_hi = knot_v.back() + 4.0;
    const auto grid_n = static_cast<std::size_t>(std::ceil((grid_hi - curve.grid_start) / curve.grid_step)) + 1;

    std::vector<double> knots = knot_p;
    double max_update = 0.0;
    int iter = 0;
    for (iter = 1; iter <= max_iter; ++iter) {
        curve.p_zero = detail::zero_ti_grid_values(knot_v, knots, first_edge, curve.grid_start,
                                                   curve.grid_step, grid_n, rated_power);
        max_update = 0.0;
        std::vector<double> updated = knots;
        for (std::size_t i = 0; i < knot_v.size(); ++i) {
            const double sim = ti_expected_power(curve, knot_v[i], knot_ti[i]);
            const double update = knot_p[i] - sim;
            updated[i] = std::clamp(knots[i] + update, 0.0, 1.05 * rated_power);
            max_update = std::max(max_update, std::abs(update));
        }
        if (max_update < tol_kw) break;
        knots = std::move(updated);
    }
    curve.p_zero = detail::zero_ti_grid_values(knot_v, knots, first_edge, curve.grid_start,
                                               curve.grid_step, grid_n, rated_power);
    curve.converged = max_update < tol_kw;
    curve.iterations = std::min(iter, max_iter);
    return curve;
}

// Physics baseline: binned curve, density normalization, TI correction.
struct IecModel {
    BinnedPowerCurve binned;
    ZeroTICurve zero_ti;
    double rho_ref = 1.225;
    double rated_power = 0.0;
};

inline double iec_predict(const IecModel& model, double v, double rho, double ti) {
    const double vn = density_normalize(v, rho, model.rho_ref);
    const double p = ti_expected_power(model.zero_ti, vn, ti);
    return std::clamp(p, 0.0, 1.05 * model.rated_power);
}

struct IecFitOptions {
    double bin_width = 0.5;
    int min_count = 3;
    int max_iter = 20;
    double tol_kw = 0.5;
    std::optional<double> rated_power;  // default: highest bin mean
};

inline IecModel fit_iec_model(const Records& train, const IecFitOptions& opts = {}) {
    if (train.empty()) throw DataError("fit_iec_model: empty training set");
    double rho_sum = 0.0;
    for (const auto& r : train) rho_sum += r.rho;
    const double rho_ref = rho_sum / static_cast<double>(train.size());

    IecModel model;
    model.rho_ref = rho_ref;
    model.binned = fit_binned_curve(train, opts.bin_width, rho_ref, opts.min_count);
    double max_p = 0.0;
    for (const auto& b : model.binned.bins) max_p = std::max(max_p, b.mean_p);
    model.rated_power = opts.rated_power.value_or(max_p);
    model.zero_ti = fit_zero_ti_curve(model.binned, train, opts.max_iter, opts.tol_kw, model.rated_power);
    return model;
}

class IecPredictor final : public Predictor {
  public:
    explicit IecPredictor(IecModel model) : model_(std::move(model)), schema_(base_schema()) {}

    const FeatureSchema& schema() const override { return schema_; }
    std::string kind() const override { return "iec"; }
    double predict(std::span<const double> x) const override {
        return iec_predict(model_, x[0], x[1], x[2]);
    }

    const IecModel& model() const { return model_; }

  private:
    IecModel model_;
    FeatureSchema schema_;
};

}  // namespace windxai
