#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "windxai/core.hpp"
#include "windxai/iec.hpp"
#include "windxai/math.hpp"
#include "windxai/util.hpp"

namespace windxai {

// Desk-scale stand-in for a two-year SCADA export from a 2 MW machine.
// Wind speed is Weibull, air density a clipped seasonal normal, turbulence
// intensity a decreasing-in-wind lognormal. The latent curve is the cubic
// ramp smoothed by the 10-minute Gaussian wind distribution below rated and
// held at exactly rated above it (pitch control); observed power adds
// heteroscedastic Gaussian noise.
struct SynthConfig {
    std::size_t n_samples = 20000;
    double rated_power = 2000.0;  // kW
    double v_cut_in = 3.0;        // m/s
    double v_rated = 12.0;
    double v_cut_out = 25.0;
    double weibull_shape = 2.0;
    double weibull_scale = 8.5;
    double rho_mean = 1.225;  // kg/m^3
    double rho_std = 0.04;
    double rho_seasonal_amp = 0.02;
    double ti_low_wind = 0.18;   // lognormal median at v = 0
    double ti_high_wind = 0.08;  // asymptotic median at high wind
    double ti_decay_ms = 8.0;    // e-folding wind speed of the median, m/s
    double ti_sigma = 0.35;      // lognormal shape
    double ti_min = 0.01;
    double ti_max = 0.60;
    double noise_base_kw = 10.0;
    double noise_slope = 0.03;
    std::int64_t start_timestamp = 1577836800;  // 2020-01-01T00:00:00Z
    std::int64_t step_seconds = 600;

    void validate() const {
        if (!(0.0 < v_cut_in && v_cut_in < v_rated && v_rated < v_cut_out))
            throw UsageError("SynthConfig: need 0 < v_cut_in < v_rated < v_cut_out");
        if (!(rated_power > 0.0)) throw UsageError("SynthConfig: rated power must be positive");
        if (n_samples == 0) throw UsageError("SynthConfig: n_samples must be positive");
    }
};

// Noiseless truth the generator worked from, kept alongside each record.
struct SynthTruth {
    double p_latent = 0.0;     // kW
    double noise_sigma = 0.0;  // kW
};

struct SynthResult {
    Records records;
    std::vector<SynthTruth> truth;
};

namespace detail {

// Cubic ramp between cut-in and rated, held at rated above.
inline double ramp_power(const SynthConfig& cfg, double v) {
    if (v < cfg.v_cut_in) return 0.0;
    if (v > cfg.v_rated) return cfg.rated_power;
    const double c3 = cfg.v_cut_in * cfg.v_cut_in * cfg.v_cut_in;
    const double r3 = cfg.v_rated * cfg.v_rated * cfg.v_rated;
    return cfg.rated_power * (v * v * v - c3) / (r3 - c3);
}

inline double latent_base(const SynthConfig& cfg, double v_w, double v_n, double ti) {
    if (v_w < cfg.v_cut_in) return 0.0;
    if (v_n >= cfg.v_rated) return cfg.rated_power;
    const double p = gaussian_smoothed([&](double u) { return ramp_power(cfg, u); }, v_n, ti * v_n);
    return std::min(p, cfg.rated_power);
}

}  // namespace detail

// Latent (noiseless) power at the given ambient conditions and yaw
// misalignment. The yaw factor applies below rated wind speed only; pitch
// control absorbs the loss above it.
inline double synth_latent_power(const SynthConfig& cfg, double v_w, double rho, double ti,
                                 double delta_yaw = 0.0) {
    const double v_n = density_normalize(v_w, rho, cfg.rho_mean);
    const double base = detail::latent_base(cfg, v_w, v_n, ti);
    if (delta_yaw != 0.0 && v_w < cfg.v_rated) return yaw_power_factor(delta_yaw) * base;
    return base;
}

// Draws are partitioned per record index, so generation is deterministic and
// independent of evaluation order.
inline SynthResult generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SynthResult out;
    out.records.resize(cfg.n_samples);
    out.truth.resize(cfg.n_samples);

    const double shape = cfg.weibull_shape;
    const double scale = cfg.weibull_scale;
    // Inverse-CDF sampling of the Weibull truncated to [0, v_cut_out].
    const double f_max = 1.0 - std::exp(-std::pow(cfg.v_cut_out / scale, shape));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double year_seconds = 365.0 * 86400.0;

    parallel_for(cfg.n_samples, [&](std::size_t i) {
        Rng rng(seed, /*stream=*/0x5eed, i);
        const double u = rng.u01() * f_max;
        const double v_w = scale * std::pow(-std::log1p(-u), 1.0 / shape);

        const std::int64_t ts = cfg.start_timestamp + cfg.step_seconds * static_cast<std::int64_t>(i);
        const double season = std::sin(kTwoPi * static_cast<double>(ts - cfg.start_timestamp) / year_seconds);
        const double rho = std::clamp(rng.normal(cfg.rho_mean + cfg.rho_seasonal_amp * season, cfg.rho_std),
                                      0.9, 1.4);

        const double ti_median =
            cfg.ti_high_wind + (cfg.ti_low_wind - cfg.ti_high_wind) * std::exp(-v_w / cfg.ti_decay_ms);
        const double ti = std::clamp(ti_median * std::exp(cfg.ti_sigma * rng.normal()), cfg.ti_min, cfg.ti_max);

        const double p_latent = synth_latent_power(cfg, v_w, rho, ti);
        const double sigma = cfg.noise_base_kw + cfg.noise_slope * p_latent;
        // Floor at the record-level standby-draw bound.
        const double power = std::max(p_latent + sigma * rng.normal(), -50.0);

        ScadaRecord& r = out.records[i];
        r.timestamp = ts;
        r.v_w = v_w;
        r.rho = rho;
        r.ti = ti;
        r.delta_yaw = 0.0;
        r.power = power;
        r.status_ok = true;
        out.truth[i] = {p_latent, sigma};
    });
    return out;
}

}  // namespace windxai
