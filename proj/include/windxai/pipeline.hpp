#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "windxai/core.hpp"
#include "windxai/iec.hpp"
#include "windxai/util.hpp"

namespace windxai {

// Keeps records where the turbine is producing (P > 0) and the SCADA logs
// report no stoppage or curtailment. Order preserved; idempotent.
inline Records filter_operational(const Records& records) {
    Records out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.power > 0.0 && r.status_ok) out.push_back(r);
    }
    return out;
}

// Temporal split: test = records in test_interval, validation = a uniform
// random fraction of the train-interval records, train = the rest of the
// train interval. Records outside both intervals are dropped.
inline DataSplit split_temporal(const Records& records, const TimeInterval& train_interval,
                                const TimeInterval& test_interval, double val_fraction,
                                std::uint64_t seed) {
    if (train_interval.overlaps(test_interval)) throw UsageError("split_temporal: intervals overlap");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw UsageError("split_temporal: val_fraction must be in (0, 1)");

    std::vector<std::size_t> train_idx;
    DataSplit split;
    split.seed = seed;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (train_interval.contains(records[i].timestamp)) {
            train_idx.push_back(i);
        } else if (test_interval.contains(records[i].timestamp)) {
            split.test.push_back(records[i]);
        }
    }
    if (train_idx.empty()) throw DataError("split_temporal: no records in the training interval");
    if (split.test.empty()) throw DataError("split_temporal: no records in the test interval");

    std::vector<std::size_t> order(train_idx.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed, /*stream=*/0x5b117);
    rng.shuffle(order);
    const auto n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(train_idx.size())));
    std::vector<bool> is_val(train_idx.size(), false);
    for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
        (is_val[i] ? split.val : split.train).push_back(records[train_idx[i]]);
    }
    if (split.train.empty() || split.val.empty())
        throw DataError("split_temporal: empty train or validation split");
    return split;
}

// Norm filter around a reference power curve (App-B style out-of-distribution
// screen). Records outside the curve's wind-speed support go to `removed`
// with the out-of-support flag set.
struct NormFilterResult {
    Records kept;
    Records removed;
    std::vector<bool> removed_out_of_support;  // aligned with `removed`
};

inline NormFilterResult norm_filter(const Records& records, const BinnedPowerCurve& reference_curve,
                                    double threshold_kw) {
    if (!(threshold_kw > 0.0)) throw UsageError("norm_filter: threshold must be positive");
    if (reference_curve.bins.empty()) throw UsageError("norm_filter: empty reference curve");
    NormFilterResult result;
    const double lo = reference_curve.support_lo();
    const double hi = reference_curve.support_hi();
    for (const auto& r : records) {
        if (r.v_w < lo || r.v_w > hi) {
            result.removed.push_back(r);
            result.removed_out_of_support.push_back(true);
            continue;
        }
        const double expected = curve_interpolate(reference_curve, r.v_w);
        if (std::abs(r.power - expected) <= threshold_kw) {
            result.kept.push_back(r);
        } else {
            result.removed.push_back(r);
            result.removed_out_of_support.push_back(false);
        }
    }
    return result;
}

// Ground truth attached to each yaw-augmented record.
//   c_ymis       cos^3 of the injected misalignment, in (0, 1]
//   delta_p_true signed power change actually applied, <= 0
//   p_free       power before augmentation
struct YawGroundTruth {
    double c_ymis = 1.0;
    double delta_p_true = 0.0;
    double p_free = 0.0;
};

struct YawAugmentation {
    DataSplit data;
    std::vector<YawGroundTruth> train_truth;
    std::vector<YawGroundTruth> val_truth;
    std::vector<YawGroundTruth> test_truth;
};

namespace detail {

inline void augment_yaw_list(Records& list, std::vector<YawGroundTruth>& truth, double sigma_deg,
                             double clip_deg, double v_rated, std::uint64_t seed, std::uint64_t stream) {
    truth.resize(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        Rng rng(seed, stream, i);
        ScadaRecord& r = list[i];
        const double delta = std::min(std::abs(rng.normal(0.0, sigma_deg)), clip_deg);
        r.delta_yaw = delta;
        YawGroundTruth& t = truth[i];
        t.p_free = r.power;
        t.c_ymis = yaw_power_factor(delta);
        if (r.v_w < v_rated) {
            t.delta_p_true = (t.c_ymis - 1.0) * t.p_free;
            r.power = t.c_ymis * t.p_free;
        } else {
            t.delta_p_true = 0.0;
        }
    }
}

}  // namespace detail

// Injects artificial yaw misalignment |N(0, sigma)| clipped to [0, clip_deg]
// and scales power by cos^3(delta) below rated wind speed. The returned
// ground truth is the signed power change the augmentation applied; the
// residual-power form of the truth is c_ymis * p_free, recoverable from the
// stored fields.
inline YawAugmentation augment_yaw(const DataSplit& split, double sigma_deg, double clip_deg,
                                   double v_rated, std::uint64_t seed) {
    if (!(sigma_deg > 0.0) || !(clip_deg > 0.0))
        throw UsageError("augment_yaw: sigma and clip must be positive");
    YawAugmentation out;
    out.data = split;
    detail::augment_yaw_list(out.data.train, out.train_truth, sigma_deg, clip_deg, v_rated, seed, 0xa1);
    detail::augment_yaw_list(out.data.val, out.val_truth, sigma_deg, clip_deg, v_rated, seed, 0xa2);
    detail::augment_yaw_list(out.data.test, out.test_truth, sigma_deg, clip_deg, v_rated, seed, 0xa3);
    return out;
}

inline constexpr double kDefaultYawSigmaDeg = 7.5;
inline constexpr double kDefaultYawClipDeg = 15.0;
inline constexpr double kDefaultNormThresholdKw = 100.0;

}  // namespace windxai
