#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windxai/core.hpp"
#include "windxai/math.hpp"
#include "windxai/predictor.hpp"

namespace windxai {

enum class RefStrategy { Min, Mean, Informed };

inline const char* ref_strategy_name(RefStrategy s) {
    switch (s) {
        case RefStrategy::Min: return "min";
        case RefStrategy::Mean: return "mean";
        case RefStrategy::Informed: return "informed";
    }
    return "?";
}

inline RefStrategy ref_strategy_from_name(const std::string& s) {
    if (s == "min") return RefStrategy::Min;
    if (s == "mean") return RefStrategy::Mean;
    if (s == "informed") return RefStrategy::Informed;
    throw UsageError("unknown reference strategy: " + s);
}

// Binned conditional mean of one environmental feature given wind speed,
// with a global-mean fallback outside the covered range.
struct ConditionalTable {
    std::vector<double> centers;  // wind-speed bin centers
    std::vector<double> means;
    double global_mean = 0.0;

    // Linear interpolation between bin centers; the fallback applies beyond
    // the first/last center.
    double lookup(double v_w, bool* used_fallback = nullptr) const {
        if (centers.empty() || v_w < centers.front() || v_w > centers.back()) {
            if (used_fallback != nullptr) *used_fallback = true;
            return global_mean;
        }
        if (used_fallback != nullptr) *used_fallback = false;
        return linear_interp(centers, means, v_w);
    }
};

inline ConditionalTable build_conditional_table(const Records& train, Feature feature,
                                                double bin_width = 0.5, int min_rows = 10) {
    if (train.empty()) throw DataError("build_conditional_table: empty training set");
    std::map<std::int64_t, std::pair<double, std::int64_t>> acc;
    double total = 0.0;
    for (const auto& r : train) {
        const auto k = static_cast<std::int64_t>(std::floor(r.v_w / bin_width));
        acc[k].first += r.feature(feature);
        acc[k].second += 1;
        total += r.feature(feature);
    }
    ConditionalTable table;
    table.global_mean = total / static_cast<double>(train.size());
    for (const auto& [k, a] : acc) {
        if (a.second < min_rows) continue;
        table.centers.push_back((static_cast<double>(k) + 0.5) * bin_width);
        table.means.push_back(a.first / static_cast<double>(a.second));
    }
    return table;
}

// Per-feature reference values in physical units, plus the strategy that
// produced them.
struct ReferencePoint {
    RefStrategy strategy = RefStrategy::Min;
    std::vector<double> values;  // one per schema feature
    bool used_fallback = false;  // informed lookup left the table range
};

// Precomputes training statistics so references for many instances are cheap.
// Environmental features (rho, TI) get conditional tables; wind speed is its
// own reference under the informed strategy and technical features (yaw)
// reset to the healthy baseline of zero.
class ReferenceBuilder {
  public:
    ReferenceBuilder(const Records& train, FeatureSchema schema, double bin_width = 0.5, int min_rows = 10)
        : schema_(std::move(schema)) {
        if (train.empty()) throw DataError("ReferenceBuilder: empty training set");
        const std::size_t d = schema_.size();
        mins_.assign(d, 0.0);
        means_.assign(d, 0.0);
        for (std::size_t f = 0; f < d; ++f) {
            double lo = train.front().feature(schema_.features[f]);
            double sum = 0.0;
            for (const auto& r : train) {
                const double v = r.feature(schema_.features[f]);
                lo = std::min(lo, v);
                sum += v;
            }
            mins_[f] = lo;
            means_[f] = sum / static_cast<double>(train.size());
            switch (schema_.features[f]) {
                case Feature::AirDensity:
                case Feature::TurbulenceIntensity:
                    tables_[schema_.features[f]] = build_conditional_table(train, schema_.features[f],
                                                                           bin_width, min_rows);
                    break;
                default:
                    break;
            }
        }
    }

    const FeatureSchema& schema() const { return schema_; }

    ReferencePoint build(RefStrategy strategy, const ScadaRecord* instance = nullptr) const {
        ReferencePoint ref;
        ref.strategy = strategy;
        const std::size_t d = schema_.size();
        ref.values.resize(d);
        switch (strategy) {
            case RefStrategy::Min:
                ref.values = mins_;
                break;
            case RefStrategy::Mean:
                ref.values = means_;
                break;
            case RefStrategy::Informed: {
                if (instance == nullptr)
                    throw UsageError("informed reference requires an instance");
                for (std::size_t f = 0; f < d; ++f) {
                    switch (schema_.features[f]) {
                        case Feature::WindSpeed:
                            ref.values[f] = instance->v_w;
                            break;
                        case Feature::YawMisalignment:
                            ref.values[f] = 0.0;  // healthy technical baseline
                            break;
                        default: {
                            bool fb = false;
                            ref.values[f] = tables_.at(schema_.features[f]).lookup(instance->v_w, &fb);
                            ref.used_fallback = ref.used_fallback || fb;
                            break;
                        }
                    }
                }
                break;
            }
        }
        return ref;
    }

    const ConditionalTable& table(Feature f) const { return tables_.at(f); }

  private:
    FeatureSchema schema_;
    std::vector<double> mins_;
    std::vector<double> means_;
    std::map<Feature, ConditionalTable> tables_;
};

inline ReferencePoint build_reference(RefStrategy strategy, const Records& train,
                                      const FeatureSchema& schema, const ScadaRecord* instance = nullptr) {
    return ReferenceBuilder(train, schema).build(strategy, instance);
}

// Per-feature Shapley contributions in kW. Conservation ties the attribution
// to the model outputs: sum(phi) = f(x) - f(ref).
struct Attribution {
    std::vector<Feature> features;
    std::vector<double> phi;  // kW
    double f_x = 0.0;
    double f_ref = 0.0;
    RefStrategy reference = RefStrategy::Min;

    double phi_for(Feature f) const {
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i] == f) return phi[i];
        }
        throw UsageError(std::string("attribution has no feature ") + feature_name(f));
    }
};

inline constexpr std::size_t kMaxShapleyFeatures = 16;

// Exact Shapley values with baseline substitution: the value of a coalition
// S evaluates the model with features in S at the instance and the rest at
// the reference. All 2^n coalition values are computed once; phi_i then
// accumulates the combinatorially weighted marginals.
inline Attribution shapley_exact(const Predictor& model, std::span<const double> x,
                                 const ReferencePoint& ref) {
    const auto& schema = model.schema();
    const std::size_t n = schema.size();
    if (n == 0 || n > kMaxShapleyFeatures)
        throw UsageError("shapley_exact: feature count outside [1, 16]");
    if (x.size() != n || ref.values.size() != n)
        throw UsageError("shapley_exact: instance/reference size mismatch");
    for (double v : x) {
        if (!std::isfinite(v)) throw UsageError("shapley_exact: non-finite instance");
    }

    const std::size_t n_masks = std::size_t{1} << n;
    std::vector<double> value(n_masks);
    std::vector<double> z(ref.values.begin(), ref.values.end());
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        for (std::size_t i = 0; i < n; ++i) z[i] = (mask >> i) & 1 ? x[i] : ref.values[i];
        const double out = model.predict(z);
        if (!std::isfinite(out)) throw NumericError("shapley_exact: non-finite model output");
        value[mask] = out;
    }

    // weight[s] = s! (n-1-s)! / n!
    std::vector<double> weight(n);
    {
        std::vector<double> fact(n + 1, 1.0);
        for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
        for (std::size_t s = 0; s < n; ++s) weight[s] = fact[s] * fact[n - 1 - s] / fact[n];
    }

    Attribution attr;
    attr.features = schema.features;
    attr.phi.assign(n, 0.0);
    attr.f_x = value[n_masks - 1];
    attr.f_ref = value[0];
    attr.reference = ref.strategy;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        const auto s = static_cast<std::size_t>(std::popcount(mask));
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1) continue;
            attr.phi[i] += weight[s] * (value[mask | (std::size_t{1} << i)] - value[mask]);
        }
    }
    return attr;
}

inline Attribution shapley_exact(const Predictor& model, const ScadaRecord& instance,
                                 const ReferencePoint& ref) {
    const auto x = model.schema().extract(instance);
    return shapley_exact(model, x, ref);
}

}  // namespace windxai
