#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "windxai/core.hpp"

namespace windxai {

// Ordered feature list plus optional per-feature standardization parameters
// (fit on training data only). The order is fixed for a model's lifetime.
struct FeatureSchema {
    std::vector<Feature> features;
    std::vector<double> mean;  // empty until fit_scaler
    std::vector<double> std;

    std::size_t size() const { return features.size(); }
    bool standardized() const { return !mean.empty(); }

    int index_of(Feature f) const {
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i] == f) return static_cast<int>(i);
        }
        return -1;
    }

    std::vector<double> extract(const ScadaRecord& r) const {
        std::vector<double> x(features.size());
        for (std::size_t i = 0; i < features.size(); ++i) x[i] = r.feature(features[i]);
        return x;
    }

    std::vector<double> standardize(std::span<const double> x) const {
        std::vector<double> z(x.begin(), x.end());
        if (!standardized()) return z;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = (z[i] - mean[i]) / std[i];
        return z;
    }

    std::vector<double> unstandardize(std::span<const double> z) const {
        std::vector<double> x(z.begin(), z.end());
        if (!standardized()) return x;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] * std[i] + mean[i];
        return x;
    }
};

inline FeatureSchema base_schema() {
    return {{Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity}, {}, {}};
}

inline FeatureSchema monitoring_schema() {
    return {{Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity, Feature::YawMisalignment}, {}, {}};
}

// Population-convention standardization (sigma divides by n). Constant
// features are rejected: they cannot be standardized and carry no signal.
inline FeatureSchema fit_scaler(const Records& train, FeatureSchema schema) {
    if (train.empty()) throw DataError("fit_scaler: empty training set");
    const std::size_t d = schema.size();
    schema.mean.assign(d, 0.0);
    schema.std.assign(d, 0.0);
    for (const auto& r : train) {
        for (std::size_t i = 0; i < d; ++i) schema.mean[i] += r.feature(schema.features[i]);
    }
    for (std::size_t i = 0; i < d; ++i) schema.mean[i] /= static_cast<double>(train.size());
    for (const auto& r : train) {
        for (std::size_t i = 0; i < d; ++i) {
            const double dlt = r.feature(schema.features[i]) - schema.mean[i];
            schema.std[i] += dlt * dlt;
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        schema.std[i] = std::sqrt(schema.std[i] / static_cast<double>(train.size()));
        if (!(schema.std[i] > 0.0)) {
            throw DataError(std::string("fit_scaler: zero variance in feature ") +
                            feature_name(schema.features[i]));
        }
    }
    return schema;
}

// Uniform prediction contract: physical-unit features in, kW out.
// Implementations are deterministic, immutable after fitting, and safe for
// unlimited concurrent use.
class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual const FeatureSchema& schema() const = 0;
    virtual double predict(std::span<const double> features) const = 0;
    virtual std::string kind() const = 0;

    double predict_record(const ScadaRecord& r) const {
        const auto x = schema().extract(r);
        return predict(x);
    }
};

inline double evaluate_rmse(const Predictor& model, const Records& data) {
    if (data.empty()) throw DataError("evaluate_rmse: empty dataset");
    double acc = 0.0;
    for (const auto& r : data) {
        const double e = model.predict_record(r) - r.power;
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(data.size()));
}

}  // namespace windxai
