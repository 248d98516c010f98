#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "windxai/attribution.hpp"
#include "windxai/core.hpp"
#include "windxai/forest.hpp"
#include "windxai/math.hpp"
#include "windxai/mlp.hpp"
#include "windxai/pipeline.hpp"
#include "windxai/predictor.hpp"
#include "windxai/util.hpp"

namespace windxai {

// ---------------------------------------------------------------------------
// Strategy comparison: how closely do a data-driven model's attributions
// track the physics baseline's?
// ---------------------------------------------------------------------------

struct StrategyReport {
    std::vector<Feature> features;
    std::vector<std::optional<double>> r_squared;  // per feature; nullopt when degenerate
    double r2_phys = 0.0;                          // unweighted mean over defined features
    std::size_t n_instances = 0;
};

// Squared Pearson correlation between the two attribution series, feature by
// feature, across aligned instances. Features whose series have zero
// variance are reported missing and excluded from the aggregate.
inline StrategyReport strategy_correlation(const std::vector<Attribution>& ml_attrs,
                                           const std::vector<Attribution>& iec_attrs) {
    if (ml_attrs.size() != iec_attrs.size() || ml_attrs.empty())
        throw UsageError("strategy_correlation: need two aligned non-empty attribution lists");
    const auto& features = ml_attrs.front().features;
    for (std::size_t i = 0; i < ml_attrs.size(); ++i) {
        if (ml_attrs[i].reference != iec_attrs[i].reference)
            throw UsageError("strategy_correlation: mixed reference strategies");
    }

    StrategyReport report;
    report.features = features;
    report.n_instances = ml_attrs.size();
    double sum = 0.0;
    std::size_t defined = 0;
    const auto n = static_cast<double>(ml_attrs.size());
    for (std::size_t f = 0; f < features.size(); ++f) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < ml_attrs.size(); ++i) {
            ma += ml_attrs[i].phi_for(features[f]);
            mb += iec_attrs[i].phi_for(features[f]);
        }
        ma /= n;
        mb /= n;
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (std::size_t i = 0; i < ml_attrs.size(); ++i) {
            const double da = ml_attrs[i].phi_for(features[f]) - ma;
            const double db = iec_attrs[i].phi_for(features[f]) - mb;
            saa += da * da;
            sbb += db * db;
            sab += da * db;
        }
        // r^2 computed without the square root: identical series divide the
        // same product by itself and give exactly one.
        if (saa > 0.0 && sbb > 0.0) {
            const double r2 = (sab * sab) / (saa * sbb);
            report.r_squared.emplace_back(r2);
            sum += r2;
            ++defined;
        } else {
            report.r_squared.emplace_back(std::nullopt);
        }
    }
    report.r2_phys = defined > 0 ? sum / static_cast<double>(defined) : 0.0;
    return report;
}

// ---------------------------------------------------------------------------
// Attribution distributions conditioned on wind speed (Fig.-1 style).
// ---------------------------------------------------------------------------

struct ConditionalCurve {
    Feature feature = Feature::WindSpeed;
    std::vector<double> centers;
    std::vector<double> mean, min, max, stddev;
    std::vector<std::int64_t> count;
};

inline std::vector<ConditionalCurve> conditional_attribution_curves(const std::vector<Attribution>& attrs,
                                                                    const std::vector<double>& v_list,
                                                                    double bin_width = 0.5,
                                                                    int min_rows = 5) {
    if (attrs.size() != v_list.size()) throw UsageError("conditional curves: misaligned inputs");
    if (!(bin_width > 0.0)) throw UsageError("conditional curves: bin width must be positive");
    if (attrs.empty()) return {};
    const auto& features = attrs.front().features;

    std::vector<ConditionalCurve> curves;
    for (std::size_t f = 0; f < features.size(); ++f) {
        struct Acc {
            double sum = 0.0, sq = 0.0;
            double lo = 0.0, hi = 0.0;
            std::int64_t n = 0;
        };
        std::map<std::int64_t, Acc> acc;
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            const double phi = attrs[i].phi[f];
            const auto k = static_cast<std::int64_t>(std::floor(v_list[i] / bin_width));
            auto& a = acc[k];
            if (a.n == 0) {
                a.lo = a.hi = phi;
            } else {
                a.lo = std::min(a.lo, phi);
                a.hi = std::max(a.hi, phi);
            }
            a.sum += phi;
            a.sq += phi * phi;
            a.n += 1;
        }
        ConditionalCurve curve;
        curve.feature = features[f];
        for (const auto& [k, a] : acc) {
            if (a.n < min_rows) continue;
            const double mean = a.sum / static_cast<double>(a.n);
            const double var = std::max(0.0, a.sq / static_cast<double>(a.n) - mean * mean);
            curve.centers.push_back((static_cast<double>(k) + 0.5) * bin_width);
            curve.mean.push_back(mean);
            curve.min.push_back(a.lo);
            curve.max.push_back(a.hi);
            curve.stddev.push_back(std::sqrt(var));
            curve.count.push_back(a.n);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

// ---------------------------------------------------------------------------
// Yaw faithfulness (Fig.-3 left): attributed yaw contribution vs the known
// injected power change, binned in kW.
// ---------------------------------------------------------------------------

struct FaithfulnessReport {
    RefStrategy reference = RefStrategy::Informed;
    double bin_kw = 25.0;
    std::vector<double> centers;  // kW bins of true yaw deviation
    std::vector<double> mean_phi, std_phi, mean_truth;
    std::vector<std::int64_t> count;
    double mae = 0.0;  // mean |phi_yaw - delta_p_true|
};

inline FaithfulnessReport yaw_faithfulness(const std::vector<YawGroundTruth>& truth,
                                           const std::vector<Attribution>& attrs, double bin_kw = 25.0) {
    if (truth.size() != attrs.size() || truth.empty())
        throw UsageError("yaw_faithfulness: need aligned non-empty lists");
    if (!(bin_kw > 0.0)) throw UsageError("yaw_faithfulness: bin width must be positive");

    FaithfulnessReport report;
    report.reference = attrs.front().reference;
    report.bin_kw = bin_kw;
    struct Acc {
        double sum = 0.0, sq = 0.0, truth_sum = 0.0;
        std::int64_t n = 0;
    };
    std::map<std::int64_t, Acc> acc;
    double abs_err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double phi = attrs[i].phi_for(Feature::YawMisalignment);
        abs_err += std::abs(phi - truth[i].delta_p_true);
        const auto k = static_cast<std::int64_t>(std::floor(truth[i].delta_p_true / bin_kw));
        auto& a = acc[k];
        a.sum += phi;
        a.sq += phi * phi;
        a.truth_sum += truth[i].delta_p_true;
        a.n += 1;
    }
    report.mae = abs_err / static_cast<double>(truth.size());
    for (const auto& [k, a] : acc) {
        const double mean = a.sum / static_cast<double>(a.n);
        const double var = std::max(0.0, a.sq / static_cast<double>(a.n) - mean * mean);
        report.centers.push_back((static_cast<double>(k) + 0.5) * bin_kw);
        report.mean_phi.push_back(mean);
        report.std_phi.push_back(std::sqrt(var));
        report.mean_truth.push_back(a.truth_sum / static_cast<double>(a.n));
        report.count.push_back(a.n);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Performance monitoring: decompose one instance's deviation from its
// expected output into per-feature kW contributions.
// ---------------------------------------------------------------------------

struct MonitoringReport {
    std::int64_t timestamp = 0;
    double power = 0.0;    // measured
    double f_x = 0.0;      // model at the instance
    double f_ref = 0.0;    // expected output at this wind speed
    double residual = 0.0; // power - f_x (model error)
    std::vector<Feature> features;
    std::vector<double> phi;
    double abs_error = 0.0;      // |power - f_x|, the confidence measure
    bool low_confidence = false; // abs_error above the training p90
    bool used_fallback = false;  // informed reference fell back to global means
};

// Context shared by many monitoring decompositions: informed-reference
// tables plus the training error scale of the model.
class MonitoringContext {
  public:
    MonitoringContext(const Predictor& model, const Records& train)
        : builder_(train, model.schema()) {
        std::vector<double> errs;
        errs.reserve(train.size());
        for (const auto& r : train) errs.push_back(std::abs(model.predict_record(r) - r.power));
        p90_abs_error_ = percentile(std::move(errs), 0.90);
    }

    const ReferenceBuilder& builder() const { return builder_; }
    double p90_abs_error() const { return p90_abs_error_; }

  private:
    ReferenceBuilder builder_;
    double p90_abs_error_ = 0.0;
};

inline MonitoringReport decompose_deviation(const Predictor& model, const ScadaRecord& instance,
                                            const MonitoringContext& ctx) {
    const ReferencePoint ref = ctx.builder().build(RefStrategy::Informed, &instance);
    const Attribution attr = shapley_exact(model, instance, ref);
    MonitoringReport report;
    report.timestamp = instance.timestamp;
    report.power = instance.power;
    report.f_x = attr.f_x;
    report.f_ref = attr.f_ref;
    report.residual = instance.power - attr.f_x;
    report.features = attr.features;
    report.phi = attr.phi;
    report.abs_error = std::abs(report.residual);
    report.low_confidence = report.abs_error > ctx.p90_abs_error();
    report.used_fallback = ref.used_fallback;
    return report;
}

inline MonitoringReport decompose_deviation(const Predictor& model, const ScadaRecord& instance,
                                            const Records& train, const FeatureSchema& schema) {
    if (schema.index_of(Feature::YawMisalignment) < 0)
        throw UsageError("decompose_deviation: schema lacks delta_yaw");
    MonitoringContext ctx(model, train);
    return decompose_deviation(model, instance, ctx);
}

// ---------------------------------------------------------------------------
// Out-of-distribution study (App.-B style).
// ---------------------------------------------------------------------------

struct ModelSpec {
    enum class Kind { Mlp, Forest };
    std::string name;
    Kind kind = Kind::Mlp;
    MlpConfig mlp;
    RfConfig rf;

    static ModelSpec ann_small(std::vector<Feature> feats) {
        ModelSpec s;
        s.name = "ann_small";
        s.kind = Kind::Mlp;
        s.mlp = MlpConfig::ann_small(std::move(feats));
        return s;
    }
    static ModelSpec ann_large(std::vector<Feature> feats) {
        ModelSpec s;
        s.name = "ann_large";
        s.kind = Kind::Mlp;
        s.mlp = MlpConfig::ann_large(std::move(feats));
        return s;
    }
    static ModelSpec forest(std::vector<Feature> feats) {
        ModelSpec s;
        s.name = "rf";
        s.kind = Kind::Forest;
        s.rf.features = std::move(feats);
        return s;
    }
};

inline std::unique_ptr<Predictor> train_model_spec(const ModelSpec& spec, const Records& train,
                                                   const Records& val, std::uint64_t seed) {
    if (spec.kind == ModelSpec::Kind::Mlp) {
        return std::make_unique<MlpModel>(mlp_train(spec.mlp, train, val, seed));
    }
    return std::make_unique<ForestModel>(rf_train(spec.rf, train, seed));
}

struct OodRow {
    std::string model;
    std::uint64_t seed = 0;
    double rmse_kept = 0.0;
    double rmse_removed = 0.0;
    std::optional<double> r2_phys;  // vs the IEC baseline, when requested
};

struct OodReport {
    std::vector<OodRow> rows;
};

struct OodOptions {
    double val_fraction = 0.2;
    // When set, each trained model is also scored against this baseline's
    // attributions (x_min reference) on a deterministic test subsample.
    const Predictor* iec_baseline = nullptr;
    std::size_t strategy_sample = 300;
};

// Trains every (config, seed) pair on the norm-filtered training data, then
// evaluates on the kept and removed test points.
inline OodReport ood_experiment(const std::vector<ModelSpec>& model_configs, const Records& kept_train,
                                const Records& kept_test, const Records& removed_test,
                                const std::vector<std::uint64_t>& seeds, const OodOptions& opts = {}) {
    if (removed_test.empty()) throw DataError("ood_experiment: no removed test points");
    if (kept_train.empty() || kept_test.empty()) throw DataError("ood_experiment: empty kept data");
    if (seeds.empty()) throw UsageError("ood_experiment: need at least one seed");

    OodReport report;
    for (const auto& spec : model_configs) {
        for (const auto seed : seeds) {
            // Carve a validation share out of the kept training data.
            std::vector<std::size_t> order(kept_train.size());
            std::iota(order.begin(), order.end(), 0);
            Rng rng(seed, /*stream=*/0x00d5917);
            rng.shuffle(order);
            const auto n_val = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(opts.val_fraction *
                                                         static_cast<double>(kept_train.size()))));
            Records val, train;
            val.reserve(n_val);
            train.reserve(kept_train.size() - n_val);
            std::vector<bool> is_val(kept_train.size(), false);
            for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
            for (std::size_t i = 0; i < kept_train.size(); ++i)
                (is_val[i] ? val : train).push_back(kept_train[i]);

            const auto model = train_model_spec(spec, train, val, seed);
            OodRow row;
            row.model = spec.name;
            row.seed = seed;
            row.rmse_kept = evaluate_rmse(*model, kept_test);
            row.rmse_removed = evaluate_rmse(*model, removed_test);

            if (opts.iec_baseline != nullptr) {
                const std::size_t stride = std::max<std::size_t>(1, kept_test.size() / opts.strategy_sample);
                Records sample;
                for (std::size_t i = 0; i < kept_test.size(); i += stride) sample.push_back(kept_test[i]);
                ReferenceBuilder mlb(train, model->schema());
                ReferenceBuilder ieb(train, opts.iec_baseline->schema());
                const auto ml_ref = mlb.build(RefStrategy::Min);
                const auto iec_ref = ieb.build(RefStrategy::Min);
                std::vector<Attribution> ml_attrs(sample.size()), iec_attrs(sample.size());
                parallel_for(sample.size(), [&](std::size_t i) {
                    ml_attrs[i] = shapley_exact(*model, sample[i], ml_ref);
                    iec_attrs[i] = shapley_exact(*opts.iec_baseline, sample[i], iec_ref);
                });
                row.r2_phys = strategy_correlation(ml_attrs, iec_attrs).r2_phys;
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

}  // namespace windxai
