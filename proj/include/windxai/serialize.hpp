#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "windxai/analysis.hpp"
#include "windxai/attribution.hpp"
#include "windxai/core.hpp"
#include "windxai/forest.hpp"
#include "windxai/iec.hpp"
#include "windxai/mlp.hpp"
#include "windxai/util.hpp"

namespace windxai {

inline constexpr int kModelFormatVersion = 1;

namespace io {

using nlohmann::json;

inline json schema_to_json(const FeatureSchema& s) {
    json j;
    for (const auto f : s.features) j["features"].push_back(feature_name(f));
    if (s.standardized()) {
        j["mean"] = s.mean;
        j["std"] = s.std;
    }
    return j;
}

inline FeatureSchema schema_from_json(const json& j) {
    FeatureSchema s;
    for (const auto& name : j.at("features")) s.features.push_back(feature_from_name(name));
    if (j.contains("mean")) {
        s.mean = j.at("mean").get<std::vector<double>>();
        s.std = j.at("std").get<std::vector<double>>();
    }
    return s;
}

inline json iec_to_json(const IecModel& m) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = "iec";
    j["rho_ref"] = m.rho_ref;
    j["rated_power"] = m.rated_power;
    j["bin_width"] = m.binned.bin_width;
    json bins = json::array();
    for (const auto& b : m.binned.bins) bins.push_back({b.v_center, b.mean_v, b.mean_p, b.count});
    j["bins"] = std::move(bins);
    j["grid_start"] = m.zero_ti.grid_start;
    j["grid_step"] = m.zero_ti.grid_step;
    j["p_zero"] = m.zero_ti.p_zero;
    j["converged"] = m.zero_ti.converged;
    j["iterations"] = m.zero_ti.iterations;
    return j;
}

inline IecModel iec_from_json(const json& j) {
    IecModel m;
    m.rho_ref = j.at("rho_ref");
    m.rated_power = j.at("rated_power");
    m.binned.bin_width = j.at("bin_width");
    m.binned.rho_ref = m.rho_ref;
    for (const auto& row : j.at("bins")) {
        BinnedPowerCurve::Bin b;
        b.v_center = row.at(0);
        b.mean_v = row.at(1);
        b.mean_p = row.at(2);
        b.count = row.at(3);
        m.binned.bins.push_back(b);
    }
    m.zero_ti.grid_start = j.at("grid_start");
    m.zero_ti.grid_step = j.at("grid_step");
    m.zero_ti.p_zero = j.at("p_zero").get<std::vector<double>>();
    m.zero_ti.converged = j.at("converged");
    m.zero_ti.iterations = j.at("iterations");
    return m;
}

inline json mlp_to_json(const MlpModel& m) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = "mlp";
    j["schema"] = schema_to_json(m.schema());
    j["y_mean"] = m.y_mean();
    j["y_std"] = m.y_std();
    j["activation"] = activation_name(m.activation());
    json layers = json::array();
    for (std::size_t l = 0; l < m.weights().size(); ++l) {
        json layer;
        const auto& w = m.weights()[l];
        json rows = json::array();
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
            rows.push_back(std::move(row));
        }
        layer["w"] = std::move(rows);
        json bias = json::array();
        for (Eigen::Index r = 0; r < m.biases()[l].size(); ++r) bias.push_back(m.biases()[l](r));
        layer["b"] = std::move(bias);
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    j["epochs"] = m.history().epochs;
    j["best_val_loss"] = m.history().best_val_loss;
    return j;
}

inline MlpModel mlp_from_json(const json& j) {
    FeatureSchema schema = schema_from_json(j.at("schema"));
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    for (const auto& layer : j.at("layers")) {
        const auto& rows = layer.at("w");
        const auto n_rows = static_cast<Eigen::Index>(rows.size());
        const auto n_cols = static_cast<Eigen::Index>(rows.at(0).size());
        Eigen::MatrixXd w(n_rows, n_cols);
        for (Eigen::Index r = 0; r < n_rows; ++r) {
            for (Eigen::Index c = 0; c < n_cols; ++c) w(r, c) = rows.at(r).at(c);
        }
        const auto& bias = layer.at("b");
        Eigen::VectorXd b(static_cast<Eigen::Index>(bias.size()));
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = bias.at(r);
        weights.push_back(std::move(w));
        biases.push_back(std::move(b));
    }
    MlpModel m(std::move(schema), j.at("y_mean"), j.at("y_std"),
               activation_from_name(j.at("activation")), std::move(weights), std::move(biases));
    m.mutable_history().epochs = j.value("epochs", 0);
    m.mutable_history().best_val_loss = j.value("best_val_loss", 0.0);
    return m;
}

inline json forest_to_json(const ForestModel& m) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = "forest";
    j["schema"] = schema_to_json(m.schema());
    j["n_estimators"] = m.config().n_estimators;
    j["min_samples_split"] = m.config().min_samples_split;
    j["min_samples_leaf"] = m.config().min_samples_leaf;
    json trees = json::array();
    for (const auto& t : m.trees()) {
        json nodes = json::array();
        for (const auto& n : t) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j;
}

inline ForestModel forest_from_json(const json& j) {
    FeatureSchema schema = schema_from_json(j.at("schema"));
    RfConfig cfg;
    cfg.features = schema.features;
    cfg.n_estimators = j.at("n_estimators");
    cfg.min_samples_split = j.at("min_samples_split");
    cfg.min_samples_leaf = j.at("min_samples_leaf");
    std::vector<Tree> trees;
    for (const auto& tj : j.at("trees")) {
        Tree t;
        for (const auto& nj : tj) {
            TreeNode n;
            n.feature = nj.at(0);
            n.threshold = nj.at(1);
            n.left = nj.at(2);
            n.right = nj.at(3);
            n.value = nj.at(4);
            t.push_back(n);
        }
        trees.push_back(std::move(t));
    }
    return ForestModel(std::move(schema), std::move(trees), std::move(cfg));
}

}  // namespace io

inline void save_model(const IecModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out << io::iec_to_json(m).dump(2) << '\n';
}

inline void save_model(const MlpModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out << io::mlp_to_json(m).dump(2) << '\n';
}

inline void save_model(const ForestModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out << io::forest_to_json(m).dump(2) << '\n';
}

// Loads any saved model through the common Predictor contract.
inline std::unique_ptr<Predictor> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    io::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("corrupt model file " + path + ": " + e.what());
    }
    const int version = j.value("format_version", -1);
    if (version != kModelFormatVersion)
        throw DataError("unsupported model format version in " + path);
    const std::string kind = j.value("kind", "");
    if (kind == "iec") return std::make_unique<IecPredictor>(io::iec_from_json(j));
    if (kind == "mlp") return std::make_unique<MlpModel>(io::mlp_from_json(j));
    if (kind == "forest") return std::make_unique<ForestModel>(io::forest_from_json(j));
    throw DataError("unknown model kind '" + kind + "' in " + path);
}

// ---------------------------------------------------------------------------
// CSV emitters. All files carry a header row and a fixed column order.
// ---------------------------------------------------------------------------

inline void write_loss_history_csv(const std::string& path, const TrainingHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write loss history: " + path);
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < history.curve.size(); ++i) {
        out << (i + 1) << ',' << format_double(history.curve[i].first) << ','
            << format_double(history.curve[i].second) << '\n';
    }
}

// One row per explained instance. phi columns for features outside the
// model's schema stay empty.
inline void write_attributions_csv(const std::string& path, const Records& instances,
                                   const std::vector<Attribution>& attrs) {
    if (instances.size() != attrs.size()) throw UsageError("write_attributions_csv: misaligned inputs");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write attributions: " + path);
    out << "timestamp,v_w,rho,ti,delta_yaw,power,f_x,f_ref,phi_v_w,phi_rho,phi_ti,phi_delta_yaw,ref_strategy\n";
    const Feature all[] = {Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity,
                           Feature::YawMisalignment};
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        const auto& r = instances[i];
        const auto& a = attrs[i];
        out << format_timestamp(r.timestamp) << ',' << format_double(r.v_w) << ',' << format_double(r.rho)
            << ',' << format_double(r.ti) << ',' << format_double(r.delta_yaw) << ','
            << format_double(r.power) << ',' << format_double(a.f_x) << ',' << format_double(a.f_ref);
        for (const Feature f : all) {
            out << ',';
            for (std::size_t k = 0; k < a.features.size(); ++k) {
                if (a.features[k] == f) {
                    out << format_double(a.phi[k]);
                    break;
                }
            }
        }
        out << ',' << ref_strategy_name(a.reference) << '\n';
    }
}

inline void write_strategy_report_csv(const std::string& path, const StrategyReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write strategy report: " + path);
    out << "feature,r_squared\n";
    for (std::size_t f = 0; f < report.features.size(); ++f) {
        out << feature_name(report.features[f]) << ',';
        if (report.r_squared[f]) out << format_double(*report.r_squared[f]);
        out << '\n';
    }
    out << "r2_phys," << format_double(report.r2_phys) << '\n';
}

inline void write_conditional_curves_csv(const std::string& path,
                                         const std::vector<ConditionalCurve>& curves) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write conditional curves: " + path);
    out << "feature,v_center,phi_mean,phi_min,phi_max,phi_std,count\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.centers.size(); ++i) {
            out << feature_name(c.feature) << ',' << format_double(c.centers[i]) << ','
                << format_double(c.mean[i]) << ',' << format_double(c.min[i]) << ','
                << format_double(c.max[i]) << ',' << format_double(c.stddev[i]) << ',' << c.count[i]
                << '\n';
        }
    }
}

inline void write_faithfulness_csv(const std::string& path, const FaithfulnessReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write faithfulness report: " + path);
    out << "reference,bin_center_kw,count,mean_phi,std_phi,mean_truth\n";
    for (std::size_t i = 0; i < report.centers.size(); ++i) {
        out << ref_strategy_name(report.reference) << ',' << format_double(report.centers[i]) << ','
            << report.count[i] << ',' << format_double(report.mean_phi[i]) << ','
            << format_double(report.std_phi[i]) << ',' << format_double(report.mean_truth[i]) << '\n';
    }
}

inline void write_monitoring_csv(const std::string& path, const std::vector<MonitoringReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write monitoring report: " + path);
    out << "timestamp,power,f_x,f_ref,residual,phi_v_w,phi_rho,phi_ti,phi_delta_yaw,abs_error,"
           "low_confidence,used_fallback\n";
    const Feature all[] = {Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity,
                           Feature::YawMisalignment};
    for (const auto& m : reports) {
        out << format_timestamp(m.timestamp) << ',' << format_double(m.power) << ','
            << format_double(m.f_x) << ',' << format_double(m.f_ref) << ','
            << format_double(m.residual);
        for (const Feature f : all) {
            out << ',';
            for (std::size_t k = 0; k < m.features.size(); ++k) {
                if (m.features[k] == f) {
                    out << format_double(m.phi[k]);
                    break;
                }
            }
        }
        out << ',' << format_double(m.abs_error) << ',' << (m.low_confidence ? "true" : "false") << ','
            << (m.used_fallback ? "true" : "false") << '\n';
    }
}

inline void write_ood_csv(const std::string& path, const OodReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write ood report: " + path);
    out << "model,seed,rmse_kept,rmse_removed,r2_phys\n";
    for (const auto& row : report.rows) {
        out << row.model << ',' << row.seed << ',' << format_double(row.rmse_kept) << ','
            << format_double(row.rmse_removed) << ',';
        if (row.r2_phys) out << format_double(*row.r2_phys);
        out << '\n';
    }
}

}  // namespace windxai
