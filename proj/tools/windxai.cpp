// windxai: train, explain, and audit wind-turbine power-curve models.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "windxai/analysis.hpp"
#include "windxai/attribution.hpp"
#include "windxai/core.hpp"
#include "windxai/csv.hpp"
#include "windxai/forest.hpp"
#include "windxai/iec.hpp"
#include "windxai/manifest.hpp"
#include "windxai/mlp.hpp"
#include "windxai/pipeline.hpp"
#include "windxai/predictor.hpp"
#include "windxai/serialize.hpp"
#include "windxai/synth.hpp"
#include "windxai/util.hpp"

namespace wx = windxai;
using nlohmann::json;

namespace {

// JSON config files mirror the long flag names of the subcommand; explicit
// command-line flags take precedence.
class ConfigJson : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
        json j;
        for (const auto* opt : app->get_options({})) {
            if (!opt->get_lnames().empty() && opt->count() > 0) {
                j[opt->get_lnames()[0]] = opt->results().size() == 1 ? opt->results()[0] : "";
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const std::exception& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::FileError("config root must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value)
                    item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            } else {
                item.inputs.push_back(value.is_string() ? value.get<std::string>() : value.dump());
            }
            items.push_back(std::move(item));
        }
        return items;
    }
};

struct DataOptions {
    std::string csv_path;
    std::vector<std::string> column_map;
    wx::SynthConfig synth;
    std::uint64_t synth_seed = 7;
    bool use_synth = true;

    std::string train_start, train_end, test_start, test_end;
    double val_fraction = 0.2;
    std::uint64_t split_seed = 1;
};

void add_synth_flags(CLI::App* cmd, wx::SynthConfig& cfg) {
    cmd->add_option("--n", cfg.n_samples, "synthetic sample count");
    cmd->add_option("--rated-power", cfg.rated_power, "rated power, kW");
    cmd->add_option("--v-cut-in", cfg.v_cut_in, "cut-in wind speed, m/s");
    cmd->add_option("--v-rated", cfg.v_rated, "rated wind speed, m/s");
    cmd->add_option("--v-cut-out", cfg.v_cut_out, "cut-out wind speed, m/s");
    cmd->add_option("--weibull-shape", cfg.weibull_shape, "wind speed Weibull shape");
    cmd->add_option("--weibull-scale", cfg.weibull_scale, "wind speed Weibull scale, m/s");
    cmd->add_option("--rho-mean", cfg.rho_mean, "air density mean, kg/m^3");
    cmd->add_option("--rho-std", cfg.rho_std, "air density std, kg/m^3");
    cmd->add_option("--ti-low-wind", cfg.ti_low_wind, "TI median at low wind");
    cmd->add_option("--ti-high-wind", cfg.ti_high_wind, "TI median at high wind");
    cmd->add_option("--ti-sigma", cfg.ti_sigma, "TI lognormal shape");
    cmd->add_option("--noise-base", cfg.noise_base_kw, "noise floor, kW");
    cmd->add_option("--noise-slope", cfg.noise_slope, "noise growth per kW");
}

void add_data_flags(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--data", d.csv_path, "SCADA CSV input (omit to use synthetic data)");
    cmd->add_option("--column-map", d.column_map,
                    "canonical=actual column name pairs, e.g. v_w=WindSpeed")
        ->delimiter(',');
    cmd->add_option("--synth-seed", d.synth_seed, "seed for synthetic data generation");
    add_synth_flags(cmd, d.synth);
    cmd->add_option("--train-start", d.train_start, "train interval start (ISO-8601)");
    cmd->add_option("--train-end", d.train_end, "train interval end, exclusive");
    cmd->add_option("--test-start", d.test_start, "test interval start");
    cmd->add_option("--test-end", d.test_end, "test interval end, exclusive");
    cmd->add_option("--val-fraction", d.val_fraction, "validation share of the train interval");
    cmd->add_option("--split-seed", d.split_seed, "seed for the validation draw");
}

std::int64_t parse_time_flag(const std::string& s, const char* what) {
    std::int64_t t = 0;
    if (!wx::parse_timestamp(s, t)) throw wx::UsageError(std::string("cannot parse ") + what + ": " + s);
    return t;
}

struct LoadedData {
    wx::Records operational;  // after the P>0 / status filter
    wx::DataSplit split;
    json config_echo;
    std::string input_digest_name;
    std::string input_digest;
};

LoadedData load_and_split(DataOptions& d) {
    LoadedData out;
    wx::Records raw;
    d.use_synth = d.csv_path.empty();
    if (d.use_synth) {
        const auto synth = wx::generate_synthetic(d.synth, d.synth_seed);
        raw = synth.records;
        json cfg;
        cfg["source"] = "synthetic";
        cfg["n"] = d.synth.n_samples;
        cfg["seed"] = d.synth_seed;
        out.config_echo = cfg;
        out.input_digest_name = "synthetic-config";
        const std::string blob = cfg.dump();
        out.input_digest = wx::sha256_hex(blob.data(), blob.size());
    } else {
        wx::ColumnMap map = wx::default_column_map();
        for (const auto& pair : d.column_map) {
            const auto eq = pair.find('=');
            if (eq == std::string::npos) throw wx::UsageError("bad --column-map entry: " + pair);
            map[pair.substr(0, eq)] = pair.substr(eq + 1);
        }
        const auto report = wx::parse_scada_csv(d.csv_path, map);
        std::cerr << "parsed " << report.records.size() << " records from " << d.csv_path << " ("
                  << report.rows_dropped << " rows dropped)\n";
        raw = report.records;
        out.config_echo = {{"source", d.csv_path}};
        out.input_digest_name = d.csv_path;
        out.input_digest = wx::sha256_file(d.csv_path);
    }

    out.operational = wx::filter_operational(raw);
    if (out.operational.empty()) throw wx::DataError("no operational records after filtering");

    std::int64_t lo = out.operational.front().timestamp;
    std::int64_t hi = lo;
    for (const auto& r : out.operational) {
        lo = std::min(lo, r.timestamp);
        hi = std::max(hi, r.timestamp);
    }
    const std::int64_t mid = lo + (hi - lo) / 2;
    wx::TimeInterval train_iv{lo, mid};
    wx::TimeInterval test_iv{mid, hi + 1};
    if (!d.train_start.empty()) train_iv.begin = parse_time_flag(d.train_start, "--train-start");
    if (!d.train_end.empty()) train_iv.end = parse_time_flag(d.train_end, "--train-end");
    if (!d.test_start.empty()) test_iv.begin = parse_time_flag(d.test_start, "--test-start");
    if (!d.test_end.empty()) test_iv.end = parse_time_flag(d.test_end, "--test-end");

    out.split = wx::split_temporal(out.operational, train_iv, test_iv, d.val_fraction, d.split_seed);
    out.config_echo["val_fraction"] = d.val_fraction;
    out.config_echo["split_seed"] = d.split_seed;
    out.config_echo["n_train"] = out.split.train.size();
    out.config_echo["n_val"] = out.split.val.size();
    out.config_echo["n_test"] = out.split.test.size();
    return out;
}

std::vector<wx::Feature> parse_features(const std::string& spec) {
    std::vector<wx::Feature> feats;
    std::string cur;
    for (char c : spec + ",") {
        if (c == ',') {
            if (!cur.empty()) feats.push_back(wx::feature_from_name(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (feats.empty()) throw wx::UsageError("empty feature list");
    return feats;
}

struct ModelChoice {
    bool iec = false;
    std::vector<wx::ModelSpec> ml;
};

ModelChoice parse_models(const std::vector<std::string>& names, const std::vector<wx::Feature>& feats) {
    ModelChoice choice;
    for (const auto& name : names) {
        if (name == "iec") {
            choice.iec = true;
        } else if (name == "rf") {
            choice.ml.push_back(wx::ModelSpec::forest(feats));
        } else if (name == "ann_small") {
            choice.ml.push_back(wx::ModelSpec::ann_small(feats));
        } else if (name == "ann_large") {
            choice.ml.push_back(wx::ModelSpec::ann_large(feats));
        } else {
            throw wx::UsageError("unknown model '" + name + "' (expected iec|rf|ann_small|ann_large)");
        }
    }
    return choice;
}

std::string out_path(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

double mean(const std::vector<double>& v) { return wx::mean_of(v); }

double stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const wx::SynthConfig& cfg, std::uint64_t seed, const std::string& out_file,
              const std::string& truth_file, const std::string& out_dir) {
    wx::ExperimentManifest manifest("synth");
    const auto result = wx::generate_synthetic(cfg, seed);
    const std::string path = out_file.empty() ? out_path(out_dir, "synthetic.csv") : out_file;
    wx::write_scada_csv(path, result.records);
    json cfg_echo{{"n", cfg.n_samples},
                  {"seed", seed},
                  {"rated_power", cfg.rated_power},
                  {"v_cut_in", cfg.v_cut_in},
                  {"v_rated", cfg.v_rated},
                  {"v_cut_out", cfg.v_cut_out},
                  {"weibull_shape", cfg.weibull_shape},
                  {"weibull_scale", cfg.weibull_scale}};
    manifest.set_config(cfg_echo);
    manifest.add_output(path);
    if (!truth_file.empty()) {
        std::ofstream out(truth_file, std::ios::binary);
        if (!out) throw wx::DataError("cannot write truth file: " + truth_file);
        out << "timestamp,p_latent,noise_sigma\n";
        for (std::size_t i = 0; i < result.records.size(); ++i) {
            out << wx::format_timestamp(result.records[i].timestamp) << ','
                << wx::format_double(result.truth[i].p_latent) << ','
                << wx::format_double(result.truth[i].noise_sigma) << '\n';
        }
        out.close();
        manifest.add_output(truth_file);
    }
    manifest.write(out_path(out_dir, "manifest.json"));
    std::cout << "wrote " << result.records.size() << " records to " << path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(DataOptions& data, const std::vector<std::string>& model_names,
              const std::string& features_flag, std::uint64_t seed, std::optional<double> rated,
              const std::string& out_dir) {
    wx::ExperimentManifest manifest("train");
    auto loaded = load_and_split(data);
    manifest.add_input_digest(loaded.input_digest_name, loaded.input_digest);

    const auto feats = parse_features(features_flag);
    const auto choice = parse_models(model_names, feats);
    json cfg = loaded.config_echo;
    cfg["models"] = model_names;
    cfg["features"] = features_flag;
    cfg["seed"] = seed;
    manifest.set_config(cfg);

    if (choice.iec) {
        wx::IecFitOptions opts;
        opts.rated_power = rated;
        const auto model = wx::fit_iec_model(loaded.split.train, opts);
        const std::string path = out_path(out_dir, "model_iec.json");
        wx::save_model(model, path);
        manifest.add_output(path);
        std::cout << "iec: rho_ref " << model.rho_ref << ", rated " << model.rated_power << " kW, zero-TI "
                  << (model.zero_ti.converged ? "converged" : "not converged") << " after "
                  << model.zero_ti.iterations << " iterations\n";
    }
    for (const auto& spec : choice.ml) {
        const auto model = wx::train_model_spec(spec, loaded.split.train, loaded.split.val, seed);
        const std::string path = out_path(out_dir, "model_" + spec.name + ".json");
        if (spec.kind == wx::ModelSpec::Kind::Mlp) {
            const auto& mlp = dynamic_cast<const wx::MlpModel&>(*model);
            wx::save_model(mlp, path);
            const std::string hist = out_path(out_dir, "loss_history_" + spec.name + ".csv");
            wx::write_loss_history_csv(hist, mlp.history());
            manifest.add_output(hist);
            std::cout << spec.name << ": " << mlp.history().epochs << " epochs, best val loss "
                      << mlp.history().best_val_loss << "\n";
        } else {
            wx::save_model(dynamic_cast<const wx::ForestModel&>(*model), path);
            std::cout << spec.name << ": " << dynamic_cast<const wx::ForestModel&>(*model).trees().size()
                      << " trees\n";
        }
        manifest.add_output(path);
    }
    manifest.write(out_path(out_dir, "manifest.json"));
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(DataOptions& data, const std::vector<std::string>& model_names,
                 const std::string& features_flag, std::uint64_t seed_base, int n_seeds,
                 std::optional<double> rated, const std::string& out_dir) {
    wx::ExperimentManifest manifest("evaluate");
    auto loaded = load_and_split(data);
    manifest.add_input_digest(loaded.input_digest_name, loaded.input_digest);
    const auto feats = parse_features(features_flag);
    const auto choice = parse_models(model_names, feats);
    manifest.set_config({{"models", model_names},
                         {"features", features_flag},
                         {"seed", seed_base},
                         {"seeds", n_seeds}});

    const std::string csv = out_path(out_dir, "evaluate.csv");
    std::ofstream out(csv, std::ios::binary);
    out << "model,seed,rmse_kw\n";

    std::printf("%-12s %12s\n", "model", "RMSE_test kW");
    if (choice.iec) {
        wx::IecFitOptions opts;
        opts.rated_power = rated;
        const wx::IecPredictor model(wx::fit_iec_model(loaded.split.train, opts));
        const double rmse = wx::evaluate_rmse(model, loaded.split.test);
        out << "iec,," << wx::format_double(rmse) << '\n';
        std::printf("%-12s %12.2f\n", "iec", rmse);
    }
    for (const auto& spec : choice.ml) {
        std::vector<double> rmses;
        for (int s = 0; s < n_seeds; ++s) {
            const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(s);
            const auto model = wx::train_model_spec(spec, loaded.split.train, loaded.split.val, seed);
            const double rmse = wx::evaluate_rmse(*model, loaded.split.test);
            rmses.push_back(rmse);
            out << spec.name << ',' << seed << ',' << wx::format_double(rmse) << '\n';
        }
        std::printf("%-12s %9.2f +- %.2f\n", spec.name.c_str(), mean(rmses), stddev(rmses));
    }
    out.close();
    manifest.add_output(csv);
    manifest.write(out_path(out_dir, "manifest.json"));
    return 0;
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

int cmd_explain(DataOptions& data, const std::string& model_file, const std::string& reference,
                std::size_t max_instances, const std::string& out_dir) {
    if (model_file.empty()) throw wx::UsageError("explain requires --model-file");
    wx::ExperimentManifest manifest("explain");
    auto loaded = load_and_split(data);
    manifest.add_input_digest(loaded.input_digest_name, loaded.input_digest);
    manifest.add_input(model_file);
    const auto model = wx::load_model(model_file);
    const auto strategy = wx::ref_strategy_from_name(reference);
    manifest.set_config({{"model_file", model_file},
                         {"reference", reference},
                         {"max_instances", max_instances}});

    const wx::ReferenceBuilder builder(loaded.split.train, model->schema());
    wx::Records instances;
    const std::size_t stride = std::max<std::size_t>(1, loaded.split.test.size() / max_instances);
    for (std::size_t i = 0; i < loaded.split.test.size() && instances.size() < max_instances; i += stride)
        instances.push_back(loaded.split.test[i]);

    std::vector<wx::Attribution> attrs(instances.size());
    wx::parallel_for(instances.size(), [&](std::size_t i) {
        const auto ref = builder.build(strategy, &instances[i]);
        attrs[i] = wx::shapley_exact(*model, instances[i], ref);
    });

    const std::string csv = out_path(out_dir, "attributions.csv");
    wx::write_attributions_csv(csv, instances, attrs);
    manifest.add_output(csv);
    manifest.write(out_path(out_dir, "manifest.json"));
    std::cout << "explained " << instances.size() << " instances under x_" << reference << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// compare-strategy
// ---------------------------------------------------------------------------

int cmd_compare_strategy(DataOptions& data, const std::string& ml_name, std::uint64_t seed,
                         std::size_t max_instances, std::optional<double> rated,
                         const std::string& out_dir) {
    wx::ExperimentManifest manifest("compare-strategy");
    auto loaded = load_and_split(data);
    manifest.add_input_digest(loaded.input_digest_name, loaded.input_digest);
    manifest.set_config({{"model", ml_name}, {"seed", seed}, {"max_instances", max_instances}});

    const auto feats = wx::base_schema().features;
    const auto choice = parse_models({ml_name}, feats);
    if (choice.ml.size() != 1) throw wx::UsageError("compare-strategy needs one ML model");

    wx::IecFitOptions opts;
    opts.rated_power = rated;
    const wx::IecPredictor iec(wx::fit_iec_model(loaded.split.train, opts));
    const auto ml = wx::train_model_spec(choice.ml[0], loaded.split.train, loaded.split.val, seed);

    wx::Records instances;
    const std::size_t stride = std::max<std::size_t>(1, loaded.split.test.size() / max_instances);
    for (std::size_t i = 0; i < loaded.split.test.size() && instances.size() < max_instances; i += stride)
        instances.push_back(loaded.split.test[i]);

    const wx::ReferenceBuilder ml_builder(loaded.split.train, ml->schema());
    const wx::ReferenceBuilder iec_builder(loaded.split.train, iec.schema());
    const auto ml_ref = ml_builder.build(wx::RefStrategy::Min);
    const auto iec_ref = iec_builder.build(wx::RefStrategy::Min);

    std::vector<wx::Attribution> ml_attrs(instances.size()), iec_attrs(instances.size());
    wx::parallel_for(instances.size(), [&](std::size_t i) {
        ml_attrs[i] = wx::shapley_exact(*ml, instances[i], ml_ref);
        iec_attrs[i] = wx::shapley_exact(iec, instances[i], iec_ref);
    });

    const auto report = wx::strategy_correlation(ml_attrs, iec_attrs);
    std::vector<double> v_list;
    for (const auto& r : instances) v_list.push_back(r.v_w);
    const auto ml_curves = wx::conditional_attribution_curves(ml_attrs, v_list);
    const auto iec_curves = wx::conditional_attribution_curves(iec_attrs, v_list);

    const std::string report_csv = out_path(out_dir, "strategy_report.csv");
    wx::write_strategy_report_csv(report_csv, report);
    const std::string ml_csv = out_path(out_dir, "conditional_curves_ml.csv");
    wx::write_conditional_curves_csv(ml_csv, ml_curves);
    const std::string iec_csv = out_path(out_dir, "conditional_curves_iec.csv");
    wx::write_conditional_curves_csv(iec_csv, iec_curves);
    manifest.add_output(report_csv);
    manifest.add_output(ml_csv);
    manifest.add_output(iec_csv);
    manifest.write(out_path(out_dir, "manifest.json"));

    std::cout << "r2_phys(" << ml_name << " vs iec) = " << report.r2_phys << " over "
              << report.n_instances << " instances\n";
    for (std::size_t f = 0; f < report.features.size(); ++f) {
        std::cout << "  " << wx::feature_name(report.features[f]) << ": ";
        if (report.r_squared[f])
            std::cout << *report.r_squared[f] << "\n";
        else
            std::cout << "undefined (zero variance)\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// monitor
// ---------------------------------------------------------------------------

int cmd_monitor(DataOptions& data, const std::string& model_file, bool augment, double yaw_sigma,
                double yaw_clip, std::uint64_t seed, std::size_t max_instances,
                const std::string& out_dir) {
    wx::ExperimentManifest manifest("monitor");
    auto loaded = load_and_split(data);
    manifest.add_input_digest(loaded.input_digest_name, loaded.input_digest);
    manifest.set_config({{"augment", augment},
                         {"yaw_sigma", yaw_sigma},
                         {"yaw_clip", yaw_clip},
                         {"seed", seed},
                         {"max_instances", max_instances}});

    wx::DataSplit split = loaded.split;
    std::vector<wx::YawGroundTruth> test_truth;
    if (augment) {
        auto aug = wx::augment_yaw(split, yaw_sigma, yaw_clip, data.synth.v_rated, seed);
        split = std::move(aug.data);
        test_truth = std::move(aug.test_truth);
    }

    std::unique_ptr<wx::Predictor> model;
    if (!model_file.empty()) {
        manifest.add_input(model_file);
        model = wx::load_model(model_file);
    } else {
        model = wx::train_model_spec(wx::ModelSpec::ann_small(wx::monitoring_schema().features),
                                     split.train, split.val, seed);
    }
    if (model->schema().index_of(wx::Feature::YawMisalignment) < 0)
        throw wx::UsageError("monitoring requires a model trained with the delta_yaw feature");

    wx::Records instances;
    std::vector<std::size_t> picked;
    const std::size_t stride = std::max<std::size_t>(1, split.test.size() / max_instances);
    for (std::size_t i = 0; i < split.test.size() && instances.size() < max_instances; i += stride) {
        instances.push_back(split.test[i]);
        picked.push_back(i);
    }

    const wx::MonitoringContext ctx(*model, split.train);
    std::vector<wx::MonitoringReport> reports(instances.size());
    std::vector<wx::Attribution> informed_attrs(instances.size());
    wx::parallel_for(instances.size(), [&](std::size_t i) {
        reports[i] = wx::decompose_deviation(*model, instances[i], ctx);
        const auto ref = ctx.builder().build(wx::RefStrategy::Informed, &instances[i]);
        informed_attrs[i] = wx::shapley_exact(*model, instances[i], ref);
    });

    const std::string mon_csv = out_path(out_dir, "monitoring.csv");
    wx::write_monitoring_csv(mon_csv, reports);
    manifest.add_output(mon_csv);

    if (augment) {
        std::vector<wx::YawGroundTruth> picked_truth;
        for (const auto i : picked) picked_truth.push_back(test_truth[i]);
        for (const auto strategy : {wx::RefStrategy::Informed, wx::RefStrategy::Mean, wx::RefStrategy::Min}) {
            std::vector<wx::Attribution> attrs(instances.size());
            if (strategy == wx::RefStrategy::Informed) {
                attrs = informed_attrs;
            } else {
                const auto ref = ctx.builder().build(strategy);
                wx::parallel_for(instances.size(), [&](std::size_t i) {
                    attrs[i] = wx::shapley_exact(*model, instances[i], ref);
                });
            }
            const auto report = wx::yaw_faithfulness(picked_truth, attrs);
            const std::string path = out_path(
                out_dir, std::string("faithfulness_") + wx::ref_strategy_name(strategy) + ".csv");
            wx::write_faithfulness_csv(path, report);
            manifest.add_output(path);
            std::cout << "MAE(x_" << wx::ref_strategy_name(strategy) << ") = " << report.mae << " kW\n";
        }
    }
    manifest.write(out_path(out_dir, "manifest.json"));
    return 0;
}

// ---------------------------------------------------------------------------
// ood
// ---------------------------------------------------------------------------

int cmd_ood(DataOptions& data, const std::vector<std::string>& model_names,
            const std::string& features_flag, double threshold, std::uint64_t seed_base, int n_seeds,
            std::optional<double> rated, const std::string& out_dir) {
    wx::ExperimentManifest manifest("ood");
    auto loaded = load_and_split(data);
    manifest.add_input_digest(loaded.input_digest_name, loaded.input_digest);
    manifest.set_config({{"models", model_names},
                         {"threshold_kw", threshold},
                         {"seed", seed_base},
                         {"seeds", n_seeds}});

    const auto feats = parse_features(features_flag);
    const auto choice = parse_models(model_names, feats);
    if (choice.ml.empty()) throw wx::UsageError("ood requires at least one ML model");

    wx::IecFitOptions opts;
    opts.rated_power = rated;
    const wx::IecPredictor iec(wx::fit_iec_model(loaded.split.train, opts));

    wx::Records train_all = loaded.split.train;
    train_all.insert(train_all.end(), loaded.split.val.begin(), loaded.split.val.end());
    const auto train_filtered = wx::norm_filter(train_all, iec.model().binned, threshold);
    const auto test_filtered = wx::norm_filter(loaded.split.test, iec.model().binned, threshold);
    std::cout << "norm filter (" << threshold << " kW): kept " << train_filtered.kept.size() << "/"
              << train_all.size() << " train, " << test_filtered.kept.size() << "/"
              << loaded.split.test.size() << " test\n";

    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < n_seeds; ++s) seeds.push_back(seed_base + static_cast<std::uint64_t>(s));
    wx::OodOptions ood_opts;
    ood_opts.iec_baseline = &iec;
    const auto report = wx::ood_experiment(choice.ml, train_filtered.kept, test_filtered.kept,
                                           test_filtered.removed, seeds, ood_opts);

    const std::string csv = out_path(out_dir, "ood.csv");
    wx::write_ood_csv(csv, report);
    manifest.add_output(csv);
    manifest.write(out_path(out_dir, "manifest.json"));
    for (const auto& row : report.rows) {
        std::cout << row.model << " seed " << row.seed << ": kept " << row.rmse_kept << " kW, removed "
                  << row.rmse_removed << " kW";
        if (row.r2_phys) std::cout << ", r2_phys " << *row.r2_phys;
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wind turbine power curve models with exact Shapley attributions"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<ConfigJson>());

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic SCADA dataset");
    synth->config_formatter(std::make_shared<ConfigJson>());
    synth->set_config("--config");
    wx::SynthConfig synth_cfg;
    std::uint64_t synth_seed = 7;
    std::string synth_out, synth_truth, synth_dir = ".";
    add_synth_flags(synth, synth_cfg);
    synth->add_option("--seed", synth_seed, "generation seed");
    synth->add_option("--out", synth_out, "output CSV path");
    synth->add_option("--truth-out", synth_truth, "also write latent truth CSV");
    synth->add_option("--out-dir", synth_dir, "directory for manifest and default outputs");

    // shared flag bundles are per-subcommand instances
    struct CommonCmd {
        CLI::App* cmd = nullptr;
        DataOptions data;
        std::string out_dir = ".";
        std::uint64_t seed = 1;
    };

    // Options bind to member addresses, so set up each bundle in place.
    auto setup_common = [&](CommonCmd& c, const char* name, const char* help) {
        c.cmd = app.add_subcommand(name, help);
        c.cmd->config_formatter(std::make_shared<ConfigJson>());
        c.cmd->set_config("--config");
        add_data_flags(c.cmd, c.data);
        c.cmd->add_option("--out-dir", c.out_dir, "output directory");
        c.cmd->add_option("--seed", c.seed, "training / experiment seed");
    };

    CommonCmd train;
    setup_common(train, "train", "fit IEC and/or ML models");
    std::vector<std::string> train_models{"iec", "rf", "ann_small", "ann_large"};
    std::string train_features = "v_w,rho,ti";
    std::optional<double> train_rated;
    train.cmd->add_option("--models", train_models, "iec|rf|ann_small|ann_large")->delimiter(',');
    train.cmd->add_option("--features", train_features, "model features, comma separated");
    train.cmd->add_option("--iec-rated-power", train_rated, "rated power for the IEC clamp, kW");

    CommonCmd evaluate;
    setup_common(evaluate, "evaluate", "RMSE table over models");
    std::vector<std::string> eval_models{"iec", "rf", "ann_small", "ann_large"};
    std::string eval_features = "v_w,rho,ti";
    int eval_seeds = 10;
    std::optional<double> eval_rated;
    evaluate.cmd->add_option("--models", eval_models, "iec|rf|ann_small|ann_large")->delimiter(',');
    evaluate.cmd->add_option("--features", eval_features, "model features");
    evaluate.cmd->add_option("--seeds", eval_seeds, "number of consecutive training seeds");
    evaluate.cmd->add_option("--iec-rated-power", eval_rated, "rated power for the IEC clamp, kW");

    CommonCmd explain;
    setup_common(explain, "explain", "Shapley attributions for test instances");
    std::string explain_model, explain_reference = "min";
    std::size_t explain_max = 2000;
    explain.cmd->add_option("--model-file", explain_model, "trained model JSON")->required();
    explain.cmd->add_option("--reference", explain_reference, "min|mean|informed");
    explain.cmd->add_option("--max-instances", explain_max, "cap on explained instances");

    CommonCmd compare;
    setup_common(compare, "compare-strategy", "ML vs IEC attribution correlation");
    std::string compare_model = "ann_small";
    std::size_t compare_max = 2000;
    std::optional<double> compare_rated;
    compare.cmd->add_option("--model", compare_model, "rf|ann_small|ann_large");
    compare.cmd->add_option("--max-instances", compare_max, "cap on explained instances");
    compare.cmd->add_option("--iec-rated-power", compare_rated, "rated power for the IEC clamp, kW");

    CommonCmd monitor;
    setup_common(monitor, "monitor", "decompose deviations from expected output");
    std::string monitor_model;
    bool monitor_augment = true;
    double monitor_sigma = wx::kDefaultYawSigmaDeg;
    double monitor_clip = wx::kDefaultYawClipDeg;
    std::size_t monitor_max = 1000;
    monitor.cmd->add_option("--model-file", monitor_model, "trained 4-feature model JSON");
    monitor.cmd->add_flag("--augment,!--no-augment", monitor_augment, "inject artificial yaw misalignment");
    monitor.cmd->add_option("--yaw-sigma", monitor_sigma, "yaw draw sigma, degrees");
    monitor.cmd->add_option("--yaw-clip", monitor_clip, "yaw clip, degrees");
    monitor.cmd->add_option("--max-instances", monitor_max, "cap on monitored instances");

    CommonCmd ood;
    setup_common(ood, "ood", "norm-filter out-of-distribution study");
    std::vector<std::string> ood_models{"rf", "ann_small", "ann_large"};
    std::string ood_features = "v_w,rho,ti";
    double ood_threshold = wx::kDefaultNormThresholdKw;
    int ood_seeds = 3;
    std::optional<double> ood_rated;
    ood.cmd->add_option("--models", ood_models, "ML models to stress")->delimiter(',');
    ood.cmd->add_option("--features", ood_features, "model features");
    ood.cmd->add_option("--threshold", ood_threshold, "norm filter threshold, kW");
    ood.cmd->add_option("--seeds", ood_seeds, "number of consecutive training seeds");
    ood.cmd->add_option("--iec-rated-power", ood_rated, "rated power for the IEC clamp, kW");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) {
            return cmd_synth(synth_cfg, synth_seed, synth_out, synth_truth, synth_dir);
        }
        if (train.cmd->parsed()) {
            return cmd_train(train.data, train_models, train_features, train.seed, train_rated,
                             train.out_dir);
        }
        if (evaluate.cmd->parsed()) {
            return cmd_evaluate(evaluate.data, eval_models, eval_features, evaluate.seed, eval_seeds,
                                eval_rated, evaluate.out_dir);
        }
        if (explain.cmd->parsed()) {
            return cmd_explain(explain.data, explain_model, explain_reference, explain_max,
                               explain.out_dir);
        }
        if (compare.cmd->parsed()) {
            return cmd_compare_strategy(compare.data, compare_model, compare.seed, compare_max,
                                        compare_rated, compare.out_dir);
        }
        if (monitor.cmd->parsed()) {
            return cmd_monitor(monitor.data, monitor_model, monitor_augment, monitor_sigma, monitor_clip,
                               monitor.seed, monitor_max, monitor.out_dir);
        }
        if (ood.cmd->parsed()) {
            return cmd_ood(ood.data, ood_models, ood_features, ood_threshold, ood.seed, ood_seeds,
                           ood_rated, ood.out_dir);
        }
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const wx::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const wx::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const wx::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
