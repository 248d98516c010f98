// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.
// Heavier than the unit tests; shares one 20k synthetic dataset across the
// model-level criteria.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "support/oracles.hpp"
#include "windxai/analysis.hpp"
#include "windxai/attribution.hpp"
#include "windxai/csv.hpp"
#include "windxai/iec.hpp"
#include "windxai/manifest.hpp"
#include "windxai/mlp.hpp"
#include "windxai/pipeline.hpp"
#include "windxai/predictor.hpp"
#include "windxai/synth.hpp"
#include "windxai/util.hpp"

using namespace windxai;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Criterion {
    std::string name;
    double time_budget_s;
    bool ok = true;
    std::ostringstream detail;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    Criterion(std::string n, double budget) : name(std::move(n)), time_budget_s(budget) {}

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "  FAILED: " << what << "\n";
        }
    }

    void finish() {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > time_budget_s) {
            ok = false;
            detail << "  FAILED: runtime " << elapsed << " s exceeds budget " << time_budget_s << " s\n";
        }
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "  (" << elapsed << " s)\n";
        std::cout << detail.str();
        if (!ok) ++g_failures;
    }
};

MlpModel random_mlp(int d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> dims{d, 5, 4, 1};
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd m(dims[l + 1], dims[l]);
        Eigen::VectorXd v(dims[l + 1]);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, 0.8);
            v(r) = rng.normal(0.0, 0.2);
        }
        w.push_back(m);
        b.push_back(v);
    }
    std::vector<Feature> feats{Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity,
                               Feature::YawMisalignment};
    feats.resize(d);
    FeatureSchema schema{feats, std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    return MlpModel(schema, 100.0, 700.0, Activation::Logistic, std::move(w), std::move(b));
}

// Shared experiment data: the fixed-seed 20k synthetic set, filtered and
// temporally split, with the latent truth indexed by timestamp.
struct SharedData {
    SynthConfig cfg;
    DataSplit split;
    std::map<std::int64_t, SynthTruth> truth;

    SharedData() {
        cfg.n_samples = 20000;
        const auto synth = generate_synthetic(cfg, 7);
        for (std::size_t i = 0; i < synth.records.size(); ++i)
            truth[synth.records[i].timestamp] = synth.truth[i];
        const auto operational = filter_operational(synth.records);
        std::int64_t lo = operational.front().timestamp, hi = lo;
        for (const auto& r : operational) {
            lo = std::min(lo, r.timestamp);
            hi = std::max(hi, r.timestamp);
        }
        const std::int64_t mid = lo + (hi - lo) / 2;
        split = split_temporal(operational, {lo, mid}, {mid, hi + 1}, 0.2, 1);
    }
};

const SharedData& shared() {
    static SharedData data;
    return data;
}

// ---------------------------------------------------------------------------

void criterion_1_shapley_oracle() {
    Criterion c("1. Shapley exact vs permutation oracle + conservation", 10.0);
    double worst_gap = 0.0;
    double worst_cons = 0.0;
    int checked = 0;
    for (const int d : {2, 3, 4}) {
        const int reps = d == 4 ? 34 : 33;
        for (int k = 0; k < reps; ++k) {
            const auto seed = static_cast<std::uint64_t>(1000 * d + k);
            const auto model = random_mlp(d, seed);
            Rng rng(seed ^ 0xabcd);
            std::vector<double> x(d);
            ReferencePoint ref;
            ref.strategy = RefStrategy::Min;
            ref.values.resize(d);
            for (int i = 0; i < d; ++i) {
                x[i] = rng.normal();
                ref.values[i] = rng.normal();
            }
            const auto exact = shapley_exact(model, x, ref);
            const auto oracle = testing::shapley_permutation_oracle(model, x, ref);
            for (int i = 0; i < d; ++i)
                worst_gap = std::max(worst_gap, std::abs(exact.phi[i] - oracle.phi[i]));
            double sum = 0.0;
            for (const double phi : exact.phi) sum += phi;
            worst_cons = std::max(worst_cons, std::abs(sum - (exact.f_x - exact.f_ref)));
            ++checked;
        }
    }
    c.detail << "  " << checked << " triples, max |phi_exact - phi_oracle| = " << worst_gap
             << " kW, max conservation gap = " << worst_cons << " kW\n";
    c.require(checked == 100, "expected 100 random triples");
    c.require(worst_gap < 1e-10, "oracle agreement within 1e-10 kW");
    c.require(worst_cons < 1e-8, "conservation within 1e-8 kW");
    c.finish();
}

void criterion_2_linear_closed_form() {
    Criterion c("2. closed-form linear attribution", 1.0);
    Rng rng(77);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 2 + static_cast<int>(rng.below(3));
        std::vector<Feature> feats{Feature::WindSpeed, Feature::AirDensity,
                                   Feature::TurbulenceIntensity, Feature::YawMisalignment};
        feats.resize(d);
        std::vector<double> w(d);
        for (auto& v : w) v = rng.normal(0.0, 100.0);
        const testing::LinearPredictor model(FeatureSchema{feats, {}, {}}, w, rng.normal(0.0, 50.0));
        std::vector<double> x(d);
        ReferencePoint ref;
        ref.values.resize(d);
        for (int i = 0; i < d; ++i) {
            x[i] = rng.normal();
            ref.values[i] = rng.normal();
        }
        const auto attr = shapley_exact(model, x, ref);
        for (int i = 0; i < d; ++i)
            worst = std::max(worst, std::abs(attr.phi[i] - w[i] * (x[i] - ref.values[i])));
    }
    c.detail << "  max |phi_i - w_i (x_i - ref_i)| = " << worst << " kW\n";
    c.require(worst < 1e-10, "linear closed form within 1e-10");
    c.finish();
}

void criterion_3_gradient_check() {
    Criterion c("3. MLP gradient check (10 seeds, both activations)", 30.0);
    double worst = 0.0;
    for (const auto act : {Activation::Logistic, Activation::Relu}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed ^ 0x9e37);
            std::vector<int> dims{3, 6, 5, 1};
            std::vector<Eigen::MatrixXd> w;
            std::vector<Eigen::VectorXd> b;
            for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
                Eigen::MatrixXd m(dims[l + 1], dims[l]);
                Eigen::VectorXd v(dims[l + 1]);
                for (Eigen::Index r = 0; r < m.rows(); ++r) {
                    for (Eigen::Index cc = 0; cc < m.cols(); ++cc) m(r, cc) = rng.normal(0.0, 0.9);
                    v(r) = rng.normal(0.0, 0.3);
                }
                w.push_back(m);
                b.push_back(v);
            }
            FeatureSchema schema{base_schema().features, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
            const MlpModel model(schema, 0.0, 1.0, act, w, b);
            std::vector<double> x(3);
            double min_pre = 0.0;
            do {
                for (auto& v : x) v = rng.normal();
                min_pre = mlp_min_preactivation(model, x);
            } while (act == Activation::Relu && min_pre < 1e-3);
            const double y = model.predict(x) - 2.0;
            worst = std::max(worst, mlp_gradient_check(model, x, y, 1e-5));
        }
    }
    c.detail << "  max relative gradient error = " << worst << "\n";
    c.require(worst < 1e-5, "gradient check below 1e-5");
    c.finish();
}

void criterion_4_model_ordering() {
    Criterion c("4. model ordering on synthetic data (Table-1 analogue)", 900.0);
    const auto& data = shared();

    IecFitOptions opts;
    opts.rated_power = data.cfg.rated_power;
    const IecPredictor iec(fit_iec_model(data.split.train, opts));
    const double rmse_iec = evaluate_rmse(iec, data.split.test);

    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::map<std::string, double> mean_rmse;
    for (const auto& spec : {ModelSpec::forest(base_schema().features),
                             ModelSpec::ann_small(base_schema().features),
                             ModelSpec::ann_large(base_schema().features)}) {
        std::vector<double> rmses(seeds.size());
        parallel_for(seeds.size(), [&](std::size_t i) {
            const auto model = train_model_spec(spec, data.split.train, data.split.val, seeds[i]);
            rmses[i] = evaluate_rmse(*model, data.split.test);
        });
        mean_rmse[spec.name] = mean_of(rmses);
        c.detail << "  " << spec.name << ": ";
        for (const double r : rmses) c.detail << r << " ";
        c.detail << " -> mean " << mean_rmse[spec.name] << " kW\n";
    }
    c.detail << "  iec: " << rmse_iec << " kW\n";
    c.require(mean_rmse["ann_small"] < rmse_iec, "RMSE(ANN_small) < RMSE(IEC)");
    c.require(mean_rmse["ann_large"] <= mean_rmse["ann_small"] + 2.0,
              "RMSE(ANN_large) <= RMSE(ANN_small) + 2 kW");
    c.require(mean_rmse["rf"] < rmse_iec, "RMSE(RF) < RMSE(IEC)");
    c.finish();
}

void criterion_5_reference_faithfulness() {
    Criterion c("5. reference-point faithfulness (Fig.-3 analogue)", 600.0);
    const auto& data = shared();

    const auto aug = augment_yaw(data.split, kDefaultYawSigmaDeg, kDefaultYawClipDeg,
                                 data.cfg.v_rated, 99);
    const auto model = mlp_train(MlpConfig::ann_small(monitoring_schema().features), aug.data.train,
                                 aug.data.val, 1);

    // deterministic subsample of the augmented test set
    Records instances;
    std::vector<YawGroundTruth> truth;
    const std::size_t stride = std::max<std::size_t>(1, aug.data.test.size() / 1200);
    for (std::size_t i = 0; i < aug.data.test.size(); i += stride) {
        instances.push_back(aug.data.test[i]);
        truth.push_back(aug.test_truth[i]);
    }

    const ReferenceBuilder builder(aug.data.train, model.schema());
    std::map<RefStrategy, double> mae;
    for (const auto strategy : {RefStrategy::Informed, RefStrategy::Mean, RefStrategy::Min}) {
        std::vector<Attribution> attrs(instances.size());
        parallel_for(instances.size(), [&](std::size_t i) {
            const auto ref = builder.build(strategy, &instances[i]);
            attrs[i] = shapley_exact(model, instances[i], ref);
        });
        mae[strategy] = yaw_faithfulness(truth, attrs, 25.0).mae;
        c.detail << "  MAE(x_" << ref_strategy_name(strategy) << ") = " << mae[strategy] << " kW\n";
    }

    double sigma_sum = 0.0;
    for (const auto& r : instances) sigma_sum += data.truth.at(r.timestamp).noise_sigma;
    const double sigma_bar = sigma_sum / static_cast<double>(instances.size());
    c.detail << "  mean noise sigma = " << sigma_bar << " kW\n";

    c.require(mae[RefStrategy::Informed] < mae[RefStrategy::Mean], "MAE(informed) < MAE(mean)");
    c.require(mae[RefStrategy::Informed] < mae[RefStrategy::Min], "MAE(informed) < MAE(min)");
    c.require(mae[RefStrategy::Informed] < 2.0 * sigma_bar, "MAE(informed) < 2 sigma_noise");
    c.finish();
}

void criterion_6_iec_identities() {
    Criterion c("6. IEC physics identities", 120.0);

    // density normalization identity at reference density, exact
    bool exact = true;
    for (double v = 0.0; v <= 30.0; v += 0.17) exact = exact && density_normalize(v, 1.21, 1.21) == v;
    c.require(exact, "density identity at rho_ref");

    // TI correction reduces to the curve at TI = 0 and matches dense quadrature
    SynthConfig cfg;
    ZeroTICurve ramp_curve;
    ramp_curve.grid_start = 0.0;
    ramp_curve.grid_step = 0.25;
    for (double v = 0.0; v <= 30.0 + 1e-9; v += 0.25)
        ramp_curve.p_zero.push_back(detail::ramp_power(cfg, v));
    double worst_q = 0.0;
    for (const auto& [v, ti] : std::vector<std::pair<double, double>>{
             {8.0, 0.15}, {5.0, 0.1}, {6.5, 0.2}, {11.0, 0.12}, {13.0, 0.18}}) {
        const double mine = ti_expected_power(ramp_curve, v, ti);
        const double dense = testing::dense_gaussian_expectation(
            [&](double u) { return ramp_curve.value_at(u); }, v, ti * v, 0.001);
        worst_q = std::max(worst_q, std::abs(mine - dense));
    }
    bool ti0 = true;
    for (double v = 0.0; v <= 25.0; v += 0.25)
        ti0 = ti0 && ti_expected_power(ramp_curve, v, 0.0) == ramp_curve.value_at(v);
    c.detail << "  quadrature vs dense oracle: max gap " << worst_q << " kW\n";
    c.require(ti0, "TI = 0 reduces to the zero-TI curve exactly");
    c.require(worst_q < 0.1, "quadrature within 0.1 kW of the dense oracle");

    // zero-TI iteration recovers the generator ramp (controlled setting)
    SynthConfig rcfg;
    rcfg.n_samples = 30000;
    rcfg.rho_std = 0.0;
    rcfg.rho_seasonal_amp = 0.0;
    rcfg.ti_low_wind = 0.1;
    rcfg.ti_high_wind = 0.1;
    rcfg.ti_sigma = 0.0;
    rcfg.noise_base_kw = 0.0;
    rcfg.noise_slope = 0.0;
    const auto synth = generate_synthetic(rcfg, 3);
    Records sub;
    for (const auto& r : synth.records)
        if (r.power > 0.0 && r.v_w < rcfg.v_rated) sub.push_back(r);
    const auto binned = fit_binned_curve(sub, 0.5, rcfg.rho_mean);
    const auto z = fit_zero_ti_curve(binned, sub, 20, 0.5, rcfg.rated_power);
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < z.p_zero.size(); ++i) {
        const double v = z.knot(i);
        if (v < rcfg.v_cut_in + 1.0 || v > rcfg.v_rated - 1.0) continue;
        const double truth = detail::ramp_power(rcfg, v);
        worst_rel = std::max(worst_rel, std::abs(z.p_zero[i] - truth) / truth);
    }
    c.detail << "  zero-TI recovery: max relative error " << worst_rel << " on [v_ci+1, v_r-1]\n";
    c.require(worst_rel < 0.02, "ramp recovered within 2 percent");
    c.finish();
}

void criterion_7_strategy_metric() {
    Criterion c("7. strategy metric sanity (Fig.-2 analogue)", 900.0);
    const auto& data = shared();

    IecFitOptions opts;
    opts.rated_power = data.cfg.rated_power;
    const IecPredictor iec(fit_iec_model(data.split.train, opts));
    const ReferenceBuilder builder(data.split.train, iec.schema());
    const auto ref = builder.build(RefStrategy::Min);

    Records instances;
    const std::size_t stride = std::max<std::size_t>(1, data.split.test.size() / 500);
    for (std::size_t i = 0; i < data.split.test.size(); i += stride)
        instances.push_back(data.split.test[i]);

    std::vector<Attribution> iec_attrs(instances.size());
    parallel_for(instances.size(), [&](std::size_t i) {
        iec_attrs[i] = shapley_exact(iec, instances[i], ref);
    });

    const auto self = strategy_correlation(iec_attrs, iec_attrs);
    c.detail << "  r2_phys(IEC vs itself) = " << self.r2_phys << "\n";
    c.require(self.r2_phys == 1.0, "self comparison is exactly one");

    const int vw_index = iec.schema().index_of(Feature::WindSpeed);
    std::vector<double> r2_vw;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ml = mlp_train(MlpConfig::ann_small(base_schema().features), data.split.train,
                                  data.split.val, seed);
        std::vector<Attribution> ml_attrs(instances.size());
        parallel_for(instances.size(), [&](std::size_t i) {
            ml_attrs[i] = shapley_exact(ml, instances[i], ref);
        });
        const auto report = strategy_correlation(ml_attrs, iec_attrs);
        r2_vw.push_back(report.r_squared[vw_index].value_or(0.0));
        c.detail << "  seed " << seed << ": r2(v_w) = " << r2_vw.back() << ", aggregate "
                 << report.r2_phys << "\n";
    }
    const double mean_r2 = mean_of(r2_vw);
    c.detail << "  mean r2(v_w) over 5 seeds = " << mean_r2 << "\n";
    c.require(mean_r2 > 0.8, "ANN_small vs IEC wind-speed attribution r2 > 0.8");
    c.finish();
}

void criterion_8_ood() {
    Criterion c("8. out-of-distribution separation (Fig.-4 analogue)", 900.0);
    const auto& data = shared();

    IecFitOptions opts;
    opts.rated_power = data.cfg.rated_power;
    const auto iec_model = fit_iec_model(data.split.train, opts);

    Records train_all = data.split.train;
    train_all.insert(train_all.end(), data.split.val.begin(), data.split.val.end());
    const auto tf = norm_filter(train_all, iec_model.binned, kDefaultNormThresholdKw);
    const auto sf = norm_filter(data.split.test, iec_model.binned, kDefaultNormThresholdKw);
    c.detail << "  kept " << tf.kept.size() << "/" << train_all.size() << " train, " << sf.kept.size()
             << "/" << data.split.test.size() << " test; removed test " << sf.removed.size() << "\n";

    const std::vector<ModelSpec> specs{ModelSpec::forest(base_schema().features),
                                       ModelSpec::ann_small(base_schema().features),
                                       ModelSpec::ann_large(base_schema().features)};
    const auto report = ood_experiment(specs, tf.kept, sf.kept, sf.removed, {1, 2});
    for (const auto& row : report.rows) {
        c.detail << "  " << row.model << " seed " << row.seed << ": kept " << row.rmse_kept
                 << " kW, removed " << row.rmse_removed << " kW\n";
        c.require(row.rmse_removed > row.rmse_kept,
                  row.model + " seed " + std::to_string(row.seed) + ": removed RMSE exceeds kept RMSE");
    }
    c.finish();
}

void criterion_9_reproducibility() {
    Criterion c("9. CLI reproducibility", 600.0);
    const char* bin = std::getenv("WINDXAI_BIN");
    if (bin == nullptr) {
        c.require(false, "WINDXAI_BIN not set");
        c.finish();
        return;
    }

    const fs::path base = fs::temp_directory_path() / ("windxai_accept_" + std::to_string(::getpid()));
    fs::remove_all(base);
    auto run_cmd = [&](const std::string& args, const fs::path& dir) {
        fs::create_directories(dir);
        const std::string cmd = std::string(bin) + " " + args + " --out-dir " + dir.string() + " > " +
                                (dir / "stdout.txt").string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    bool all_match = true;
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"synth", "synth --n 3000 --seed 13"},
        {"evaluate", "evaluate --n 3000 --synth-seed 13 --models iec,rf --seeds 2 --seed 4"},
        {"train", "train --n 3000 --synth-seed 13 --models rf,ann_small --seed 2"},
    };
    for (const auto& [name, args] : runs) {
        const auto dir_a = base / (name + "_a");
        const auto dir_b = base / (name + "_b");
        const int code_a = run_cmd(args, dir_a);
        const int code_b = run_cmd(args, dir_b);
        c.require(code_a == 0 && code_b == 0, name + " runs exit 0");
        if (code_a != 0 || code_b != 0) continue;
        for (const auto& entry : fs::directory_iterator(dir_a)) {
            const auto fname = entry.path().filename().string();
            if (fname == "stdout.txt" || fname == "manifest.json") continue;
            const auto other = dir_b / fname;
            const bool same = fs::exists(other) &&
                              sha256_file(entry.path().string()) == sha256_file(other.string());
            if (!same) {
                all_match = false;
                c.detail << "  mismatch: " << name << "/" << fname << "\n";
            }
        }
        // manifest output digests must agree even though timings differ
        std::ifstream ma(dir_a / "manifest.json"), mb(dir_b / "manifest.json");
        nlohmann::json ja, jb;
        ma >> ja;
        mb >> jb;
        if (ja.at("outputs") != jb.at("outputs")) {
            all_match = false;
            c.detail << "  manifest digest mismatch in " << name << "\n";
        }
    }
    c.require(all_match, "repeated runs are byte-identical");
    fs::remove_all(base);
    c.finish();
}

}  // namespace

int main() {
    std::cout << "windxai acceptance suite\n";
    criterion_1_shapley_oracle();
    criterion_2_linear_closed_form();
    criterion_3_gradient_check();
    criterion_4_model_ordering();
    criterion_5_reference_faithfulness();
    criterion_6_iec_identities();
    criterion_7_strategy_metric();
    criterion_8_ood();
    criterion_9_reproducibility();
    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
